#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "qup/dense.hpp"
#include "qup/replica.hpp"
#include "qup/report.hpp"

namespace qup {

enum class EnsembleKind { P, Q };

// Hard-instance ensemble: rho = 1/2^{n+1} + sum_j v_j |psi_j><psi_j| with
// independent Haar pure states and kind-dependent coefficients.
struct EnsembleSpec {
  int n = 2;
  EnsembleKind kind = EnsembleKind::P;

  std::array<double, 3> coefficients() const {
    if (kind == EnsembleKind::P) return {0.25, 0.25, 0.0};
    return {1.0 / 3.0, 1.0 / 12.0, 1.0 / 12.0};
  }
  static constexpr double mixed_weight = 0.5;
};

Mat sample_state(const EnsembleSpec& spec, uint64_t rng_seed);

// Three-copy cycle test. The sampler precomputes the joint site-outcome
// distribution for (D_{lambda'} rho)^{x3} and the per-outcome statistic:
// corrected X = Re(prod_j alpha_{s_j}) with E[X] = tr(rho^3), uncorrected
// Y = Re(prod_j s_j) over cycle eigenvalues s_j in {1, w, w^2}.
class CycleTestSampler {
 public:
  CycleTestSampler(const Mat& rho, double lambda_prime, bool corrected);

  double shot(std::mt19937_64& rng) const;
  double shot_from_stream(uint64_t stream_state) const;
  double exact_mean() const;
  double value_bound() const;  // |alpha_omega|^n (corrected) or 1

 private:
  int n_ = 0;
  std::vector<double> cumulative_;
  std::vector<double> values_;
  double value_bound_ = 1.0;

  double pick(double u) const;
};

double cycle_test_shot(const Mat& rho, double lambda_prime, bool corrected,
                       std::mt19937_64& rng);

EstimatorReport cycle_test_estimate(const Mat& rho, double lambda_prime, bool corrected,
                                    std::int64_t shots, uint64_t seed);

// Sample-complexity evaluators (displayed expressions, absolute constant 1).
double raw_lower_bound(int n, double lambda);

struct InjectionUpperBound {
  double generic = 0.0;  // |alpha_omega|^{2n} log(1/delta) / epsilon^2
  double promise = 0.0;  // (16/(1+9a^2+6a^3))^{2n} log(1/delta)
};
InjectionUpperBound injection_upper_bound(int n, double lambda_prime, double epsilon,
                                          double delta);

// Largest lambda' with a provable exponential advantage for third-moment
// estimation at raw noise lambda; solves 6y^3 + 9y^2 + 1 =
// 4 sqrt(1 + 9x^6 + 6x^10) for y = 1 - lambda', x = 1 - lambda.
double speedup_threshold_third_moment(double lambda);

// Per-copy base of the bound ratio N_raw/N_inj:
// G_n(1-lambda')^2 / (16^n R_n(1-lambda)).
double speedup_ratio_bound_form(int n, double lambda, double lambda_prime);

struct HeisenbergBoundInput {
  double mu = 0.0;              // sigma_q >= mu * identity
  double delta_sq_trace = 0.0;  // tr((Delta^u)^2)
};

struct LearningTreeBounds {
  double delta = 0.0;      // per-step likelihood-variance bound
  double min_depth = 0.0;  // depth needed to reach the target TV distance
};
LearningTreeBounds learning_tree_bounds(const HeisenbergBoundInput& input, double target_tv);

double tv_aggregation_penalty(std::int64_t T, int n);

}  // namespace qup

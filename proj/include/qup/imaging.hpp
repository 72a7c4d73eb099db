#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qup/dense.hpp"
#include "qup/report.hpp"

namespace qup {

// Two-source scene sampled on an m-point aperture grid. The bright source
// (weight b) sits at -delta_x/2 and the dim companion (weight 1-b) at
// +delta_x/2, both Gaussian modes of the given width, normalized on the grid.
// Negating delta_x mirrors the scene, which is the same operation as swapping
// the brightness roles of the two fixed sources; the sign of delta_x therefore
// encodes which hypothesis (companion right / companion left) the model
// represents. The observable is the grid position, so the decision statistic
// is the companion's estimated position.
struct ImagingModel {
  int m = 0;
  double b = 0.0;
  double delta_x = 0.0;
  double aperture_width = 0.0;
  Eigen::VectorXd grid;        // symmetric grid coordinates, spacing 1
  Eigen::VectorXd psi_star;    // bright-source mode, unit norm
  Eigen::VectorXd psi_planet;  // dim-source mode, unit norm
  double overlap = 0.0;        // <psi_star|psi_planet>
  Eigen::MatrixXd rho;         // b|s><s| + (1-b)|p><p|, rank <= 2
  double r = 0.0;              // dominant eigenvalue; the other is 1-r
  Eigen::VectorXd v1;          // dominant eigenvector, <v1|psi_star> > 0
  Eigen::VectorXd v2;          // second eigenvector, <v2|psi_planet> > 0
  Eigen::MatrixXd basis;       // full eigenbasis, columns ascending; v1 last
  double c1 = 0.0, c2 = 0.0;   // <v1|psi_planet>, <v2|psi_planet>
  double s1 = 0.0, s2 = 0.0;   // <v1|psi_star>, <v2|psi_star>
  double planet_expectation = 0.0;  // <psi_planet|position|psi_planet>
};

ImagingModel build_model(int m, double b, double delta_x, double aperture_width);

inline ImagingModel mirrored(const ImagingModel& mod) {
  return build_model(mod.m, mod.b, -mod.delta_x, mod.aperture_width);
}

// raw: depolarizing at rate lambda on every unprotected working register after
// each program interaction (and one hit per register used by the interference
// measurement). uploaded: depolarizing at rate lambda on each fresh copy as it
// is loaded; the circuit in between is treated as noiseless. Sweeps run the
// uploaded branch at noise_factor times the raw rate.
enum class NoiseMode { raw, uploaded };

struct PipelineNoise {
  NoiseMode mode = NoiseMode::raw;
  double lambda = 0.0;
  double noise_factor = 3.0;
};

Mat depolarize(const Mat& state, double lambda);

// One program-powered exponentiation pass: `rounds` partial-swap interactions
// of angle x/rounds with fresh program copies, approximating conjugation by
// exp(-i x rho_program) with error O(x^2/rounds).
Mat dme_channel(const Mat& rho_program, const Mat& sigma_target, double x, int rounds,
                const PipelineNoise& noise = {});

// Branch-sorting filter: an ancilla qubit steers `qsp_degree` controlled
// exponentiation queries, interleaved with fixed U(2) rotations derived from a
// smoothed-step phase polynomial that passes the dominant eigenphase -x*r and
// blocks -x*(1-r). Measuring the ancilla labels the branch. Built entirely
// from CPTP pieces, so trace and positivity are exact at any noise setting.
struct FilterResult {
  double p_star = 0.0;    // probability of the bright-branch label
  double p_planet = 0.0;  // probability of the dim-branch label
  Mat state_star;         // branch-conditional states in the grid basis
  Mat state_planet;
  double fidelity_star = 0.0;    // <v1|state_star|v1>
  double fidelity_planet = 0.0;  // <v2|state_planet|v2>
  double leakage = 0.0;          // cross-branch eigenvector mass
  bool gap_warning = false;      // degree too small for the phase gap
  int degree = 0;                // effective polynomial degree used
  double x = 0.0;
  int rounds = 0;
  double copies_per_run = 0.0;  // program copies + target load per execution
};

FilterResult eigen_filter(const ImagingModel& model, const PipelineNoise& noise,
                          int qsp_degree, double x, int rounds = 256);

// Same machinery on a caller-supplied input state (grid basis); used to probe
// the channel itself. No load noise is added to sigma_in.
FilterResult apply_sorting_channel(const ImagingModel& model, const PipelineNoise& noise,
                                   int qsp_degree, double x, int rounds, const Mat& sigma_in);

// Monte Carlo estimation of the three reconstruction ingredients:
//   star_branch    branch-conditional position mean on bright-labeled shots
//   planet_branch  same on dim-labeled shots
//   interference   off-diagonal term 2 Re(c1 c2 <v1|O|v2>) via a two-copy
//                  overlap test against the known bright-source mode, scaled
//                  by -2b/(1-b) (the eigenbasis identity <v1|rho|v2> = 0
//                  trades the unknown-mode reference for the known one)
// The combined estimate is |c1|^2 mu1 + |c2|^2 mu2 + off. When the known
// envelope 2|c1 c2| ||O|| of the off term is smaller than the interference
// standard error affordable within the budget, the term is left unmeasured
// and reported as a bias bound instead (off_bound > 0, interference report
// has zero shots). Shot accounting: each labeled shot consumes one target
// load plus degree*rounds program copies; each interference shot consumes two
// such executions plus one reference copy.
struct QuantityEstimates {
  EstimatorReport star_branch;
  EstimatorReport planet_branch;
  EstimatorReport interference;
  double r_hat = 0.0;        // bright-label frequency
  double combined = 0.0;     // reconstructed companion position
  double combined_se = 0.0;  // statistical error of the combination
  double off_bound = 0.0;    // unmeasured off-term envelope, 0 when measured
  double target_exact = 0.0; // noiseless ground truth from the model
  double copies = 0.0;       // physical copies consumed in total
  bool degenerate = false;   // a needed branch received zero shots
};

QuantityEstimates estimate_quantities(const ImagingModel& model, const PipelineNoise& noise,
                                      int qsp_degree, double x, int rounds, uint64_t shots,
                                      uint64_t seed);

// Right-vs-left hypothesis test swept over a noise grid. Means and variances
// come from the channel directly (Gaussian model); the standard error is
// damped by sqrt(shots) and success is the probability that the sign of the
// combined estimate is correct, Phi(|signal|/se). The filter configuration is
// chosen on the noiseless baseline and held fixed for the uploaded branch;
// the raw branch may re-tune x at every noise point to minimize its own bias.
struct SweepOptions {
  int qsp_degree = 36;
  double x = 1.5;  // center of the x candidate grid
  int rounds = 40;
  double noise_factor = 3.0;
  std::vector<double> x_scales{1.0, 0.7, 0.85, 1.15, 1.3};
  double budget = 1e4;  // estimator executions for the fixed-budget success
};

struct SweepPoint {
  double lambda = 0.0;  // raw rate; uploaded runs at noise_factor * lambda
  double success_raw = 0.0;
  double success_uploaded = 0.0;
  double shots90_raw = 0.0;  // executions to reach 90% success (inf if never)
  double shots90_uploaded = 0.0;
  double ratio = 0.0;  // shots90_raw / shots90_uploaded
  double x_raw = 0.0;  // per-point re-tuned raw x
  double x_uploaded = 0.0;
  double signal_raw = 0.0;  // half-gap of the two hypotheses' estimator means
  double signal_uploaded = 0.0;
  double se_raw = 0.0;  // combined standard error at the fixed budget
  double se_uploaded = 0.0;
};

std::vector<SweepPoint> hypothesis_test_sweep(const ImagingModel& right, const ImagingModel& left,
                                              const std::vector<double>& lambdas,
                                              const SweepOptions& opts = {});

std::string imaging_sweep_to_csv(const std::vector<SweepPoint>& pts);
std::string imaging_sweep_to_json(const std::vector<SweepPoint>& pts, const ImagingModel& model,
                                  const SweepOptions& opts);

}  // namespace qup

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qup/decoder.hpp"
#include "qup/report.hpp"

namespace qup {

// One Monte Carlo experiment point for the d1 -> d2 injection gadget.
struct GrowthConfig {
  int d1 = 5;
  int d2 = 5;
  int T = 0;  // 0 selects the minimum round count T = d2
  double p = 0.0;
  uint64_t trials = 0;
  uint64_t seed = 0;
  // Stand-in for the pre-growth fault volume: independent logical X and Z
  // flips at this rate, composed with the gadget's own residual channel.
  double input_error_rate = 0.0;
  bool allow_small = false;  // forwarded to the layout builder (demo sizes)
};

// Fills in defaults and range-checks; rates outside the studied band warn.
GrowthConfig validated(GrowthConfig cfg);

// Summary of the effective one-time logical channel induced by growth.
struct EffectiveInputChannel {
  double q = 0.0;  // 1 - freq(identity)
  double p_x = 0.0, p_y = 0.0, p_z = 0.0;
  // Depolarizing strength after the logical Clifford twirl. For an empirical
  // Pauli channel the twirl symmetrizes the three rates, so lambda_star
  // equals the total non-identity mass q.
  double lambda_star = 0.0;
  Interval q_ci;         // Wilson 95%
  double c_fit = 0.0;    // fitted constant in q <= c*p (0 when p = 0)
  uint64_t trials = 0;
  uint64_t seed = 0;
};

struct SweepRow {
  GrowthConfig config;
  uint64_t count_i = 0, count_x = 0, count_y = 0, count_z = 0;
  EffectiveInputChannel channel;
  double seconds = 0.0;  // wall time, logged but never serialized
};

inline constexpr uint64_t kInputSalt = 0x1F11;

std::vector<SweepRow> run_injection_sweep(const std::vector<GrowthConfig>& grid,
                                          int threads = 1);

// Full channel tomography at one grid point; requires trials >= 10^4.
EffectiveInputChannel estimate_input_channel(const GrowthConfig& cfg, int threads = 1);

// Maximum number of fault edges incident to any detector.
int measured_degree(const DecodingGraph& g);

struct BoundTerms {
  double eta = 0.0;            // 2 D e x^{1/4}
  double input_term = 0.0;     // v_in * x
  double cluster_term = 0.0;   // connected-cluster part: d2-decaying + d1 floor
  double residual_term = 0.0;  // output residual-family part
  double total = 0.0;
};

// Analytic upper bound on the bad-fault weight enumerator of the gadget,
// evaluated term by term; throws std::domain_error when eta >= 1.
BoundTerms weight_enumerator_terms(int d1, int d2, int T, double x, double D, double v_in);
double weight_enumerator_bound(int d1, int d2, int T, double x, double D, double v_in);

struct BoundComparison {
  bool in_regime = false;  // eta < 1 at x = p
  bool dominates = false;  // q_hat <= bound (vacuously false when skipped)
  double eta = 0.0;
  double bound = 0.0;  // +inf when out of regime
  double q_hat = 0.0;
  Interval ci;
  double ratio = 0.0;  // bound / q_hat, +inf when q_hat = 0
  std::string note;
};

BoundComparison compare_bound_vs_montecarlo(const GrowthConfig& cfg, double D, double v_in,
                                            int threads = 1);

// Columns: d1,d2,T,p,trials,q_hat,ci_lo,ci_hi,pX,pY,pZ,lambda_star,seed.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
// Same content per row plus a config echo; no timestamps, so reruns match.
std::string sweep_to_json(const std::vector<SweepRow>& rows);

}  // namespace qup

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qup/report.hpp"

namespace qup {

// Open brickwork chain: layer i (1-based) pairs sites (2j + off, 2j + 1 + off)
// with off = (offset0 + i - 1) mod 2; a k-site contiguous observable support
// starts at `start`.
struct BrickworkSpec {
  int n = 8;
  int depth = 0;
  int start = 0;
  int offset0 = 0;
};

struct SupportState {
  int n = 0;
  uint64_t occupied = 0;
  std::vector<int> layer_weights;
};

SupportState initial_support(const BrickworkSpec& spec, int k);

// One brickwork layer of the Pauli-support chain: every pair with at least
// one occupied endpoint resamples to (both, first-only, second-only) with
// probabilities (9/15, 3/15, 3/15); all-identity pairs and an unpaired
// endpoint site are left unchanged. Appends the new support weight.
void step_layer(SupportState& state, int offset, std::mt19937_64& rng);

// Monte Carlo estimate of E[3^{-l_d} exp(-lambda sum_i l_i)]; depth 0 returns
// 3^{-k} exactly without sampling.
EstimatorReport shadow_weight(const BrickworkSpec& spec, int k, double lambda,
                              std::int64_t trials, uint64_t seed);

// Exact transfer-matrix evaluation over all support patterns (n <= 14).
double shadow_weight_exact(const BrickworkSpec& spec, int k, double lambda);

// max{3^{-k}, exp(-lambda*floor((k-1)/2)) * omega_star} with omega_star the
// noiseless supremum over depth.
double noisy_weight_upper_bound(int k, double lambda, double omega_star);

// Per-site exponent of N_raw/N_inj: 2 log((1-lambda')/(1-lambda)) +
// min{log(3)/4, lambda/2}; positive iff provable exponential advantage.
double separation_exponent(double lambda, double lambda_prime);

// Largest lambda' with nonnegative separation exponent:
// 1 - (1-lambda) e^{-lambda/4} for lambda <= log(3)/2, else
// 1 - (1-lambda) 3^{-1/8}.
double shadow_speedup_threshold(double lambda);

struct DepthScanResult {
  int best_depth = 0;
  double omega_star = 0.0;
  bool exact = true;  // false when the chain exceeded the exact-propagation cap
};

// Scan d in [0, 4*ceil(log2 k) + 4] for the noiseless weight supremum on a
// centered chain; exact propagation when the chain fits, fixed-seed Monte
// Carlo otherwise.
DepthScanResult scan_noiseless_weight(int k);

struct SampleCountResult {
  double count = 0.0;
  int best_depth = 0;
  double omega_star = 0.0;
  bool exact = true;
};

// 1 / ((1-eta)^{2k} epsilon^2 omega_star(k, d*)), exponent-level.
SampleCountResult injection_sample_count(int k, double eta, double epsilon);

}  // namespace qup

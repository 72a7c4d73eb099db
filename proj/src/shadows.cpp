#include "qup/shadows.hpp"

#include <cmath>
#include <stdexcept>

#include "qup/rng.hpp"

namespace qup {

namespace {

void validate_spec(const BrickworkSpec& spec, int k) {
  if (spec.n < 1 || spec.n > 64) throw std::invalid_argument("chain size outside [1, 64]");
  if (spec.depth < 0) throw std::invalid_argument("depth must be nonnegative");
  if (spec.offset0 != 0 && spec.offset0 != 1)
    throw std::invalid_argument("layer offset must be 0 or 1");
  if (k < 1 || spec.start < 0 || spec.start + k > spec.n)
    throw std::invalid_argument("observable support outside the chain");
}

int popcount64(uint64_t v) { return __builtin_popcountll(v); }

int ceil_log2(int k) {
  int d = 0;
  while ((1 << d) < k) ++d;
  return d;
}

}  // namespace

SupportState initial_support(const BrickworkSpec& spec, int k) {
  validate_spec(spec, k);
  SupportState state;
  state.n = spec.n;
  for (int i = 0; i < k; ++i) state.occupied |= 1ULL << (spec.start + i);
  return state;
}

void step_layer(SupportState& state, int offset, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  uint64_t next = state.occupied;
  for (int a = offset; a + 1 < state.n; a += 2) {
    const uint64_t pair_mask = 3ULL << a;
    if (!(state.occupied & pair_mask)) continue;
    const double u = unif(rng);
    uint64_t pattern;
    if (u < 9.0 / 15.0)
      pattern = 3ULL;
    else if (u < 12.0 / 15.0)
      pattern = 1ULL;
    else
      pattern = 2ULL;
    next = (next & ~pair_mask) | (pattern << a);
  }
  state.occupied = next;
  state.layer_weights.push_back(popcount64(state.occupied));
}

EstimatorReport shadow_weight(const BrickworkSpec& spec, int k, double lambda,
                              std::int64_t trials, uint64_t seed) {
  validate_spec(spec, k);
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  EstimatorReport report;
  report.seed = seed;
  if (spec.depth == 0) {
    report.shots = 0;
    report.mean = std::pow(3.0, -k);
    report.std_error = 0.0;
    return report;
  }

  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng = make_engine(seed, static_cast<uint64_t>(trial));
    SupportState state = initial_support(spec, k);
    double log_weight = 0.0;
    for (int layer = 0; layer < spec.depth; ++layer) {
      step_layer(state, (spec.offset0 + layer) % 2, rng);
      if (state.occupied == 0) throw std::runtime_error("support chain lost its support");
      log_weight -= lambda * state.layer_weights.back();
    }
    const double value = std::exp(log_weight) * std::pow(3.0, -state.layer_weights.back());
    sum += value;
    sumsq += value * value;
  }
  report.shots = static_cast<uint64_t>(trials);
  report.mean = sum / static_cast<double>(trials);
  const double var = std::max(0.0, sumsq / trials - report.mean * report.mean);
  report.std_error = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
  return report;
}

double shadow_weight_exact(const BrickworkSpec& spec, int k, double lambda) {
  validate_spec(spec, k);
  if (spec.n > 14) throw std::length_error("exact propagation capped at n <= 14");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");

  const std::size_t patterns = 1ULL << spec.n;
  std::vector<double> weight(patterns, 0.0);
  uint64_t init = 0;
  for (int i = 0; i < k; ++i) init |= 1ULL << (spec.start + i);
  weight[init] = 1.0;

  std::vector<double> scratch(patterns, 0.0);
  for (int layer = 0; layer < spec.depth; ++layer) {
    const int offset = (spec.offset0 + layer) % 2;
    for (int a = offset; a + 1 < spec.n; a += 2) {
      const uint64_t bit_a = 1ULL << a, bit_b = 2ULL << a;
      std::fill(scratch.begin(), scratch.end(), 0.0);
      for (std::size_t p = 0; p < patterns; ++p) {
        const double w = weight[p];
        if (w == 0.0) continue;
        if (!(p & (bit_a | bit_b))) {
          scratch[p] += w;
          continue;
        }
        const std::size_t rest = p & ~(bit_a | bit_b);
        scratch[rest | bit_a | bit_b] += w * (9.0 / 15.0);
        scratch[rest | bit_a] += w * (3.0 / 15.0);
        scratch[rest | bit_b] += w * (3.0 / 15.0);
      }
      weight.swap(scratch);
    }
    if (lambda > 0.0)
      for (std::size_t p = 0; p < patterns; ++p)
        if (weight[p] != 0.0) weight[p] *= std::exp(-lambda * popcount64(p));
  }

  double omega = 0.0;
  for (std::size_t p = 0; p < patterns; ++p)
    if (weight[p] != 0.0) omega += weight[p] * std::pow(3.0, -popcount64(p));
  return omega;
}

double noisy_weight_upper_bound(int k, double lambda, double omega_star) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (lambda < 0.0 || omega_star < 0.0) throw std::invalid_argument("inputs must be nonnegative");
  const double floor_term = std::pow(3.0, -k);
  const double decay = std::exp(-lambda * ((k - 1) / 2)) * omega_star;
  return std::max(floor_term, decay);
}

double separation_exponent(double lambda, double lambda_prime) {
  if (lambda < 0.0 || lambda >= 1.0 || lambda_prime < 0.0 || lambda_prime >= 1.0)
    throw std::invalid_argument("noise rates outside [0, 1)");
  return 2.0 * std::log((1.0 - lambda_prime) / (1.0 - lambda)) +
         std::min(std::log(3.0) / 4.0, lambda / 2.0);
}

double shadow_speedup_threshold(double lambda) {
  if (lambda < 0.0 || lambda >= 1.0) throw std::invalid_argument("lambda outside [0, 1)");
  if (lambda <= 0.5 * std::log(3.0)) return 1.0 - (1.0 - lambda) * std::exp(-lambda / 4.0);
  return 1.0 - (1.0 - lambda) * std::pow(3.0, -1.0 / 8.0);
}

DepthScanResult scan_noiseless_weight(int k) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  const int depth_cap = 4 * ceil_log2(k) + 4;
  DepthScanResult result;
  result.omega_star = -1.0;

  // Chain wide enough for the light cone; fall back to fixed-seed Monte Carlo
  // when exact propagation no longer fits.
  const int full = k + 2 * (depth_cap + 1);
  const bool exact = k <= 12;
  const int n = exact ? std::min(full, 14) : full;
  if (n > 64) throw std::length_error("chain exceeds 64 sites");
  result.exact = exact;
  // even start keeps the first layer's gates aligned with the support
  const int start = ((n - k) / 2) & ~1;
  for (int d = 0; d <= depth_cap; ++d) {
    BrickworkSpec spec{n, d, start, 0};
    double omega;
    if (exact) {
      omega = shadow_weight_exact(spec, k, 0.0);
    } else {
      omega = shadow_weight(spec, k, 0.0, 100000,
                            derive_seed(0x5cad0ULL, static_cast<uint64_t>(k),
                                        static_cast<uint64_t>(d)))
                  .mean;
    }
    if (omega > result.omega_star) {
      result.omega_star = omega;
      result.best_depth = d;
    }
  }
  return result;
}

SampleCountResult injection_sample_count(int k, double eta, double epsilon) {
  if (eta < 0.0 || eta >= 1.0) throw std::invalid_argument("eta outside [0, 1)");
  if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("epsilon outside (0, 1)");
  DepthScanResult scan = scan_noiseless_weight(k);
  SampleCountResult out;
  out.best_depth = scan.best_depth;
  out.omega_star = scan.omega_star;
  out.exact = scan.exact;
  out.count =
      1.0 / (std::pow(1.0 - eta, 2 * k) * epsilon * epsilon * scan.omega_star);
  return out;
}

}  // namespace qup

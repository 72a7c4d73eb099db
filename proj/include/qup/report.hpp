#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

namespace qup {

// Common result record for Monte Carlo estimators.
struct EstimatorReport {
  uint64_t shots = 0;
  double mean = 0.0;
  double std_error = 0.0;
  uint64_t seed = 0;
  std::map<std::string, double> extra;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(uint64_t successes, uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  double lo = center - half, hi = center + half;
  // At the extremes center and half agree analytically; pin the exact limit
  // instead of leaving a rounding residue.
  if (successes == 0 || lo < 0.0) lo = 0.0;
  if (successes == trials || hi > 1.0) hi = 1.0;
  return {lo, hi};
}

}  // namespace qup

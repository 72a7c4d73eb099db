#include "qup/moments.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qup/rng.hpp"

namespace qup {

namespace {

// Embed an 8x8 operator acting on the three copies of one site into the
// 8^n-dimensional three-copy space (copy-major qubit order, copy 0 most
// significant; the site operator's own qubit order is copy 1, 2, 3).
Mat embed_site_operator(const Mat& op8, int n, int site) {
  const int nq = 3 * n;
  const int dim = 1 << nq;
  auto site_index = [&](int i) {
    const int b1 = (i >> (nq - 1 - site)) & 1;
    const int b2 = (i >> (nq - 1 - (n + site))) & 1;
    const int b3 = (i >> (nq - 1 - (2 * n + site))) & 1;
    return (b1 << 2) | (b2 << 1) | b3;
  };
  const int mask = (1 << (nq - 1 - site)) | (1 << (nq - 1 - (n + site))) |
                   (1 << (nq - 1 - (2 * n + site)));
  Mat out = Mat::Zero(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      if ((r & ~mask) == (c & ~mask)) out(r, c) = op8(site_index(r), site_index(c));
  return out;
}

double uniform_from_stream(uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

Mat sample_state(const EnsembleSpec& spec, uint64_t rng_seed) {
  if (spec.n < 1 || spec.n > 4) throw std::length_error("sample_state capped at n <= 4");
  const int dim = 1 << spec.n;
  Mat rho = Mat::Identity(dim, dim) / static_cast<double>(2 * dim);
  const std::array<double, 3> v = spec.coefficients();
  for (int j = 0; j < 3; ++j) {
    if (v[j] == 0.0) continue;
    std::mt19937_64 rng = make_engine(rng_seed, static_cast<uint64_t>(j) + 1);
    Vec psi = haar_state(dim, rng);
    rho += v[j] * (psi * psi.adjoint());
  }
  return rho;
}

CycleTestSampler::CycleTestSampler(const Mat& rho, double lambda_prime, bool corrected)
    : n_(0) {
  const int dim = static_cast<int>(rho.rows());
  int n = 0;
  while ((1 << n) < dim) ++n;
  if ((1 << n) != dim) throw std::invalid_argument("state dimension must be a power of two");
  if (n > 2) throw std::length_error("cycle test exact simulation capped at n <= 2");
  if (lambda_prime < 0.0 || lambda_prime > 1.0)
    throw std::invalid_argument("lambda' outside [0, 1]");
  if (corrected && lambda_prime == 1.0)
    throw std::domain_error("corrected statistic singular at lambda' = 1");
  n_ = n;

  const double eta = 1.0 - lambda_prime;
  Mat noisy = apply_weight_diagonal_channel(rho, n, [&](int w) { return std::pow(eta, w); });
  Mat state = kron_pow(noisy, 3);

  // Eigenprojectors of the site cycle are noise-independent; the corrected
  // per-outcome factors alpha_s are not.
  CycleSpectralData spec0 = cycle_spectral_data(0.0);
  std::array<Mat, 3> site_proj{spec0.pi_1, spec0.pi_omega, spec0.pi_omega2};
  std::array<cxd, 3> factor;
  if (corrected) {
    CycleSpectralData spec = cycle_spectral_data(lambda_prime);
    factor = {cxd(spec.alpha_1, 0.0), spec.alpha_omega, std::conj(spec.alpha_omega)};
    value_bound_ = std::pow(std::abs(spec.alpha_omega), n);
  } else {
    const cxd omega = std::exp(cxd(0, 2.0 * M_PI / 3.0));
    factor = {cxd(1.0, 0.0), omega, omega * omega};
    value_bound_ = 1.0;
  }

  int combos = 1;
  for (int j = 0; j < n; ++j) combos *= 3;
  cumulative_.reserve(combos);
  values_.reserve(combos);
  double acc = 0.0;
  for (int code = 0; code < combos; ++code) {
    Mat projected = state;
    cxd value(1.0, 0.0);
    int rest = code;
    for (int j = 0; j < n; ++j) {
      const int s = rest % 3;
      rest /= 3;
      projected = embed_site_operator(site_proj[s], n, j) * projected;
      value *= factor[s];
    }
    double prob = projected.trace().real();
    if (prob < 0.0 && prob > -1e-14) prob = 0.0;
    acc += prob;
    cumulative_.push_back(acc);
    values_.push_back(value.real());
  }
  if (std::abs(acc - 1.0) > 1e-9)
    throw std::runtime_error("outcome probabilities do not sum to one");
  cumulative_.back() = 1.0;
}

double CycleTestSampler::pick(double u) const {
  for (std::size_t i = 0; i < cumulative_.size(); ++i)
    if (u < cumulative_[i]) return values_[i];
  return values_.back();
}

double CycleTestSampler::shot(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return pick(unif(rng));
}

double CycleTestSampler::shot_from_stream(uint64_t stream_state) const {
  return pick(uniform_from_stream(stream_state));
}

double CycleTestSampler::exact_mean() const {
  double mean = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < cumulative_.size(); ++i) {
    mean += (cumulative_[i] - prev) * values_[i];
    prev = cumulative_[i];
  }
  return mean;
}

double CycleTestSampler::value_bound() const { return value_bound_; }

double cycle_test_shot(const Mat& rho, double lambda_prime, bool corrected,
                       std::mt19937_64& rng) {
  return CycleTestSampler(rho, lambda_prime, corrected).shot(rng);
}

EstimatorReport cycle_test_estimate(const Mat& rho, double lambda_prime, bool corrected,
                                    std::int64_t shots, uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shots must be positive");
  CycleTestSampler sampler(rho, lambda_prime, corrected);
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t i = 0; i < shots; ++i) {
    const double x = sampler.shot_from_stream(derive_seed(seed, static_cast<uint64_t>(i)));
    sum += x;
    sumsq += x * x;
  }
  EstimatorReport report;
  report.shots = static_cast<uint64_t>(shots);
  report.seed = seed;
  report.mean = sum / static_cast<double>(shots);
  const double var = std::max(0.0, sumsq / shots - report.mean * report.mean);
  report.std_error = shots > 1 ? std::sqrt(var / static_cast<double>(shots - 1)) : 0.0;
  report.extra["exact_mean"] = sampler.exact_mean();
  report.extra["value_bound"] = sampler.value_bound();
  report.extra["lambda_prime"] = lambda_prime;
  report.extra["corrected"] = corrected ? 1.0 : 0.0;
  return report;
}

double raw_lower_bound(int n, double lambda) {
  if (n < 2) throw std::domain_error("raw bound degenerate for n < 2 (vanishing third-moment gap)");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda outside [0, 1]");
  const double first = std::pow(2.0, 0.5 * n);
  const double r = r_poly(n, 1.0 - lambda);
  if (r <= 0.0) return first;
  const double N = std::pow(2.0, n);
  const double second = (N + 1.0) * (N + 1.0) * (N + 2.0) * (N + 2.0) / r;
  return std::min(first, second);
}

InjectionUpperBound injection_upper_bound(int n, double lambda_prime, double epsilon,
                                          double delta) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (lambda_prime < 0.0 || lambda_prime >= 1.0)
    throw std::invalid_argument("lambda' outside [0, 1)");
  if (epsilon <= 0.0 || epsilon >= 1.0 || delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("epsilon, delta must lie in (0, 1)");
  const double log_term = std::log(1.0 / delta);
  CycleSpectralData spec = cycle_spectral_data(lambda_prime);
  InjectionUpperBound out;
  out.generic = std::pow(std::norm(spec.alpha_omega), n) * log_term / (epsilon * epsilon);
  const double a = 1.0 - lambda_prime;
  out.promise = std::pow(16.0 / (1.0 + 9.0 * a * a + 6.0 * a * a * a), 2 * n) * log_term;
  return out;
}

double speedup_threshold_third_moment(double lambda) {
  if (lambda <= 0.0 || lambda >= 1.0) throw std::invalid_argument("lambda outside (0, 1)");
  const double x = 1.0 - lambda;
  const double rhs = 4.0 * std::sqrt(1.0 + 9.0 * std::pow(x, 6) + 6.0 * std::pow(x, 10));
  auto f = [&](double y) { return 6.0 * y * y * y + 9.0 * y * y + 1.0 - rhs; };
  double lo = 0.0, hi = 1.0;
  if (f(lo) > 0.0 || f(hi) < 0.0) throw std::domain_error("threshold equation has no root in (0, 1]");
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 1.0 - 0.5 * (lo + hi);
}

double speedup_ratio_bound_form(int n, double lambda, double lambda_prime) {
  const double g = g_poly(n, 1.0 - lambda_prime);
  const double r = r_poly(n, 1.0 - lambda);
  if (r <= 0.0) return std::numeric_limits<double>::infinity();
  return g * g / (std::pow(16.0, n) * r);
}

LearningTreeBounds learning_tree_bounds(const HeisenbergBoundInput& input, double target_tv) {
  if (input.mu <= 0.0) throw std::invalid_argument("mu must be positive");
  if (input.delta_sq_trace < 0.0) throw std::invalid_argument("trace input must be nonnegative");
  if (target_tv < 0.0) throw std::invalid_argument("target TV must be nonnegative");
  LearningTreeBounds out;
  out.delta = input.delta_sq_trace / input.mu;
  if (target_tv == 0.0) {
    out.min_depth = 0.0;
  } else if (out.delta == 0.0) {
    out.min_depth = std::numeric_limits<double>::infinity();
  } else {
    out.min_depth = std::log1p(2.0 * target_tv) / out.delta;
  }
  return out;
}

double tv_aggregation_penalty(std::int64_t T, int n) {
  if (T < 1) throw std::invalid_argument("T must be at least 1");
  const double t = 1.5 * static_cast<double>(T);
  return 2.0 * (t * t + t) / std::pow(2.0, n);
}

}  // namespace qup

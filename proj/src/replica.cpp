#include "qup/replica.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qup {

Mat copy_permutation(int n, const std::vector<int>& perm) {
  const int m = static_cast<int>(perm.size());
  if (n * m > 12) throw std::length_error("copy_permutation capped at 12 total qubits");
  const int dim = 1 << (n * m);
  const int mask = (1 << n) - 1;
  Mat out = Mat::Zero(dim, dim);
  for (int g = 0; g < dim; ++g) {
    int gp = 0;
    for (int j = 0; j < m; ++j) {
      int a = (g >> (n * (m - 1 - perm[j]))) & mask;
      gp |= a << (n * (m - 1 - j));
    }
    out(gp, g) = 1.0;
  }
  return out;
}

static void permutations_of(std::vector<int> idx, std::vector<std::vector<int>>& out) {
  std::sort(idx.begin(), idx.end());
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
}

Mat embedded_symmetrizer(const std::vector<int>& indices, int n, int total) {
  if (n * total > 12) throw std::length_error("symmetrizer capped at 12 total qubits");
  const int dim = 1 << (n * total);
  const double N = std::pow(2.0, n);
  std::vector<std::vector<int>> perms;
  permutations_of(indices, perms);
  Mat sum = Mat::Zero(dim, dim);
  for (const auto& target : perms) {
    std::vector<int> full(total);
    for (int j = 0; j < total; ++j) full[j] = j;
    // permute only the listed copies: slot indices[j] receives content target[j]
    std::vector<int> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    for (size_t j = 0; j < sorted.size(); ++j) full[sorted[j]] = target[j];
    sum += copy_permutation(n, full);
  }
  double norm = 1.0;
  for (size_t t = 0; t < indices.size(); ++t) norm *= (N + static_cast<double>(t));
  return sum / norm;
}

ReplicaOperator build_symmetrizer(int copies, int n) {
  if (copies < 1 || copies > 3) throw std::invalid_argument("symmetrizer supports 1..3 copies");
  std::vector<int> idx(copies);
  for (int i = 0; i < copies; ++i) idx[i] = i;
  ReplicaOperator op;
  op.n = n;
  op.copies = copies;
  op.matrix = embedded_symmetrizer(idx, n, copies);
  op.label = copies == 1 ? "S_1" : (copies == 2 ? "S_12" : "S_123");
  return op;
}

ReplicaOperator build_delta3(int n) {
  if (n < 1 || n > 4) throw std::length_error("delta3 capped at n <= 4");
  Mat s123 = embedded_symmetrizer({0, 1, 2}, n, 3);
  Mat s12 = embedded_symmetrizer({0, 1}, n, 3) * embedded_symmetrizer({2}, n, 3);
  Mat s13 = embedded_symmetrizer({0, 2}, n, 3) * embedded_symmetrizer({1}, n, 3);
  Mat s23 = embedded_symmetrizer({1, 2}, n, 3) * embedded_symmetrizer({0}, n, 3);
  Mat singles = embedded_symmetrizer({0}, n, 3) * embedded_symmetrizer({1}, n, 3) *
                embedded_symmetrizer({2}, n, 3);
  ReplicaOperator op;
  op.n = n;
  op.copies = 3;
  op.matrix = s123 - s12 - s13 - s23 + 2.0 * singles;
  op.label = "Delta3";
  return op;
}

Mat build_delta3_permutation_form(int n) {
  if (n < 1 || n > 4) throw std::length_error("delta3 capped at n <= 4");
  const int dim = 1 << (3 * n);
  const double N = std::pow(2.0, n);
  Mat pi = copy_permutation(n, {2, 0, 1});
  Mat pi_inv = copy_permutation(n, {1, 2, 0});
  Mat f12 = copy_permutation(n, {1, 0, 2});
  Mat f13 = copy_permutation(n, {2, 1, 0});
  Mat f23 = copy_permutation(n, {0, 2, 1});
  Mat num = N * N * (pi + pi_inv) - 2.0 * N * (f12 + f13 + f23) + 4.0 * Mat::Identity(dim, dim);
  return num / (N * N * N * (N + 1.0) * (N + 2.0));
}

Mat cycle_observable(int n) {
  Mat pi = copy_permutation(n, {2, 0, 1});
  return 0.5 * (pi + Mat(pi.adjoint()));
}

Mat cycle_observable_corrected(int n, double lambda_prime) {
  if (lambda_prime >= 1.0) throw std::domain_error("corrected observable singular at lambda' = 1");
  Mat h = cycle_observable(n);
  return apply_weight_diagonal_channel(h, 3 * n,
                                       [&](int w) { return std::pow(1.0 - lambda_prime, -w); });
}

double r_poly(int n, double eta) {
  const double e6 = std::pow(eta, 6), e10 = std::pow(eta, 10);
  return 2.0 * std::pow(1.0 + 9.0 * e6 + 6.0 * e10, n) +
         2.0 * std::pow(1.0 + 9.0 * e6 - 6.0 * e10, n) - 12.0 * std::pow(1.0 + 3.0 * e6, n) + 8.0;
}

double g_poly(int n, double a) {
  const double a2 = a * a, a3 = a2 * a;
  return std::pow(1.0 + 9.0 * a2 + 6.0 * a3, n) + std::pow(1.0 + 9.0 * a2 - 6.0 * a3, n) -
         6.0 * std::pow(1.0 + 3.0 * a2, n) + 4.0;
}

double kappa(double lambda) {
  const double a = 1.0 - lambda;
  return 1.0 + 0.75 * a * a + (3.0 / 16.0) * std::pow(a, 6) + (1.0 / 64.0) * std::pow(a, 8);
}

double trace_N_delta3_squared(int n, double lambda) {
  const double N = std::pow(2.0, n);
  const double denom = N * N * N * (N + 1.0) * (N + 1.0) * (N + 2.0) * (N + 2.0);
  return r_poly(n, 1.0 - lambda) / denom;
}

namespace {

// Shared dense evaluator: scale each Pauli coefficient of delta3 by
// (1-lambda)^exponent(t) and return tr(M^2).
template <typename ExponentFn>
double trace_scaled_delta3_squared(int n, double lambda, ExponentFn exponent) {
  if (n > 3) throw std::length_error("dense oracle capped at n <= 3");
  const int nq = 3 * n;
  Mat d3 = build_delta3(n).matrix;
  std::vector<cxd> coeffs = to_pauli_coeffs(d3, nq);
  for (std::size_t t = 0; t < coeffs.size(); ++t)
    coeffs[t] *= std::pow(1.0 - lambda, exponent(static_cast<uint64_t>(t)));
  Mat m = from_pauli_coeffs(coeffs, nq);
  return (m * m).trace().real();
}

}  // namespace

double trace_N_delta3_squared_dense(int n, double lambda) {
  // Channel applied per 3-qubit site group {j, n+j, 2n+j}: exponent
  // sum_j (w_j + ceil(w_j/2)) with w_j the non-identity count in site j.
  return trace_scaled_delta3_squared(n, lambda, [n](uint64_t t) {
    const int nq = 3 * n;
    int total = 0;
    for (int j = 0; j < n; ++j) {
      int wj = 0;
      for (int c = 0; c < 3; ++c) {
        const int q = c * n + j;
        if ((t >> (2 * (nq - 1 - q))) & 3ULL) ++wj;
      }
      total += wj + (wj + 1) / 2;
    }
    return total;
  });
}

double trace_N_delta3_squared_dense_global(int n, double lambda) {
  // Channel applied with the global weight over all 3n qubits.
  return trace_scaled_delta3_squared(n, lambda, [n](uint64_t t) {
    const int w = pauli_index_weight(t, 3 * n);
    return w + (w + 1) / 2;
  });
}

Mat site_cycle() { return copy_permutation(1, {2, 0, 1}); }

Mat site_h_plus(double a) {
  if (a <= 0.0) throw std::domain_error("h_+ singular at a = 0");
  const double ia2 = 1.0 / (a * a), ia3 = ia2 / a;
  Mat c = site_cycle();
  Mat c2 = c * c;
  return 0.25 * (1.0 - ia2) * Mat::Identity(8, 8) + 0.5 * (ia2 + ia3) * c + 0.5 * (ia2 - ia3) * c2;
}

CycleSpectralData cycle_spectral_data(double lambda_prime) {
  if (lambda_prime >= 1.0) throw std::domain_error("spectral data singular at lambda' = 1");
  CycleSpectralData out;
  out.a = 1.0 - lambda_prime;
  const double ia2 = 1.0 / (out.a * out.a), ia3 = ia2 / out.a;
  out.alpha_1 = 0.25 * (1.0 + 3.0 * ia2);
  out.alpha_omega = cxd(0.25 * (1.0 - 3.0 * ia2), 0.5 * std::sqrt(3.0) * ia3);
  const cxd omega = std::exp(cxd(0, 2.0 * M_PI / 3.0));
  Mat c = site_cycle();
  Mat c2 = c * c;
  Mat id = Mat::Identity(8, 8);
  auto projector = [&](cxd s) {
    return Mat(((id + c / s + c2 / (s * s)) / 3.0));
  };
  out.pi_1 = projector(cxd(1, 0));
  out.pi_omega = projector(omega);
  out.pi_omega2 = projector(omega * omega);
  return out;
}

}  // namespace qup

#pragma once

#include <random>
#include <vector>

#include "qup/dense.hpp"
#include "qup/replica.hpp"

namespace qup_test {

inline qup::Mat random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  qup::Mat G(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) G(r, c) = qup::cxd(g(rng), g(rng));
  qup::Mat rho = G * G.adjoint();
  rho /= rho.trace().real();
  return rho;
}

// Exact Haar average of rho^{(x)3} for rho = 1/2^{n+1} + sum_j v_j |psi_j><psi_j|
// with independent Haar psi_j: multinomial expansion over slot assignments,
// equal labels coupling into symmetrizers.
inline qup::Mat exact_sigma(int n, const std::array<double, 3>& v) {
  const int dim = 1 << (3 * n);
  qup::Mat sigma = qup::Mat::Zero(dim, dim);
  for (int t0 = 0; t0 < 4; ++t0)
    for (int t1 = 0; t1 < 4; ++t1)
      for (int t2 = 0; t2 < 4; ++t2) {
        const int t[3] = {t0, t1, t2};
        double coeff = 1.0;
        qup::Mat op = qup::Mat::Identity(dim, dim);
        for (int label = 0; label <= 3; ++label) {
          std::vector<int> slots;
          for (int s = 0; s < 3; ++s)
            if (t[s] == label) slots.push_back(s);
          if (slots.empty()) continue;
          if (label == 0) {
            for (int s : slots) {
              op = op * qup::embedded_symmetrizer({s}, n, 3);
              coeff *= 0.5;
            }
          } else {
            op = op * qup::embedded_symmetrizer(slots, n, 3);
            for (size_t k = 0; k < slots.size(); ++k) coeff *= v[label - 1];
          }
        }
        sigma += coeff * op;
      }
  return sigma;
}

inline qup::Mat tensor_cube(const qup::Mat& rho) {
  return qup::kron(qup::kron(rho, rho), rho);
}

}  // namespace qup_test

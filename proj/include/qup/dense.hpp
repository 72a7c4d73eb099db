#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

namespace qup {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Mat kron_pow(const Mat& a, int k) {
  Mat out = Mat::Identity(1, 1);
  for (int i = 0; i < k; ++i) out = kron(out, a);
  return out;
}

inline Vec haar_state(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cxd(g(rng), g(rng));
  v.normalize();
  return v;
}

// Pauli coefficient layout: index t has base-4 digit d_q = (t >> 2(n-1-q)) & 3
// for qubit q, with labels 0=I, 1=X, 2=Y, 3=Z. Matrix row/col index uses
// qubit 0 as the most significant bit (kron order).
inline std::vector<cxd> to_pauli_coeffs(const Mat& a, int nq) {
  const int dim = 1 << nq;
  if (a.rows() != dim || a.cols() != dim) throw std::invalid_argument("to_pauli_coeffs: shape");
  std::vector<cxd> v(size_t(1) << (2 * nq));
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      size_t t = 0;
      for (int q = 0; q < nq; ++q) {
        int rb = (r >> (nq - 1 - q)) & 1;
        int cb = (c >> (nq - 1 - q)) & 1;
        t = (t << 2) | size_t((rb << 1) | cb);
      }
      v[t] = a(r, c);
    }
  // per-qubit change of basis from entry pairs (r,c) to {I,X,Y,Z}/1 coefficients
  const cxd im(0, 1);
  const cxd M[4][4] = {{0.5, 0, 0, 0.5},
                       {0, 0.5, 0.5, 0},
                       {0, 0.5 * im, -0.5 * im, 0},
                       {0.5, 0, 0, -0.5}};
  for (int q = 0; q < nq; ++q) {
    const size_t stride = size_t(1) << (2 * (nq - 1 - q));
    const size_t block = stride * 4;
    for (size_t base = 0; base < v.size(); base += block)
      for (size_t off = 0; off < stride; ++off) {
        cxd in[4], out[4];
        for (int d = 0; d < 4; ++d) in[d] = v[base + d * stride + off];
        for (int d = 0; d < 4; ++d) out[d] = M[d][0] * in[0] + M[d][1] * in[1] + M[d][2] * in[2] + M[d][3] * in[3];
        for (int d = 0; d < 4; ++d) v[base + d * stride + off] = out[d];
      }
  }
  return v;
}

inline Mat from_pauli_coeffs(const std::vector<cxd>& coeffs, int nq) {
  const int dim = 1 << nq;
  std::vector<cxd> v = coeffs;
  const cxd im(0, 1);
  const cxd Minv[4][4] = {{1, 0, 0, 1},
                          {0, 1, -im, 0},
                          {0, 1, im, 0},
                          {1, 0, 0, -1}};
  for (int q = 0; q < nq; ++q) {
    const size_t stride = size_t(1) << (2 * (nq - 1 - q));
    const size_t block = stride * 4;
    for (size_t base = 0; base < v.size(); base += block)
      for (size_t off = 0; off < stride; ++off) {
        cxd in[4], out[4];
        for (int d = 0; d < 4; ++d) in[d] = v[base + d * stride + off];
        for (int d = 0; d < 4; ++d) out[d] = Minv[d][0] * in[0] + Minv[d][1] * in[1] + Minv[d][2] * in[2] + Minv[d][3] * in[3];
        for (int d = 0; d < 4; ++d) v[base + d * stride + off] = out[d];
      }
  }
  Mat a(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      size_t t = 0;
      for (int q = 0; q < nq; ++q) {
        int rb = (r >> (nq - 1 - q)) & 1;
        int cb = (c >> (nq - 1 - q)) & 1;
        t = (t << 2) | size_t((rb << 1) | cb);
      }
      a(r, c) = v[t];
    }
  return a;
}

inline int pauli_index_weight(size_t t, int nq) {
  int w = 0;
  for (int q = 0; q < nq; ++q)
    if ((t >> (2 * q)) & 3) ++w;
  return w;
}

// Apply a channel that is diagonal in the Pauli basis with eigenvalue
// coeff(w) depending only on the number of non-identity sites.
template <typename F>
Mat apply_weight_diagonal_channel(const Mat& a, int nq, F coeff) {
  std::vector<cxd> v = to_pauli_coeffs(a, nq);
  std::vector<double> cw(nq + 1);
  for (int w = 0; w <= nq; ++w) cw[w] = coeff(w);
  for (size_t t = 0; t < v.size(); ++t) v[t] *= cw[pauli_index_weight(t, nq)];
  return from_pauli_coeffs(v, nq);
}

}  // namespace qup

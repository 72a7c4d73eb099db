#include "qup/pauli.hpp"

#include <bit>
#include <cmath>

namespace qup {

int weight(const PauliString& p) { return std::popcount(p.x | p.z); }

static void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0,1]");
}

double depolarize_coefficient(const PauliString& p, double lambda) {
  check_lambda(lambda);
  return std::pow(1.0 - lambda, weight(p));
}

double channel_N_coefficient(const PauliString& p, double lambda) {
  check_lambda(lambda);
  const int w = weight(p);
  return std::pow(1.0 - lambda, w + (w + 1) / 2);
}

double inverse_channel_coefficient(const PauliString& p, double lambda) {
  check_lambda(lambda);
  if (lambda == 1.0 && weight(p) > 0) throw std::domain_error("inverse channel singular at lambda = 1");
  return std::pow(1.0 - lambda, -weight(p));
}

cxd phase_value(int phase_k) {
  switch (phase_k & 3) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

PauliString multiply(const PauliString& p, const PauliString& q) {
  if (p.n != q.n) throw std::invalid_argument("multiply: size mismatch");
  // Literal site operator is i^{x&z} X^x Z^z; commuting Z^{z_p} past X^{x_q}
  // costs (-1)^{|z_p & x_q|}.
  PauliString r;
  r.n = p.n;
  r.x = p.x ^ q.x;
  r.z = p.z ^ q.z;
  int k = p.phase_k + q.phase_k;
  k += std::popcount(p.x & p.z) + std::popcount(q.x & q.z);
  k += 2 * std::popcount(p.z & q.x);
  k -= std::popcount(r.x & r.z);
  r.phase_k = ((k % 4) + 4) % 4;
  return r;
}

Mat dense(const PauliString& p) {
  if (p.n > 12) throw std::length_error("dense Pauli capped at n <= 12");
  static const cxd im(0, 1);
  Mat site[4];
  site[0] = Mat::Identity(2, 2);
  site[1] = (Mat(2, 2) << 0, 1, 1, 0).finished();          // X
  site[2] = (Mat(2, 2) << 0, -im, im, 0).finished();       // Y
  site[3] = (Mat(2, 2) << 1, 0, 0, -1).finished();         // Z
  Mat out = Mat::Identity(1, 1) * phase_value(p.phase_k);
  for (int j = 0; j < p.n; ++j) {
    int xb = (p.x >> j) & 1, zb = (p.z >> j) & 1;
    int idx = xb && zb ? 2 : (xb ? 1 : (zb ? 3 : 0));
    out = kron(out, site[idx]);
  }
  return out;
}

}  // namespace qup

#pragma once

#include <cstdint>
#include <stdexcept>

#include "qup/dense.hpp"

namespace qup {

// Pauli string in symplectic form: phase_k quarter turns (value i^phase_k)
// times the literal tensor of site operators, where site (x,z) means
// (0,0)=I, (1,0)=X, (0,1)=Z, (1,1)=Y.
struct PauliString {
  int n = 0;
  uint64_t x = 0;
  uint64_t z = 0;
  int phase_k = 0;  // i^phase_k, in {0,1,2,3}

  static PauliString identity(int n) { return {n, 0, 0, 0}; }

  bool operator==(const PauliString& o) const {
    return n == o.n && x == o.x && z == o.z && phase_k == o.phase_k;
  }
};

struct NoiseParams {
  double lambda_raw = 0.0;  // per-layer strength
  double lambda_inj = 0.0;  // injection-stage strength

  NoiseParams() = default;
  NoiseParams(double lam, double lam_prime) : lambda_raw(lam), lambda_inj(lam_prime) {
    if (lam < 0.0 || lam > 1.0 || lam_prime < 0.0 || lam_prime > 1.0)
      throw std::invalid_argument("NoiseParams: strengths must lie in [0,1]");
  }
  double eta() const { return 1.0 - lambda_raw; }
  double a() const { return 1.0 - lambda_inj; }
};

int weight(const PauliString& p);

// Eigenvalue of D_lambda^{otimes n} on p: (1-lambda)^w.
double depolarize_coefficient(const PauliString& p, double lambda);

// Eigenvalue of the composite channel N on p: (1-lambda)^{w + ceil(w/2)}.
double channel_N_coefficient(const PauliString& p, double lambda);

// Eigenvalue of the inverse channel I_lambda^{otimes n} on p: (1-lambda)^{-w}.
double inverse_channel_coefficient(const PauliString& p, double lambda);

// Product with phase tracking: returns r with dense(p)*dense(q) == dense(r).
PauliString multiply(const PauliString& p, const PauliString& q);

cxd phase_value(int phase_k);

// Dense 2^n x 2^n matrix; refuses n > 12.
Mat dense(const PauliString& p);

}  // namespace qup

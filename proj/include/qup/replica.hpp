#pragma once

#include <string>
#include <vector>

#include "qup/dense.hpp"

namespace qup {

struct ReplicaOperator {
  int n = 0;       // qubits per copy
  int copies = 0;  // number of copies the matrix acts on
  Mat matrix;
  std::string label;
};

struct CycleSpectralData {
  double a = 1.0;
  double alpha_1 = 1.0;
  cxd alpha_omega;
  Mat pi_1, pi_omega, pi_omega2;  // 8x8 spectral projectors of the site cycle
};

// Permutation of copy contents: new slot j holds the old content of slot
// perm[j]. Matrix on dimension 2^{n*perm.size()}, copy 0 most significant.
Mat copy_permutation(int n, const std::vector<int>& perm);

// Normalized Haar symmetrizer over `copies` copies of n qubits
// (dimension 2^{n*copies}, unit trace).
ReplicaOperator build_symmetrizer(int copies, int n);

// Same operator embedded on `total` copies, symmetrizing only `indices`.
Mat embedded_symmetrizer(const std::vector<int>& indices, int n, int total);

ReplicaOperator build_delta3(int n);
Mat build_delta3_permutation_form(int n);

// Three-copy cycle observable H = (C + C^{-1})/2 on n-qubit copies and its
// inverse-channel-corrected version.
Mat cycle_observable(int n);
Mat cycle_observable_corrected(int n, double lambda_prime);

// Closed forms.
double r_poly(int n, double eta);
double g_poly(int n, double a);
double kappa(double lambda);

// tr(N(Delta_3)^2): closed-form value R_n(1-lambda)/(2^{3n}(2^n+1)^2(2^n+2)^2).
double trace_N_delta3_squared(int n, double lambda);
// Independent dense evaluations (Pauli-basis coefficient scaling), n <= 3.
// Sitewise variant applies the attenuation exponent per 3-qubit site group
// (this is the object the closed form equals); the global variant uses the
// total weight over all 3n qubits and upper-bounds it, with equality at
// lambda = 0.
double trace_N_delta3_squared_dense(int n, double lambda);
double trace_N_delta3_squared_dense_global(int n, double lambda);

CycleSpectralData cycle_spectral_data(double lambda_prime);

// 8x8 single-site three-copy cycle and the corrected site observable h_+.
Mat site_cycle();
Mat site_h_plus(double a);

}  // namespace qup

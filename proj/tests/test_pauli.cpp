#include <catch2/catch_amalgamated.hpp>

#include "qup/pauli.hpp"
#include "qup/rng.hpp"

using namespace qup;

namespace {

PauliString make(int n, uint64_t x, uint64_t z, int k = 0) { return {n, x, z, k}; }

Mat depolarize_one_qubit(const Mat& a, int nq, int q, double lambda) {
  // (1-lambda) A + lambda * Tr_q(A) (x) I_q / 2, with qubit 0 the most significant bit
  const int dim = 1 << nq;
  Mat out = (1.0 - lambda) * a;
  const int bit = nq - 1 - q;
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      if (((r >> bit) & 1) != ((c >> bit) & 1)) continue;
      cxd tr = a(r & ~(1 << bit), c & ~(1 << bit)) + a(r | (1 << bit), c | (1 << bit));
      out(r, c) += lambda * tr * 0.5;
    }
  return out;
}

}  // namespace

TEST_CASE("pauli weights", "[pauli]") {
  CHECK(weight(make(3, 0b001, 0b100)) == 2);  // X (x) I (x) Z
  CHECK(weight(PauliString::identity(7)) == 0);
  CHECK(weight(make(5, 0b11111, 0b11111)) == 5);  // Y^5
}

TEST_CASE("channel coefficients", "[pauli]") {
  CHECK(depolarize_coefficient(PauliString::identity(3), 0.3) == 1.0);
  CHECK(depolarize_coefficient(make(2, 0b01, 0), 0.1) == Catch::Approx(0.9).epsilon(1e-14));
  CHECK(depolarize_coefficient(make(2, 0b01, 0b10), 0.1) == Catch::Approx(0.81).epsilon(1e-14));

  CHECK(channel_N_coefficient(PauliString::identity(2), 0.5) == 1.0);
  CHECK(channel_N_coefficient(make(2, 0b01, 0b10), 0.1) == Catch::Approx(0.729).epsilon(1e-14));
  const double lam = 0.23;
  CHECK(channel_N_coefficient(make(3, 0b011, 0b110), lam) ==
        Catch::Approx(std::pow(1.0 - lam, 5)).epsilon(1e-14));

  CHECK(inverse_channel_coefficient(PauliString::identity(4), 0.2) == 1.0);
  CHECK(inverse_channel_coefficient(make(1, 0, 1), 0.2) == Catch::Approx(1.25).epsilon(1e-14));
}

TEST_CASE("coefficient identities over a parameter grid", "[pauli]") {
  std::mt19937_64 rng(7);
  for (double lam : {0.05, 0.3, 0.7, 0.95}) {
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 1 + int(rng() % 6);
      PauliString p = make(n, rng() & ((1u << n) - 1), rng() & ((1u << n) - 1));
      if (weight(p) > 0) {
        CHECK(inverse_channel_coefficient(p, lam) * depolarize_coefficient(p, lam) ==
              Catch::Approx(1.0).epsilon(1e-14));
      }
      CHECK(channel_N_coefficient(p, lam) <= depolarize_coefficient(p, lam) + 1e-15);
    }
  }
}

TEST_CASE("parameter and capacity errors", "[pauli]") {
  CHECK_THROWS_AS(depolarize_coefficient(make(1, 1, 0), 1.5), std::invalid_argument);
  CHECK_THROWS_AS(channel_N_coefficient(make(1, 1, 0), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(inverse_channel_coefficient(make(1, 1, 0), 1.0), std::domain_error);
  CHECK_THROWS_AS(dense(PauliString::identity(13)), std::length_error);
  CHECK_THROWS_AS(NoiseParams(0.5, 1.2), std::invalid_argument);
  CHECK(NoiseParams(0.1, 0.12).eta() == Catch::Approx(0.9));
  CHECK(NoiseParams(0.1, 0.12).a() == Catch::Approx(0.88));
}

TEST_CASE("dense single-site matrices", "[pauli]") {
  Mat x = dense(make(1, 1, 0));
  CHECK(x(0, 1) == cxd(1, 0));
  CHECK(x(1, 0) == cxd(1, 0));
  CHECK(x(0, 0) == cxd(0, 0));
  Mat z = dense(make(1, 0, 1));
  CHECK(z(0, 0) == cxd(1, 0));
  CHECK(z(1, 1) == cxd(-1, 0));
  Mat y = dense(make(1, 1, 1));
  CHECK((y - y.adjoint()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(std::abs(dense(make(2, 0b01, 0b10)).trace()) <= 1e-15);
}

TEST_CASE("dense strings are Hermitian and unitary for real phases", "[pauli]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + int(rng() % 3);
    PauliString p = make(n, rng() & ((1u << n) - 1), rng() & ((1u << n) - 1), 2 * int(rng() % 2));
    Mat m = dense(p);
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-13);
    Mat prod = m * m.adjoint();
    CHECK((prod - Mat::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("symplectic product matches dense multiplication exhaustively (n <= 2)", "[pauli]") {
  for (int n = 1; n <= 2; ++n) {
    const uint64_t lim = uint64_t(1) << n;
    for (uint64_t xp = 0; xp < lim; ++xp)
      for (uint64_t zp = 0; zp < lim; ++zp)
        for (uint64_t xq = 0; xq < lim; ++xq)
          for (uint64_t zq = 0; zq < lim; ++zq)
            for (int kp = 0; kp < 4; kp += (n == 1 ? 1 : 3))
              for (int kq = 0; kq < 4; kq += (n == 1 ? 1 : 3)) {
                PauliString p = make(n, xp, zp, kp), q = make(n, xq, zq, kq);
                Mat lhs = dense(p) * dense(q);
                Mat rhs = dense(multiply(p, q));
                REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-13);
              }
  }
}

TEST_CASE("weight-diagonal channel application equals explicit depolarizing", "[pauli]") {
  std::mt19937_64 rng = make_engine(2024, 1);
  std::normal_distribution<double> g(0.0, 1.0);
  const double lam = 0.17;
  for (int trial = 0; trial < 10; ++trial) {
    Mat a(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) a(r, c) = cxd(g(rng), g(rng));
    a = (a + Mat(a.adjoint())).eval();
    Mat via_coeffs = apply_weight_diagonal_channel(a, 2, [&](int w) { return std::pow(1.0 - lam, w); });
    Mat explicit_form = depolarize_one_qubit(depolarize_one_qubit(a, 2, 0, lam), 2, 1, lam);
    CHECK((via_coeffs - explicit_form).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("pauli transform round trip and eigen action", "[pauli]") {
  // every Pauli string is an eigenvector of the depolarizing map
  for (uint64_t x = 0; x < 4; ++x)
    for (uint64_t z = 0; z < 4; ++z) {
      PauliString p = make(2, x, z);
      Mat m = dense(p);
      Mat out = apply_weight_diagonal_channel(m, 2, [&](int w) { return std::pow(0.8, w); });
      Mat expect = std::pow(0.8, weight(p)) * m;
      CHECK((out - expect).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

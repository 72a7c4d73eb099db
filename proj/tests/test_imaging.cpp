#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "helpers.hpp"
#include "json.hpp"
#include "qup/imaging.hpp"

using qup::apply_sorting_channel;
using qup::build_model;
using qup::depolarize;
using qup::dme_channel;
using qup::eigen_filter;
using qup::estimate_quantities;
using qup::hypothesis_test_sweep;
using qup::ImagingModel;
using qup::imaging_sweep_to_csv;
using qup::imaging_sweep_to_json;
using qup::Mat;
using qup::mirrored;
using qup::NoiseMode;
using qup::PipelineNoise;
using qup::SweepOptions;

namespace {

PipelineNoise raw_noise(double lam) {
  PipelineNoise n;
  n.mode = NoiseMode::raw;
  n.lambda = lam;
  return n;
}

PipelineNoise uploaded_noise(double lam, double factor = 3.0) {
  PipelineNoise n;
  n.mode = NoiseMode::uploaded;
  n.lambda = lam;
  n.noise_factor = factor;
  return n;
}

Eigen::MatrixXd reversal(int m) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) p(i, m - 1 - i) = 1.0;
  return p;
}

double min_eig(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es((a + a.adjoint()) / 2.0);
  return es.eigenvalues().minCoeff();
}

Mat exact_conjugation(const Eigen::MatrixXd& rho, const Mat& sigma, double x) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho);
  Mat u = Mat::Zero(rho.rows(), rho.cols());
  for (int k = 0; k < rho.rows(); ++k) {
    qup::cxd phase = std::exp(qup::cxd(0.0, -x * es.eigenvalues()(k)));
    u += phase * es.eigenvectors().col(k).cast<qup::cxd>() *
         es.eigenvectors().col(k).transpose().cast<qup::cxd>();
  }
  return u * sigma * u.adjoint();
}

}  // namespace

TEST_CASE("model construction validates its arguments", "[imaging]") {
  REQUIRE_THROWS_AS(build_model(1, 0.8, 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_model(17, 0.8, 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_model(6, 0.5, 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_model(6, 1.0, 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_model(6, 0.8, 0.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_model(6, 0.8, 1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_model(6, 0.8, 1.0, -1.0), std::invalid_argument);
  // coincident sources are indistinguishable on any grid
  REQUIRE_THROWS_AS(build_model(6, 0.8, 1e-9, 1.0), std::invalid_argument);
}

TEST_CASE("scene density matrix is a valid rank-two state", "[imaging]") {
  for (double dx : {0.6, 1.0, 2.5, -1.3}) {
    ImagingModel mod = build_model(8, 0.8, dx, 1.0);
    REQUIRE(mod.rho.rows() == 8);
    REQUIRE(std::abs(mod.rho.trace() - 1.0) < 1e-12);
    REQUIRE((mod.rho - mod.rho.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mod.rho);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-12);
    //  rank <= 2: the third-largest eigenvalue vanishes
    REQUIRE(es.eigenvalues()(8 - 3) < 1e-12);
    REQUIRE(std::abs(es.eigenvalues()(7) - mod.r) < 1e-12);
    REQUIRE(std::abs(es.eigenvalues()(6) - (1.0 - mod.r)) < 1e-12);
    REQUIRE(mod.r > 0.5);
    REQUIRE(mod.r < 1.0);
  }
}

TEST_CASE("well-separated sources give the brightness spectrum", "[imaging]") {
  ImagingModel sep = build_model(12, 0.75, 8.0, 1.0);
  REQUIRE(std::abs(sep.overlap) < 1e-6);
  REQUIRE(std::abs(sep.r - 0.75) < 1e-9);
  REQUIRE(std::abs(sep.c2 - 1.0) < 1e-6);  // dominant-gap eigenvector is the planet mode
  REQUIRE(std::abs(sep.s1 - 1.0) < 1e-6);
  REQUIRE(std::abs(sep.c1) < 1e-6);
  REQUIRE(std::abs(sep.s2) < 1e-6);
  REQUIRE(std::abs(sep.planet_expectation - 4.0) < 0.01);
}

TEST_CASE("mirrored scene is the reversal conjugate with swapped roles", "[imaging]") {
  ImagingModel right = build_model(8, 0.8, 2.5, 1.0);
  ImagingModel left = mirrored(right);
  Eigen::MatrixXd p = reversal(8);

  REQUIRE((left.rho - p * right.rho * p).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(std::abs(left.r - right.r) < 1e-12);
  REQUIRE(std::abs(left.overlap - right.overlap) < 1e-12);
  REQUIRE(std::abs(left.planet_expectation + right.planet_expectation) < 1e-12);
  REQUIRE(std::abs(left.c1 - right.c1) < 1e-12);
  REQUIRE(std::abs(left.c2 - right.c2) < 1e-12);
  // mirroring relabels which physical side is bright, so the mode shapes swap
  REQUIRE((left.psi_star - p * right.psi_star).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((left.psi_planet - p * right.psi_planet).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("branch decomposition reconstructs any observable exactly", "[imaging]") {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double b : {0.6, 0.8, 0.95}) {
    ImagingModel mod = build_model(8, b, 1.7, 1.0);
    double amp = 2.0 * b / (1.0 - b);
    Eigen::VectorXd v1 = mod.basis.col(7);
    Eigen::VectorXd v2 = mod.basis.col(6);
    for (int rep = 0; rep < 4; ++rep) {
      Eigen::MatrixXd obs;
      if (rep == 0) {
        obs = mod.grid.asDiagonal();
      } else {
        obs = Eigen::MatrixXd::NullaryExpr(8, 8, [&](Eigen::Index, Eigen::Index) { return g(rng); });
        obs = (obs + obs.transpose()).eval();
      }
      double mu1 = v1.dot(obs * v1);
      double mu2 = v2.dot(obs * v2);
      double off = mod.s1 * mod.s2 * v1.dot(obs * v2);
      double direct = mod.psi_planet.dot(obs * mod.psi_planet);
      REQUIRE(std::abs(mod.c1 * mod.c1 * mu1 + mod.c2 * mod.c2 * mu2 - amp * off - direct) < 1e-10);
    }
  }
}

TEST_CASE("depolarizing channel endpoints and validation", "[imaging]") {
  std::mt19937_64 rng(7);
  Mat rho = qup_test::random_density(6, rng);
  REQUIRE((depolarize(rho, 0.0) - rho).cwiseAbs().maxCoeff() < 1e-14);
  Mat full = depolarize(rho, 1.0);
  REQUIRE((full - Mat::Identity(6, 6) / 6.0).cwiseAbs().maxCoeff() < 1e-14);
  Mat half = depolarize(rho, 0.4);
  REQUIRE(std::abs(half.trace().real() - 1.0) < 1e-12);
  REQUIRE(min_eig(half) > -1e-12);
  REQUIRE_THROWS_AS(depolarize(rho, -0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(depolarize(rho, 1.1), std::invalid_argument);
}

TEST_CASE("exponentiation pass converges at first order in inverse rounds", "[imaging]") {
  std::mt19937_64 rng(99);
  ImagingModel mod = build_model(6, 0.8, 1.2, 1.0);
  Mat sigma = qup_test::random_density(6, rng);
  double x = 0.9;
  Mat target = exact_conjugation(mod.rho, sigma, x);

  REQUIRE((dme_channel(mod.rho, sigma, 0.0, 32) - sigma).cwiseAbs().maxCoeff() < 1e-13);

  double prev = 0.0;
  std::vector<double> errs;
  for (int rounds : {16, 64, 256}) {
    Mat out = dme_channel(mod.rho, sigma, x, rounds);
    REQUIRE(std::abs(out.trace().real() - 1.0) < 1e-12);
    errs.push_back((out - target).cwiseAbs().maxCoeff());
  }
  // error ~ C/rounds: each 4x in rounds divides the error by 4 up to 20%
  for (size_t k = 1; k < errs.size(); ++k) {
    double slope = std::log(errs[k - 1] / errs[k]) / std::log(4.0);
    REQUIRE(slope > 0.8);
    REQUIRE(slope < 1.2);
  }
  (void)prev;

  Mat bad = qup_test::random_density(4, rng);
  REQUIRE_THROWS_AS(dme_channel(mod.rho, bad, x, 16), std::invalid_argument);
  REQUIRE_THROWS_AS(dme_channel(mod.rho, sigma, x, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(dme_channel(mod.rho, sigma, x, 16, raw_noise(-0.1)), std::invalid_argument);
  REQUIRE_THROWS_AS(dme_channel(mod.rho, sigma, x, 16, raw_noise(1.5)), std::invalid_argument);
}

TEST_CASE("sorting channel is trace preserving and positive", "[imaging]") {
  std::mt19937_64 rng(2024);
  ImagingModel mod = build_model(6, 0.85, 1.0, 1.0);
  std::vector<PipelineNoise> noises = {raw_noise(0.0), raw_noise(0.01), uploaded_noise(0.01)};
  for (const auto& noise : noises) {
    for (int rep = 0; rep < 3; ++rep) {
      Mat sigma = qup_test::random_density(6, rng);
      auto fr = apply_sorting_channel(mod, noise, 24, 1.4, 40, sigma);
      REQUIRE(std::abs(fr.p_star + fr.p_planet - 1.0) < 1e-10);
      REQUIRE(fr.p_star > -1e-12);
      REQUIRE(fr.p_planet > -1e-12);
      REQUIRE(min_eig(fr.state_star) > -1e-10);
      REQUIRE(min_eig(fr.state_planet) > -1e-10);
      REQUIRE(std::abs(fr.state_star.trace().real() - 1.0) < 1e-10);
      REQUIRE(std::abs(fr.state_planet.trace().real() - 1.0) < 1e-10);
    }
  }
  Mat wrong = qup_test::random_density(5, rng);
  REQUIRE_THROWS_AS(apply_sorting_channel(mod, raw_noise(0.0), 24, 1.4, 40, wrong),
                    std::invalid_argument);
}

TEST_CASE("filter validation rejects bad configuration", "[imaging]") {
  ImagingModel mod = build_model(6, 0.85, 1.0, 1.0);
  PipelineNoise quiet;
  REQUIRE_THROWS_AS(eigen_filter(mod, quiet, 0, 1.4, 64), std::invalid_argument);
  REQUIRE_THROWS_AS(eigen_filter(mod, quiet, 24, 0.0, 64), std::invalid_argument);
  REQUIRE_THROWS_AS(eigen_filter(mod, quiet, 24, 2.5, 64), std::invalid_argument);
  REQUIRE_THROWS_AS(eigen_filter(mod, quiet, 24, 1.4, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(eigen_filter(mod, raw_noise(1.2), 24, 1.4, 64), std::invalid_argument);
}

TEST_CASE("converged filter sorts the eigenbranches", "[imaging]") {
  ImagingModel mod = build_model(6, 0.85, 1.0, 1.0);
  PipelineNoise quiet;
  auto fr = eigen_filter(mod, quiet, 40, 1.4, 10000);
  REQUIRE_FALSE(fr.gap_warning);
  REQUIRE(fr.fidelity_star > 0.999);
  REQUIRE(fr.fidelity_planet > 0.999);
  REQUIRE(std::abs(fr.p_star - mod.r) < 1e-3);
  REQUIRE(std::abs(fr.p_planet - (1.0 - mod.r)) < 1e-3);
  REQUIRE(fr.leakage < 1e-3);
  REQUIRE(fr.degree <= 40);
  REQUIRE(fr.copies_per_run == 1.0 + double(fr.degree) * 10000.0);
}

TEST_CASE("shrinking x below the resolvable gap warns and leaks", "[imaging]") {
  ImagingModel mod = build_model(6, 0.85, 1.0, 1.0);
  PipelineNoise quiet;
  auto good = eigen_filter(mod, quiet, 40, 1.4, 2000);
  auto tight = eigen_filter(mod, quiet, 40, 0.35, 2000);
  REQUIRE_FALSE(good.gap_warning);
  REQUIRE(tight.gap_warning);
  REQUIRE(tight.leakage > good.leakage);
}

TEST_CASE("estimator reproduces the companion position within error", "[imaging]") {
  ImagingModel mod = build_model(6, 0.85, 1.0, 1.0);
  PipelineNoise quiet;
  auto est = estimate_quantities(mod, quiet, 40, 1.4, 1000, 40000, 17);
  REQUIRE_FALSE(est.degenerate);
  REQUIRE(std::abs(est.target_exact - mod.planet_expectation) < 1e-12);
  REQUIRE(std::abs(est.combined - est.target_exact) < 3.0 * est.combined_se + est.off_bound);
  REQUIRE(std::abs(est.r_hat - mod.r) < 0.01);
  // the off term is cheap enough to measure here, so no bias bound remains
  REQUIRE(est.off_bound == 0.0);
  REQUIRE(est.interference.shots == 10000);
  REQUIRE(est.star_branch.extra.at("kept") + est.planet_branch.extra.at("kept") == 20000.0);
  // copy ledger: each labeled shot is 1 + degree*rounds, each pair shot twice that plus one
  double dm = double(eigen_filter(mod, quiet, 40, 1.4, 1000).degree) * 1000.0;
  REQUIRE(est.copies == 20000.0 * (1.0 + dm) + 10000.0 * (2.0 * (1.0 + dm) + 1.0));
}

TEST_CASE("faint companion inflates the dim-branch error bar", "[imaging]") {
  ImagingModel bright = build_model(8, 0.999, 4.0, 1.0);
  PipelineNoise quiet;
  auto est = estimate_quantities(bright, quiet, 36, 1.4, 1000, 10000, 17);
  REQUIRE_FALSE(est.degenerate);
  // nearly all labeled shots land in the bright branch
  REQUIRE(est.planet_branch.std_error > 10.0 * est.star_branch.std_error);
  // envelope of the off term is below the affordable error, so it is bounded, not measured
  REQUIRE(est.interference.shots == 0);
  REQUIRE(est.off_bound > 0.0);
  REQUIRE(est.off_bound < 0.2);
  double z = (std::abs(est.combined) - est.off_bound) / est.combined_se;
  REQUIRE(z > 5.0);
  REQUIRE(std::abs(est.combined - est.target_exact) < 3.0 * est.combined_se + est.off_bound);
}

TEST_CASE("zero-population branches degrade to a degenerate report", "[imaging]") {
  ImagingModel bright = build_model(8, 0.999, 4.0, 1.0);
  PipelineNoise quiet;
  REQUIRE_THROWS_AS(estimate_quantities(bright, quiet, 36, 1.4, 200, 0, 17), std::invalid_argument);
  auto est = estimate_quantities(bright, quiet, 36, 1.4, 200, 8, 17);
  REQUIRE(est.degenerate);
  REQUIRE(std::isnan(est.combined));
  REQUIRE(std::isinf(est.combined_se));
}

TEST_CASE("uploaded noise at triple rate stays milder than raw", "[imaging]") {
  ImagingModel mod = build_model(6, 0.85, 1.0, 1.0);
  double lam = 1e-3;
  auto raw = eigen_filter(mod, raw_noise(lam), 36, 1.4, 128);
  auto up = eigen_filter(mod, uploaded_noise(lam), 36, 1.4, 128);
  // raw pays per interaction (degree*rounds hits), uploaded only 3x at load
  REQUIRE(up.fidelity_planet > raw.fidelity_planet);
  REQUIRE(up.fidelity_star > raw.fidelity_star);
  auto quiet = eigen_filter(mod, raw_noise(0.0), 36, 1.4, 128);
  REQUIRE(up.fidelity_planet > 0.9 * quiet.fidelity_planet);
}

TEST_CASE("sweep validates its inputs", "[imaging]") {
  ImagingModel right = build_model(8, 0.8, 2.5, 1.0);
  ImagingModel left = mirrored(right);
  std::vector<double> lams{0.0, 1e-3};

  ImagingModel not_mirror = build_model(8, 0.8, 2.4, 1.0);
  REQUIRE_THROWS_AS(hypothesis_test_sweep(right, not_mirror, lams), std::invalid_argument);

  SweepOptions bad = {};
  bad.x_scales.clear();
  REQUIRE_THROWS_AS(hypothesis_test_sweep(right, left, lams, bad), std::invalid_argument);
  bad = {};
  bad.x_scales = {1.5};  // 1.5 * default x 1.5 leaves the (0, 2] domain
  REQUIRE_THROWS_AS(hypothesis_test_sweep(right, left, lams, bad), std::invalid_argument);
  bad = {};
  bad.budget = 0.0;
  REQUIRE_THROWS_AS(hypothesis_test_sweep(right, left, lams, bad), std::invalid_argument);
  REQUIRE_THROWS_AS(hypothesis_test_sweep(right, left, {0.5}, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(hypothesis_test_sweep(right, left, {-1e-3}, {}), std::invalid_argument);
}

TEST_CASE("noise sweep separates raw from uploaded operation", "[imaging]") {
  ImagingModel right = build_model(8, 0.8, 2.5, 1.0);
  ImagingModel left = mirrored(right);
  std::vector<double> lams{0.0, 1e-4, 3e-4, 1e-3, 2e-3};
  SweepOptions opts;
  opts.budget = 1e6;
  auto pts = hypothesis_test_sweep(right, left, lams, opts);
  REQUIRE(pts.size() == 5);

  // noiseless baseline: both modes are the same machine, ratio is exactly one
  REQUIRE(pts[0].success_raw == pts[0].success_uploaded);
  REQUIRE(pts[0].shots90_raw == pts[0].shots90_uploaded);
  REQUIRE(std::abs(pts[0].ratio - 1.0) < 1e-9);
  REQUIRE(pts[0].success_raw > 0.99);

  for (size_t k = 0; k < pts.size(); ++k) {
    // uploaded holds the baseline configuration; raw may retune x per point
    REQUIRE(pts[k].x_uploaded == pts[0].x_uploaded);
    if (k > 0) {
      // raw success decays monotonically over this grid
      REQUIRE(pts[k].success_raw <= pts[k - 1].success_raw + 1e-12);
      REQUIRE(pts[k].success_uploaded >= pts[k].success_raw - 1e-12);
    }
  }
  // the uploaded pipeline stays near-perfect across the grid
  REQUIRE(pts.back().success_uploaded > 0.99);
  REQUIRE(pts.back().success_raw < 0.5);

  // cost crossing: raw is cheaper at the mildest noise, then loses badly
  REQUIRE(pts[1].shots90_raw < pts[1].shots90_uploaded);
  REQUIRE(pts[2].shots90_raw > pts[2].shots90_uploaded);
  REQUIRE(pts[3].ratio >= 100.0);
}

TEST_CASE("mirrored sweeps agree by symmetry", "[imaging]") {
  ImagingModel right = build_model(6, 0.8, 2.0, 1.0);
  ImagingModel left = mirrored(right);
  std::vector<double> lams{0.0, 5e-4};
  SweepOptions opts;
  opts.budget = 1e5;
  auto ab = hypothesis_test_sweep(right, left, lams, opts);
  auto ba = hypothesis_test_sweep(left, right, lams, opts);
  for (size_t k = 0; k < ab.size(); ++k) {
    REQUIRE(std::abs(ab[k].signal_raw + ba[k].signal_raw) < 1e-9);
    REQUIRE(std::abs(ab[k].success_raw - ba[k].success_raw) < 1e-9);
    REQUIRE(std::abs(ab[k].success_uploaded - ba[k].success_uploaded) < 1e-9);
  }
}

TEST_CASE("sweep serialization is deterministic and well-formed", "[imaging]") {
  ImagingModel right = build_model(6, 0.8, 2.0, 1.0);
  ImagingModel left = mirrored(right);
  std::vector<double> lams{0.0, 1e-3};
  SweepOptions opts;
  opts.budget = 1e5;
  auto pts = hypothesis_test_sweep(right, left, lams, opts);
  auto pts2 = hypothesis_test_sweep(right, left, lams, opts);

  std::string csv = imaging_sweep_to_csv(pts);
  REQUIRE(csv == imaging_sweep_to_csv(pts2));
  REQUIRE(csv.rfind("noise,mode,shots,success,ratio\n", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * long(pts.size()));
  REQUIRE(csv.find("raw") != std::string::npos);
  REQUIRE(csv.find("uploaded") != std::string::npos);

  std::string js = imaging_sweep_to_json(pts, right, opts);
  REQUIRE(js == imaging_sweep_to_json(pts2, right, opts));
  auto parsed = nlohmann::json::parse(js);
  REQUIRE(parsed["points"].size() == pts.size());
  REQUIRE(parsed["model"]["b"] == 0.8);
  REQUIRE(parsed["model"]["m"] == 6);
  REQUIRE(parsed["noise_factor"] == 3.0);
  REQUIRE(parsed["points"][0].contains("ratio"));
  REQUIRE(parsed["points"][0].contains("success_raw"));
  REQUIRE(parsed["points"][0].contains("success_uploaded"));
}

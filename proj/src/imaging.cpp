#include "qup/imaging.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "qup/rng.hpp"

namespace qup {

namespace {

constexpr uint64_t kImagingSalt = 0x1C0A;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ90 = 1.2815515655446004;  // Phi^-1(0.90)

std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// ---- phase-polynomial machinery -------------------------------------------

// Fourier coefficients (orders 0..deg) of a smooth pass window on the circle:
// erf-edged plateau over [lo, hi] with transition width delta.
std::vector<cxd> window_coeffs(double lo, double hi, double delta, int deg) {
  const int n = 4096;
  std::vector<cxd> c(size_t(deg) + 1, cxd(0, 0));
  for (int j = 0; j < n; ++j) {
    const double th = -std::numbers::pi + 2.0 * std::numbers::pi * j / n;
    const double w = 0.25 * (1.0 + std::erf((th - lo) / delta)) * (1.0 + std::erf((hi - th) / delta));
    for (int k = 0; k <= deg; ++k) c[size_t(k)] += w * std::polar(1.0, -k * th);
  }
  for (auto& v : c) v /= double(n);
  return c;
}

double eval_window(const std::vector<cxd>& c, double th) {
  const cxd z = std::polar(1.0, th);
  cxd s(0, 0);
  for (size_t k = c.size(); k-- > 1;) s = (s + c[k]) * z;
  return c[0].real() + 2.0 * s.real();
}

cxd eval_poly(const std::vector<cxd>& f, cxd z) {
  cxd v(0, 0);
  for (size_t k = f.size(); k-- > 0;) v = v * z + f[k];
  return v;
}

// Spectral factor f (one-sided, degree deg) of a strictly positive window,
// |f(e^{i th})|^2 = w(th): roots of the doubled polynomial inside the unit
// disk, Newton-polished, with the overall scale fixed on a circle grid.
std::vector<cxd> fejer_riesz(const std::vector<cxd>& wc) {
  const int deg = int(wc.size()) - 1;
  std::vector<cxd> a(size_t(2 * deg) + 1);
  for (int j = 0; j <= 2 * deg; ++j) a[size_t(j)] = j < deg ? std::conj(wc[size_t(deg - j)]) : wc[size_t(j - deg)];
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(2 * deg, 2 * deg);
  for (int i = 1; i < 2 * deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < 2 * deg; ++i) comp(i, 2 * deg - 1) = -a[size_t(i)] / a[size_t(2 * deg)];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  std::vector<cxd> roots(es.eigenvalues().data(), es.eigenvalues().data() + 2 * deg);
  std::sort(roots.begin(), roots.end(), [](cxd u, cxd v) { return std::abs(u) < std::abs(v); });
  // outer factor: outside-disk roots keep the constant coefficient at its
  // Jensen-mean size, which the rotation recursion divides by at every step.
  // Roots come in circle-reflected pairs, so a polished root that lands
  // inside is swapped for its partner; that only changes the overall scale.
  std::vector<cxd> f{cxd(1, 0)};
  for (int i = deg; i < 2 * deg; ++i) {
    cxd z = roots[size_t(i)];
    for (int it = 0; it < 8; ++it) {
      cxd p(0, 0), dp(0, 0);
      for (size_t k = a.size(); k-- > 0;) {
        dp = dp * z + p;
        p = p * z + a[k];
      }
      if (std::abs(dp) < 1e-300) break;
      z -= p / dp;
    }
    if (std::abs(z) < 1.0) z = 1.0 / std::conj(z);
    f.push_back(cxd(0, 0));
    for (size_t k = f.size() - 1; k > 0; --k) f[k] -= f[k - 1] / z;
  }
  const int grid = 16384;
  std::vector<double> wg(grid);
  std::vector<cxd> zg(grid);
  double logsum = 0.0;
  for (int j = 0; j < grid; ++j) {
    const double th = -std::numbers::pi + 2.0 * std::numbers::pi * j / grid;
    zg[size_t(j)] = std::polar(1.0, th);
    wg[size_t(j)] = std::max(eval_window(wc, th), 1e-12);
    logsum += std::log(wg[size_t(j)] / std::norm(eval_poly(f, zg[size_t(j)])));
  }
  const double scale = std::exp(0.5 * logsum / grid);
  for (auto& v : f) v *= scale;
  // Wilson refinement: f <- f * analytic part of (w / |f|^2 + 1) / 2, kept at
  // degree deg. Quadratic convergence for any outer seed, so imperfect root
  // pairing above only costs iterations.
  std::vector<cxd> gk(size_t(deg) + 1), fn(size_t(deg) + 1);
  double resid = kInf;
  for (int it = 0; it < 60 && resid > 1e-11; ++it) {
    resid = 0.0;
    std::fill(gk.begin(), gk.end(), cxd(0, 0));
    for (int j = 0; j < grid; ++j) {
      const double m2 = std::norm(eval_poly(f, zg[size_t(j)]));
      resid = std::max(resid, std::abs(m2 - wg[size_t(j)]) / wg[size_t(j)]);
      const double t = wg[size_t(j)] / m2;
      cxd ph(t, 0);
      const cxd step = std::conj(zg[size_t(j)]);
      for (int k = 0; k <= deg; ++k) {
        gk[size_t(k)] += ph;
        ph *= step;
      }
    }
    if (resid <= 1e-11) break;
    for (auto& v : gk) v /= double(grid);
    gk[0] = 0.5 * (gk[0] + 1.0);
    for (int mI = 0; mI <= deg; ++mI) {
      cxd acc(0, 0);
      for (int k = 0; k <= mI; ++k) acc += f[size_t(k)] * gk[size_t(mI - k)];
      fn[size_t(mI)] = acc;
    }
    f = fn;
  }
  if (resid > 1e-8) throw std::logic_error("spectral factorization did not converge");
  return f;
}

// Interleaving U(2) rotations for the pair (f, g) with |f|^2 + |g|^2 = 1 on
// the unit circle: peel one degree per step, the leading and constant
// coefficients fixing the rotation. Validated by rebuilding the pair.
std::vector<Eigen::Matrix2cd> interleave_rotations(std::vector<cxd> p, std::vector<cxd> q, double* err_out) {
  const int deg = int(p.size()) - 1;
  std::vector<cxd> f = p, g = q;
  std::vector<Eigen::Matrix2cd> rots(size_t(deg) + 1);
  for (int d = deg; d >= 1; --d) {
    const double nu = std::sqrt(std::norm(p[0]) + std::norm(q[0]));
    cxd al(1, 0), be(0, 0);
    if (nu > 1e-13) {
      al = p[0] / nu;
      be = q[0] / nu;
    }
    rots[size_t(d)] << al, -std::conj(be), be, std::conj(al);
    std::vector<cxd> pn(static_cast<size_t>(d)), qn(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
      pn[size_t(k)] = std::conj(al) * p[size_t(k)] + std::conj(be) * q[size_t(k)];
      qn[size_t(k)] = -be * p[size_t(k) + 1] + al * q[size_t(k) + 1];
    }
    p = std::move(pn);
    q = std::move(qn);
  }
  const double nu0 = std::sqrt(std::norm(p[0]) + std::norm(q[0]));
  rots[0] << p[0] / nu0, -std::conj(q[0] / nu0), q[0] / nu0, std::conj(p[0] / nu0);
  double err = 0.0;
  for (int j = 0; j < 256; ++j) {
    const double th = -std::numbers::pi + 2.0 * std::numbers::pi * j / 256;
    const cxd z = std::polar(1.0, th);
    Eigen::Matrix2cd u = rots[0];
    for (int d = 1; d <= deg; ++d) {
      u.row(1) *= z;
      u = rots[size_t(d)] * u;
    }
    err = std::max(err, std::abs(u(0, 0) - eval_poly(f, z)));
    err = std::max(err, std::abs(u(1, 0) - eval_poly(g, z)));
  }
  if (err > 1e-3) throw std::logic_error("phase polynomial synthesis failed");
  if (err_out) *err_out = err;
  return rots;
}

// ---- blockwise channel ------------------------------------------------------

// The noise-independent part of the filter: window polynomial and the
// interleaving rotations. Depends only on (r, x, degree), so mirrored models
// and every noise point of a sweep share one kernel.
struct FilterKernel {
  int deg = 0;
  double x = 0.0;
  std::vector<Eigen::Matrix2cd> rots;
  bool warn = false;
  double leak_est = 0.0;
  double poly_err = 0.0;
};

// Everything runs in the eigenbasis of the scene state, where the program is
// diagonal and each controlled partial-swap round is an entrywise update of
// the four ancilla blocks.
struct SortingMachine {
  int m = 0;
  int rounds = 0;
  PipelineNoise noise;
  FilterKernel kernel;
  Eigen::VectorXd lam_load;  // program eigenvalues after any load noise
  Mat f11;        // per-entry factor for the fully controlled block
  Vec f10, f01;   // one-sided factors
  double s2 = 0;  // sin^2 of the round angle, for the refresh term
};

struct BranchPair {
  Mat b00, b11;
  double p0 = 0.0, p1 = 0.0;
};

FilterKernel build_kernel(double r, double x, int qsp_degree) {
  if (qsp_degree < 1) throw std::invalid_argument("filter degree must be positive");
  if (!(x > 0.0) || x > 2.0) throw std::invalid_argument("x must be in (0, 2]");
  FilterKernel ker;
  ker.x = x;

  const double gap = x * (2.0 * r - 1.0);
  const double delta = std::max(gap / 5.6, 7.8 / qsp_degree);
  const double resolve = 0.5 * gap / delta;
  ker.leak_est = 0.5 * std::erfc(resolve);
  if (resolve < 1.9) {
    ker.warn = true;
    std::cerr << "warning: filter degree " << qsp_degree << " cannot resolve the phase gap "
              << gap << " at x = " << x << "; expected leakage about " << ker.leak_est << "\n";
  }
  const double center = -x * r;
  auto wc = window_coeffs(center - 0.5 * gap, center + 0.5 * gap, delta, qsp_degree);
  // the lift floor must hold on the factorization grid, so match its size
  const int grid = 16384;
  double mn = kInf, mx = -kInf;
  for (int j = 0; j < grid; ++j) {
    const double w = eval_window(wc, -std::numbers::pi + 2.0 * std::numbers::pi * j / grid);
    mn = std::min(mn, w);
    mx = std::max(mx, w);
  }
  const double eps = 1e-6, lift = (1.0 - 2.0 * eps) / (mx - mn);
  wc[0] = cxd(eps + (wc[0].real() - mn) * lift, 0.0);
  for (size_t k = 1; k < wc.size(); ++k) wc[k] *= lift;
  int deff = 1;
  for (int k = qsp_degree; k >= 1; --k)
    if (std::abs(wc[size_t(k)]) > 1e-9) {
      deff = k;
      break;
    }
  wc.resize(size_t(deff) + 1);
  std::vector<cxd> comp(wc.size());
  comp[0] = cxd(1.0 - wc[0].real(), 0.0);
  for (size_t k = 1; k < wc.size(); ++k) comp[k] = -wc[k];
  ker.deg = deff;
  ker.rots = interleave_rotations(fejer_riesz(wc), fejer_riesz(comp), &ker.poly_err);
  return ker;
}

SortingMachine assemble_machine(const FilterKernel& kernel, const ImagingModel& model,
                                const PipelineNoise& noise, int rounds) {
  if (rounds < 1) throw std::invalid_argument("interaction rounds must be positive");
  if (noise.lambda < 0.0 || noise.lambda > 1.0) throw std::invalid_argument("noise rate must be in [0, 1]");
  SortingMachine mach;
  mach.m = model.m;
  mach.rounds = rounds;
  mach.noise = noise;
  mach.kernel = kernel;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.rho);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  if (noise.mode == NoiseMode::uploaded)
    lam = (1.0 - noise.lambda) * lam + Eigen::VectorXd::Constant(model.m, noise.lambda / model.m);
  mach.lam_load = lam;

  const double th = kernel.x / rounds, c = std::cos(th), s = std::sin(th);
  mach.s2 = s * s;
  mach.f11.resize(model.m, model.m);
  mach.f10.resize(model.m);
  mach.f01.resize(model.m);
  for (int i = 0; i < model.m; ++i) {
    mach.f10(i) = cxd(c, -s * lam(i));
    mach.f01(i) = cxd(c, s * lam(i));
    for (int j = 0; j < model.m; ++j) mach.f11(i, j) = cxd(c * c, -c * s * (lam(i) - lam(j)));
  }
  return mach;
}

void depolarize_block(Mat& b, double lambda, int m) {
  const cxd tr = b.trace();
  b *= (1.0 - lambda);
  const cxd add = lambda * tr / double(m);
  for (int i = 0; i < m; ++i) b(i, i) += add;
}

BranchPair run_machine(const SortingMachine& mach, const Mat& sigma_eig) {
  const int m = mach.m;
  const auto& rots = mach.kernel.rots;
  Mat blk[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) blk[a][b] = rots[0](a, 0) * sigma_eig * std::conj(rots[0](b, 0));
  Mat t00(m, m), t01(m, m), t10(m, m), t11(m, m);
  const double lam = mach.noise.lambda;
  const bool raw = mach.noise.mode == NoiseMode::raw && lam > 0.0;
  for (int d = 1; d <= mach.kernel.deg; ++d) {
    for (int t = 0; t < mach.rounds; ++t) {
      const cxd tr11 = blk[1][1].trace();
      blk[1][1].array() *= mach.f11.array();
      for (int i = 0; i < m; ++i) blk[1][1](i, i) += mach.s2 * mach.lam_load(i) * tr11;
      blk[1][0].array().colwise() *= mach.f10.array();
      blk[0][1].array().rowwise() *= mach.f01.transpose().array();
      if (raw) {
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) depolarize_block(blk[a][b], lam, m);
        t00 = blk[0][0];
        t11 = blk[1][1];
        blk[0][0] = (1.0 - lam) * t00 + 0.5 * lam * (t00 + t11);
        blk[1][1] = (1.0 - lam) * t11 + 0.5 * lam * (t00 + t11);
        blk[0][1] *= (1.0 - lam);
        blk[1][0] *= (1.0 - lam);
      }
    }
    const Eigen::Matrix2cd& rot = rots[size_t(d)];
    t00 = rot(0, 0) * blk[0][0] + rot(0, 1) * blk[1][0];
    t01 = rot(0, 0) * blk[0][1] + rot(0, 1) * blk[1][1];
    t10 = rot(1, 0) * blk[0][0] + rot(1, 1) * blk[1][0];
    t11 = rot(1, 0) * blk[0][1] + rot(1, 1) * blk[1][1];
    blk[0][0] = t00 * std::conj(rot(0, 0)) + t01 * std::conj(rot(0, 1));
    blk[0][1] = t00 * std::conj(rot(1, 0)) + t01 * std::conj(rot(1, 1));
    blk[1][0] = t10 * std::conj(rot(0, 0)) + t11 * std::conj(rot(0, 1));
    blk[1][1] = t10 * std::conj(rot(1, 0)) + t11 * std::conj(rot(1, 1));
  }
  BranchPair out;
  out.b00 = 0.5 * (blk[0][0] + blk[0][0].adjoint());
  out.b11 = 0.5 * (blk[1][1] + blk[1][1].adjoint());
  out.p0 = out.b00.trace().real();
  out.p1 = out.b11.trace().real();
  return out;
}

FilterResult package_result(const ImagingModel& model, const SortingMachine& mach, const BranchPair& bp) {
  FilterResult res;
  res.p_star = bp.p0;
  res.p_planet = bp.p1;
  const Mat basis = model.basis.cast<cxd>();
  res.state_star = bp.p0 > 0.0 ? Mat(basis * (bp.b00 / bp.p0) * basis.adjoint()) : Mat::Zero(model.m, model.m);
  res.state_planet = bp.p1 > 0.0 ? Mat(basis * (bp.b11 / bp.p1) * basis.adjoint()) : Mat::Zero(model.m, model.m);
  const int i1 = model.m - 1, i2 = model.m - 2;
  res.fidelity_star = bp.p0 > 0.0 ? bp.b00(i1, i1).real() / bp.p0 : 0.0;
  res.fidelity_planet = bp.p1 > 0.0 ? bp.b11(i2, i2).real() / bp.p1 : 0.0;
  res.leakage = bp.b00(i2, i2).real() + bp.b11(i1, i1).real();
  res.gap_warning = mach.kernel.warn;
  res.degree = mach.kernel.deg;
  res.x = mach.kernel.x;
  res.rounds = mach.rounds;
  res.copies_per_run = 1.0 + double(mach.kernel.deg) * mach.rounds;
  return res;
}

// ---- estimator statistics ---------------------------------------------------

// Channel-level ingredients shared by the sampling and Gaussian-model paths.
struct BranchStats {
  double p0 = 0, p1 = 0;
  Eigen::VectorXd prob_star, prob_planet;  // position distributions per branch
  double mu1 = 0, mu2 = 0, v1 = 0, v2 = 0;
  double m_off = 0;    // Re tr(O sigma_planet P_star sigma_star)
  double o_max = 0;    // observable norm, the interference coin scale
  double amp = 0;      // 2b/(1-b) conversion of the star-referenced overlap
  double env = 0;      // 2|c1 c2| ||O||, envelope of the off term
};

Eigen::VectorXd diag_probs(const Mat& state, double* mu, double* var, const Eigen::VectorXd& grid) {
  Eigen::VectorXd q = state.diagonal().real().cwiseMax(0.0);
  const double tot = q.sum();
  if (tot > 0.0) q /= tot;
  const double m1 = q.dot(grid);
  *mu = m1;
  *var = q.dot(grid.cwiseProduct(grid)) - m1 * m1;
  return q;
}

BranchStats branch_stats(const ImagingModel& model, const PipelineNoise& noise, const FilterResult& fr) {
  BranchStats st;
  st.p0 = fr.p_star;
  st.p1 = fr.p_planet;
  st.prob_star = diag_probs(fr.state_star, &st.mu1, &st.v1, model.grid);
  st.prob_planet = diag_probs(fr.state_planet, &st.mu2, &st.v2, model.grid);
  st.o_max = model.grid.cwiseAbs().maxCoeff();
  st.amp = 2.0 * model.b / (1.0 - model.b);
  st.env = 2.0 * std::abs(model.c1 * model.c2) * st.o_max;
  Mat ref = (model.psi_star * model.psi_star.transpose()).cast<cxd>();
  Mat s0 = fr.state_star, s1 = fr.state_planet;
  ref = depolarize(ref, noise.lambda);
  if (noise.mode == NoiseMode::raw && noise.lambda > 0.0) {
    s0 = depolarize(s0, noise.lambda);
    s1 = depolarize(s1, noise.lambda);
  }
  const Mat obs = model.grid.cast<cxd>().asDiagonal();
  st.m_off = (obs * s1 * ref * s0).trace().real();
  // the raw overlap test holds one coherent ancilla through two full filter
  // executions, so its visibility pays the per-interaction rate throughout
  if (noise.mode == NoiseMode::raw)
    st.m_off *= std::pow(1.0 - noise.lambda, 2.0 * double(fr.degree) * fr.rounds);
  st.m_off = std::clamp(st.m_off, -st.o_max, st.o_max);
  return st;
}

// The off term is measured only when the affordable interference standard
// error beats its a-priori envelope; otherwise the envelope is carried as an
// explicit bias bound and the whole budget goes to labeled shots.
bool measure_off_term(const BranchStats& st, double shots) {
  if (shots < 8.0) return false;
  return st.amp * st.o_max / std::sqrt(shots / 4.0) < st.env;
}

struct Analytic {
  double mean = 0.0;
  double se = 0.0;     // at the given budget
  double bound = 0.0;  // unmeasured off-term envelope
};

Analytic analytic_estimate(const ImagingModel& model, const BranchStats& st, double budget) {
  Analytic an;
  const double w1 = model.c1 * model.c1, w2 = model.c2 * model.c2;
  an.mean = w1 * st.mu1 + w2 * st.mu2;
  double var = 0.0;
  const bool off = measure_off_term(st, budget);
  const double n_lab = off ? budget / 2.0 : budget;
  auto branch_term = [&](double w, double v, double p) {
    if (w < 1e-12) return 0.0;
    if (p * n_lab <= 0.0) return kInf;
    return w * w * v / (p * n_lab);
  };
  var += branch_term(w1, st.v1, st.p0);
  var += branch_term(w2, st.v2, st.p1);
  if (off) {
    an.mean += -st.amp * st.m_off;
    var += st.amp * st.amp * (st.o_max * st.o_max - st.m_off * st.m_off) / (budget / 4.0);
  } else {
    an.bound = st.env;
  }
  an.se = std::sqrt(var);
  return an;
}

}  // namespace

// ---- model -----------------------------------------------------------------

ImagingModel build_model(int m, double b, double delta_x, double aperture_width) {
  if (m < 2 || m > 16) throw std::invalid_argument("grid size must be between 2 and 16");
  if (!(b > 0.5) || !(b < 1.0)) throw std::invalid_argument("brightness must be in (0.5, 1)");
  if (delta_x == 0.0 || !std::isfinite(delta_x)) throw std::invalid_argument("source separation must be nonzero");
  if (!(aperture_width > 0.0)) throw std::invalid_argument("aperture width must be positive");
  ImagingModel mod;
  mod.m = m;
  mod.b = b;
  mod.delta_x = delta_x;
  mod.aperture_width = aperture_width;
  mod.grid.resize(m);
  for (int j = 0; j < m; ++j) mod.grid(j) = j - 0.5 * (m - 1);
  auto mode_at = [&](double center) {
    Eigen::VectorXd v(m);
    for (int j = 0; j < m; ++j) {
      const double u = (mod.grid(j) - center) / aperture_width;
      v(j) = std::exp(-0.5 * u * u);
    }
    v.normalize();
    return v;
  };
  mod.psi_star = mode_at(-0.5 * delta_x);
  mod.psi_planet = mode_at(0.5 * delta_x);
  mod.overlap = mod.psi_star.dot(mod.psi_planet);
  if (1.0 - std::abs(mod.overlap) < 1e-12)
    throw std::invalid_argument("source modes are indistinguishable on this grid");
  mod.rho = b * mod.psi_star * mod.psi_star.transpose() +
            (1.0 - b) * mod.psi_planet * mod.psi_planet.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mod.rho);
  mod.basis = es.eigenvectors();
  mod.r = es.eigenvalues()(m - 1);
  if (mod.basis.col(m - 1).dot(mod.psi_star) < 0.0) mod.basis.col(m - 1) *= -1.0;
  if (mod.basis.col(m - 2).dot(mod.psi_planet) < 0.0) mod.basis.col(m - 2) *= -1.0;
  mod.v1 = mod.basis.col(m - 1);
  mod.v2 = mod.basis.col(m - 2);
  mod.c1 = mod.v1.dot(mod.psi_planet);
  mod.c2 = mod.v2.dot(mod.psi_planet);
  mod.s1 = mod.v1.dot(mod.psi_star);
  mod.s2 = mod.v2.dot(mod.psi_star);
  mod.planet_expectation = mod.psi_planet.dot(mod.grid.cwiseProduct(mod.psi_planet));
  return mod;
}

Mat depolarize(const Mat& state, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("noise rate must be in [0, 1]");
  const int m = int(state.rows());
  return (1.0 - lambda) * state + lambda * state.trace() / double(m) * Mat::Identity(m, m);
}

Mat dme_channel(const Mat& rho_program, const Mat& sigma_target, double x, int rounds,
                const PipelineNoise& noise) {
  if (rho_program.rows() != rho_program.cols() || sigma_target.rows() != sigma_target.cols() ||
      rho_program.rows() != sigma_target.rows())
    throw std::invalid_argument("program and target dimensions must match");
  if (rounds < 1) throw std::invalid_argument("interaction rounds must be positive");
  if (noise.lambda < 0.0 || noise.lambda > 1.0) throw std::invalid_argument("noise rate must be in [0, 1]");
  const double th = x / rounds, c = std::cos(th), s = std::sin(th);
  const Mat rho = noise.mode == NoiseMode::uploaded ? depolarize(rho_program, noise.lambda) : rho_program;
  Mat sigma = sigma_target;
  const cxd ics(0.0, c * s);
  for (int t = 0; t < rounds; ++t) {
    sigma = c * c * sigma + s * s * sigma.trace() * rho - ics * (rho * sigma - sigma * rho);
    if (noise.mode == NoiseMode::raw && noise.lambda > 0.0) sigma = depolarize(sigma, noise.lambda);
  }
  return sigma;
}

FilterResult apply_sorting_channel(const ImagingModel& model, const PipelineNoise& noise,
                                   int qsp_degree, double x, int rounds, const Mat& sigma_in) {
  if (sigma_in.rows() != model.m || sigma_in.cols() != model.m)
    throw std::invalid_argument("input state dimension must match the model grid");
  SortingMachine mach = assemble_machine(build_kernel(model.r, x, qsp_degree), model, noise, rounds);
  const Mat basis = model.basis.cast<cxd>();
  return package_result(model, mach, run_machine(mach, basis.adjoint() * sigma_in * basis));
}

FilterResult eigen_filter(const ImagingModel& model, const PipelineNoise& noise, int qsp_degree,
                          double x, int rounds) {
  Mat sigma = model.rho.cast<cxd>();
  if (noise.mode == NoiseMode::uploaded) sigma = depolarize(sigma, noise.lambda);
  return apply_sorting_channel(model, noise, qsp_degree, x, rounds, sigma);
}

QuantityEstimates estimate_quantities(const ImagingModel& model, const PipelineNoise& noise,
                                      int qsp_degree, double x, int rounds, uint64_t shots,
                                      uint64_t seed) {
  if (shots == 0) throw std::invalid_argument("shot budget is zero");
  const FilterResult fr = eigen_filter(model, noise, qsp_degree, x, rounds);
  const BranchStats st = branch_stats(model, noise, fr);
  const bool off = measure_off_term(st, double(shots));
  const uint64_t n_lab = off ? shots / 2 : shots;
  const uint64_t n_off = off ? shots / 4 : 0;

  auto rng = make_engine(seed, kImagingSalt);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto draw_pos = [&](const Eigen::VectorXd& probs) {
    double u = uni(rng), acc = 0.0;
    for (int j = 0; j < model.m; ++j) {
      acc += probs(j);
      if (u < acc) return model.grid(j);
    }
    return model.grid(model.m - 1);
  };
  double sum[2] = {0, 0}, sum2[2] = {0, 0};
  uint64_t kept[2] = {0, 0};
  for (uint64_t t = 0; t < n_lab; ++t) {
    const int br = uni(rng) < st.p0 ? 0 : 1;
    const double z = draw_pos(br == 0 ? st.prob_star : st.prob_planet);
    sum[br] += z;
    sum2[br] += z * z;
    ++kept[br];
  }
  auto branch_report = [&](int br, double p_analytic) {
    EstimatorReport rep;
    rep.shots = n_lab;
    rep.seed = seed;
    rep.extra["kept"] = double(kept[br]);
    rep.extra["branch_probability"] = p_analytic;
    if (kept[br] == 0) {
      rep.mean = kNaN;
      rep.std_error = kInf;
      return rep;
    }
    const double n = double(kept[br]);
    rep.mean = sum[br] / n;
    const double var = std::max(0.0, sum2[br] / n - rep.mean * rep.mean);
    rep.extra["variance"] = var;
    rep.std_error = kept[br] > 1 ? std::sqrt(var / (n - 1.0)) : st.o_max;
    return rep;
  };

  QuantityEstimates est;
  est.star_branch = branch_report(0, st.p0);
  est.planet_branch = branch_report(1, st.p1);
  est.r_hat = n_lab > 0 ? double(kept[0]) / double(n_lab) : kNaN;
  est.target_exact = model.planet_expectation;

  est.interference.shots = n_off;
  est.interference.seed = seed;
  est.interference.extra["amplification"] = st.amp;
  est.interference.extra["envelope"] = st.env;
  est.interference.extra["measured"] = off ? 1.0 : 0.0;
  est.interference.extra["coin_scale"] = st.o_max;
  double off_term = 0.0, off_se = 0.0;
  if (off) {
    const double p_plus = 0.5 * (1.0 + st.m_off / st.o_max);
    uint64_t plus = 0;
    for (uint64_t t = 0; t < n_off; ++t) plus += uni(rng) < p_plus ? 1 : 0;
    const double coin_mean = st.o_max * (2.0 * double(plus) / double(n_off) - 1.0);
    off_term = -st.amp * coin_mean;
    off_se = st.amp * std::sqrt(std::max(0.0, st.o_max * st.o_max - coin_mean * coin_mean) / double(n_off));
    est.interference.mean = off_term;
    est.interference.std_error = off_se;
    est.interference.extra["coin_mean"] = coin_mean;
  } else {
    est.interference.mean = 0.0;
    est.interference.std_error = 0.0;
    est.off_bound = st.env;
  }

  const double w1 = model.c1 * model.c1, w2 = model.c2 * model.c2;
  est.degenerate = (w1 > 1e-12 && kept[0] == 0) || (w2 > 1e-12 && kept[1] == 0) || (off && n_off == 0);
  if (est.degenerate) {
    est.combined = kNaN;
    est.combined_se = kInf;
  } else {
    est.combined = w1 * (w1 > 1e-12 ? est.star_branch.mean : 0.0) +
                   w2 * (w2 > 1e-12 ? est.planet_branch.mean : 0.0) + off_term;
    double var = off_se * off_se;
    if (w1 > 1e-12) var += w1 * w1 * est.star_branch.std_error * est.star_branch.std_error;
    if (w2 > 1e-12) var += w2 * w2 * est.planet_branch.std_error * est.planet_branch.std_error;
    est.combined_se = std::sqrt(var);
  }
  est.copies = double(n_lab) * fr.copies_per_run + double(n_off) * (2.0 * fr.copies_per_run + 1.0);
  return est;
}

// ---- hypothesis-test sweep --------------------------------------------------

std::vector<SweepPoint> hypothesis_test_sweep(const ImagingModel& right, const ImagingModel& left,
                                              const std::vector<double>& lambdas,
                                              const SweepOptions& opts) {
  if (right.m != left.m || right.b != left.b || right.aperture_width != left.aperture_width ||
      std::abs(right.delta_x + left.delta_x) > 1e-12)
    throw std::invalid_argument("hypothesis pair must be mirror images");
  if (opts.qsp_degree < 1 || opts.rounds < 1 || !(opts.budget >= 16.0))
    throw std::invalid_argument("bad sweep configuration");
  if (opts.x_scales.empty()) throw std::invalid_argument("x candidate grid is empty");
  for (double sc : opts.x_scales)
    if (!(sc * opts.x > 0.0) || sc * opts.x > 2.0)
      throw std::invalid_argument("x candidates must lie in (0, 2]");
  for (double lam : lambdas)
    if (lam < 0.0 || lam * opts.noise_factor > 1.0)
      throw std::invalid_argument("noise grid out of range");

  const double truth = right.planet_expectation;
  const double dir = truth >= 0.0 ? 1.0 : -1.0;
  std::vector<FilterKernel> kernels;
  for (double sc : opts.x_scales) kernels.push_back(build_kernel(right.r, opts.x * sc, opts.qsp_degree));

  struct PairStat {
    double signal = 0, se = 0, bound = 0, bias = 0;
  };
  auto evaluate = [&](const PipelineNoise& noise, const FilterKernel& ker) {
    auto run_side = [&](const ImagingModel& mod) {
      Mat sigma = mod.rho.cast<cxd>();
      if (noise.mode == NoiseMode::uploaded) sigma = depolarize(sigma, noise.lambda);
      const Mat basis = mod.basis.cast<cxd>();
      SortingMachine mach = assemble_machine(ker, mod, noise, opts.rounds);
      const FilterResult fr =
          package_result(mod, mach, run_machine(mach, basis.adjoint() * sigma * basis));
      return analytic_estimate(mod, branch_stats(mod, noise, fr), opts.budget);
    };
    const Analytic ea = run_side(right);
    const Analytic eb = run_side(left);
    PairStat ps;
    ps.signal = 0.5 * (ea.mean - eb.mean);
    ps.se = std::sqrt(0.5 * (ea.se * ea.se + eb.se * eb.se));
    ps.bound = std::max(ea.bound, eb.bound);
    ps.bias = std::abs(ps.signal - truth);
    return ps;
  };
  // decisions are one-sided in the direction of the true hypothesis, so a
  // wrong-signed estimate can never reach the 90% target
  auto shots_to_90 = [&](const PairStat& ps) {
    const double margin = dir * ps.signal - ps.bound;
    if (!(margin > 0.0) || !(ps.se > 0.0) || !std::isfinite(ps.se)) return kInf;
    const double se1 = ps.se * std::sqrt(opts.budget);
    return kZ90 * se1 / margin * (kZ90 * se1 / margin);
  };
  auto success_at_budget = [&](const PairStat& ps) {
    if (!(ps.se > 0.0) || !std::isfinite(ps.se)) return 0.5;
    double margin = dir * ps.signal;
    margin = margin >= 0.0 ? std::max(0.0, margin - ps.bound) : std::min(0.0, margin + ps.bound);
    return phi(margin / ps.se);
  };

  // Baseline configuration: pick x on the noiseless channel; the uploaded
  // branch keeps it for every noise point.
  size_t best = 0;
  double best_bias = kInf;
  for (size_t i = 0; i < kernels.size(); ++i) {
    const PairStat ps = evaluate(PipelineNoise{NoiseMode::raw, 0.0, opts.noise_factor}, kernels[i]);
    if (ps.bias < best_bias - 1e-15) {
      best_bias = ps.bias;
      best = i;
    }
  }

  std::vector<SweepPoint> pts;
  for (double lam : lambdas) {
    SweepPoint pt;
    pt.lambda = lam;
    pt.x_uploaded = kernels[best].x;
    const PairStat up =
        evaluate(PipelineNoise{NoiseMode::uploaded, opts.noise_factor * lam, opts.noise_factor}, kernels[best]);
    pt.success_uploaded = success_at_budget(up);
    pt.shots90_uploaded = shots_to_90(up);
    pt.signal_uploaded = up.signal;
    pt.se_uploaded = up.se;

    PairStat raw_best;
    double raw_bias = kInf;
    double x_raw = kernels[best].x;
    for (const auto& ker : kernels) {
      const PairStat ps = evaluate(PipelineNoise{NoiseMode::raw, lam, opts.noise_factor}, ker);
      if (ps.bias < raw_bias - 1e-15) {
        raw_bias = ps.bias;
        raw_best = ps;
        x_raw = ker.x;
      }
    }
    pt.success_raw = success_at_budget(raw_best);
    pt.shots90_raw = shots_to_90(raw_best);
    pt.signal_raw = raw_best.signal;
    pt.se_raw = raw_best.se;
    pt.x_raw = x_raw;
    pt.ratio = std::isfinite(pt.shots90_uploaded)
                   ? pt.shots90_raw / pt.shots90_uploaded
                   : (std::isfinite(pt.shots90_raw) ? 0.0 : kNaN);
    pts.push_back(pt);
  }
  return pts;
}

std::string imaging_sweep_to_csv(const std::vector<SweepPoint>& pts) {
  std::string out = "noise,mode,shots,success,ratio\n";
  for (const auto& p : pts) {
    out += fmt(p.lambda) + ",raw," + fmt(p.shots90_raw) + "," + fmt(p.success_raw) + "," + fmt(p.ratio) + "\n";
    out += fmt(p.lambda) + ",uploaded," + fmt(p.shots90_uploaded) + "," + fmt(p.success_uploaded) + "," +
           fmt(p.ratio) + "\n";
  }
  return out;
}

std::string imaging_sweep_to_json(const std::vector<SweepPoint>& pts, const ImagingModel& model,
                                  const SweepOptions& opts) {
  nlohmann::json root;
  root["model"] = {{"m", model.m},
                   {"b", model.b},
                   {"delta_x", model.delta_x},
                   {"aperture_width", model.aperture_width},
                   {"overlap", model.overlap},
                   {"r", model.r}};
  root["filter"] = {{"qsp_degree", opts.qsp_degree},
                    {"x", opts.x},
                    {"rounds", opts.rounds},
                    {"x_scales", opts.x_scales}};
  root["noise_factor"] = opts.noise_factor;
  root["budget"] = opts.budget;
  root["points"] = nlohmann::json::array();
  for (const auto& p : pts) {
    nlohmann::json row = {{"noise", p.lambda},
                          {"success_raw", p.success_raw},
                          {"success_uploaded", p.success_uploaded},
                          {"shots90_raw", p.shots90_raw},
                          {"shots90_uploaded", p.shots90_uploaded},
                          {"ratio", p.ratio},
                          {"x_raw", p.x_raw},
                          {"x_uploaded", p.x_uploaded}};
    root["points"].push_back(row);
  }
  return root.dump(2);
}

}  // namespace qup

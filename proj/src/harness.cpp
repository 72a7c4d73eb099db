#include "qup/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "qup/rng.hpp"
#include "qup/surface.hpp"

namespace qup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PointCounts {
  uint64_t i = 0, x = 0, y = 0, z = 0;
  uint64_t total() const { return i + x + y + z; }
};

// Class of one shot: gadget residual flips composed with the input-frame
// stand-in flips. Depends on (seed, shot) only, so any shot partition across
// workers reproduces the same tallies.
int shot_class(const GrowthConfig& cfg, const DecodingGraph& gx, const DecodingGraph& gz,
               uint64_t shot) {
  GrowthTrialRecord rec = run_trial(gx, gz, cfg.p, cfg.seed, shot);
  bool fx = rec.flip_x, fz = rec.flip_z;
  if (cfg.input_error_rate > 0.0) {
    auto eng = make_engine(cfg.seed, shot, kInputSalt);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    fx ^= u(eng) < cfg.input_error_rate;
    fz ^= u(eng) < cfg.input_error_rate;
  }
  return (fx ? 1 : 0) | (fz ? 2 : 0);
}

PointCounts run_point(const GrowthConfig& cfg, const DecodingGraph& gx,
                      const DecodingGraph& gz, int threads) {
  int workers = std::max(1, threads);
  std::vector<PointCounts> parts(workers);
  auto work = [&](int w) {
    // class code: bit 0 = X flip, bit 1 = Z flip, so code 3 is Y
    uint64_t tally[4] = {0, 0, 0, 0};
    for (uint64_t shot = uint64_t(w); shot < cfg.trials; shot += uint64_t(workers))
      ++tally[shot_class(cfg, gx, gz, shot)];
    parts[w].i = tally[0];
    parts[w].x = tally[1];
    parts[w].z = tally[2];
    parts[w].y = tally[3];
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  PointCounts sum;
  for (const auto& c : parts) {
    sum.i += c.i;
    sum.x += c.x;
    sum.y += c.y;
    sum.z += c.z;
  }
  return sum;
}

EffectiveInputChannel channel_from_counts(const GrowthConfig& cfg, const PointCounts& c) {
  EffectiveInputChannel ch;
  const double n = double(c.total());
  ch.p_x = double(c.x) / n;
  ch.p_y = double(c.y) / n;
  ch.p_z = double(c.z) / n;
  ch.q = ch.p_x + ch.p_y + ch.p_z;
  ch.lambda_star = ch.q;
  ch.q_ci = wilson_interval(c.x + c.y + c.z, c.total());
  ch.c_fit = cfg.p > 0.0 ? ch.q / cfg.p : 0.0;
  ch.trials = cfg.trials;
  ch.seed = cfg.seed;
  return ch;
}

SweepRow run_config(const GrowthConfig& cfg, int threads) {
  GrowthLayout layout = build_growth_layout(cfg.d1, cfg.d2, cfg.allow_small);
  DecodingGraph gx = build_decoding_graph(layout, cfg.T, Sector::X);
  DecodingGraph gz = build_decoding_graph(layout, cfg.T, Sector::Z);
  auto start = std::chrono::steady_clock::now();
  PointCounts counts = run_point(cfg, gx, gz, threads);
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  SweepRow row;
  row.config = cfg;
  row.count_i = counts.i;
  row.count_x = counts.x;
  row.count_y = counts.y;
  row.count_z = counts.z;
  row.channel = channel_from_counts(cfg, counts);
  row.seconds = elapsed.count();
  return row;
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double log_binom(int n, int k) {
  if (k < 0 || k > n) return -kInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

GrowthConfig validated(GrowthConfig cfg) {
  if (cfg.T == 0) cfg.T = cfg.d2;
  if (cfg.T < cfg.d2) throw std::invalid_argument("round count must be at least d2");
  if (cfg.p < 0.0 || cfg.p >= 1.0) throw std::invalid_argument("fault rate must be in [0, 1)");
  if (cfg.input_error_rate < 0.0 || cfg.input_error_rate > 1.0)
    throw std::invalid_argument("input error rate must be in [0, 1]");
  if (cfg.p > 0.05)
    std::cerr << "warning: fault rate " << cfg.p
              << " is outside the studied band [0, 0.05]; results may be above threshold\n";
  return cfg;
}

std::vector<SweepRow> run_injection_sweep(const std::vector<GrowthConfig>& grid, int threads) {
  std::vector<SweepRow> rows;
  for (const GrowthConfig& raw : grid) {
    GrowthConfig cfg = validated(raw);
    if (cfg.trials == 0) throw std::invalid_argument("trial budget is zero");
    rows.push_back(run_config(cfg, threads));
  }
  return rows;
}

EffectiveInputChannel estimate_input_channel(const GrowthConfig& raw, int threads) {
  GrowthConfig cfg = validated(raw);
  if (cfg.trials < 10000)
    throw std::invalid_argument("channel estimation needs at least 10^4 trials");
  return run_config(cfg, threads).channel;
}

int measured_degree(const DecodingGraph& g) {
  std::vector<int> deg(g.num_detectors, 0);
  for (const FaultEdge& e : g.edges) {
    ++deg[e.a];
    if (e.b >= 0) ++deg[e.b];
  }
  int best = 0;
  for (int d : deg) best = std::max(best, d);
  return best;
}

BoundTerms weight_enumerator_terms(int d1, int d2, int T, double x, double D, double v_in) {
  if (d1 < 1 || d2 < d1 || T < d2) throw std::invalid_argument("bad gadget dimensions");
  if (x < 0.0 || x >= 1.0) throw std::invalid_argument("x must be in [0, 1)");
  if (D <= 0.0 || v_in < 0.0) throw std::invalid_argument("D must be positive, v_in nonnegative");
  BoundTerms out;
  if (x == 0.0) return out;
  const double De = D * std::numbers::e;
  const double eta = 2.0 * De * std::pow(x, 0.25);
  out.eta = eta;
  if (eta >= 1.0)
    throw std::domain_error("weight enumerator diverges: 2 D e x^(1/4) >= 1");
  const double om = 1.0 - eta;

  out.input_term = v_in * x;

  out.cluster_term =
      T * double(d2) * d2 * std::pow(eta, d2) / om +
      std::pow(eta, d1) / (om * om) *
          (double(d1) * d1 + (2.0 * d1 - 1.0) * eta / om + 2.0 * eta / (om * om));

  // Residual family: connected clusters of size m in [d2, d2^2] on the output
  // patch carrying ceil(m/10) faults, evaluated at y = eta^2. The staircase
  // exponent is smoothed to y^(m/10) (>= y^ceil(m/10) for y < 1, so still an
  // upper bound), which keeps the tail dominated by its first terms.
  const double log_v = 2.0 * std::log(double(d2));
  const double log_de = std::log(De);
  const double log_y = 2.0 * std::log(eta);
  long double series = 0.0L;
  double prev = kInf;
  for (int m = d2; m <= d2 * d2; ++m) {
    int t = (m + 9) / 10;
    double lt = log_v + log_binom(m, t - 1) + (m - 1) * log_de + (m / 10.0) * log_y;
    double term = std::exp(lt);
    series += term;
    if (term < 1e-18 && term <= prev) break;
    prev = term;
  }
  out.residual_term = double(series) / om;

  out.total = out.input_term + out.cluster_term + out.residual_term;
  return out;
}

double weight_enumerator_bound(int d1, int d2, int T, double x, double D, double v_in) {
  return weight_enumerator_terms(d1, d2, T, x, D, v_in).total;
}

BoundComparison compare_bound_vs_montecarlo(const GrowthConfig& raw, double D, double v_in,
                                            int threads) {
  GrowthConfig cfg = validated(raw);
  if (cfg.trials == 0) throw std::invalid_argument("trial budget is zero");
  SweepRow row = run_config(cfg, threads);
  BoundComparison out;
  out.q_hat = row.channel.q;
  out.ci = row.channel.q_ci;
  out.eta = 2.0 * D * std::numbers::e * std::pow(cfg.p, 0.25);
  if (out.eta >= 1.0) {
    out.in_regime = false;
    out.bound = kInf;
    out.ratio = kInf;
    out.note = "skipped: eta_x = " + fmt(out.eta) + " >= 1, p is outside the bound's regime";
    return out;
  }
  out.in_regime = true;
  out.bound = weight_enumerator_bound(cfg.d1, cfg.d2, cfg.T, cfg.p, D, v_in);
  out.dominates = out.q_hat <= out.bound;
  out.ratio = out.q_hat > 0.0 ? out.bound / out.q_hat : kInf;
  out.note = out.dominates ? "bound dominates the empirical rate"
                           : "violation: empirical rate exceeds the analytic bound";
  return out;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "d1,d2,T,p,trials,q_hat,ci_lo,ci_hi,pX,pY,pZ,lambda_star,seed\n";
  for (const SweepRow& r : rows) {
    const EffectiveInputChannel& ch = r.channel;
    out += std::to_string(r.config.d1) + ',' + std::to_string(r.config.d2) + ',' +
           std::to_string(r.config.T) + ',' + fmt(r.config.p) + ',' +
           std::to_string(r.config.trials) + ',' + fmt(ch.q) + ',' + fmt(ch.q_ci.lo) + ',' +
           fmt(ch.q_ci.hi) + ',' + fmt(ch.p_x) + ',' + fmt(ch.p_y) + ',' + fmt(ch.p_z) + ',' +
           fmt(ch.lambda_star) + ',' + std::to_string(r.config.seed) + '\n';
  }
  return out;
}

std::string sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const SweepRow& r : rows) {
    nlohmann::json row;
    row["config"] = {{"d1", r.config.d1},
                     {"d2", r.config.d2},
                     {"T", r.config.T},
                     {"p", r.config.p},
                     {"trials", r.config.trials},
                     {"seed", r.config.seed},
                     {"input_error_rate", r.config.input_error_rate}};
    row["q_hat"] = r.channel.q;
    row["ci_lo"] = r.channel.q_ci.lo;
    row["ci_hi"] = r.channel.q_ci.hi;
    row["pX"] = r.channel.p_x;
    row["pY"] = r.channel.p_y;
    row["pZ"] = r.channel.p_z;
    row["lambda_star"] = r.channel.lambda_star;
    row["c_fit"] = r.channel.c_fit;
    row["counts"] = {{"I", r.count_i}, {"X", r.count_x}, {"Y", r.count_y}, {"Z", r.count_z}};
    j["rows"].push_back(row);
  }
  return j.dump(2);
}

}  // namespace qup

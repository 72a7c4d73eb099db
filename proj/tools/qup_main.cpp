#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qup/harness.hpp"
#include "qup/imaging.hpp"
#include "qup/moments.hpp"
#include "qup/replica.hpp"
#include "qup/shadows.hpp"

namespace {

using nlohmann::json;

// "a,b,c" or geometric "lo:hi[:steps]" (steps defaults to 5)
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.size() < 2 || parts.size() > 3)
      throw std::invalid_argument("range grid must be lo:hi[:steps]");
    double lo = std::stod(parts[0]);
    double hi = std::stod(parts[1]);
    int steps = parts.size() == 3 ? std::stoi(parts[2]) : 5;
    if (lo <= 0.0 || hi < lo || steps < 1)
      throw std::invalid_argument("geometric grid needs 0 < lo <= hi and steps >= 1");
    if (steps == 1) return {lo};
    for (int i = 0; i < steps; ++i)
      out.push_back(lo * std::pow(hi / lo, double(i) / double(steps - 1)));
    return out;
  }
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_grid(text)) out.push_back(int(std::llround(v)));
  return out;
}

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Global plumbing shared by every subcommand.
struct Io {
  uint64_t seed = 0;
  bool seeded = false;
  int threads = 1;
  std::string out_path;
  std::string format = "csv";

  uint64_t resolve_seed() {
    if (!seeded) {
      std::random_device rd;
      seed = (uint64_t(rd()) << 32) ^ rd();
      std::cerr << "# seed " << seed << "\n";
      seeded = true;
    }
    return seed;
  }

  void write(const std::string& body) const {
    if (out_path.empty()) {
      std::cout << body;
      if (!body.empty() && body.back() != '\n') std::cout << "\n";
      return;
    }
    std::string path = out_path;
    const char* dir = std::getenv("QUP_OUT_DIR");
    if (dir != nullptr && *dir != '\0' && path.front() != '/')
      path = std::string(dir) + "/" + path;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << body;
    if (!body.empty() && body.back() != '\n') f << "\n";
  }

  // JSON envelope: the timestamp is the only field allowed to vary between
  // identical reruns, and it lives in the header only.
  void emit_json(const json& config, const json& result) const {
    json root;
    root["timestamp"] = iso_now();
    root["config"] = config;
    root["result"] = result;
    write(root.dump(2));
  }

  // CSV stays timestamp-free so reruns are byte-identical; the resolved
  // config rides along in a leading comment.
  void emit_csv(const json& config, const std::string& table) const {
    write("# config " + config.dump() + "\n" + table);
  }
};

json channel_json(const qup::EffectiveInputChannel& ch) {
  return json{{"q", ch.q},
              {"p_x", ch.p_x},
              {"p_y", ch.p_y},
              {"p_z", ch.p_z},
              {"lambda_star", ch.lambda_star},
              {"q_ci", {ch.q_ci.lo, ch.q_ci.hi}},
              {"c_fit", ch.c_fit},
              {"trials", ch.trials},
              {"seed", ch.seed}};
}

json report_json(const qup::EstimatorReport& rep) {
  json extra = json::object();
  for (const auto& [key, val] : rep.extra) extra[key] = val;
  return json{{"shots", rep.shots},
              {"mean", rep.mean},
              {"std_error", rep.std_error},
              {"seed", rep.seed},
              {"extra", extra}};
}

double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void add_inject(CLI::App& app, Io& io) {
  auto* inject = app.add_subcommand("inject", "surface-code injection gadget experiments");
  inject->require_subcommand(1);

  // sweep
  {
    auto* c = inject->add_subcommand("sweep", "effective channel over a (d2, p) grid");
    auto d1 = std::make_shared<int>(5);
    auto d2 = std::make_shared<std::string>("5,7,9");
    auto p = std::make_shared<std::string>("0.01");
    auto trials = std::make_shared<uint64_t>(100000);
    auto T = std::make_shared<int>(0);
    auto input_rate = std::make_shared<double>(0.0);
    c->add_option("--d1", *d1, "initial distance");
    c->add_option("--d2", *d2, "grown distances, comma list");
    c->add_option("--p", *p, "physical rates, comma list or lo:hi[:steps]");
    c->add_option("--trials", *trials, "shots per grid point");
    c->add_option("--T", *T, "measurement rounds (0 picks d2)");
    c->add_option("--input-rate", *input_rate, "pre-growth logical flip rate");
    c->callback([&io, d1, d2, p, trials, T, input_rate] {
      uint64_t seed = io.resolve_seed();
      std::vector<qup::GrowthConfig> grid;
      for (int dd : parse_int_list(*d2))
        for (double pp : parse_grid(*p)) {
          qup::GrowthConfig cfg;
          cfg.d1 = *d1;
          cfg.d2 = dd;
          cfg.T = *T;
          cfg.p = pp;
          cfg.trials = *trials;
          cfg.seed = seed;
          cfg.input_error_rate = *input_rate;
          grid.push_back(qup::validated(cfg));
        }
      auto rows = qup::run_injection_sweep(grid, io.threads);
      json config{{"command", "inject sweep"}, {"d1", *d1},         {"d2", *d2},
                  {"p", *p},                   {"trials", *trials}, {"T", *T},
                  {"input_rate", *input_rate}, {"seed", seed},      {"threads", io.threads}};
      if (io.format == "json")
        io.emit_json(config, json::parse(qup::sweep_to_json(rows)));
      else
        io.emit_csv(config, qup::sweep_to_csv(rows));
    });
  }

  // channel
  {
    auto* c = inject->add_subcommand("channel", "full channel tomography at one grid point");
    auto d1 = std::make_shared<int>(5);
    auto d2 = std::make_shared<int>(9);
    auto p = std::make_shared<double>(0.005);
    auto trials = std::make_shared<uint64_t>(100000);
    auto T = std::make_shared<int>(0);
    c->add_option("--d1", *d1, "initial distance");
    c->add_option("--d2", *d2, "grown distance");
    c->add_option("--p", *p, "physical rate");
    c->add_option("--trials", *trials, "shots");
    c->add_option("--T", *T, "measurement rounds (0 picks d2)");
    c->callback([&io, d1, d2, p, trials, T] {
      uint64_t seed = io.resolve_seed();
      qup::GrowthConfig cfg;
      cfg.d1 = *d1;
      cfg.d2 = *d2;
      cfg.T = *T;
      cfg.p = *p;
      cfg.trials = *trials;
      cfg.seed = seed;
      auto ch = qup::estimate_input_channel(qup::validated(cfg), io.threads);
      json config{{"command", "inject channel"}, {"d1", *d1},   {"d2", *d2},
                  {"p", *p},                     {"T", *T},     {"trials", *trials},
                  {"seed", seed},                {"threads", io.threads}};
      io.emit_json(config, channel_json(ch));
    });
  }

  // bound
  {
    auto* c = inject->add_subcommand("bound", "analytic bad-fault weight-enumerator bound");
    auto d1 = std::make_shared<int>(5);
    auto d2 = std::make_shared<int>(9);
    auto x = std::make_shared<double>(1e-3);
    auto D = std::make_shared<double>(1.0);
    auto v_in = std::make_shared<double>(75.0);
    auto T = std::make_shared<int>(0);
    c->add_option("--d1", *d1, "initial distance");
    c->add_option("--d2", *d2, "grown distance");
    c->add_option("--x", *x, "fault-rate argument");
    c->add_option("--D", *D, "fault-degree cap (the measured gadget degree 6 needs smaller x)");
    c->add_option("--v-in", *v_in, "input fault volume");
    c->add_option("--T", *T, "measurement rounds (0 picks d2)");
    c->callback([&io, d1, d2, x, D, v_in, T] {
      int rounds = *T == 0 ? *d2 : *T;
      auto terms = qup::weight_enumerator_terms(*d1, *d2, rounds, *x, *D, *v_in);
      json config{{"command", "inject bound"}, {"d1", *d1}, {"d2", *d2},   {"x", *x},
                  {"D", *D},                   {"T", rounds}, {"v_in", *v_in}};
      io.emit_json(config, json{{"eta", terms.eta},
                                {"input_term", terms.input_term},
                                {"cluster_term", terms.cluster_term},
                                {"residual_term", terms.residual_term},
                                {"bound", terms.total}});
    });
  }
}

void add_moments(CLI::App& app, Io& io) {
  auto* moments = app.add_subcommand("moments", "third-moment cycle-test experiments");
  moments->require_subcommand(1);

  // estimate
  {
    auto* c = moments->add_subcommand("estimate", "Monte Carlo tr(rho^3) via the cycle test");
    auto n = std::make_shared<int>(1);
    auto shots = std::make_shared<int64_t>(100000);
    auto mixed = std::make_shared<bool>(false);
    auto kind = std::make_shared<std::string>("P");
    auto lambda_prime = std::make_shared<double>(0.0);
    auto uncorrected = std::make_shared<bool>(false);
    auto state_seed = std::make_shared<uint64_t>(0);
    bool* has_state_seed = nullptr;
    c->add_option("--n", *n, "qubits per copy");
    c->add_option("--shots", *shots, "cycle-test shots");
    c->add_flag("--mixed", *mixed, "use the maximally mixed state");
    c->add_option("--kind", *kind, "ensemble kind P or Q")->check(CLI::IsMember({"P", "Q"}));
    c->add_option("--lambda-prime", *lambda_prime, "injected depolarizing rate");
    c->add_flag("--uncorrected", *uncorrected, "skip the inverse-channel correction");
    auto* opt = c->add_option("--state-seed", *state_seed, "seed for the sampled state");
    (void)has_state_seed;
    c->callback([&io, n, shots, mixed, kind, lambda_prime, uncorrected, state_seed, opt] {
      uint64_t seed = io.resolve_seed();
      qup::Mat rho;
      if (*mixed) {
        int dim = 1 << *n;
        rho = qup::Mat::Identity(dim, dim) / double(dim);
      } else {
        qup::EnsembleSpec spec;
        spec.n = *n;
        spec.kind = *kind == "Q" ? qup::EnsembleKind::Q : qup::EnsembleKind::P;
        rho = qup::sample_state(spec, opt->count() > 0 ? *state_seed : seed);
      }
      auto rep = qup::cycle_test_estimate(rho, *lambda_prime, !*uncorrected, *shots, seed);
      json config{{"command", "moments estimate"},
                  {"n", *n},
                  {"shots", *shots},
                  {"mixed", *mixed},
                  {"kind", *kind},
                  {"lambda_prime", *lambda_prime},
                  {"corrected", !*uncorrected},
                  {"seed", seed}};
      io.emit_json(config, report_json(rep));
    });
  }

  // gap
  {
    auto* c = moments->add_subcommand("gap", "ensemble-mean third-moment gap");
    auto n = std::make_shared<int>(2);
    auto a = std::make_shared<double>(1.0);
    auto draws = std::make_shared<int>(0);
    auto shots = std::make_shared<int64_t>(10000);
    c->add_option("--n", *n, "qubits per copy");
    c->add_option("--a", *a, "noise parameter a = 1 - lambda'");
    c->add_option("--draws", *draws, "Haar draws per ensemble (0 = closed form only)");
    c->add_option("--shots", *shots, "cycle-test shots per draw");
    c->callback([&io, n, a, draws, shots] {
      uint64_t seed = io.resolve_seed();
      double dim = std::pow(2.0, *n);
      double closed =
          qup::g_poly(*n, *a) / (144.0 * std::pow(4.0, *n) * (dim + 1.0) * (dim + 2.0));
      json result{{"closed_form", closed}};
      if (*draws > 0) {
        double lambda_prime = 1.0 - *a;
        double sum_p = 0.0, sum_q = 0.0, var = 0.0;
        for (int i = 0; i < *draws; ++i) {
          qup::EnsembleSpec sp;
          sp.n = *n;
          sp.kind = qup::EnsembleKind::P;
          auto rp = qup::cycle_test_estimate(qup::sample_state(sp, seed + 2 * i), lambda_prime,
                                             true, *shots, seed + 2 * i);
          sp.kind = qup::EnsembleKind::Q;
          auto rq = qup::cycle_test_estimate(qup::sample_state(sp, seed + 2 * i + 1), lambda_prime,
                                             true, *shots, seed + 2 * i + 1);
          sum_p += rp.mean;
          sum_q += rq.mean;
          var += rp.std_error * rp.std_error + rq.std_error * rq.std_error;
        }
        result["mc_gap"] = std::abs(sum_p - sum_q) / *draws;
        result["mc_se"] = std::sqrt(var) / *draws;
      }
      json config{{"command", "moments gap"}, {"n", *n},         {"a", *a},
                  {"draws", *draws},          {"shots", *shots}, {"seed", seed}};
      io.emit_json(config, result);
    });
  }

  // bounds
  {
    auto* c = moments->add_subcommand("bounds", "sample-complexity bound pair and ratio");
    auto n = std::make_shared<int>(8);
    auto lambda = std::make_shared<double>(0.1);
    auto lambda_inj = std::make_shared<double>(0.12);
    auto epsilon = std::make_shared<double>(0.1);
    auto delta = std::make_shared<double>(0.05);
    c->add_option("--n", *n, "qubits per copy");
    c->add_option("--lambda", *lambda, "raw depolarizing rate");
    c->add_option("--lambda-inj", *lambda_inj, "injected depolarizing rate");
    c->add_option("--epsilon", *epsilon, "estimation accuracy");
    c->add_option("--delta", *delta, "failure probability");
    c->callback([&io, n, lambda, lambda_inj, epsilon, delta] {
      double n_raw = qup::raw_lower_bound(*n, *lambda);
      auto ub = qup::injection_upper_bound(*n, *lambda_inj, *epsilon, *delta);
      json config{{"command", "moments bounds"}, {"n", *n},           {"lambda", *lambda},
                  {"lambda_inj", *lambda_inj},   {"epsilon", *epsilon}, {"delta", *delta}};
      io.emit_json(config, json{{"n_raw", n_raw},
                                {"n_inj", ub.generic},
                                {"n_inj_promise", ub.promise},
                                {"ratio", n_raw / ub.generic},
                                {"per_copy_base",
                                 qup::speedup_ratio_bound_form(*n, *lambda, *lambda_inj)}});
    });
  }

  // threshold
  {
    auto* c = moments->add_subcommand("threshold", "largest advantageous injected rate");
    auto lambda = std::make_shared<double>(0.1);
    c->add_option("--lambda", *lambda, "raw depolarizing rate");
    c->callback([&io, lambda] {
      json config{{"command", "moments threshold"}, {"lambda", *lambda}};
      io.emit_json(config,
                   json{{"lambda_prime_max", qup::speedup_threshold_third_moment(*lambda)}});
    });
  }
}

void add_shadows(CLI::App& app, Io& io) {
  auto* shadows = app.add_subcommand("shadows", "shallow classical-shadow weight experiments");
  shadows->require_subcommand(1);

  // weight
  {
    auto* c = shadows->add_subcommand("weight", "noisy shadow weight omega at one depth");
    auto n = std::make_shared<int>(8);
    auto k = std::make_shared<int>(2);
    auto d = std::make_shared<int>(0);
    auto lambda = std::make_shared<double>(0.0);
    auto trials = std::make_shared<int64_t>(0);
    c->add_option("--n", *n, "chain sites");
    c->add_option("--k", *k, "observable support size");
    c->add_option("--d", *d, "brickwork depth");
    c->add_option("--lambda", *lambda, "per-layer damping rate");
    c->add_option("--trials", *trials, "Monte Carlo trials (0 = exact only)");
    c->callback([&io, n, k, d, lambda, trials] {
      uint64_t seed = io.resolve_seed();
      qup::BrickworkSpec spec{*n, *d, 0, 0};
      json result;
      if (*n <= 14) result["exact"] = qup::shadow_weight_exact(spec, *k, *lambda);
      if (*trials > 0)
        result["mc"] = report_json(qup::shadow_weight(spec, *k, *lambda, *trials, seed));
      if (result.empty())
        throw std::invalid_argument("n > 14 needs --trials for a Monte Carlo estimate");
      json config{{"command", "shadows weight"},
                  {"n", *n},
                  {"k", *k},
                  {"d", *d},
                  {"lambda", *lambda},
                  {"trials", *trials},
                  {"seed", seed}};
      io.emit_json(config, result);
    });
  }

  // separation
  {
    auto* c = shadows->add_subcommand("separation", "per-site advantage exponent");
    auto lambda = std::make_shared<double>(0.05);
    auto lambda_inj = std::make_shared<double>(0.06);
    c->add_option("--lambda", *lambda, "raw rate");
    c->add_option("--lambda-inj", *lambda_inj, "injected rate");
    c->callback([&io, lambda, lambda_inj] {
      double expo = qup::separation_exponent(*lambda, *lambda_inj);
      json config{{"command", "shadows separation"},
                  {"lambda", *lambda},
                  {"lambda_inj", *lambda_inj}};
      io.emit_json(config, json{{"exponent", expo},
                                {"advantage", expo > 0.0},
                                {"lambda_inj_max", qup::shadow_speedup_threshold(*lambda)}});
    });
  }

  // scan
  {
    auto* c = shadows->add_subcommand("scan", "noiseless weight versus depth with the argmax");
    auto k = std::make_shared<int>(8);
    c->add_option("--k", *k, "observable support size");
    c->callback([&io, k] {
      auto best = qup::scan_noiseless_weight(*k);
      // mirror the scanner's chain sizing so the table matches its argmax
      const int depth_cap = 4 * int(std::ceil(std::log2(std::max(2, *k)))) + 4;
      const int full = *k + 2 * (depth_cap + 1);
      const int n = std::min(full, 14);
      const int start = ((n - *k) / 2) & ~1;
      std::string table = "d,omega\n";
      json config{{"command", "shadows scan"}, {"k", *k}};
      if (best.exact) {
        for (int d = 0; d <= depth_cap; ++d) {
          qup::BrickworkSpec spec{n, d, start, 0};
          table += std::to_string(d) + "," +
                   std::to_string(qup::shadow_weight_exact(spec, *k, 0.0)) + "\n";
        }
      }
      if (io.format == "json" || !best.exact)
        io.emit_json(config, json{{"best_depth", best.best_depth},
                                  {"omega_star", best.omega_star},
                                  {"exact", best.exact}});
      else
        io.emit_csv(config, table + "# best_depth " + std::to_string(best.best_depth) + "\n");
    });
  }
}

void add_imaging(CLI::App& app, Io& io) {
  auto* imaging = app.add_subcommand("imaging", "two-source discrimination pipeline");
  imaging->require_subcommand(1);

  // run
  {
    auto* c = imaging->add_subcommand("run", "single estimation run at one noise point");
    auto b = std::make_shared<double>(0.999);
    auto m = std::make_shared<int>(8);
    auto delta_x = std::make_shared<double>(4.0);
    auto width = std::make_shared<double>(1.0);
    auto noise = std::make_shared<double>(0.0);
    auto mode = std::make_shared<std::string>("raw");
    auto factor = std::make_shared<double>(3.0);
    auto degree = std::make_shared<int>(36);
    auto x = std::make_shared<double>(1.4);
    auto rounds = std::make_shared<int>(1000);
    auto shots = std::make_shared<uint64_t>(10000);
    c->add_option("--b", *b, "bright-source weight, in (0.5, 1)");
    c->add_option("--m", *m, "grid size");
    c->add_option("--delta-x", *delta_x, "source separation in grid units");
    c->add_option("--width", *width, "aperture width");
    c->add_option("--noise", *noise, "depolarizing rate");
    c->add_option("--mode", *mode, "raw or uploaded")->check(CLI::IsMember({"raw", "uploaded"}));
    c->add_option("--factor", *factor, "uploaded-rate multiplier");
    c->add_option("--degree", *degree, "phase-polynomial degree");
    c->add_option("--x", *x, "exponentiation angle");
    c->add_option("--rounds", *rounds, "interaction rounds per query");
    c->add_option("--shots", *shots, "estimator executions");
    c->callback([&io, b, m, delta_x, width, noise, mode, factor, degree, x, rounds, shots] {
      uint64_t seed = io.resolve_seed();
      auto model = qup::build_model(*m, *b, *delta_x, *width);
      qup::PipelineNoise pn;
      pn.mode = *mode == "uploaded" ? qup::NoiseMode::uploaded : qup::NoiseMode::raw;
      pn.lambda = *noise;
      pn.noise_factor = *factor;
      auto est = qup::estimate_quantities(model, pn, *degree, *x, *rounds, *shots, seed);
      double dir = est.target_exact >= 0.0 ? 1.0 : -1.0;
      double success = 0.5;
      if (!est.degenerate && est.combined_se > 0.0 && std::isfinite(est.combined_se))
        success = phi((dir * est.combined - est.off_bound) / est.combined_se);
      json config{{"command", "imaging run"},
                  {"b", *b},
                  {"m", *m},
                  {"delta_x", *delta_x},
                  {"width", *width},
                  {"noise", *noise},
                  {"mode", *mode},
                  {"factor", *factor},
                  {"degree", *degree},
                  {"x", *x},
                  {"rounds", *rounds},
                  {"shots", *shots},
                  {"seed", seed}};
      io.emit_json(config, json{{"combined", est.combined},
                                {"combined_se", est.combined_se},
                                {"target_exact", est.target_exact},
                                {"off_bound", est.off_bound},
                                {"r_hat", est.r_hat},
                                {"success", success},
                                {"degenerate", est.degenerate},
                                {"copies", est.copies},
                                {"star_branch", report_json(est.star_branch)},
                                {"planet_branch", report_json(est.planet_branch)},
                                {"interference", report_json(est.interference)}});
    });
  }

  // sweep
  {
    auto* c = imaging->add_subcommand("sweep", "right-vs-left success over a noise grid");
    auto b = std::make_shared<double>(0.8);
    auto m = std::make_shared<int>(8);
    auto delta_x = std::make_shared<double>(2.5);
    auto width = std::make_shared<double>(1.0);
    auto grid = std::make_shared<std::string>("1e-4:1e-2");
    auto factor = std::make_shared<double>(3.0);
    auto budget = std::make_shared<double>(1e6);
    auto degree = std::make_shared<int>(36);
    auto x = std::make_shared<double>(1.5);
    auto rounds = std::make_shared<int>(40);
    c->add_option("--b", *b, "bright-source weight, in (0.5, 1)");
    c->add_option("--m", *m, "grid size");
    c->add_option("--delta-x", *delta_x, "source separation in grid units");
    c->add_option("--width", *width, "aperture width");
    c->add_option("--noise-grid", *grid, "raw rates, comma list or lo:hi[:steps]");
    c->add_option("--factor", *factor, "uploaded-rate multiplier");
    c->add_option("--budget", *budget, "executions per decision");
    c->add_option("--degree", *degree, "phase-polynomial degree");
    c->add_option("--x", *x, "center of the angle candidate grid");
    c->add_option("--rounds", *rounds, "interaction rounds per query");
    c->callback([&io, b, m, delta_x, width, grid, factor, budget, degree, x, rounds] {
      auto right = qup::build_model(*m, *b, *delta_x, *width);
      auto left = qup::mirrored(right);
      qup::SweepOptions opts;
      opts.qsp_degree = *degree;
      opts.x = *x;
      opts.rounds = *rounds;
      opts.noise_factor = *factor;
      opts.budget = *budget;
      auto pts = qup::hypothesis_test_sweep(right, left, parse_grid(*grid), opts);
      json config{{"command", "imaging sweep"},
                  {"b", *b},
                  {"m", *m},
                  {"delta_x", *delta_x},
                  {"width", *width},
                  {"noise_grid", *grid},
                  {"factor", *factor},
                  {"budget", *budget},
                  {"degree", *degree},
                  {"x", *x},
                  {"rounds", *rounds}};
      if (io.format == "json")
        io.emit_json(config, json::parse(qup::imaging_sweep_to_json(pts, right, opts)));
      else
        io.emit_csv(config, qup::imaging_sweep_to_csv(pts));
    });
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum uploading experiment suite"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags remain valid after the subcommand

  Io io;
  app.add_option("--seed", io.seed, "global RNG seed (default: random, logged)")
      ->each([&io](const std::string&) { io.seeded = true; });
  app.add_option("--threads", io.threads, "worker pool size for the harnesses");
  app.add_option("--out", io.out_path, "output file (default stdout; QUP_OUT_DIR prefixes)");
  app.add_option("--format", io.format, "csv or json where both exist")
      ->check(CLI::IsMember({"csv", "json"}));

  add_inject(app, io);
  add_moments(app, io);
  add_shadows(app, io);
  add_imaging(app, io);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

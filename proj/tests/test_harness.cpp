#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "json.hpp"
#include "qup/harness.hpp"

using qup::compare_bound_vs_montecarlo;
using qup::estimate_input_channel;
using qup::GrowthConfig;
using qup::run_injection_sweep;
using qup::SweepRow;
using qup::sweep_to_csv;
using qup::sweep_to_json;
using qup::validated;
using qup::weight_enumerator_bound;
using qup::weight_enumerator_terms;

namespace {

GrowthConfig cfg_of(int d1, int d2, double p, uint64_t trials, uint64_t seed,
                    double input_rate = 0.0) {
  GrowthConfig c;
  c.d1 = d1;
  c.d2 = d2;
  c.p = p;
  c.trials = trials;
  c.seed = seed;
  c.input_error_rate = input_rate;
  return c;
}

double binom_se(double phat, double n) { return std::sqrt(phat * (1.0 - phat) / n); }

}  // namespace

TEST_CASE("growth config validation", "[harness]") {
  GrowthConfig c = validated(cfg_of(5, 7, 0.01, 100, 1));
  REQUIRE(c.T == 7);  // T = 0 selects the minimum round count

  GrowthConfig bad = cfg_of(5, 7, 0.01, 100, 1);
  bad.T = 6;
  REQUIRE_THROWS_AS(validated(bad), std::invalid_argument);

  REQUIRE_THROWS_AS(validated(cfg_of(5, 5, -0.1, 100, 1)), std::invalid_argument);
  REQUIRE_THROWS_AS(validated(cfg_of(5, 5, 1.0, 100, 1)), std::invalid_argument);
  REQUIRE_THROWS_AS(validated(cfg_of(5, 5, 0.01, 100, 1, 1.5)), std::invalid_argument);

  REQUIRE_THROWS_AS(run_injection_sweep({cfg_of(5, 5, 0.01, 0, 1)}), std::invalid_argument);
  REQUIRE_THROWS_AS(estimate_input_channel(cfg_of(5, 5, 0.01, 5000, 1)), std::invalid_argument);
  REQUIRE_THROWS_AS(compare_bound_vs_montecarlo(cfg_of(5, 5, 0.0, 0, 1), 4.0, 75.0),
                    std::invalid_argument);
}

TEST_CASE("noiseless sweep returns the identity channel", "[harness]") {
  std::vector<GrowthConfig> grid = {cfg_of(5, 5, 0.0, 2000, 11), cfg_of(5, 7, 0.0, 2000, 11)};
  auto rows = run_injection_sweep(grid);
  REQUIRE(rows.size() == 2);
  for (const SweepRow& r : rows) {
    REQUIRE(r.count_i == r.config.trials);
    REQUIRE(r.count_x == 0);
    REQUIRE(r.count_y == 0);
    REQUIRE(r.count_z == 0);
    REQUIRE(r.channel.q == 0.0);
    REQUIRE(r.channel.lambda_star == 0.0);
    REQUIRE(r.channel.c_fit == 0.0);
    REQUIRE(r.channel.q_ci.lo == 0.0);
    REQUIRE(r.channel.q_ci.hi < 0.01);
  }
}

TEST_CASE("input frame stand-in induces the product channel", "[harness]") {
  // p = 0 leaves only the stand-in flips: independent X and Z at rate 0.3,
  // so the class probabilities are (0.49, 0.21, 0.09, 0.21) for (I, X, Y, Z).
  auto ch = estimate_input_channel(cfg_of(5, 5, 0.0, 40000, 21, 0.3));
  REQUIRE(ch.p_x == Catch::Approx(0.21).margin(0.011));
  REQUIRE(ch.p_z == Catch::Approx(0.21).margin(0.011));
  REQUIRE(ch.p_y == Catch::Approx(0.09).margin(0.008));
  REQUIRE(ch.q == Catch::Approx(0.51).margin(0.013));
  REQUIRE(ch.lambda_star == ch.q);
  REQUIRE(ch.c_fit == 0.0);
}

TEST_CASE("gadget channel is X/Z symmetric and books the twirl", "[harness]") {
  GrowthConfig cfg = cfg_of(5, 7, 0.01, 30000, 313);
  auto ch = estimate_input_channel(cfg);

  REQUIRE(ch.q > 0.0);
  REQUIRE(ch.q < 0.02);
  REQUIRE(ch.q_ci.lo < ch.q);
  REQUIRE(ch.q_ci.hi > ch.q);
  REQUIRE(ch.trials == 30000);
  REQUIRE(ch.seed == 313);

  // The two sectors are decoded from disjoint fault streams, so X and Z
  // rates agree up to counting noise and simultaneous flips are rare.
  double n = double(cfg.trials);
  double band = 4.0 * (binom_se(ch.p_x, n) + binom_se(ch.p_z, n));
  REQUIRE(std::abs(ch.p_x - ch.p_z) <= band);
  REQUIRE(ch.p_y <= 3.0 / n);

  // Twirl accounting: the depolarizing strength equals the non-identity mass.
  REQUIRE(ch.lambda_star == ch.p_x + ch.p_y + ch.p_z);
  REQUIRE(ch.c_fit == Catch::Approx(ch.q / cfg.p));

  auto again = estimate_input_channel(cfg);
  REQUIRE(again.q == ch.q);
  REQUIRE(again.p_x == ch.p_x);
  REQUIRE(again.p_y == ch.p_y);
  REQUIRE(again.p_z == ch.p_z);

  auto sharded = estimate_input_channel(cfg, 3);
  REQUIRE(sharded.q == ch.q);
  REQUIRE(sharded.p_x == ch.p_x);
  REQUIRE(sharded.p_z == ch.p_z);
}

TEST_CASE("sweep emitters are stable and faithful", "[harness]") {
  std::vector<GrowthConfig> grid = {cfg_of(5, 5, 0.01, 4000, 7), cfg_of(5, 7, 0.01, 4000, 7)};
  auto rows = run_injection_sweep(grid);
  REQUIRE(rows.size() == 2);
  for (const SweepRow& r : rows)
    REQUIRE(r.count_i + r.count_x + r.count_y + r.count_z == r.config.trials);

  std::string csv = sweep_to_csv(rows);
  REQUIRE(csv.rfind("d1,d2,T,p,trials,q_hat,ci_lo,ci_hi,pX,pY,pZ,lambda_star,seed\n", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);

  std::string json_text = sweep_to_json(rows);
  auto j = nlohmann::json::parse(json_text);
  REQUIRE(j["rows"].size() == 2);
  const auto& row0 = j["rows"][0];
  REQUIRE(row0["config"]["d1"] == 5);
  REQUIRE(row0["config"]["d2"] == 5);
  REQUIRE(row0["config"]["T"] == 5);
  REQUIRE(row0["config"]["p"] == 0.01);
  REQUIRE(row0["config"]["trials"] == 4000);
  REQUIRE(row0["config"]["seed"] == 7);
  REQUIRE(row0["config"]["input_error_rate"] == 0.0);
  uint64_t total = uint64_t(row0["counts"]["I"]) + uint64_t(row0["counts"]["X"]) +
                   uint64_t(row0["counts"]["Y"]) + uint64_t(row0["counts"]["Z"]);
  REQUIRE(total == 4000);
  REQUIRE(double(row0["q_hat"]) == rows[0].channel.q);
  // Wall time is logged internally but must never leak into the artifacts.
  REQUIRE(json_text.find("seconds") == std::string::npos);

  auto rows2 = run_injection_sweep(grid);
  REQUIRE(sweep_to_csv(rows2) == csv);
  REQUIRE(sweep_to_json(rows2) == json_text);
}

TEST_CASE("failure rate flattens toward a distance-limited floor", "[harness]") {
  std::vector<GrowthConfig> grid;
  for (int d2 : {5, 7, 9, 11}) grid.push_back(cfg_of(5, d2, 0.01, 10000, 313));
  auto rows = run_injection_sweep(grid);

  for (size_t k = 0; k + 1 < rows.size(); ++k)
    REQUIRE(rows[k + 1].channel.q_ci.lo <= rows[k].channel.q_ci.hi);
  REQUIRE(rows.back().channel.q_ci.hi < rows.front().channel.q_ci.lo);
  REQUIRE(rows.back().channel.q > 0.0);

  // Never a significant increase when the output patch grows.
  auto pair = run_injection_sweep({cfg_of(5, 5, 0.005, 10000, 313), cfg_of(5, 11, 0.005, 10000, 313)});
  REQUIRE(pair[1].channel.q_ci.lo <= pair[0].channel.q_ci.hi);
}

TEST_CASE("floor scales linearly when the input stand-in tracks p", "[harness]") {
  // The linear part of the residual channel comes from the pre-growth fault
  // volume; the gadget's own contribution decays faster than p. Tying the
  // stand-in rate to p makes q/p flat within a factor-2 band.
  std::vector<double> ratios;
  for (double p : {0.002, 0.005, 0.01}) {
    auto ch = estimate_input_channel(cfg_of(5, 9, p, 20000, 99, p));
    ratios.push_back(ch.q / p);
  }
  double lo = *std::min_element(ratios.begin(), ratios.end());
  double hi = *std::max_element(ratios.begin(), ratios.end());
  REQUIRE(lo > 0.0);
  REQUIRE(hi <= 2.0 * lo);
  for (double r : ratios) REQUIRE(r == Catch::Approx(2.0).margin(1.0));
}

TEST_CASE("weight enumerator bound terms", "[harness]") {
  const double D = 4.0, vin = 75.0;

  REQUIRE_THROWS_AS(weight_enumerator_terms(5, 3, 5, 1e-4, D, vin), std::invalid_argument);
  REQUIRE_THROWS_AS(weight_enumerator_terms(5, 7, 5, 1e-4, D, vin), std::invalid_argument);
  REQUIRE_THROWS_AS(weight_enumerator_terms(5, 7, 7, 1.1, D, vin), std::invalid_argument);
  REQUIRE_THROWS_AS(weight_enumerator_terms(5, 7, 7, 1e-4, 0.0, vin), std::invalid_argument);
  REQUIRE_THROWS_AS(weight_enumerator_terms(5, 7, 7, 1e-4, D, -1.0), std::invalid_argument);
  // Convergence needs 2 D e x^{1/4} < 1; physical rates sit far outside it.
  REQUIRE_THROWS_AS(weight_enumerator_terms(5, 9, 9, 0.01, 6.0, vin), std::domain_error);

  auto zero = weight_enumerator_terms(5, 7, 7, 0.0, D, vin);
  REQUIRE(zero.eta == 0.0);
  REQUIRE(zero.total == 0.0);

  const double x = 1e-44;
  auto t = weight_enumerator_terms(5, 7, 7, x, D, vin);
  REQUIRE(t.eta == Catch::Approx(2.0 * D * std::numbers::e * std::pow(x, 0.25)));
  REQUIRE(t.eta < 1.0);
  REQUIRE(t.input_term == vin * x);
  REQUIRE(t.cluster_term > 0.0);
  REQUIRE(t.residual_term > 0.0);
  REQUIRE(std::isfinite(t.residual_term));
  REQUIRE(t.total == t.input_term + t.cluster_term + t.residual_term);
  REQUIRE(weight_enumerator_bound(5, 7, 7, x, D, vin) == t.total);

  // The input term is exactly linear in x.
  auto t2 = weight_enumerator_terms(5, 7, 7, 2.0 * x, D, vin);
  REQUIRE(t2.input_term == 2.0 * t.input_term);

  // Every d2-dependent term decays, so growing the output patch tightens the
  // bound monotonically down to the d1-limited floor.
  double prev = std::numeric_limits<double>::infinity();
  for (int d2 : {5, 7, 9, 11, 21, 41, 61}) {
    double b = weight_enumerator_bound(5, d2, d2, x, D, vin);
    REQUIRE(b < prev);
    prev = b;
  }

  // Deep in the convergent regime the floor is the linear input term, and
  // doubling x doubles it.
  const double xs = 1e-48;
  double floor_val = weight_enumerator_bound(5, 61, 61, xs, D, vin);
  REQUIRE(floor_val == Catch::Approx(vin * xs).epsilon(1e-4));
  REQUIRE(weight_enumerator_bound(5, 61, 61, 2.0 * xs, D, vin) / floor_val ==
          Catch::Approx(2.0).epsilon(1e-3));
  double ratio44 = weight_enumerator_bound(5, 61, 61, 2.0 * x, D, vin) /
                   weight_enumerator_bound(5, 61, 61, x, D, vin);
  REQUIRE(ratio44 > 1.9);
  REQUIRE(ratio44 < 2.2);
}

TEST_CASE("bound comparison against measurement", "[harness]") {
  // At any rate the Monte Carlo can resolve, eta >= 1: the comparison must
  // skip honestly rather than evaluate a divergent series.
  auto out = compare_bound_vs_montecarlo(cfg_of(5, 9, 0.002, 2000, 5), 6.0, 75.0);
  REQUIRE_FALSE(out.in_regime);
  REQUIRE_FALSE(out.dominates);
  REQUIRE(out.note.find("skipped") != std::string::npos);
  REQUIRE(std::isinf(out.bound));
  REQUIRE(std::isinf(out.ratio));
  REQUIRE(out.eta == Catch::Approx(2.0 * 6.0 * std::numbers::e * std::pow(0.002, 0.25)));
  REQUIRE(out.q_hat >= 0.0);
  REQUIRE(out.ci.hi >= out.q_hat);

  // p = 0 is inside the regime and trivially dominated.
  auto clean = compare_bound_vs_montecarlo(cfg_of(5, 7, 0.0, 2000, 5), 4.0, 75.0);
  REQUIRE(clean.in_regime);
  REQUIRE(clean.bound == 0.0);
  REQUIRE(clean.q_hat == 0.0);
  REQUIRE(clean.dominates);
  REQUIRE(std::isinf(clean.ratio));
  REQUIRE(clean.note.find("dominates") != std::string::npos);
}

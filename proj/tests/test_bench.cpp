#include <doctest.h>

#include <cmath>
#include <sstream>

#include "crowd/bench.hpp"
#include "crowd/errors.hpp"
#include "crowd/instance_io.hpp"

using namespace crowd;
using nlohmann::json;

TEST_CASE("n0_sym on the bundled symmetric instance") {
  const Instance sym = bundled_p1_sym();
  const auto d = n0_sym(sym, 0.25);
  CHECK(d.kappa_bar == doctest::Approx(0.322));
  CHECK(d.kappa3 == doctest::Approx(0.34));
  const double k1 = std::pow(18.0 / (0.322 * std::pow(0.34, 3)), 4.0);
  CHECK(d.k1.value() == doctest::Approx(k1).epsilon(1e-9));
  CHECK(d.k1.value() == doctest::Approx(4.1e12).epsilon(0.01));
  CHECK(d.k_star == 1);
  CHECK(d.n0.log10 >= d.k1.log10);
  CHECK(d.n0.log10 >= d.k2.log10);
  CHECK(d.n0.log10 >= d.k3.log10);
  for (double g : {0.1, 0.25, 0.4}) CHECK(n0_sym(sym, g).n0.log10 > 10.0);
}

TEST_CASE("n0_sym preconditions") {
  CHECK_THROWS_AS(n0_sym(bundled_p1_asym(), 0.25), std::invalid_argument);
  CHECK_THROWS_AS(n0_sym(bundled_p1_sym(), 0.5), std::invalid_argument);
  std::vector<WorkerClass> tied{{"a", Money::from_units(2.0), ConfusionMatrix(0.8, 0.8)},
                                {"b", Money::from_units(2.0), ConfusionMatrix(0.8, 0.8)},
                                {"c", Money::from_units(2.0), ConfusionMatrix(0.7, 0.7)}};
  CHECK_THROWS_AS(n0_sym(Instance(tied, Prior::uniform()), 0.25), EstimationError);
}

TEST_CASE("misid bounds match hand computation") {
  SymDiagnostics s;
  s.classes = 5;
  s.gamma = 0.25;
  for (double n : {16.0, 100.0, 10000.0}) CHECK(s.misid_bound(n) == doctest::Approx(25.0 * std::exp(-std::sqrt(n) / 2.0)));
  // Bound <= 1 from N = (2 log 25)^2 ~ 41.4.
  CHECK(s.misid_bound(41.0) > 1.0);
  CHECK(s.misid_bound(42.0) <= 1.0);
  AsymDiagnostics a;
  a.classes = 5;
  a.gamma_a = 0.3;
  for (double n : {10.0, 1000.0, 1e6}) CHECK(a.misid_bound(n) == doctest::Approx(53.0 * std::exp(1.0 - std::pow(n, 0.3))));
  CHECK(a.misid_bound(1000.0) < a.misid_bound(10.0));
}

TEST_CASE("n0_asym on the bundled asymmetric instance") {
  const Instance asym = bundled_p1_asym();
  const auto d = n0_asym(asym, 0.3, 0.3);
  CHECK(d.k1.log10 > 20.0);
  CHECK(d.w_min == 0.5);
  CHECK(d.kappa == doctest::Approx(2 * 0.64 - 1));
  CHECK(d.sigma_l > 0.0);
  // Class C4 is symmetric: its K5 term is unbounded.
  CHECK_FALSE(d.k5_valid[3]);
  CHECK(d.weakest_label[2] == 1);
  for (auto [ga, gb] : {std::pair{0.3, 0.3}, std::pair{0.2, 0.2}, std::pair{0.5, 0.1}}) {
    CHECK(n0_asym(asym, ga, gb).n0.log10 > 10.0);
  }
  // K1 grows as gamma_a + 2 gamma_b approaches 1.
  double prev = 0.0;
  for (double gb : {0.1, 0.2, 0.3, 0.34, 0.349}) {
    const double l = n0_asym(asym, 0.3, gb).k1.log10;
    CHECK(l > prev);
    prev = l;
  }
  CHECK_FALSE(n0_asym(asym, 0.4, 0.3).k1.bounded());
  CHECK_THROWS_AS(n0_asym(asym, 0.5, 0.3), std::invalid_argument);
}

TEST_CASE("smallest singular value") {
  CHECK(smallest_singular_value_2x2(3, 0, 0, 2) == doctest::Approx(2.0));
  CHECK(smallest_singular_value_2x2(1, 2, 2, 4) == doctest::Approx(0.0));
  // [[1,1],[0,1]]: singular values are the golden ratio and its inverse.
  CHECK(smallest_singular_value_2x2(1, 1, 0, 1) == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0));
}

TEST_CASE("diagnostics are pure") {
  const auto a = n0_asym(bundled_p1_asym(), 0.2, 0.3);
  const auto b = n0_asym(bundled_p1_asym(), 0.2, 0.3);
  CHECK(a.k1.log10 == b.k1.log10);
  CHECK(a.sigma_l == b.sigma_l);
  CHECK(n0_sym(bundled_p1_sym(), 0.1).k1.log10 == n0_sym(bundled_p1_sym(), 0.1).k1.log10);
}

TEST_CASE("magnitude formatting") {
  CHECK(Magnitude::from_power(10.0, 3.0).to_string() == "1000");
  CHECK(Magnitude::unbounded().to_string() == "unbounded");
  CHECK(Magnitude{400.0}.to_string().find("overflow") != std::string::npos);
}

TEST_CASE("benchmark config parsing") {
  const json ok = {{"instances", {"a.json"}}, {"algorithms", {"abi", "mle"}}, {"items_grid", {100, 200}},
                   {"alpha", 0.05},         {"replications", 3},            {"seed", 7}};
  const auto cfg = parse_benchmark_config(ok);
  CHECK(cfg.algorithms.size() == 2);
  CHECK(cfg.items_grid[1] == 200);
  auto bad = ok;
  bad["algorithms"] = {"abi", "nope"};
  CHECK_THROWS_WITH_AS(parse_benchmark_config(bad, "cfg.json"), doctest::Contains("nope"), ConfigError);
  auto missing = ok;
  missing.erase("seed");
  CHECK_THROWS_WITH_AS(parse_benchmark_config(missing, "cfg.json"), doctest::Contains("cfg.json"), ConfigError);
  CHECK_THROWS_AS(load_benchmark_config("/nonexistent.json"), ConfigError);
}

TEST_CASE("benchmark determinism, aggregates and CSV round trip") {
  BenchmarkConfig cfg;
  cfg.algorithms = {Algorithm::AsymImcw, Algorithm::Abi, Algorithm::Mle};
  cfg.items_grid = {200, 400};
  cfg.alpha = 0.05;
  cfg.replications = 4;
  cfg.seed = 123;
  const std::vector<Instance> insts{bundled_p1_asym()};
  const auto a = run_benchmark(cfg, insts, 1);
  const auto b = run_benchmark(cfg, insts, 3);
  std::ostringstream ca, cb;
  write_results_csv(ca, a.rows);
  write_results_csv(cb, b.rows);
  CHECK(ca.str() == cb.str());
  CHECK(a.rows.size() == 3 * 2 * 4);
  CHECK(ca.str().rfind(std::string(kResultsHeader) + "\n", 0) == 0);

  std::istringstream in(ca.str());
  const auto rows = read_results_csv(in);
  REQUIRE(rows.size() == a.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].total_cost == a.rows[i].total_cost);
    CHECK(rows[i].total_cost == rows[i].explore_cost + rows[i].exploit_cost);
    CHECK(rows[i].accuracy == a.rows[i].accuracy);
  }
  // Aggregates are recomputable from the raw rows.
  const auto agg = aggregate(rows);
  REQUIRE(agg.size() == a.aggregates.size());
  for (std::size_t i = 0; i < agg.size(); ++i) {
    CHECK(agg[i].mean_accuracy == a.aggregates[i].mean_accuracy);
    double mean = 0.0;
    int count = 0;
    for (const auto& r : rows) {
      if (r.algo == agg[i].algo && r.n == agg[i].n) mean += r.accuracy, ++count;
    }
    CHECK(agg[i].mean_accuracy == doctest::Approx(mean / count).epsilon(1e-14));
    CHECK(count == 4);
  }
  // Paired seeds: every algorithm sees the same seed for a given (N, replication).
  for (const auto& r : a.rows) CHECK(r.seed == replication_seed(123, r.n, r.replication));
  CHECK(a.comparisons.size() == 4);
}

TEST_CASE("results CSV rejects malformed input") {
  std::istringstream bad_header("algo,instance\n");
  CHECK_THROWS_AS(read_results_csv(bad_header), ConfigError);
  std::istringstream short_row(std::string(kResultsHeader) + "\nabi,x,1\n");
  CHECK_THROWS_WITH_AS(read_results_csv(short_row, "r.csv"), doctest::Contains("r.csv:2"), ConfigError);
}

TEST_CASE("money formatting") {
  CHECK(format_money(Money::from_micros(2158372)) == "2.158372");
  CHECK(format_money(Money::from_micros(-5)) == "-0.000005");
  CHECK(format_money(Money{}) == "0.000000");
}

TEST_CASE("report JSON detail") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 50, 2);
  const auto r = abi(truth, inst, 0.05, 2);
  const json j = report_to_json(r);
  CHECK(j["algo"] == "abi");
  CHECK(j["per_item_tau"].size() == 50);
  CHECK(j.contains("k_hat_abi"));
  CHECK(j.dump() == report_to_json(abi(truth, inst, 0.05, 2)).dump());
}

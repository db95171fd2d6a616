#include <doctest.h>

#include <cmath>

#include "crowd/errors.hpp"
#include "crowd/instance_io.hpp"
#include "crowd/pipeline.hpp"
#include "oracles.hpp"

using namespace crowd;

namespace {

Instance noiseless() {
  std::vector<WorkerClass> classes{{"a", Money::from_units(3.0), ConfusionMatrix(1.0, 1.0)},
                                   {"b", Money::from_units(1.5), ConfusionMatrix(1.0, 1.0)},
                                   {"c", Money::from_units(2.0), ConfusionMatrix(1.0, 1.0)},
                                   {"d", Money::from_units(4.0), ConfusionMatrix(1.0, 1.0)}};
  return Instance(classes, Prior(0.4, 0.6), "noiseless");
}

Money per_item_explore(const Instance& inst) {
  Money m;
  for (const auto& c : inst.classes()) m += c.price;
  return m;
}

}  // namespace

TEST_CASE("algorithm tags") {
  for (Algorithm a : all_algorithms()) CHECK(parse_algorithm(algorithm_tag(a)) == a);
  CHECK_THROWS_AS(parse_algorithm("bogus"), ConfigError);
}

TEST_CASE("noiseless classes: perfect accuracy and cheapest class for sym-imcw") {
  const Instance inst = noiseless();
  const auto truth = sample_truth(inst.prior(), 200, 3);
  const auto r = sym_imcw(truth, inst, 0.05, 3);
  CHECK(r.accuracy == 1.0);
  CHECK(r.k_hat == 1);
}

TEST_CASE("every pipeline reports an exact cost decomposition") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 300, 8);
  for (Algorithm a : all_algorithms()) {
    const auto r = run_pipeline(a, truth, inst, run_options(0.05, 8));
    CAPTURE(algorithm_tag(a));
    CHECK(r.total_cost == r.explore_cost + r.exploit_cost);
    CHECK(r.explore_cost == per_item_explore(inst) * 300);
    std::int64_t queries = 0;
    for (auto t : r.per_item_tau) queries += static_cast<std::int64_t>(t);
    CHECK(r.exploit_cost == inst[r.k_hat].price * queries);
    CHECK(r.final_labels.size() == 300);
  }
}

TEST_CASE("mle pipeline uses a constant number of queries per item") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 500, 4);
  const auto r = mle_pipeline(truth, inst, 0.05, 4);
  for (auto t : r.per_item_tau) CHECK(t == r.per_item_tau.front());
  CHECK(r.k_hat_abi.has_value());
}

TEST_CASE("seed stability: identical reports") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 400, 10);
  for (Algorithm a : all_algorithms()) {
    const auto x = run_pipeline(a, truth, inst, run_options(0.05, 10));
    const auto y = run_pipeline(a, truth, inst, run_options(0.05, 10));
    CHECK(x.final_labels == y.final_labels);
    CHECK(x.per_item_tau == y.per_item_tau);
    CHECK(x.total_cost == y.total_cost);
    CHECK(x.k_hat == y.k_hat);
  }
}

TEST_CASE("oracle selection with injected true matrices") {
  for (const Instance& inst : {bundled_p1_asym(), bundled_p1_sym()}) {
    const auto truth = sample_truth(inst.prior(), 50, 1);
    RunOptions opts = run_options(0.05, 1);
    opts.injected_estimates = true_estimates(inst);
    CHECK(run_pipeline(Algorithm::SymImcw, truth, inst, opts).k_hat == optimal_class(inst).k_star);
    CHECK(run_pipeline(Algorithm::AsymImcw, truth, inst, opts).k_hat == optimal_class(inst).k_star);

    // Brute-force argmin of price times the with-prior bound.
    std::size_t best = 0;
    double best_score = kInf;
    for (std::size_t k = 0; k < inst.size(); ++k) {
      const auto& c = inst[k].confusion;
      const double bound = std::max(lower_bound_with_prior(c.c0(), c.c1(), 0, 0.05),
                                    lower_bound_with_prior(c.c0(), c.c1(), 1, 0.05));
      const double s = inst[k].price.units() * bound;
      if (s < best_score) best_score = s, best = k;
    }
    const auto abi_run = run_pipeline(Algorithm::Abi, truth, inst, opts);
    REQUIRE(abi_run.k_hat_abi.has_value());
    CHECK(*abi_run.k_hat_abi == best);
    CHECK(target_class(Algorithm::Abi, inst) == best);
  }
}

TEST_CASE("symmetric ABI selection collapses to p / d(c, 1 - c)") {
  const Instance inst = bundled_p1_sym();
  const auto scores = abi_scores(true_estimates(inst), inst.prices());
  for (std::size_t k = 0; k < inst.size(); ++k) {
    const double c = inst[k].confusion.c0();
    CHECK(scores[k] == doctest::Approx(inst[k].price.units() / kl_bernoulli(c, 1.0 - c)));
  }
}

TEST_CASE("clamped classes are never selected while a finite score exists") {
  EstimationResult est;
  est.confusion = {ConfusionMatrix(0.5, 0.5), ConfusionMatrix(0.3, 0.9), ConfusionMatrix(0.6, 0.7)};
  const std::vector<Money> prices{Money::from_units(0.01), Money::from_units(0.01), Money::from_units(50.0)};
  CHECK(select_class(direction_scores(est, prices)) == 2);
  // One clamped label leaves the ABI divergences positive: still finite.
  CHECK(std::isfinite(abi_scores(est, prices)[1]));
  CHECK(std::isinf(abi_scores(est, prices)[0]));
  est.confusion = {ConfusionMatrix(0.5, 0.5), ConfusionMatrix(0.2, 0.4), ConfusionMatrix(0.5, 0.1)};
  CHECK_THROWS_AS(select_class(direction_scores(est, prices)), EstimationError);
  CHECK_THROWS_AS(select_class(abi_scores(est, prices)), EstimationError);
}

TEST_CASE("fully degenerate estimates abort before the exploit phase") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 20, 1);
  RunOptions opts = run_options(0.05, 1);
  EstimationResult est;
  est.confusion.assign(inst.size(), ConfusionMatrix(0.5, 0.5));
  opts.injected_estimates = est;
  for (Algorithm a : all_algorithms()) CHECK_THROWS_AS(run_pipeline(a, truth, inst, opts), EstimationError);
}

TEST_CASE("mle with true matrices meets the error target") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 10000, 77);
  RunOptions opts = run_options(0.05, 77);
  opts.injected_estimates = true_estimates(inst);
  const auto r = run_pipeline(Algorithm::Mle, truth, inst, opts);
  CHECK(1.0 - r.accuracy <= 0.05 + oracle::three_sigma(0.05, 10000));
}

TEST_CASE("asym-imcw on a symmetric instance is comparable to sym-imcw") {
  const Instance inst = bundled_p1_sym();
  double diff = 0.0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    const auto truth = sample_truth(inst.prior(), 5000, 900 + r);
    diff += sym_imcw(truth, inst, 0.05, 900 + r).accuracy - asym_imcw(truth, inst, 0.05, 900 + r).accuracy;
  }
  CHECK(std::abs(diff / reps) <= 0.02);
}

TEST_CASE("accuracy floor on the bundled instances (short run)") {
  for (const Instance& inst : {bundled_p1_asym(), bundled_p1_sym()}) {
    for (Algorithm a : all_algorithms()) {
      double acc = 0.0;
      const int reps = 10;
      for (int r = 0; r < reps; ++r) {
        const auto truth = sample_truth(inst.prior(), 1000, 40 + r);
        acc += run_pipeline(a, truth, inst, run_options(0.05, 40 + r)).accuracy / reps;
      }
      CAPTURE(algorithm_tag(a));
      CAPTURE(inst.name());
      CHECK(acc >= 0.95 - oracle::three_sigma(0.95, 10000));
    }
  }
}

TEST_CASE("estimator failures carry the phase") {
  // Two informative classes and noise classes: the asymmetric groups become unidentifiable.
  std::vector<WorkerClass> classes{{"a", Money::from_units(1.0), ConfusionMatrix(0.5, 0.5)},
                                   {"b", Money::from_units(1.0), ConfusionMatrix(0.5, 0.5)},
                                   {"c", Money::from_units(1.0), ConfusionMatrix(0.5, 0.5)}};
  const Instance inst(classes, Prior::uniform());
  const auto truth = sample_truth(inst.prior(), 20, 2);
  try {
    run_pipeline(Algorithm::AsymImcw, truth, inst, run_options(0.05, 2));
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("explore phase") != std::string::npos);
  }
}

#include "crowd/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "crowd/errors.hpp"

namespace crowd {

namespace {

// Upper clamp for estimates handed to the known-matrix rules, whose
// log-likelihoods need accuracies strictly below 1.
constexpr double kMaxAccuracy = 1.0 - 1e-9;

constexpr std::array<Algorithm, 5> kAlgorithms = {Algorithm::SymImcw, Algorithm::AsymImcw, Algorithm::Abi,
                                                  Algorithm::Mle, Algorithm::CbsVariant};

ConfusionMatrix clamp_for_exploit(const ConfusionMatrix& c) {
  return {std::clamp(c.c0(), 0.5, kMaxAccuracy), std::clamp(c.c1(), 0.5, kMaxAccuracy)};
}

bool uses_one_coin(Algorithm algo) { return algo == Algorithm::SymImcw; }
bool uses_abi_selection(Algorithm algo) { return algo == Algorithm::Abi || algo == Algorithm::Mle; }

}  // namespace

std::string_view algorithm_tag(Algorithm algo) {
  switch (algo) {
    case Algorithm::SymImcw: return "sym-imcw";
    case Algorithm::AsymImcw: return "asym-imcw";
    case Algorithm::Abi: return "abi";
    case Algorithm::Mle: return "mle";
    case Algorithm::CbsVariant: return "cbs-variant";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view tag) {
  for (Algorithm a : kAlgorithms) {
    if (algorithm_tag(a) == tag) return a;
  }
  throw ConfigError(fmt::format("unknown algorithm tag '{}' (expected sym-imcw, asym-imcw, abi, mle, cbs-variant)", tag));
}

std::span<const Algorithm> all_algorithms() { return kAlgorithms; }

double RunReport::mean_tau() const {
  if (per_item_tau.empty()) return 0.0;
  const double sum = std::accumulate(per_item_tau.begin(), per_item_tau.end(), 0.0,
                                     [](double acc, std::size_t t) { return acc + static_cast<double>(t); });
  return sum / static_cast<double>(per_item_tau.size());
}

std::vector<double> direction_scores(const EstimationResult& estimates, std::span<const Money> prices) {
  std::vector<double> scores(prices.size(), kInf);
  for (std::size_t k = 0; k < prices.size(); ++k) {
    const auto& c = estimates.confusion[k];
    const double worst = std::max(0.5, c.min_accuracy());
    if (worst <= 0.5) continue;
    scores[k] = prices[k].units() / kl_bernoulli(worst, 0.5);
  }
  return scores;
}

std::vector<double> abi_scores(const EstimationResult& estimates, std::span<const Money> prices) {
  std::vector<double> scores(prices.size(), kInf);
  for (std::size_t k = 0; k < prices.size(); ++k) {
    const auto c = clamp_for_exploit(estimates.confusion[k]);
    const double d_one = kl_bernoulli(c.c1(), 1.0 - c.c0());
    const double d_zero = kl_bernoulli(c.c0(), 1.0 - c.c1());
    if (d_one <= 0.0 || d_zero <= 0.0) continue;
    scores[k] = prices[k].units() * std::max(1.0 / d_one, 1.0 / d_zero);
  }
  return scores;
}

std::size_t select_class(std::span<const double> scores) {
  if (scores.empty()) throw EstimationError("class selection: no classes");
  const auto best = std::min_element(scores.begin(), scores.end());
  if (std::isinf(*best)) {
    throw EstimationError("class selection: every class has estimated accuracy <= 1/2 on some label; "
                          "no class can be used in the exploit phase");
  }
  return static_cast<std::size_t>(best - scores.begin());
}

EstimationResult true_estimates(const Instance& instance) {
  EstimationResult out;
  out.method = EstimationMethod::Injected;
  for (const auto& c : instance.classes()) out.confusion.push_back(c.confusion);
  out.prior = instance.prior();
  return out;
}

std::size_t target_class(Algorithm algo, const Instance& instance) {
  const auto prices = instance.prices();
  if (uses_abi_selection(algo)) return select_class(abi_scores(true_estimates(instance), prices));
  return optimal_class(instance).k_star;
}

ExploreResult run_explore(Algorithm algo, Platform& platform, const RunOptions& options) {
  ExploreResult out;
  out.labels = explore_matrix(platform);
  if (options.injected_estimates) {
    out.estimates = *options.injected_estimates;
    if (out.estimates.confusion.size() != platform.num_classes()) {
      throw std::invalid_argument("injected estimates do not match the number of classes");
    }
  } else {
    try {
      out.estimates = uses_one_coin(algo) ? one_coin_estimate(out.labels) : asym_estimate(out.labels);
    } catch (const EstimationError& e) {
      throw EstimationError(fmt::format("explore phase ({}): {}", algorithm_tag(algo), e.what()));
    }
  }
  const auto prices = platform.prices();
  if (uses_abi_selection(algo)) {
    out.k_hat_abi = select_class(abi_scores(out.estimates, prices));
    out.k_hat = *out.k_hat_abi;
  } else {
    out.k_hat = select_class(direction_scores(out.estimates, prices));
  }
  return out;
}

RunReport run_pipeline(Algorithm algo, const GroundTruth& truth, const Instance& instance, const RunOptions& options) {
  Platform platform(instance, truth, options.seed);
  ExploreResult explore = run_explore(algo, platform, options);
  const Money explore_cost = platform.ledger().total();

  RunReport report;
  report.algorithm = algo;
  report.instance_name = instance.name();
  report.k_hat = explore.k_hat;
  report.k_hat_abi = explore.k_hat_abi;
  report.estimates = std::move(explore.estimates);
  report.seed = options.seed;
  report.alpha = options.alpha;

  const std::size_t n = truth.size();
  const std::size_t k = report.k_hat;
  report.final_labels.resize(n);
  report.per_item_tau.resize(n);
  if (options.stop.record_trace) report.traces.resize(n);

  const ConfusionMatrix chosen = clamp_for_exploit(report.estimates.confusion[k]);
  const std::size_t mle_queries = algo == Algorithm::Mle ? mle_sample_size(chosen, options.alpha) : 0;
  const double theta = algo == Algorithm::Mle ? mle_boundary(chosen) : 0.0;

  for (std::size_t j = 0; j < n; ++j) {
    auto stream = platform.stream(Phase::Exploit, j, k);
    if (algo == Algorithm::Mle) {
      std::size_t zeros = 0;
      for (std::size_t t = 0; t < mle_queries; ++t) zeros += static_cast<std::size_t>(stream.next() == 0);
      report.final_labels[j] = static_cast<std::uint8_t>(
          mle_classify(static_cast<double>(zeros) / static_cast<double>(mle_queries), theta));
      report.per_item_tau[j] = mle_queries;
      continue;
    }
    const BitSource source = [&stream] { return stream.next(); };
    StopOutcome outcome;
    switch (algo) {
      case Algorithm::SymImcw:
      case Algorithm::AsymImcw: outcome = direction_test(source, options.alpha, options.stop); break;
      case Algorithm::CbsVariant: outcome = cbs(source, options.alpha, options.stop); break;
      case Algorithm::Abi: outcome = bias_identification(source, chosen, options.alpha, options.stop); break;
      case Algorithm::Mle: break;
    }
    report.final_labels[j] = static_cast<std::uint8_t>(outcome.label);
    report.per_item_tau[j] = outcome.tau;
    if (options.stop.record_trace) report.traces[j] = std::move(outcome.trace);
  }

  report.explore_cost = explore_cost;
  report.total_cost = platform.ledger().total();
  report.exploit_cost = report.total_cost - explore_cost;

  std::size_t correct = 0;
  for (std::size_t j = 0; j < n; ++j) correct += (report.final_labels[j] == truth.labels[j]);
  report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return report;
}

}  // namespace crowd

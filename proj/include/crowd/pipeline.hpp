#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowd/core.hpp"
#include "crowd/estimate.hpp"
#include "crowd/sim.hpp"
#include "crowd/stop.hpp"

namespace crowd {

enum class Algorithm { SymImcw, AsymImcw, Abi, Mle, CbsVariant };

/// Tags used on the CLI, in configs and in CSV output:
/// sym-imcw, asym-imcw, abi, mle, cbs-variant.
std::string_view algorithm_tag(Algorithm algo);
/// Throws ConfigError for an unknown tag.
Algorithm parse_algorithm(std::string_view tag);
std::span<const Algorithm> all_algorithms();

struct RunOptions {
  double alpha = 0.05;
  std::uint64_t seed = 0;
  StopOptions stop;  // record_trace keeps per-item traces in the report
  /// Replaces the explore-phase estimates (the explore queries are still paid).
  std::optional<EstimationResult> injected_estimates;
};

inline RunOptions run_options(double alpha, std::uint64_t seed) {
  RunOptions o;
  o.alpha = alpha;
  o.seed = seed;
  return o;
}

struct RunReport {
  Algorithm algorithm = Algorithm::SymImcw;
  std::string instance_name;
  std::size_t k_hat = 0;
  std::optional<std::size_t> k_hat_abi;
  EstimationResult estimates;
  std::vector<std::uint8_t> final_labels;
  std::vector<std::size_t> per_item_tau;
  Money explore_cost;
  Money exploit_cost;
  Money total_cost;
  double accuracy = 0.0;  // evaluation only, computed against the ground truth
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::vector<std::vector<TracePoint>> traces;  // per item, when requested

  double mean_tau() const;
};

/// Explore-phase selection for the DirectionTest pipelines:
/// argmin_k max_i p_k / d(max(c_k(i), 1/2), 1/2), +inf for a clamped class.
std::vector<double> direction_scores(const EstimationResult& estimates, std::span<const Money> prices);

/// ABI selection: argmin_k p_k max(1/d(c(1), 1 - c(0)), 1/d(c(0), 1 - c(1))),
/// evaluated on estimates clamped at 1/2; +inf when both are clamped.
std::vector<double> abi_scores(const EstimationResult& estimates, std::span<const Money> prices);

/// Lowest-index argmin; throws EstimationError when every score is infinite.
std::size_t select_class(std::span<const double> scores);

/// Explore only: the label matrix, estimates and the selected class.
struct ExploreResult {
  LabelMatrix labels;
  EstimationResult estimates;
  std::size_t k_hat = 0;
  std::optional<std::size_t> k_hat_abi;
};
ExploreResult run_explore(Algorithm algo, Platform& platform, const RunOptions& options);

RunReport run_pipeline(Algorithm algo, const GroundTruth& truth, const Instance& instance, const RunOptions& options);

inline RunReport sym_imcw(const GroundTruth& truth, const Instance& instance, double alpha, std::uint64_t seed) {
  return run_pipeline(Algorithm::SymImcw, truth, instance, run_options(alpha, seed));
}
inline RunReport asym_imcw(const GroundTruth& truth, const Instance& instance, double alpha, std::uint64_t seed) {
  return run_pipeline(Algorithm::AsymImcw, truth, instance, run_options(alpha, seed));
}
inline RunReport abi(const GroundTruth& truth, const Instance& instance, double alpha, std::uint64_t seed) {
  return run_pipeline(Algorithm::Abi, truth, instance, run_options(alpha, seed));
}
inline RunReport mle_pipeline(const GroundTruth& truth, const Instance& instance, double alpha, std::uint64_t seed) {
  return run_pipeline(Algorithm::Mle, truth, instance, run_options(alpha, seed));
}
inline RunReport cbs_variant(const GroundTruth& truth, const Instance& instance, double alpha, std::uint64_t seed) {
  return run_pipeline(Algorithm::CbsVariant, truth, instance, run_options(alpha, seed));
}

/// The class each algorithm should select given the true matrices: k* for the
/// DirectionTest pipelines, the ABI argmin for abi and mle.
std::size_t target_class(Algorithm algo, const Instance& instance);

/// True matrices wrapped as an EstimationResult (for oracle-selection checks).
EstimationResult true_estimates(const Instance& instance);

}  // namespace crowd

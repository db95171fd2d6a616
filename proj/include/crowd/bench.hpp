#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowd/core.hpp"
#include "crowd/pipeline.hpp"

namespace crowd {

// ---------------------------------------------------------------------------
// Sample-complexity diagnostics
// ---------------------------------------------------------------------------

/// A non-negative constant held as log10. +inf marks an unbounded constant: the
/// requirement it encodes cannot be met by any finite N.
struct Magnitude {
  double log10 = 0.0;

  static Magnitude from_power(double base, double exponent);  // base^exponent, base > 0
  static Magnitude unbounded();

  bool bounded() const;
  /// The value itself, +inf when it overflows a double.
  double value() const;
  /// "4.09e+12", "1e+310 (overflow)" or "unbounded".
  std::string to_string() const;

  friend bool operator<(const Magnitude& a, const Magnitude& b) { return a.log10 < b.log10; }
};

struct SymDiagnostics {
  double gamma = 0.0;
  std::size_t classes = 0;
  std::size_t k_star = 0;
  double kappa_bar = 0.0;
  double kappa3 = 0.0;
  std::vector<double> w;        // W_k; NaN where W_k^{-1} <= 0
  std::vector<bool> w_valid;
  std::vector<bool> k3_valid;   // per class, false for k* and unsatisfiable terms
  Magnitude k1, k2, k3, n0;

  /// M^2 exp(-N^{1-2 gamma} / 2)
  double misid_bound(double n) const;
};

/// Throws std::invalid_argument for a non-symmetric instance or gamma outside
/// (0, 1/2), EstimationError when the optimal class is not unique.
SymDiagnostics n0_sym(const Instance& instance, double gamma);

struct AsymDiagnostics {
  double gamma_a = 0.0;
  double gamma_b = 0.0;
  std::size_t classes = 0;
  std::size_t k_star = 0;
  double w_min = 0.0;
  double kappa = 0.0;
  double sigma_l = 0.0;
  std::vector<int> weakest_label;  // m_k
  std::vector<double> w;
  std::vector<bool> w_valid;
  std::vector<bool> k4_valid;
  std::vector<bool> k5_valid;  // false where c(0) = c(1)
  Magnitude k1, k2, k3, k4, k5, n0;

  /// (48 + M) exp(1 - N^{gamma_a})
  double misid_bound(double n) const;
};

/// Smallest singular value of a 2x2 matrix given row-major.
double smallest_singular_value_2x2(double a, double b, double c, double d);

/// min over a != b of the smallest singular value of C_a diag(w) C_b^T.
double sigma_l(const Instance& instance);

/// Throws std::invalid_argument unless gamma_a, gamma_b in (0,1) and
/// gamma_a + 2 gamma_b <= 1; EstimationError when sigma_L = 0 or k* is not unique.
AsymDiagnostics n0_asym(const Instance& instance, double gamma_a, double gamma_b);

// ---------------------------------------------------------------------------
// Monte-Carlo harness
// ---------------------------------------------------------------------------

struct BenchmarkConfig {
  std::vector<std::string> instances;  // instance file paths
  std::vector<Algorithm> algorithms;
  std::vector<std::size_t> items_grid;
  double alpha = 0.05;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
};

/// { "instances": [path], "algorithms": [tag], "items_grid": [int], "alpha": number,
///   "replications": int, "seed": int }. Throws ConfigError.
BenchmarkConfig parse_benchmark_config(const nlohmann::json& doc, const std::string& source = "<json>");
BenchmarkConfig load_benchmark_config(const std::string& path);

struct ResultRow {
  std::string algo;
  std::string instance;
  std::size_t n = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::size_t replication = 0;
  std::size_t k_star = 0;
  std::size_t k_hat = 0;
  bool k_correct = false;
  Money explore_cost;
  Money exploit_cost;
  Money total_cost;
  double mean_tau = 0.0;
  double accuracy = 0.0;
};

inline constexpr const char* kResultsHeader =
    "algo,instance,N,alpha,seed,replication,k_star,k_hat,k_correct,explore_cost,exploit_cost,total_cost,mean_tau,"
    "accuracy";

struct AggregateRow {
  std::string algo;
  std::string instance;
  std::size_t n = 0;
  std::size_t replications = 0;
  double mean_accuracy = 0.0;
  double stderr_accuracy = 0.0;
  double mean_total_cost = 0.0;
  double stderr_total_cost = 0.0;
  double mean_cost_per_item = 0.0;
  double stderr_cost_per_item = 0.0;
  double mean_exploit_cost_per_item = 0.0;
  double p_k_correct = 0.0;
  double mean_tau = 0.0;
};

/// Exploit cost per item of abi / mle against asym-imcw at the same (instance, N).
/// Expected direction is "lower or comparable"; reported, never enforced.
struct CostComparison {
  std::string algo;
  std::string instance;
  std::size_t n = 0;
  double cost_per_item = 0.0;
  double asym_cost_per_item = 0.0;
  bool claim_holds = false;  // cost_per_item <= asym_cost_per_item
};

struct BenchmarkResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<CostComparison> comparisons;
};

/// Seed shared by every algorithm for one (N, replication) cell, so the
/// algorithms are compared on paired ground truths.
std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t replication);

ResultRow to_result_row(const RunReport& report, std::size_t replication, std::size_t k_star);

BenchmarkResult run_benchmark(const BenchmarkConfig& config, const std::vector<Instance>& instances,
                              unsigned threads = 0);
/// Loads the instance files named in the config.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, unsigned threads = 0);

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);
std::vector<CostComparison> compare_costs(const std::vector<AggregateRow>& aggregates);

/// Fixed six-decimal rendering of a Money amount.
std::string format_money(Money m);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in, const std::string& source = "<stream>");
void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_comparison_csv(std::ostream& out, const std::vector<CostComparison>& rows);

/// Detail file: scalar fields plus per-item labels and tau.
nlohmann::json report_to_json(const RunReport& report);

}  // namespace crowd

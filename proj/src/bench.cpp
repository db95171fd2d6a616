#include "crowd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "crowd/errors.hpp"
#include "crowd/instance_io.hpp"
#include "crowd/rng.hpp"

namespace crowd {

using nlohmann::json;

BenchmarkConfig parse_benchmark_config(const json& doc, const std::string& source) {
  if (!doc.is_object()) throw ConfigError(fmt::format("{}: config must be a JSON object", source));
  auto require = [&](const char* key) -> const json& {
    if (!doc.contains(key)) throw ConfigError(fmt::format("{}: missing \"{}\"", source, key));
    return doc[key];
  };
  BenchmarkConfig cfg;
  try {
    for (const auto& p : require("instances")) cfg.instances.push_back(p.get<std::string>());
    for (const auto& a : require("algorithms")) cfg.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    for (const auto& n : require("items_grid")) {
      const auto v = n.get<std::int64_t>();
      if (v < 1) throw ConfigError(fmt::format("{}: items_grid entries must be >= 1", source));
      cfg.items_grid.push_back(static_cast<std::size_t>(v));
    }
    cfg.alpha = require("alpha").get<double>();
    const auto reps = require("replications").get<std::int64_t>();
    if (reps < 1) throw ConfigError(fmt::format("{}: replications must be >= 1", source));
    cfg.replications = static_cast<std::size_t>(reps);
    cfg.seed = require("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError(fmt::format("{}: alpha must lie in (0,1)", source));
  if (cfg.instances.empty() || cfg.algorithms.empty() || cfg.items_grid.empty()) {
    throw ConfigError(fmt::format("{}: instances, algorithms and items_grid must be non-empty", source));
  }
  return cfg;
}

BenchmarkConfig load_benchmark_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open config", path));
  try {
    return parse_benchmark_config(json::parse(in), path);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t replication) {
  return mix64(mix64(master ^ 0x5EEDULL) + mix64(static_cast<std::uint64_t>(n) * 0x9E3779B97F4A7C15ULL) +
               static_cast<std::uint64_t>(replication));
}

ResultRow to_result_row(const RunReport& report, std::size_t replication, std::size_t k_star) {
  ResultRow row;
  row.algo = std::string(algorithm_tag(report.algorithm));
  row.instance = report.instance_name;
  row.n = report.final_labels.size();
  row.alpha = report.alpha;
  row.seed = report.seed;
  row.replication = replication;
  row.k_star = k_star;
  row.k_hat = report.k_hat;
  row.k_correct = report.k_hat == k_star;
  row.explore_cost = report.explore_cost;
  row.exploit_cost = report.exploit_cost;
  row.total_cost = report.total_cost;
  row.mean_tau = report.mean_tau();
  row.accuracy = report.accuracy;
  return row;
}

namespace {

struct Task {
  std::size_t instance;
  std::size_t algo;
  std::size_t n;
  std::size_t replication;
};

// Mean and standard error of the mean.
std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config, const std::vector<Instance>& instances,
                              unsigned threads) {
  std::vector<std::size_t> targets_flat(instances.size() * config.algorithms.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
      targets_flat[i * config.algorithms.size() + a] = target_class(config.algorithms[a], instances[i]);
    }
  }

  std::vector<Task> tasks;
  for (std::size_t i = 0; i < instances.size(); ++i)
    for (std::size_t a = 0; a < config.algorithms.size(); ++a)
      for (std::size_t n : config.items_grid)
        for (std::size_t r = 0; r < config.replications; ++r) tasks.push_back({i, a, n, r});

  std::vector<ResultRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      const Task& t = tasks[idx];
      try {
        const Instance& inst = instances[t.instance];
        const std::uint64_t seed = replication_seed(config.seed, t.n, t.replication);
        const GroundTruth truth = sample_truth(inst.prior(), t.n, seed);
        const RunReport report =
            run_pipeline(config.algorithms[t.algo], truth, inst, run_options(config.alpha, seed));
        rows[idx] = to_result_row(report, t.replication, targets_flat[t.instance * config.algorithms.size() + t.algo]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  // Tasks were enumerated in (instance, algorithm, N, replication) order already.
  BenchmarkResult result;
  result.rows = std::move(rows);
  result.aggregates = aggregate(result.rows);
  result.comparisons = compare_costs(result.aggregates);
  return result;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, unsigned threads) {
  std::vector<Instance> instances;
  for (const auto& path : config.instances) instances.push_back(load_instance(path));
  return run_benchmark(config, instances, threads);
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  // Keyed by first appearance so the summary follows the row order.
  std::vector<std::tuple<std::string, std::string, std::size_t>> order;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_tuple(r.instance, r.algo, r.n);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    const auto& members = groups[key];
    AggregateRow a;
    a.instance = std::get<0>(key);
    a.algo = std::get<1>(key);
    a.n = std::get<2>(key);
    a.replications = members.size();
    std::vector<double> acc, total, per_item, exploit_per_item, tau;
    std::size_t correct = 0;
    for (const ResultRow* r : members) {
      const double n = static_cast<double>(r->n);
      acc.push_back(r->accuracy);
      total.push_back(r->total_cost.units());
      per_item.push_back(r->total_cost.units() / n);
      exploit_per_item.push_back(r->exploit_cost.units() / n);
      tau.push_back(r->mean_tau);
      correct += r->k_correct ? 1 : 0;
    }
    std::tie(a.mean_accuracy, a.stderr_accuracy) = mean_stderr(acc);
    std::tie(a.mean_total_cost, a.stderr_total_cost) = mean_stderr(total);
    std::tie(a.mean_cost_per_item, a.stderr_cost_per_item) = mean_stderr(per_item);
    a.mean_exploit_cost_per_item = mean_stderr(exploit_per_item).first;
    a.mean_tau = mean_stderr(tau).first;
    a.p_k_correct = static_cast<double>(correct) / static_cast<double>(members.size());
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<CostComparison> compare_costs(const std::vector<AggregateRow>& aggregates) {
  std::vector<CostComparison> out;
  for (const auto& base : aggregates) {
    if (base.algo != "asym-imcw") continue;
    for (const auto& other : aggregates) {
      if ((other.algo != "abi" && other.algo != "mle") || other.instance != base.instance || other.n != base.n) continue;
      CostComparison c;
      c.algo = other.algo;
      c.instance = other.instance;
      c.n = other.n;
      c.cost_per_item = other.mean_exploit_cost_per_item;
      c.asym_cost_per_item = base.mean_exploit_cost_per_item;
      c.claim_holds = c.cost_per_item <= c.asym_cost_per_item;
      out.push_back(c);
    }
  }
  return out;
}

std::string format_money(Money m) {
  const std::int64_t micros = m.micros();
  const char* sign = micros < 0 ? "-" : "";
  const std::uint64_t abs = micros < 0 ? static_cast<std::uint64_t>(-micros) : static_cast<std::uint64_t>(micros);
  return fmt::format("{}{}.{:06}", sign, abs / 1000000, abs % 1000000);
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.algo, r.instance, r.n, r.alpha, r.seed,
                       r.replication, r.k_star, r.k_hat, r.k_correct ? 1 : 0, format_money(r.explore_cost),
                       format_money(r.exploit_cost), format_money(r.total_cost), r.mean_tau, r.accuracy);
  }
}

namespace {

Money parse_money(const std::string& s, const std::string& where) {
  const auto dot = s.find('.');
  try {
    if (dot == std::string::npos) return Money::from_micros(std::stoll(s) * 1000000);
    std::string frac = s.substr(dot + 1);
    if (frac.size() > 6) throw ConfigError(fmt::format("{}: amount '{}' has more than 6 decimals", where, s));
    frac.resize(6, '0');
    const bool negative = !s.empty() && s[0] == '-';
    const std::int64_t whole = std::stoll(s.substr(0, dot));
    const std::int64_t micros = std::llabs(whole) * 1000000 + std::stoll(frac);
    return Money::from_micros(negative ? -micros : micros);
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("{}: bad amount '{}'", where, s));
  }
}

}  // namespace

std::vector<ResultRow> read_results_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw ConfigError(fmt::format("{}:1: unexpected results header", source));
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    const std::string where = fmt::format("{}:{}", source, line_no);
    if (f.size() != 14) throw ConfigError(fmt::format("{}: expected 14 fields, got {}", where, f.size()));
    try {
      ResultRow r;
      r.algo = f[0];
      r.instance = f[1];
      r.n = std::stoull(f[2]);
      r.alpha = std::stod(f[3]);
      r.seed = std::stoull(f[4]);
      r.replication = std::stoull(f[5]);
      r.k_star = std::stoull(f[6]);
      r.k_hat = std::stoull(f[7]);
      r.k_correct = f[8] == "1";
      r.explore_cost = parse_money(f[9], where);
      r.exploit_cost = parse_money(f[10], where);
      r.total_cost = parse_money(f[11], where);
      r.mean_tau = std::stod(f[12]);
      r.accuracy = std::stod(f[13]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("{}: malformed numeric field", where));
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "algo,instance,N,replications,mean_accuracy,stderr_accuracy,mean_total_cost,stderr_total_cost,"
         "mean_cost_per_item,stderr_cost_per_item,mean_exploit_cost_per_item,p_k_correct,mean_tau\n";
  for (const auto& a : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", a.algo, a.instance, a.n, a.replications,
                       a.mean_accuracy, a.stderr_accuracy, a.mean_total_cost, a.stderr_total_cost,
                       a.mean_cost_per_item, a.stderr_cost_per_item, a.mean_exploit_cost_per_item, a.p_k_correct,
                       a.mean_tau);
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<CostComparison>& rows) {
  out << "algo,instance,N,exploit_cost_per_item,asym_imcw_exploit_cost_per_item,lower_or_equal\n";
  for (const auto& c : rows) {
    out << fmt::format("{},{},{},{},{},{}\n", c.algo, c.instance, c.n, c.cost_per_item, c.asym_cost_per_item,
                       c.claim_holds ? "pass" : "fail");
  }
}

json report_to_json(const RunReport& report) {
  json estimates = json::array();
  for (const auto& c : report.estimates.confusion) estimates.push_back({c.c0(), c.c1()});
  json doc = {{"algo", algorithm_tag(report.algorithm)},
              {"instance", report.instance_name},
              {"alpha", report.alpha},
              {"seed", report.seed},
              {"k_hat", report.k_hat},
              {"estimation_method", to_string(report.estimates.method)},
              {"estimates", estimates},
              {"explore_cost", format_money(report.explore_cost)},
              {"exploit_cost", format_money(report.exploit_cost)},
              {"total_cost", format_money(report.total_cost)},
              {"accuracy", report.accuracy},
              {"final_labels", report.final_labels},
              {"per_item_tau", report.per_item_tau}};
  if (report.k_hat_abi) doc["k_hat_abi"] = *report.k_hat_abi;
  if (report.estimates.prior) doc["estimated_prior"] = {report.estimates.prior->w0(), report.estimates.prior->w1()};
  return doc;
}

}  // namespace crowd

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "crowd/bench.hpp"
#include "crowd/core.hpp"
#include "crowd/errors.hpp"
#include "crowd/estimate.hpp"
#include "crowd/instance_io.hpp"
#include "crowd/pipeline.hpp"
#include "crowd/sim.hpp"
#include "crowd/stop.hpp"

namespace {

using namespace crowd;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// "bundled:P1-Asym" and "bundled:P1-Sym" name the built-in instances.
Instance resolve_instance(const std::string& spec) {
  if (spec == "bundled:P1-Asym") return bundled_p1_asym();
  if (spec == "bundled:P1-Sym") return bundled_p1_sym();
  return load_instance(spec);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("{}: cannot open for writing", path));
  return out;
}

// Labels CSV: header "item,<class name>...", one row per item.
void write_labels_csv(std::ostream& out, const Instance& instance, const LabelMatrix& z) {
  out << "item";
  for (const auto& c : instance.classes()) out << ',' << c.name;
  out << '\n';
  for (std::size_t j = 0; j < z.items(); ++j) {
    out << j;
    for (std::size_t k = 0; k < z.classes(); ++k) out << ',' << z.at(k, j);
    out << '\n';
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

LabelMatrix read_labels_csv(const std::string& path, std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open labels file", path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(fmt::format("{}:1: empty labels file", path));
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "item") {
    throw ConfigError(fmt::format("{}:1: header must be item,<class>...", path));
  }
  names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<int>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw ConfigError(fmt::format("{}:{}: expected {} fields, got {}", path, line_no, header.size(), f.size()));
    }
    std::vector<int> row;
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (f[k] != "0" && f[k] != "1") throw ConfigError(fmt::format("{}:{}: label must be 0 or 1", path, line_no));
      row.push_back(f[k] == "1");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(fmt::format("{}: no items", path));
  LabelMatrix z(names.size(), rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t k = 0; k < names.size(); ++k) z.set(k, j, rows[j][k]);
  return z;
}

json estimates_to_json(const EstimationResult& r, const std::vector<std::string>& names) {
  json classes = json::array();
  for (std::size_t k = 0; k < r.confusion.size(); ++k) {
    classes.push_back({{"name", names[k]}, {"c0", r.confusion[k].c0()}, {"c1", r.confusion[k].c1()}});
  }
  json doc = {{"method", to_string(r.method)}, {"classes", classes}};
  if (r.prior) doc["prior"] = {r.prior->w0(), r.prior->w1()};
  return doc;
}

int cmd_simulate(const std::string& instance_spec, std::size_t items, std::uint64_t seed, const std::string& out_path,
                 const std::string& truth_path) {
  const Instance instance = resolve_instance(instance_spec);
  const GroundTruth truth = sample_truth(instance.prior(), items, seed);
  Platform platform(instance, truth, seed);
  const LabelMatrix z = explore_matrix(platform);
  if (out_path.empty()) {
    write_labels_csv(std::cout, instance, z);
  } else {
    auto out = open_out(out_path);
    write_labels_csv(out, instance, z);
  }
  if (!truth_path.empty()) {
    auto out = open_out(truth_path);
    out << "item,label\n";
    for (std::size_t j = 0; j < truth.size(); ++j) out << j << ',' << int(truth.labels[j]) << '\n';
  }
  std::cerr << fmt::format("simulated {} items x {} classes, explore cost {}\n", items, instance.size(),
                           format_money(platform.ledger().total()));
  return 0;
}

int cmd_estimate(const std::string& labels_path, const std::string& method) {
  std::vector<std::string> names;
  const LabelMatrix z = read_labels_csv(labels_path, names);
  EstimationResult r;
  if (method == "one-coin") {
    r = one_coin_estimate(z);
  } else if (method == "spectral") {
    r = asym_estimate(z);
  } else {
    throw ConfigError(fmt::format("unknown estimation method '{}' (expected one-coin or spectral)", method));
  }
  std::cout << estimates_to_json(r, names).dump(2) << '\n';
  return 0;
}

struct RunArgs {
  std::string algo;
  std::string instance;
  std::size_t items = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out;
  std::string audit;
  std::string trace;
  std::size_t max_queries = 0;
};

int cmd_run(const RunArgs& a) {
  const Algorithm algo = parse_algorithm(a.algo);
  const Instance instance = resolve_instance(a.instance);
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
  const GroundTruth truth = sample_truth(instance.prior(), a.items, a.seed);
  RunOptions options = run_options(a.alpha, a.seed);
  options.stop.record_trace = !a.trace.empty();
  if (a.max_queries > 0) options.stop.max_queries = a.max_queries;
  const RunReport report = run_pipeline(algo, truth, instance, options);

  const std::vector<ResultRow> rows{to_result_row(report, 0, target_class(algo, instance))};
  if (a.out.empty()) {
    write_results_csv(std::cout, rows);
  } else {
    auto out = open_out(a.out);
    write_results_csv(out, rows);
  }
  if (!a.audit.empty()) {
    auto out = open_out(a.audit);
    out << report_to_json(report).dump(2) << '\n';
  }
  if (!a.trace.empty()) {
    auto out = open_out(a.trace);
    out << "item,t,statistic,threshold\n";
    for (std::size_t j = 0; j < report.traces.size(); ++j) write_trace_csv(out, j, report.traces[j]);
  }
  return 0;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_dir, unsigned threads) {
  const BenchmarkConfig config = load_benchmark_config(config_path);
  // Instance paths resolve relative to the config file.
  BenchmarkConfig resolved = config;
  const auto base = std::filesystem::path(config_path).parent_path();
  std::vector<Instance> instances;
  for (auto& p : resolved.instances) {
    if (p.rfind("bundled:", 0) != 0 && std::filesystem::path(p).is_relative()) p = (base / p).string();
    instances.push_back(resolve_instance(p));
  }
  const BenchmarkResult result = run_benchmark(resolved, instances, threads);

  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  {
    auto out = open_out((dir / "results.csv").string());
    write_results_csv(out, result.rows);
  }
  {
    auto out = open_out((dir / "summary.csv").string());
    write_summary_csv(out, result.aggregates);
  }
  {
    auto out = open_out((dir / "cost_comparison.csv").string());
    write_comparison_csv(out, result.comparisons);
  }
  write_summary_csv(std::cout, result.aggregates);
  if (!result.comparisons.empty()) {
    std::cout << '\n';
    write_comparison_csv(std::cout, result.comparisons);
  }
  return 0;
}

int cmd_ingest(const std::string& responses, bool gold_included, const std::string& class_map_path,
               const std::string& out_path, const std::string& name) {
  if (!gold_included) {
    throw ConfigError("ingest needs gold labels: pass --gold-included for a responses file with a gold column");
  }
  std::ifstream in(responses);
  if (!in) throw ConfigError(fmt::format("{}: cannot open responses file", responses));
  const auto records = read_responses_csv(in, responses);

  ClassMap class_map;
  if (!class_map_path.empty()) {
    std::ifstream cm(class_map_path);
    if (!cm) throw ConfigError(fmt::format("{}: cannot open class map", class_map_path));
    try {
      for (const auto& [worker, cls] : json::parse(cm).items()) class_map[worker] = cls.get<std::string>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: {}", class_map_path, e.what()));
    }
  }
  const IngestResult result = ingest_responses(records, class_map);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  if (result.classes.size() < 3) {
    throw ConfigError(fmt::format("{}: ingestion produced {} classes; an instance needs at least 3", responses,
                                  result.classes.size()));
  }
  const Instance instance = result.to_instance(name);
  const json doc = instance_to_json(instance);
  if (out_path.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    auto out = open_out(out_path);
    out << doc.dump(2) << '\n';
  }
  return 0;
}

int cmd_bounds(const std::string& instance_spec, double alpha) {
  const Instance instance = resolve_instance(instance_spec);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
  const ClassScore score = optimal_class(instance);
  std::cout << "class,c0,c1,price,score,gap,worst_case_queries,lb_no_prior_0,lb_no_prior_1,lb_with_prior_0,"
               "lb_with_prior_1\n";
  for (std::size_t k = 0; k < instance.size(); ++k) {
    const auto& cls = instance[k];
    const auto& c = cls.confusion;
    const bool usable = c.valid_for_algorithms();
    auto cell = [&](auto fn) { return usable ? fmt::format("{:.6f}", fn()) : std::string("inf"); };
    std::cout << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", cls.name, c.c0(), c.c1(), format_money(cls.price),
                             cell([&] { return score.score[k]; }), cell([&] { return score.gaps[k]; }),
                             cell([&] { return worst_case_expected_queries(cls, alpha); }),
                             cell([&] { return lower_bound_no_prior(c.c0(), alpha); }),
                             cell([&] { return lower_bound_no_prior(c.c1(), alpha); }),
                             cell([&] { return lower_bound_with_prior(c.c0(), c.c1(), 0, alpha); }),
                             cell([&] { return lower_bound_with_prior(c.c0(), c.c1(), 1, alpha); }));
  }
  std::cout << fmt::format("\nk_star,{}\ndelta_min,{:.6f}\n", instance[score.k_star].name, score.delta_min);
  return 0;
}

int cmd_diagnostics(const std::string& instance_spec, std::optional<double> gamma, std::optional<double> gamma_a,
                    std::optional<double> gamma_b) {
  const Instance instance = resolve_instance(instance_spec);
  auto line = [](const std::string& key, const Magnitude& m) {
    std::cout << fmt::format("{},{},{}\n", key, m.to_string(),
                             m.bounded() ? fmt::format("{:.4f}", m.log10) : std::string("inf"));
  };
  if (gamma) {
    const SymDiagnostics d = n0_sym(instance, *gamma);
    std::cout << fmt::format("gamma,{}\nk_star,{}\nkappa_bar,{:.6f}\nkappa3,{:.6f}\n", d.gamma, instance[d.k_star].name,
                             d.kappa_bar, d.kappa3);
    for (std::size_t k = 0; k < d.w.size(); ++k) {
      std::cout << fmt::format("W[{}],{},{}\n", instance[k].name, d.w[k], d.w_valid[k] ? "valid" : "invalid");
    }
    std::cout << "constant,value,log10\n";
    line("K1", d.k1);
    line("K2", d.k2);
    line("K3", d.k3);
    line("N0", d.n0);
    return 0;
  }
  if (!gamma_a || !gamma_b) throw ConfigError("diagnostics needs --gamma, or both --gamma-a and --gamma-b");
  const AsymDiagnostics d = n0_asym(instance, *gamma_a, *gamma_b);
  std::cout << fmt::format("gamma_a,{}\ngamma_b,{}\nk_star,{}\nw_min,{:.6f}\nkappa,{:.6f}\nsigma_L,{:.6g}\n",
                           d.gamma_a, d.gamma_b, instance[d.k_star].name, d.w_min, d.kappa, d.sigma_l);
  for (std::size_t k = 0; k < d.w.size(); ++k) {
    std::cout << fmt::format("class[{}],m={},W={},K5_term={}\n", instance[k].name, d.weakest_label[k], d.w[k],
                             d.k5_valid[k] ? "bounded" : "unbounded");
  }
  std::cout << "constant,value,log10\n";
  line("K1", d.k1);
  line("K2", d.k2);
  line("K3", d.k3);
  line("K4", d.k4);
  line("K5", d.k5);
  line("N0", d.n0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-optimal unsupervised binary labeling on a simulated crowdsourcing platform"};
  app.require_subcommand(1);

  std::string instance_spec, out_path, truth_path;
  std::size_t items = 1000;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Draw ground truth and an explore-phase label matrix");
  simulate->add_option("--instance", instance_spec, "Instance JSON path or bundled:P1-Asym / bundled:P1-Sym")
      ->required();
  simulate->add_option("--items", items, "Number of items")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "Master seed");
  simulate->add_option("--out", out_path, "Labels CSV (default stdout)");
  simulate->add_option("--truth-out", truth_path, "Ground-truth CSV");

  std::string labels_path, method = "spectral";
  auto* estimate = app.add_subcommand("estimate", "Estimate confusion matrices from a labels CSV");
  estimate->add_option("--labels", labels_path, "Labels CSV from simulate")->required();
  estimate->add_option("--method", method, "one-coin or spectral")->check(CLI::IsMember({"one-coin", "spectral"}));

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one explore/exploit pipeline");
  run->add_option("--algo", run_args.algo, "sym-imcw, asym-imcw, abi, mle or cbs-variant")->required();
  run->add_option("--instance", run_args.instance, "Instance JSON path or bundled:<name>")->required();
  run->add_option("--items", run_args.items, "Number of items")->check(CLI::PositiveNumber);
  run->add_option("--alpha", run_args.alpha, "Per-item error target");
  run->add_option("--seed", run_args.seed, "Master seed");
  run->add_option("--out", run_args.out, "Results CSV (default stdout)");
  run->add_option("--audit", run_args.audit, "JSON detail file with per-item labels and tau");
  run->add_option("--trace", run_args.trace, "Per-query stopping trace CSV");
  run->add_option("--max-queries", run_args.max_queries, "Per-item query cap (0 = off)");

  std::string config_path, out_dir = "bench_out";
  unsigned threads = 0;
  auto* bench = app.add_subcommand("benchmark", "Monte-Carlo benchmark from a JSON config");
  bench->add_option("--config", config_path, "Benchmark config JSON")->required();
  bench->add_option("--out", out_dir, "Output directory");
  bench->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  std::string responses, class_map_path, ingest_out, ingest_name;
  bool gold_included = false;
  auto* ingest = app.add_subcommand("ingest", "Build an instance from gold-labeled worker responses");
  ingest->add_option("--responses", responses, "CSV worker_id,item_id,label,gold")->required();
  ingest->add_flag("--gold-included", gold_included, "The responses file carries gold labels");
  ingest->add_option("--class-map", class_map_path, "JSON object worker_id -> class name");
  ingest->add_option("--out", ingest_out, "Instance JSON (default stdout)");
  ingest->add_option("--name", ingest_name, "Instance name");

  double alpha = 0.05;
  auto* bounds = app.add_subcommand("bounds", "Class scores and query lower bounds");
  bounds->add_option("--instance", instance_spec, "Instance JSON path or bundled:<name>")->required();
  bounds->add_option("--alpha", alpha, "Per-item error target");

  std::optional<double> gamma, gamma_a, gamma_b;
  auto* diag = app.add_subcommand("diagnostics", "Explore-phase sample-size constants");
  diag->add_option("--instance", instance_spec, "Instance JSON path or bundled:<name>")->required();
  diag->add_option("--gamma", gamma, "Symmetric exponent in (0, 1/2)");
  diag->add_option("--gamma-a", gamma_a, "Asymmetric exponent gamma_a");
  diag->add_option("--gamma-b", gamma_b, "Asymmetric exponent gamma_b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(instance_spec, items, seed, out_path, truth_path);
    if (*estimate) return cmd_estimate(labels_path, method);
    if (*run) return cmd_run(run_args);
    if (*bench) return cmd_benchmark(config_path, out_dir, threads);
    if (*ingest) return cmd_ingest(responses, gold_included, class_map_path, ingest_out, ingest_name);
    if (*bounds) return cmd_bounds(instance_spec, alpha);
    if (*diag) return cmd_diagnostics(instance_spec, gamma, gamma_a, gamma_b);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}

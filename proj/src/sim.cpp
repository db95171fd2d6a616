#include "crowd/sim.hpp"

#include <algorithm>
#include <istream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "crowd/errors.hpp"

namespace crowd {

GroundTruth sample_truth(const Prior& prior, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_truth: n must be >= 1");
  GroundTruth truth;
  truth.seed = seed;
  truth.labels.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto rng = make_stream(seed, Phase::Truth, j, 0);
    truth.labels[j] = static_cast<std::uint8_t>(rng.bernoulli(prior.w1()));
  }
  return truth;
}

LabelMatrix::LabelMatrix(std::size_t classes, std::size_t items)
    : classes_(classes), items_(items), bits_(classes * items, 0) {}

void CostLedger::record(std::size_t item, std::size_t cls, int label, Money price) {
  entries_.push_back({static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(cls),
                      static_cast<std::uint8_t>(label), price});
  class_totals_[cls] += price;
  ++class_counts_[cls];
  total_ += price;
}

Platform::Platform(const Instance& instance, const GroundTruth& truth, std::uint64_t seed)
    : instance_(&instance), truth_(&truth), seed_(seed), ledger_(instance.size()) {}

Platform::Stream Platform::stream(Phase phase, std::size_t item, std::size_t cls) {
  return Stream(this, item, cls, make_stream(seed_, phase, item, cls));
}

int Platform::query(std::size_t item, std::size_t cls, SplitMix64& rng) {
  const WorkerClass& worker = (*instance_)[cls];
  const int truth = truth_->labels[item];
  const int correct = rng.bernoulli(worker.confusion.accuracy(truth));
  const int label = correct ? truth : 1 - truth;
  ledger_.record(item, cls, label, worker.price);
  return label;
}

LabelMatrix explore_matrix(Platform& platform) {
  LabelMatrix z(platform.num_classes(), platform.num_items());
  for (std::size_t j = 0; j < platform.num_items(); ++j) {
    for (std::size_t k = 0; k < platform.num_classes(); ++k) {
      z.set(k, j, platform.stream(Phase::Explore, j, k).next());
    }
  }
  return z;
}

Instance IngestResult::to_instance(std::string name) const {
  return Instance(classes, prior, std::move(name));
}

IngestResult ingest_responses(std::span<const ResponseRecord> records, const ClassMap& class_map,
                              const IngestOptions& options) {
  if (records.empty()) throw ConfigError("ingest: no response records");

  struct Counts {
    std::size_t total[2] = {0, 0};
    std::size_t correct[2] = {0, 0};
  };
  std::map<std::string, Counts> per_class;
  std::map<std::string, int> item_gold;

  for (const auto& r : records) {
    if (!r.gold) throw ConfigError(fmt::format("ingest: record for worker '{}' item '{}' has no gold label",
                                               r.worker_id, r.item_id));
    const int gold = *r.gold;
    std::string cls = r.worker_id;
    if (!class_map.empty()) {
      auto it = class_map.find(r.worker_id);
      if (it == class_map.end()) throw ConfigError(fmt::format("ingest: worker '{}' has no class", r.worker_id));
      cls = it->second;
    }
    auto& c = per_class[cls];
    ++c.total[gold];
    if (r.label == gold) ++c.correct[gold];

    auto [it, inserted] = item_gold.emplace(r.item_id, gold);
    if (!inserted && it->second != gold) {
      throw ConfigError(fmt::format("ingest: item '{}' has conflicting gold labels", r.item_id));
    }
  }

  IngestResult out;
  for (const auto& [name, c] : per_class) {
    double acc[2];
    for (int g = 0; g < 2; ++g) {
      if (c.total[g] == 0) {
        throw ConfigError(fmt::format("ingest: class '{}' has no records with gold label {}", name, g));
      }
      acc[g] = static_cast<double>(c.correct[g]) / static_cast<double>(c.total[g]);
      if (acc[g] < 0.005 || acc[g] > 0.995) {
        out.warnings.push_back(
            fmt::format("class '{}' accuracy on label {} is {}; clamped to [0.005, 0.995]", name, g, acc[g]));
        acc[g] = std::clamp(acc[g], 0.005, 0.995);
      }
    }
    WorkerClass wc;
    wc.name = name;
    wc.confusion = ConfusionMatrix(acc[0], acc[1]);
    auto price = options.explicit_prices.find(name);
    wc.price = Money::from_units(price != options.explicit_prices.end() ? price->second
                                                                        : p1_price(wc.confusion));
    out.classes.push_back(std::move(wc));
  }

  std::size_t ones = 0;
  for (const auto& [item, gold] : item_gold) ones += static_cast<std::size_t>(gold);
  const double w1 = static_cast<double>(ones) / static_cast<double>(item_gold.size());
  out.prior = Prior(1.0 - w1, w1);
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

int parse_bit(const std::string& s, const std::string& source, std::size_t line_no, const char* column) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ConfigError(fmt::format("{}:{}: column '{}' must be 0 or 1, got '{}'", source, line_no, column, s));
}

}  // namespace

std::vector<ResponseRecord> read_responses_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ConfigError(fmt::format("{}: empty file", source));
  ++line_no;
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"worker_id", "item_id", "label", "gold"};
  if (header != expected) {
    throw ConfigError(fmt::format("{}:1: expected header worker_id,item_id,label,gold", source));
  }

  std::vector<ResponseRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) {
      throw ConfigError(fmt::format("{}:{}: expected 4 fields, got {}", source, line_no, f.size()));
    }
    ResponseRecord r;
    r.worker_id = f[0];
    r.item_id = f[1];
    r.label = parse_bit(f[2], source, line_no, "label");
    if (!f[3].empty()) r.gold = parse_bit(f[3], source, line_no, "gold");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace crowd

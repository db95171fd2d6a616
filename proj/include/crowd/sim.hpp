#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowd/core.hpp"
#include "crowd/rng.hpp"

namespace crowd {

struct GroundTruth {
  std::vector<std::uint8_t> labels;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
};

/// I.i.d. Bernoulli(w1) labels; item j draws from its own sub-stream.
GroundTruth sample_truth(const Prior& prior, std::size_t n, std::uint64_t seed);

/// M x N matrix of predicted bits, one row per worker class.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t classes, std::size_t items);

  std::size_t classes() const { return classes_; }
  std::size_t items() const { return items_; }
  int at(std::size_t cls, std::size_t item) const { return bits_[cls * items_ + item]; }
  void set(std::size_t cls, std::size_t item, int bit) {
    bits_[cls * items_ + item] = static_cast<std::uint8_t>(bit != 0);
  }
  std::span<const std::uint8_t> row(std::size_t cls) const {
    return {bits_.data() + cls * items_, items_};
  }

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::size_t classes_ = 0;
  std::size_t items_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct LedgerEntry {
  std::uint32_t item;
  std::uint32_t cls;
  std::uint8_t label;
  Money price;
};

/// Append-only record of every paid query. Not internally synchronized: each
/// run owns one ledger.
class CostLedger {
 public:
  explicit CostLedger(std::size_t num_classes) : class_totals_(num_classes), class_counts_(num_classes) {}

  void record(std::size_t item, std::size_t cls, int label, Money price);

  std::span<const LedgerEntry> entries() const { return entries_; }
  Money total() const { return total_; }
  Money class_total(std::size_t cls) const { return class_totals_[cls]; }
  std::size_t class_count(std::size_t cls) const { return class_counts_[cls]; }
  std::size_t num_classes() const { return class_counts_.size(); }

 private:
  std::vector<LedgerEntry> entries_;
  std::vector<Money> class_totals_;
  std::vector<std::size_t> class_counts_;
  Money total_;
};

/// The simulated crowdsourcing platform. Algorithms see prices and label
/// streams only; the ground truth stays private to the platform.
class Platform {
 public:
  Platform(const Instance& instance, const GroundTruth& truth, std::uint64_t seed);

  /// Query source for one (phase, item, class) sub-stream. Every call to next()
  /// hires a fresh worker from the class and is charged to the ledger.
  class Stream {
   public:
    int next() { return platform_->query(item_, cls_, rng_); }
    int operator()() { return next(); }

   private:
    friend class Platform;
    Stream(Platform* platform, std::size_t item, std::size_t cls, SplitMix64 rng)
        : platform_(platform), item_(item), cls_(cls), rng_(rng) {}
    Platform* platform_;
    std::size_t item_;
    std::size_t cls_;
    SplitMix64 rng_;
  };

  Stream stream(Phase phase, std::size_t item, std::size_t cls);

  /// One prediction on `item` from class `cls` using the caller's stream.
  int query(std::size_t item, std::size_t cls, SplitMix64& rng);

  std::size_t num_items() const { return truth_->size(); }
  std::size_t num_classes() const { return instance_->size(); }
  Money price(std::size_t cls) const { return (*instance_)[cls].price; }
  std::vector<Money> prices() const { return instance_->prices(); }
  std::uint64_t seed() const { return seed_; }

  const CostLedger& ledger() const { return ledger_; }

 private:
  const Instance* instance_;
  const GroundTruth* truth_;
  std::uint64_t seed_;
  CostLedger ledger_;
};

/// One query per (class, item); charges N * sum_k p_k.
LabelMatrix explore_matrix(Platform& platform);

struct ResponseRecord {
  std::string worker_id;
  std::string item_id;
  int label = 0;
  std::optional<int> gold;
};

/// worker id -> class name. Empty map: every worker is its own class.
using ClassMap = std::map<std::string, std::string>;

struct IngestOptions {
  /// class name -> explicit price; classes not listed are priced with P1.
  std::map<std::string, double> explicit_prices;
};

struct IngestResult {
  std::vector<WorkerClass> classes;  // ordered by class name
  Prior prior;
  std::vector<std::string> warnings;

  Instance to_instance(std::string name = {}) const;
};

/// Per-class confusion diagonals from gold-labelled responses (raw frequencies,
/// clamped to [0.005, 0.995] with a warning).
IngestResult ingest_responses(std::span<const ResponseRecord> records, const ClassMap& class_map,
                              const IngestOptions& options = {});

/// CSV with header worker_id,item_id,label,gold. Throws ConfigError with line context.
std::vector<ResponseRecord> read_responses_csv(std::istream& in, const std::string& source = "<stream>");

}  // namespace crowd

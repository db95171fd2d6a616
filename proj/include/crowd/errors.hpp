#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowd {

/// Malformed input files, unknown tags, bad CLI/config values. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical or estimation failure (degenerate moments, no usable class,
/// query cap hit). CLI exit code 3.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sequential rule consumed its query cap without stopping.
class QueryCapExceeded : public EstimationError {
 public:
  QueryCapExceeded(std::size_t queries, std::size_t ones);

  std::size_t queries() const { return queries_; }
  std::size_t ones() const { return ones_; }

 private:
  std::size_t queries_;
  std::size_t ones_;
};

}  // namespace crowd

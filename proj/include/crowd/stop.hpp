#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "crowd/core.hpp"

namespace crowd {

/// Yields one predicted bit per call; each call is a paid query.
using BitSource = std::function<int()>;

struct TracePoint {
  std::size_t t;
  double statistic;
  double threshold;
};

struct StopOutcome {
  int label = 0;
  std::size_t tau = 0;
  std::vector<TracePoint> trace;  // filled only when requested
};

struct StopOptions {
  std::optional<std::size_t> max_queries;  // off by default; hitting it throws QueryCapExceeded
  bool record_trace = false;
};

/// Chernoff threshold log(2t / alpha).
double chernoff_threshold(std::size_t t, double alpha);

/// Chernoff test of the stream's bias against 1/2: stops at the first t >= 2
/// with t d(c_hat, 1/2) > log(2t/alpha); returns 1 iff c_hat > 1/2.
StopOutcome direction_test(const BitSource& next, double alpha, const StopOptions& options = {});

/// Log-likelihood ratio of "label 1" (bias c1) against "label 0" (bias 1 - c0)
/// after t queries with t1 ones.
double bias_log_likelihood_ratio(const ConfusionMatrix& confusion, std::size_t t, std::size_t t1);

/// Chernoff test between the two known biases c1 and 1 - c0: stops at the
/// first t >= 2 with max(Z0, Z1) > log(2t/alpha); returns 1 iff Z1 exceeds it.
StopOutcome bias_identification(const BitSource& next, const ConfusionMatrix& confusion, double alpha,
                                const StopOptions& options = {});

/// Hoeffding confidence-bound rule: stops at the first t >= 2 with
/// |c_hat - 1/2| > sqrt(log(1/alpha) / (2t)).
StopOutcome cbs(const BitSource& next, double alpha, const StopOptions& options = {});

/// MLE decision boundary on the fraction of 0-predictions.
double mle_boundary(const ConfusionMatrix& confusion);

/// ceil(log(1/alpha) / d(theta, c0)), at least 1. alpha in (0, 1].
std::size_t mle_sample_size(const ConfusionMatrix& confusion, double alpha);

/// 0 iff zero_fraction > theta (a tie returns 1).
int mle_classify(double zero_fraction, double theta);

/// CSV rows "item,t,statistic,threshold" for an audit file.
void write_trace_csv(std::ostream& out, std::size_t item, const std::vector<TracePoint>& trace);

}  // namespace crowd

#include "crowd/stop.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "crowd/errors.hpp"

namespace crowd {

QueryCapExceeded::QueryCapExceeded(std::size_t queries, std::size_t ones)
    : EstimationError(fmt::format("query cap of {} reached without stopping ({} ones observed)", queries, ones)),
      queries_(queries),
      ones_(ones) {}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
}

// n * log(x) with 0 * log(0) = 0.
double count_log(std::size_t n, double x) { return n == 0 ? 0.0 : static_cast<double>(n) * std::log(x); }

// Shared driver: `decide(t, t1, stat, threshold)` fills the statistic and
// threshold for the current counts and returns whether to stop.
template <typename Decide>
StopOutcome run_rule(const BitSource& next, const StopOptions& options, Decide decide, auto label_of) {
  StopOutcome out;
  std::size_t t = 0;
  std::size_t ones = 0;
  while (true) {
    if (options.max_queries && t >= *options.max_queries) throw QueryCapExceeded(t, ones);
    ++t;
    ones += static_cast<std::size_t>(next() != 0);
    double stat = 0.0, threshold = 0.0;
    const bool stop = decide(t, ones, stat, threshold) && t >= 2;
    if (options.record_trace) out.trace.push_back({t, stat, threshold});
    if (stop) {
      out.tau = t;
      out.label = label_of(t, ones);
      return out;
    }
  }
}

int majority_label(std::size_t t, std::size_t ones) { return 2 * ones > t ? 1 : 0; }

}  // namespace

double chernoff_threshold(std::size_t t, double alpha) { return std::log(2.0 * static_cast<double>(t) / alpha); }

StopOutcome direction_test(const BitSource& next, double alpha, const StopOptions& options) {
  check_alpha(alpha);
  return run_rule(
      next, options,
      [alpha](std::size_t t, std::size_t ones, double& stat, double& threshold) {
        const double c_hat = static_cast<double>(ones) / static_cast<double>(t);
        stat = static_cast<double>(t) * kl_bernoulli(c_hat, 0.5);
        threshold = chernoff_threshold(t, alpha);
        return stat > threshold;
      },
      majority_label);
}

double bias_log_likelihood_ratio(const ConfusionMatrix& confusion, std::size_t t, std::size_t t1) {
  const double c0 = confusion.c0();
  const double c1 = confusion.c1();
  // log[c1^t1 (1-c1)^(t-t1)] - log[(1-c0)^t1 c0^(t-t1)]
  return (count_log(t1, c1) + count_log(t - t1, 1.0 - c1)) - (count_log(t1, 1.0 - c0) + count_log(t - t1, c0));
}

StopOutcome bias_identification(const BitSource& next, const ConfusionMatrix& confusion, double alpha,
                                const StopOptions& options) {
  check_alpha(alpha);
  if (!(confusion.c0() > 0.5 && confusion.c1() > 0.5)) {
    throw std::invalid_argument("bias_identification: confusion matrix must have both accuracies above 1/2");
  }
  double z1 = 0.0;
  return run_rule(
      next, options,
      [&](std::size_t t, std::size_t ones, double& stat, double& threshold) {
        z1 = bias_log_likelihood_ratio(confusion, t, ones);
        stat = std::abs(z1);
        threshold = chernoff_threshold(t, alpha);
        return stat > threshold;
      },
      [&](std::size_t t, std::size_t) { return z1 > chernoff_threshold(t, alpha) ? 1 : 0; });
}

StopOutcome cbs(const BitSource& next, double alpha, const StopOptions& options) {
  check_alpha(alpha);
  const double log_term = std::log(1.0 / alpha);
  return run_rule(
      next, options,
      [log_term](std::size_t t, std::size_t ones, double& stat, double& threshold) {
        const double c_hat = static_cast<double>(ones) / static_cast<double>(t);
        stat = std::abs(c_hat - 0.5);
        threshold = std::sqrt(log_term / (2.0 * static_cast<double>(t)));
        return stat > threshold;
      },
      majority_label);
}

double mle_boundary(const ConfusionMatrix& confusion) {
  if (!confusion.valid_for_algorithms()) {
    throw std::invalid_argument("mle_boundary: accuracies must lie in (1/2, 1)");
  }
  const double c0 = confusion.c0();
  const double c1 = confusion.c1();
  const double favour_one = std::log(c1 / (1.0 - c0));
  const double favour_zero = std::log(c0 / (1.0 - c1));
  return favour_one / (favour_zero + favour_one);
}

std::size_t mle_sample_size(const ConfusionMatrix& confusion, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  const double theta = mle_boundary(confusion);
  const double raw = std::log(1.0 / alpha) / kl_bernoulli(theta, confusion.c0());
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw)));
}

int mle_classify(double zero_fraction, double theta) { return zero_fraction > theta ? 0 : 1; }

void write_trace_csv(std::ostream& out, std::size_t item, const std::vector<TracePoint>& trace) {
  for (const auto& p : trace) out << fmt::format("{},{},{},{}\n", item, p.t, p.statistic, p.threshold);
}

}  // namespace crowd

#include "crowd/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace crowd {

namespace {

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

// x * log(x / y) with 0 * log(0 / y) = 0.
double xlog_ratio(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); }

double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

}  // namespace

double kl_bernoulli(double p, double q) {
  if (!in_unit_interval(p) || !in_unit_interval(q)) {
    throw std::invalid_argument(fmt::format("kl_bernoulli: arguments ({}, {}) outside [0,1]", p, q));
  }
  if (q == 0.0 || q == 1.0) {
    if (p == q) return 0.0;
    throw std::domain_error(fmt::format("kl_bernoulli: d({}, {}) is infinite", p, q));
  }
  return xlog_ratio(p, q) + xlog_ratio(1.0 - p, 1.0 - q);
}

double binary_entropy(double x) {
  if (!in_unit_interval(x)) {
    throw std::invalid_argument(fmt::format("binary_entropy: {} outside [0,1]", x));
  }
  return -xlogx(x) - xlogx(1.0 - x);
}

double kl_half_threshold(double y) {
  if (!(y >= 0.0)) throw std::invalid_argument("kl_half_threshold: y must be >= 0");
  return 0.5 * (1.0 + std::sqrt(-std::expm1(-2.0 * y)));
}

Money Money::from_units(double units) {
  if (!std::isfinite(units) || units < 0.0) {
    throw std::invalid_argument(fmt::format("price {} is not a finite non-negative amount", units));
  }
  return Money(static_cast<std::int64_t>(std::llround(units * 1e6)));
}

ConfusionMatrix::ConfusionMatrix(double c0, double c1) : c0_(c0), c1_(c1) {
  if (!in_unit_interval(c0) || !in_unit_interval(c1)) {
    throw std::invalid_argument(fmt::format("confusion diagonal ({}, {}) outside [0,1]", c0, c1));
  }
}

double ConfusionMatrix::entry(int predicted, int truth) const {
  const double c = accuracy(truth);
  return predicted == truth ? c : 1.0 - c;
}

bool ConfusionMatrix::valid_for_algorithms() const {
  return c0_ > 0.5 && c0_ < 1.0 && c1_ > 0.5 && c1_ < 1.0;
}

Prior::Prior(double w0, double w1) : w0_(w0), w1_(w1) {
  if (!in_unit_interval(w0) || !in_unit_interval(w1) || std::abs(w0 + w1 - 1.0) > 1e-9) {
    throw std::invalid_argument(fmt::format("prior ({}, {}) is not a distribution", w0, w1));
  }
}

Instance::Instance(std::vector<WorkerClass> classes, Prior prior, std::string name)
    : classes_(std::move(classes)), prior_(prior), name_(std::move(name)) {
  if (classes_.size() < 3) {
    throw std::invalid_argument(
        fmt::format("an instance needs at least 3 worker classes, got {}", classes_.size()));
  }
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (classes_[k].price <= Money{}) {
      throw std::invalid_argument(fmt::format("class {} has a non-positive price", k));
    }
  }
}

std::vector<Money> Instance::prices() const {
  std::vector<Money> out;
  out.reserve(classes_.size());
  for (const auto& c : classes_) out.push_back(c.price);
  return out;
}

namespace {

// max(1/d(c0, 1/2), 1/d(c1, 1/2)), or +inf when either accuracy is <= 1/2.
double worst_label_inverse_divergence(const ConfusionMatrix& c) {
  if (c.min_accuracy() <= 0.5) return kInf;
  return 1.0 / kl_bernoulli(c.min_accuracy(), 0.5);
}

}  // namespace

double class_score(const WorkerClass& cls) {
  return cls.price.units() * worst_label_inverse_divergence(cls.confusion);
}

ClassScore rank_scores(std::vector<double> scores) {
  if (scores.empty()) throw std::invalid_argument("optimal_class: no classes");
  ClassScore out;
  out.score = std::move(scores);
  const auto best = std::min_element(out.score.begin(), out.score.end());
  if (std::isinf(*best)) throw std::runtime_error("optimal_class: no usable class (all scores infinite)");
  out.k_star = static_cast<std::size_t>(best - out.score.begin());

  const double s_star = out.score[out.k_star];
  out.gaps.assign(out.score.size(), 0.0);
  for (std::size_t k = 0; k < out.score.size(); ++k) {
    if (k == out.k_star) continue;
    out.gaps[k] = out.score[k] - s_star;
    out.delta_min = std::min(out.delta_min, out.gaps[k]);
  }
  out.gaps[out.k_star] = out.delta_min;
  return out;
}

ClassScore optimal_class(std::span<const WorkerClass> classes) {
  std::vector<double> scores;
  scores.reserve(classes.size());
  for (const auto& c : classes) scores.push_back(class_score(c));
  return rank_scores(std::move(scores));
}

double lower_bound_log_term(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  return std::max(0.0, std::log(1.0 / (2.4 * alpha)));
}

double lower_bound_no_prior(double c_true_label, double alpha) {
  const double d = kl_bernoulli(c_true_label, 0.5);
  if (d == 0.0) throw std::domain_error("lower_bound_no_prior: c = 1/2 gives an infinite bound");
  return lower_bound_log_term(alpha) / d;
}

double lower_bound_with_prior(double c0, double c1, int true_label, double alpha) {
  if (!(c0 > 0.5 && c0 < 1.0 && c1 > 0.5 && c1 < 1.0)) {
    throw std::invalid_argument("lower_bound_with_prior: accuracies must lie in (1/2, 1)");
  }
  const double c_true = true_label == 0 ? c0 : c1;
  const double c_other = true_label == 0 ? c1 : c0;
  return lower_bound_log_term(alpha) / kl_bernoulli(c_true, 1.0 - c_other);
}

double worst_case_expected_queries(const WorkerClass& cls, double alpha) {
  return worst_label_inverse_divergence(cls.confusion) * lower_bound_log_term(alpha);
}

double p1_price(const ConfusionMatrix& confusion) {
  return std::exp(5.0 * kl_bernoulli(confusion.min_accuracy(), 0.5));
}

}  // namespace crowd

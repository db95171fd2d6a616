#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace crowd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// All divergences and entropies are in nats.

/// Bernoulli KL divergence d(p, q) with the 0 log 0 = 0 convention.
/// Throws std::domain_error when the divergence is infinite (q in {0,1}, p != q)
/// and std::invalid_argument when an argument lies outside [0,1].
double kl_bernoulli(double p, double q);

/// Binary entropy H(x); H(0) = H(1) = 0.
double binary_entropy(double x);

/// Smallest x > 1/2 with d(1/2, x) >= y, i.e. (1 + sqrt(1 - e^{-2y})) / 2.
double kl_half_threshold(double y);

/// Price per label in integer micro-units, so ledger sums are exact.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_micros(std::int64_t micros) { return Money(micros); }
  static Money from_units(double units);

  constexpr std::int64_t micros() const { return micros_; }
  double units() const { return static_cast<double>(micros_) * 1e-6; }

  constexpr Money& operator+=(Money other) {
    micros_ += other.micros_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return Money(a.micros_ + b.micros_); }
  friend constexpr Money operator-(Money a, Money b) { return Money(a.micros_ - b.micros_); }
  friend constexpr Money operator*(Money a, std::int64_t n) { return Money(a.micros_ * n); }
  friend constexpr Money operator*(std::int64_t n, Money a) { return Money(a.micros_ * n); }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

/// 2x2 column-stochastic confusion matrix stored by its diagonal.
/// entry(predicted, truth) is P(worker says `predicted` | true label `truth`).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(double c0, double c1);
  static ConfusionMatrix symmetric(double c) { return {c, c}; }

  double c0() const { return c0_; }
  double c1() const { return c1_; }
  double accuracy(int label) const { return label == 0 ? c0_ : c1_; }
  double entry(int predicted, int truth) const;
  double min_accuracy() const { return c0_ < c1_ ? c0_ : c1_; }
  bool is_symmetric() const { return c0_ == c1_; }

  /// Both diagonal entries strictly inside (1/2, 1).
  bool valid_for_algorithms() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  double c0_ = 0.5;
  double c1_ = 0.5;
};

struct WorkerClass {
  std::string name;
  Money price;
  ConfusionMatrix confusion;  // ground truth; never visible to the algorithms
};

class Prior {
 public:
  Prior() = default;
  Prior(double w0, double w1);
  static Prior uniform() { return {0.5, 0.5}; }

  double w0() const { return w0_; }
  double w1() const { return w1_; }
  double weight(int label) const { return label == 0 ? w0_ : w1_; }

 private:
  double w0_ = 0.5;
  double w1_ = 0.5;
};

/// M >= 3 priced worker classes plus the item-label prior.
class Instance {
 public:
  Instance(std::vector<WorkerClass> classes, Prior prior, std::string name = {});

  std::size_t size() const { return classes_.size(); }
  const WorkerClass& operator[](std::size_t k) const { return classes_[k]; }
  std::span<const WorkerClass> classes() const { return classes_; }
  const Prior& prior() const { return prior_; }
  const std::string& name() const { return name_; }
  std::vector<Money> prices() const;

 private:
  std::vector<WorkerClass> classes_;
  Prior prior_;
  std::string name_;
};

struct ClassScore {
  std::vector<double> score;  // +inf for classes with min accuracy <= 1/2
  std::size_t k_star = 0;
  std::vector<double> gaps;
  double delta_min = kInf;
};

/// s_k = p_k * max(1/d(c_k(0), 1/2), 1/d(c_k(1), 1/2)).
double class_score(const WorkerClass& cls);

/// Argmin of s_k; ties go to the lowest index. Throws std::runtime_error if
/// every score is infinite.
ClassScore optimal_class(std::span<const WorkerClass> classes);
inline ClassScore optimal_class(const Instance& instance) {
  return optimal_class(instance.classes());
}

/// Builds a ClassScore from precomputed scores (same tie and gap rules).
ClassScore rank_scores(std::vector<double> scores);

/// log(1/(2.4 alpha)), clamped at zero.
double lower_bound_log_term(double alpha);

/// Expected-query lower bound without knowledge of the confusion matrix.
double lower_bound_no_prior(double c_true_label, double alpha);

/// Expected-query lower bound when the confusion matrix is known.
double lower_bound_with_prior(double c0, double c1, int true_label, double alpha);

/// Worst case over priors of the no-prior bound for one class.
double worst_case_expected_queries(const WorkerClass& cls, double alpha);

/// Pricing model P1: e^{5 d(min(c0, c1), 1/2)}.
double p1_price(const ConfusionMatrix& confusion);

}  // namespace crowd

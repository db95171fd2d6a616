#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "crowd/core.hpp"
#include "crowd/sim.hpp"

namespace crowd {

/// Symmetric M x M matrix of N_ab = (agreement_fraction - 1/2) / 2. Diagonal unused.
class AgreementStats {
 public:
  explicit AgreementStats(std::size_t classes) : m_(classes), n_(classes * classes, 0.0) {}

  std::size_t classes() const { return m_; }
  double operator()(std::size_t a, std::size_t b) const { return n_[a * m_ + b]; }
  void set(std::size_t a, std::size_t b, double v) {
    n_[a * m_ + b] = v;
    n_[b * m_ + a] = v;
  }

 private:
  std::size_t m_;
  std::vector<double> n_;
};

enum class EstimationMethod { OneCoin, ThreeGroup, Injected };

std::string to_string(EstimationMethod method);

struct EstimationResult {
  std::vector<ConfusionMatrix> confusion;  // entries in [0,1]
  std::optional<Prior> prior;              // three-group method only
  EstimationMethod method = EstimationMethod::OneCoin;
};

AgreementStats pairwise_agreement(const LabelMatrix& z);

/// One-coin spectral estimate: for each class k pick the pair (a, b), both
/// different from k, maximizing |N_ab|, then
///   c_k = 1/2 + sign(N_ka) sqrt(N_ka N_kb / N_ab).
/// Throws EstimationError when the chosen |N_ab| is below 1e-9.
EstimationResult one_coin_estimate(const AgreementStats& stats);
EstimationResult one_coin_estimate(const LabelMatrix& z);

/// Replace every c by 1 - c when the mean estimate is below 1/2.
void resolve_sign(std::vector<double>& c);

/// Round-robin partition of classes into three groups (class k -> group k mod 3).
using GroupPartition = std::array<std::vector<std::size_t>, 3>;
GroupPartition round_robin_groups(std::size_t classes);

/// Moments consumed by the three-group estimator. cov holds the off-diagonal
/// central cross moments of the class outputs; group_third is
/// E[(S_a - E S_a)(S_b - E S_b)(S_c - E S_c)] for the group means S_g.
struct CrossMoments {
  std::vector<double> mean;
  std::vector<double> cov;  // M x M, row-major, diagonal unused
  double group_third = 0.0;
  GroupPartition groups;

  std::size_t classes() const { return mean.size(); }
  double covariance(std::size_t a, std::size_t b) const { return cov[a * mean.size() + b]; }
};

CrossMoments empirical_moments(const LabelMatrix& z, const GroupPartition& groups);

/// Asymmetric estimate of (c_k(0), c_k(1)) and the prior from three
/// conditionally independent group views. Exact on population moments.
/// Throws EstimationError("unidentifiable groups") when a group cross moment is
/// below 1e-9 in magnitude.
EstimationResult asym_estimate(const CrossMoments& moments);
EstimationResult asym_estimate(const LabelMatrix& z);

}  // namespace crowd

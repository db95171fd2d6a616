#include "crowd/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "crowd/errors.hpp"

namespace crowd {

namespace {

constexpr double kDenominatorFloor = 1e-9;

double sign(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

std::string to_string(EstimationMethod method) {
  switch (method) {
    case EstimationMethod::OneCoin: return "one-coin";
    case EstimationMethod::ThreeGroup: return "spectral";
    case EstimationMethod::Injected: return "injected";
  }
  return "unknown";
}

AgreementStats pairwise_agreement(const LabelMatrix& z) {
  if (z.classes() < 2 || z.items() == 0) {
    throw std::invalid_argument("pairwise_agreement: need at least 2 classes and 1 item");
  }
  AgreementStats stats(z.classes());
  const double n = static_cast<double>(z.items());
  for (std::size_t a = 0; a < z.classes(); ++a) {
    const auto ra = z.row(a);
    for (std::size_t b = a + 1; b < z.classes(); ++b) {
      const auto rb = z.row(b);
      std::size_t agree = 0;
      for (std::size_t j = 0; j < z.items(); ++j) agree += (ra[j] == rb[j]);
      stats.set(a, b, 0.5 * (static_cast<double>(agree) / n - 0.5));
    }
  }
  return stats;
}

void resolve_sign(std::vector<double>& c) {
  if (c.empty()) return;
  const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
  if (mean < 0.5) {
    for (auto& x : c) x = 1.0 - x;
  }
}

EstimationResult one_coin_estimate(const AgreementStats& stats) {
  const std::size_t m = stats.classes();
  if (m < 3) throw std::invalid_argument("one_coin_estimate: need at least 3 classes");

  std::vector<double> c(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t best_a = 0, best_b = 0;
    double best = -1.0;
    for (std::size_t a = 0; a < m; ++a) {
      if (a == k) continue;
      for (std::size_t b = a + 1; b < m; ++b) {
        if (b == k) continue;
        if (std::abs(stats(a, b)) > best) {
          best = std::abs(stats(a, b));
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best < kDenominatorFloor) {
      throw EstimationError(fmt::format("degenerate agreement structure: max |N_ab| excluding class {} is {}", k, best));
    }
    const double n_ka = stats(k, best_a);
    const double n_kb = stats(k, best_b);
    const double radicand = std::max(0.0, n_ka * n_kb / stats(best_a, best_b));
    c[k] = std::clamp(0.5 + sign(n_ka) * std::sqrt(radicand), 0.0, 1.0);
  }
  resolve_sign(c);

  EstimationResult out;
  out.method = EstimationMethod::OneCoin;
  out.confusion.reserve(m);
  for (double ck : c) out.confusion.push_back(ConfusionMatrix::symmetric(ck));
  return out;
}

EstimationResult one_coin_estimate(const LabelMatrix& z) {
  if (z.classes() < 3) throw std::invalid_argument("one_coin_estimate: need at least 3 classes");
  return one_coin_estimate(pairwise_agreement(z));
}

GroupPartition round_robin_groups(std::size_t classes) {
  GroupPartition groups;
  for (std::size_t k = 0; k < classes; ++k) groups[k % 3].push_back(k);
  return groups;
}

CrossMoments empirical_moments(const LabelMatrix& z, const GroupPartition& groups) {
  const std::size_t m = z.classes();
  const std::size_t n = z.items();
  if (n == 0) throw std::invalid_argument("empirical_moments: no items");
  const double inv_n = 1.0 / static_cast<double>(n);

  CrossMoments out;
  out.groups = groups;
  out.mean.assign(m, 0.0);
  out.cov.assign(m * m, 0.0);

  std::vector<std::size_t> ones(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto r = z.row(k);
    ones[k] = static_cast<std::size_t>(std::count(r.begin(), r.end(), std::uint8_t{1}));
    out.mean[k] = static_cast<double>(ones[k]) * inv_n;
  }
  for (std::size_t a = 0; a < m; ++a) {
    const auto ra = z.row(a);
    for (std::size_t b = a + 1; b < m; ++b) {
      const auto rb = z.row(b);
      std::size_t both = 0;
      for (std::size_t j = 0; j < n; ++j) both += (ra[j] & rb[j]);
      const double c = static_cast<double>(both) * inv_n - out.mean[a] * out.mean[b];
      out.cov[a * m + b] = c;
      out.cov[b * m + a] = c;
    }
  }

  // Third central cross moment of the three group means.
  std::array<std::vector<double>, 3> s;
  std::array<double, 3> s_mean{};
  for (int g = 0; g < 3; ++g) {
    s[g].assign(n, 0.0);
    const double w = 1.0 / static_cast<double>(groups[g].size());
    for (std::size_t k : groups[g]) {
      const auto r = z.row(k);
      for (std::size_t j = 0; j < n; ++j) s[g][j] += w * r[j];
    }
    for (std::size_t k : groups[g]) s_mean[g] += w * out.mean[k];
  }
  double t = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    t += (s[0][j] - s_mean[0]) * (s[1][j] - s_mean[1]) * (s[2][j] - s_mean[2]);
  }
  out.group_third = t * inv_n;
  return out;
}

// Binary latent label y with P(y=1) = w1. Class k outputs z_k with
// E[z_k | y] = mu_k(0) + y * delta_k, delta_k = c_k(0) + c_k(1) - 1, and the
// outputs are conditionally independent given y. With q = w0 w1 and group
// means S_g (D_g = mean delta over group g):
//   Cov(S_g, S_h)              = q D_g D_h
//   E[prod_g (S_g - E S_g)]    = q (w0 - w1) D_a D_b D_c
// so q D_g^2 = C_gh C_gi / C_hi, (w0 - w1)^2 / q = T^2 / (C_ab C_ac C_bc), and
// w0 w1 = q fixes the prior through the quadratic w^2 - w + q = 0.
EstimationResult asym_estimate(const CrossMoments& mom) {
  const std::size_t m = mom.classes();
  if (m < 3) throw std::invalid_argument("asym_estimate: need at least 3 classes (three groups)");
  for (const auto& g : mom.groups) {
    if (g.empty()) throw std::invalid_argument("asym_estimate: every group needs at least one class");
  }

  auto group_cov = [&](int g, int h) {
    double sum = 0.0;
    for (std::size_t a : mom.groups[g])
      for (std::size_t b : mom.groups[h]) sum += mom.covariance(a, b);
    return sum / static_cast<double>(mom.groups[g].size() * mom.groups[h].size());
  };
  const double c_ab = group_cov(0, 1);
  const double c_ac = group_cov(0, 2);
  const double c_bc = group_cov(1, 2);
  const double smallest = std::min({std::abs(c_ab), std::abs(c_ac), std::abs(c_bc)});
  if (smallest < kDenominatorFloor) {
    throw EstimationError(fmt::format("unidentifiable groups: smallest group cross moment is {}", smallest));
  }

  // Magnitudes only; orientation is fixed below by the c > 1/2 assumption.
  const double product = std::abs(c_ab * c_ac * c_bc);
  const double ratio = mom.group_third * mom.group_third / product;
  const double q = 1.0 / (4.0 + ratio);
  const double w_diff = sign(mom.group_third) * std::sqrt(std::max(0.0, 1.0 - 4.0 * q));
  double w0 = 0.5 * (1.0 + w_diff);
  double w1 = 0.5 * (1.0 - w_diff);

  const std::array<double, 3> d = {std::sqrt(std::abs(c_ab * c_ac / c_bc) / q),
                                   std::sqrt(std::abs(c_ab * c_bc / c_ac) / q),
                                   std::sqrt(std::abs(c_ac * c_bc / c_ab) / q)};

  std::vector<double> acc0(m), acc1(m);
  for (int g = 0; g < 3; ++g) {
    const int h = (g + 1) % 3;
    const int i = (g + 2) % 3;
    for (std::size_t k : mom.groups[g]) {
      // Cov(z_k, S_h) + Cov(z_k, S_i) = q delta_k (D_h + D_i)
      double cross = 0.0;
      for (int other : {h, i}) {
        double sum = 0.0;
        for (std::size_t l : mom.groups[other]) sum += mom.covariance(k, l);
        cross += sum / static_cast<double>(mom.groups[other].size());
      }
      const double delta = cross / (q * (d[h] + d[i]));
      const double mu0 = mom.mean[k] - w1 * delta;
      const double mu1 = mom.mean[k] + w0 * delta;
      acc0[k] = 1.0 - mu0;
      acc1[k] = mu1;
    }
  }

  // Label swap: (c(0), c(1), w0, w1) -> (1 - c(1), 1 - c(0), w1, w0).
  const double mean_diag =
      (std::accumulate(acc0.begin(), acc0.end(), 0.0) + std::accumulate(acc1.begin(), acc1.end(), 0.0)) /
      static_cast<double>(2 * m);
  if (mean_diag < 0.5) {
    for (std::size_t k = 0; k < m; ++k) {
      const double a0 = acc0[k];
      acc0[k] = 1.0 - acc1[k];
      acc1[k] = 1.0 - a0;
    }
    std::swap(w0, w1);
  }

  EstimationResult out;
  out.method = EstimationMethod::ThreeGroup;
  out.confusion.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.confusion.emplace_back(std::clamp(acc0[k], 0.0, 1.0), std::clamp(acc1[k], 0.0, 1.0));
  }
  out.prior = Prior(w0, w1);
  return out;
}

EstimationResult asym_estimate(const LabelMatrix& z) {
  if (z.classes() < 3) throw std::invalid_argument("asym_estimate: need at least 3 classes (three groups)");
  return asym_estimate(empirical_moments(z, round_robin_groups(z.classes())));
}

}  // namespace crowd

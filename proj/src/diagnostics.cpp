#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "crowd/bench.hpp"
#include "crowd/errors.hpp"

namespace crowd {

namespace {

const double kLog2 = std::log(2.0);
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Upper bound on H^{-1}(x): x / log(1/x). Defined for x in (0, 1).
double entropy_inverse_upper(double x) { return x / std::log(1.0 / x); }
// Lower bound on H^{-1}(x): x / (2 log(6/x)).
double entropy_inverse_lower(double x) { return x / (2.0 * std::log(6.0 / x)); }

Magnitude max_of(std::initializer_list<Magnitude> values) { return std::max(values); }

// W_k from W_k^{-1} = 1/d(c, 1/2) -/+ gap / (2 p_k); NaN when the inverse is not positive.
double w_value(double c, double gap, double price, bool is_star) {
  const double inv = 1.0 / kl_bernoulli(c, 0.5) + (is_star ? 1.0 : -1.0) * gap / (2.0 * price);
  return inv > 0.0 ? 1.0 / inv : kNaN;
}

void require_unique_optimum(const ClassScore& score) {
  if (!(score.delta_min > 0.0)) {
    throw EstimationError("diagnostics: the optimal class is not unique (zero sub-optimality gap)");
  }
}

}  // namespace

Magnitude Magnitude::from_power(double base, double exponent) {
  if (!(base > 0.0)) throw std::invalid_argument("Magnitude::from_power: base must be positive");
  return {exponent * std::log10(base)};
}

Magnitude Magnitude::unbounded() { return {std::numeric_limits<double>::infinity()}; }

bool Magnitude::bounded() const { return std::isfinite(log10); }

double Magnitude::value() const { return std::pow(10.0, log10); }

std::string Magnitude::to_string() const {
  if (!bounded()) return "unbounded";
  const double v = value();
  if (std::isinf(v)) {
    const double exponent = std::floor(log10);
    return fmt::format("{:.3f}e+{} (overflow)", std::pow(10.0, log10 - exponent), exponent);
  }
  return fmt::format("{:.6g}", v);
}

double SymDiagnostics::misid_bound(double n) const {
  const double m = static_cast<double>(classes);
  return m * m * std::exp(-std::pow(n, 1.0 - 2.0 * gamma) / 2.0);
}

SymDiagnostics n0_sym(const Instance& instance, double gamma) {
  if (!(gamma > 0.0 && gamma < 0.5)) throw std::invalid_argument("n0_sym: gamma must lie in (0, 1/2)");
  for (const auto& c : instance.classes()) {
    if (!c.confusion.is_symmetric()) throw std::invalid_argument("n0_sym: instance is not symmetric");
  }
  const std::size_t m = instance.size();
  const ClassScore score = optimal_class(instance);
  require_unique_optimum(score);

  SymDiagnostics out;
  out.gamma = gamma;
  out.classes = m;
  out.k_star = score.k_star;

  std::vector<double> excess(m);
  for (std::size_t k = 0; k < m; ++k) excess[k] = instance[k].confusion.c0() - 0.5;
  double sum = 0.0;
  for (double e : excess) sum += e;
  out.kappa_bar = sum / static_cast<double>(m);
  std::vector<double> sorted = excess;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  out.kappa3 = sorted[2];

  const double inv_gamma = 1.0 / gamma;
  const double kappa3_cubed = out.kappa3 * out.kappa3 * out.kappa3;
  auto requirement = [&](double denominator_factor) {
    // (18 / (kappa3^3 * factor))^{1/gamma}; unsatisfiable when the factor is not positive.
    if (!(kappa3_cubed > 0.0 && denominator_factor > 0.0)) return Magnitude::unbounded();
    return Magnitude::from_power(18.0 / (kappa3_cubed * denominator_factor), inv_gamma);
  };

  out.k1 = (out.kappa_bar > 0.0) ? requirement(out.kappa_bar) : Magnitude::unbounded();

  out.w.assign(m, kNaN);
  out.w_valid.assign(m, false);
  out.k3_valid.assign(m, false);
  for (std::size_t k = 0; k < m; ++k) {
    out.w[k] = w_value(instance[k].confusion.c0(), score.gaps[k], instance[k].price.units(), k == score.k_star);
    out.w_valid[k] = !std::isnan(out.w[k]);
  }

  // Entropy-bound arguments need log 2 - W in (0, 1).
  auto entropy_arg = [&](std::size_t k) { return out.w_valid[k] ? kLog2 - out.w[k] : kNaN; };

  {
    const std::size_t k = score.k_star;
    const double x = entropy_arg(k);
    out.k2 = (x > 0.0 && x < 1.0) ? requirement(instance[k].confusion.c0() - entropy_inverse_upper(x))
                                   : Magnitude::unbounded();
  }

  out.k3 = Magnitude{-std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < m; ++k) {
    if (k == score.k_star) continue;
    const double x = entropy_arg(k);
    Magnitude term = Magnitude::unbounded();
    if (x > 0.0 && x < 1.0) {
      term = requirement(entropy_inverse_lower(x) - instance[k].confusion.c0());
      out.k3_valid[k] = term.bounded();
    }
    out.k3 = std::max(out.k3, term);
  }

  out.n0 = max_of({out.k1, out.k2, out.k3});
  return out;
}

double AsymDiagnostics::misid_bound(double n) const {
  return (48.0 + static_cast<double>(classes)) * std::exp(1.0 - std::pow(n, gamma_a));
}

double smallest_singular_value_2x2(double a, double b, double c, double d) {
  const double frob2 = a * a + b * b + c * c + d * d;
  const double det = std::abs(a * d - b * c);
  if (frob2 == 0.0) return 0.0;
  const double disc = std::sqrt(std::max(0.0, frob2 * frob2 - 4.0 * det * det));
  const double sigma_max = std::sqrt(0.5 * (frob2 + disc));
  return det / sigma_max;
}

double sigma_l(const Instance& instance) {
  const double w0 = instance.prior().w0();
  const double w1 = instance.prior().w1();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < instance.size(); ++a) {
    for (std::size_t b = 0; b < instance.size(); ++b) {
      if (a == b) continue;
      // C[predicted][truth]
      auto entry = [&](std::size_t k, int predicted, int truth) {
        return instance[k].confusion.entry(predicted, truth);
      };
      double p[2][2];
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          p[i][j] = entry(a, i, 0) * w0 * entry(b, j, 0) + entry(a, i, 1) * w1 * entry(b, j, 1);
        }
      }
      best = std::min(best, smallest_singular_value_2x2(p[0][0], p[0][1], p[1][0], p[1][1]));
    }
  }
  return best;
}

AsymDiagnostics n0_asym(const Instance& instance, double gamma_a, double gamma_b) {
  if (!(gamma_a > 0.0 && gamma_a < 1.0 && gamma_b > 0.0 && gamma_b < 1.0)) {
    throw std::invalid_argument("n0_asym: gamma_a and gamma_b must lie in (0, 1)");
  }
  if (gamma_a + 2.0 * gamma_b > 1.0) throw std::invalid_argument("n0_asym: need gamma_a + 2 gamma_b <= 1");

  const std::size_t m = instance.size();
  const ClassScore score = optimal_class(instance);
  require_unique_optimum(score);

  AsymDiagnostics out;
  out.gamma_a = gamma_a;
  out.gamma_b = gamma_b;
  out.classes = m;
  out.k_star = score.k_star;
  out.w_min = std::min(instance.prior().w0(), instance.prior().w1());
  out.kappa = std::numeric_limits<double>::infinity();
  for (const auto& c : instance.classes()) {
    out.kappa = std::min({out.kappa, 2.0 * c.confusion.c0() - 1.0, 2.0 * c.confusion.c1() - 1.0});
  }
  out.sigma_l = sigma_l(instance);
  if (!(out.sigma_l > 0.0)) throw EstimationError("n0_asym: sigma_L = 0 (singular C_a W C_b^T)");

  // K1 = ((72*31*230)^2 * 2^5 / (w_min^2 sigma_L^13))^{1/(1 - gamma_a - 2 gamma_b)}, in log10.
  const double exponent_gap = 1.0 - gamma_a - 2.0 * gamma_b;
  const double log10_base = 2.0 * std::log10(72.0 * 31.0 * 230.0) + 5.0 * std::log10(2.0) -
                            2.0 * std::log10(out.w_min) - 13.0 * std::log10(out.sigma_l);
  if (exponent_gap <= 0.0) {
    out.k1 = log10_base > 0.0 ? Magnitude::unbounded() : Magnitude{0.0};
  } else {
    out.k1 = Magnitude{log10_base / exponent_gap};
  }

  const double inv_gb = 1.0 / gamma_b;
  out.k2 = (out.kappa > 0.0 && out.w_min > 0.0) ? Magnitude::from_power(out.w_min * out.sigma_l / (72.0 * out.kappa), inv_gb)
                                                : Magnitude::unbounded();

  // base^{-1/gamma_b}; unsatisfiable when base <= 0.
  auto requirement = [&](double base) {
    return base > 0.0 ? Magnitude::from_power(base, -inv_gb) : Magnitude::unbounded();
  };

  out.weakest_label.assign(m, 0);
  out.w.assign(m, kNaN);
  out.w_valid.assign(m, false);
  out.k4_valid.assign(m, false);
  out.k5_valid.assign(m, false);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& c = instance[k].confusion;
    out.weakest_label[k] = c.c0() <= c.c1() ? 0 : 1;
    out.w[k] = w_value(c.min_accuracy(), score.gaps[k], instance[k].price.units(), k == score.k_star);
    out.w_valid[k] = !std::isnan(out.w[k]);
  }
  auto entropy_arg = [&](std::size_t k) { return out.w_valid[k] ? kLog2 - out.w[k] : kNaN; };

  {
    const std::size_t k = score.k_star;
    const double x = entropy_arg(k);
    out.k3 = (x > 0.0 && x < 1.0) ? requirement(instance[k].confusion.min_accuracy() - entropy_inverse_upper(x))
                                   : Magnitude::unbounded();
  }

  const Magnitude none{-std::numeric_limits<double>::infinity()};
  out.k4 = none;
  out.k5 = none;
  for (std::size_t k = 0; k < m; ++k) {
    if (k == score.k_star) continue;
    const auto& c = instance[k].confusion;
    const double x = entropy_arg(k);
    Magnitude k4_term = Magnitude::unbounded();
    if (x > 0.0 && x < 1.0) {
      k4_term = requirement(entropy_inverse_lower(x) - c.min_accuracy());
      out.k4_valid[k] = k4_term.bounded();
    }
    out.k4 = std::max(out.k4, k4_term);

    const Magnitude k5_term = requirement(std::abs(c.c0() - c.c1()) / 2.0);
    out.k5_valid[k] = k5_term.bounded();
    out.k5 = std::max(out.k5, k5_term);
  }

  out.n0 = max_of({out.k1, out.k2, out.k3, out.k4, out.k5});
  return out;
}

}  // namespace crowd

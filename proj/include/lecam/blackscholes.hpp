#pragma once

// The Gaussian limit model: deterministic piecewise-constant volatility and
// rate, whose pricing experiment is the binary normal shift N(-v/2, v) vs N(v/2, v).

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "lecam/errors.hpp"
#include "lecam/payoff.hpp"

namespace lecam {

/// Right-continuous step function on [0, T]: value pieces[i].second from pieces[i].first on.
class PiecewiseConstant {
 public:
  PiecewiseConstant() : PiecewiseConstant(0.0) {}
  explicit PiecewiseConstant(double value) : pieces_{{0.0, value}} {}
  explicit PiecewiseConstant(std::vector<std::pair<double, double>> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw InvalidParams("piecewise function needs at least one piece");
    if (pieces_.front().first != 0.0) throw InvalidParams("first piece must start at t = 0");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (!std::isfinite(pieces_[i].second)) throw InvalidParams("piece values must be finite");
      if (i > 0 && !(pieces_[i].first > pieces_[i - 1].first))
        throw InvalidParams("piece start times must increase");
    }
  }

  static PiecewiseConstant constant(double value) { return PiecewiseConstant(value); }

  const std::vector<std::pair<double, double>>& pieces() const { return pieces_; }

  double operator()(double t) const {
    double v = pieces_.front().second;
    for (const auto& [start, value] : pieces_) {
      if (start > t) break;
      v = value;
    }
    return v;
  }

  /// Integral of f(value) over [a, b].
  template <class F>
  double integrate(double a, double b, F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const double lo = std::max(a, pieces_[i].first);
      const double hi = i + 1 < pieces_.size() ? std::min(b, pieces_[i + 1].first) : b;
      if (hi > lo) sum += (hi - lo) * f(pieces_[i].second);
    }
    return sum;
  }
  double integral(double a, double b) const {
    return integrate(a, b, [](double v) { return v; });
  }
  double integral_of_square(double a, double b) const {
    return integrate(a, b, [](double v) { return v * v; });
  }

  /// Breakpoints strictly inside (a, b).
  std::vector<double> breaks(double a, double b) const {
    std::vector<double> out;
    for (const auto& p : pieces_)
      if (p.first > a && p.first < b) out.push_back(p.first);
    return out;
  }

 private:
  std::vector<std::pair<double, double>> pieces_;
};

struct BSModel {
  double s0 = 1.0;
  double horizon = 1.0;
  PiecewiseConstant sigma;
  PiecewiseConstant rate;

  void validate() const {
    if (!(s0 > 0.0)) throw InvalidParams("s0 must be positive");
    if (!(horizon > 0.0)) throw InvalidParams("horizon must be positive");
    if (!(total_variance() > 0.0)) throw InvalidParams("integrated variance must be positive");
  }
  double total_variance() const { return sigma.integral_of_square(0.0, horizon); }
  double integrated_rate() const { return rate.integral(0.0, horizon); }
  double discount() const { return std::exp(-integrated_rate()); }
};

/// Standard normal distribution function, through the complementary error function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Phi(b) - Phi(a) for a <= b, evaluated on the tail that keeps precision.
inline double normal_mass(double a, double b) {
  if (a >= 0.0) return normal_cdf(-a) - normal_cdf(-b);
  return normal_cdf(b) - normal_cdf(a);
}

/// Binary experiment of the log likelihood ratio L = log dQ1/dQ with total variance v.
struct GaussianBinaryExperiment {
  double v;

  explicit GaussianBinaryExperiment(double variance) : v(variance) {
    if (!(v > 0.0)) throw InvalidParams("variance must be positive");
  }
  double sd() const { return std::sqrt(v); }
  double mean_q() const { return -0.5 * v; }
  double mean_q1() const { return 0.5 * v; }

  /// Probability of a < L < b under Q.
  double mass_q(double a, double b) const { return normal_mass((a - mean_q()) / sd(), (b - mean_q()) / sd()); }
  /// Probability of a < L < b under Q1.
  double mass_q1(double a, double b) const {
    return normal_mass((a - mean_q1()) / sd(), (b - mean_q1()) / sd());
  }
  /// Powers of the Neyman-Pearson test 1{dQ1/dQ > c}: (E_Q1, E_Q).
  std::pair<double, double> np_powers(double c) const {
    if (!(c > 0.0)) return {1.0, 1.0};
    const double l = std::log(c);
    return {normal_cdf((-l + 0.5 * v) / sd()), normal_cdf((-l - 0.5 * v) / sd())};
  }
};

inline double bs_call_price(const BSModel& model, double k) {
  model.validate();
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidParams("strike must be positive");
  const double v = model.total_variance();
  const double sv = std::sqrt(v);
  const double x = (std::log(k / model.s0) - model.integrated_rate() + 0.5 * v) / sv;
  return model.s0 * normal_cdf(-x + sv) - model.discount() * k * normal_cdf(-x);
}

/// Call price as test powers of the Neyman-Pearson test in the Gaussian experiment.
inline PriceReport limit_price_via_np(const BSModel& model, double k) {
  model.validate();
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidParams("strike must be positive");
  const GaussianBinaryExperiment exp(model.total_variance());
  const double c = k / model.s0 * model.discount();
  const auto [p1, p0] = exp.np_powers(c);
  return PriceReport::assemble(model.s0, model.discount(), {{1.0, k, p1, p0}});
}

/// Price of a payoff whose legs test the terminal price only. S_T equals
/// s0 exp(int r) dQ1/dQ, so every cut in S_T is a cut in the log likelihood ratio.
inline PriceReport limit_price_terminal(const BSModel& model, const Payoff& payoff) {
  model.validate();
  if (payoff.path_dependent()) throw UnsupportedTest("limit pricing needs a test of the terminal price");
  const GaussianBinaryExperiment exp(model.total_variance());
  const double forward = model.s0 / model.discount();
  std::vector<TermPowers> powers;
  for (const auto& term : payoff.terms) {
    const auto& test = term.test;
    test.validate();
    std::vector<double> edges{-std::numeric_limits<double>::infinity()};
    for (double cut : test.cuts)
      edges.push_back(cut > 0.0 ? std::log(cut / forward) : -std::numeric_limits<double>::infinity());
    edges.push_back(std::numeric_limits<double>::infinity());
    double p1 = 0.0, p0 = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      if (!(edges[i + 1] > edges[i]) || test.levels[i] == 0.0) continue;
      p1 += test.levels[i] * exp.mass_q1(edges[i], edges[i + 1]);
      p0 += test.levels[i] * exp.mass_q(edges[i], edges[i + 1]);
    }
    powers.push_back({term.coefficient, term.strike, p1, p0});
  }
  return PriceReport::assemble(model.s0, model.discount(), std::move(powers));
}

}  // namespace lecam

#pragma once

// Payoffs of the form H = sum_j (a_j S_T - K_j) * phi_j(path), with each phi_j a
// [0,1]-valued test on the price path. Every standard vanilla fits this shape:
// puts carry a = -1 and strike -K, digitals a = 0 and strike -1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lecam/errors.hpp"

namespace lecam {

/// Piecewise-constant test of the terminal price.
struct TerminalTest {
  std::vector<double> cuts;    // strictly increasing
  std::vector<double> levels;  // value on each open interval, cuts.size() + 1 entries
  std::vector<double> at_cut;  // value exactly at each cut

  /// Relative band around a cut inside which a price counts as sitting on it.
  static constexpr double kCutTol = 1e-12;

  static TerminalTest always() { return {{}, {1.0}, {}}; }
  static TerminalTest above(double k) { return {{k}, {0.0, 1.0}, {0.0}}; }
  static TerminalTest below(double k) { return {{k}, {1.0, 0.0}, {0.0}}; }

  double operator()(double s) const {
    std::size_t i = 0;
    for (; i < cuts.size(); ++i) {
      if (std::abs(s - cuts[i]) <= kCutTol * std::max(1.0, std::abs(cuts[i]))) return at_cut[i];
      if (s < cuts[i]) break;
    }
    return levels[i];
  }

  void validate() const {
    if (levels.size() != cuts.size() + 1 || at_cut.size() != cuts.size())
      throw InvalidParams("terminal test has inconsistent pieces");
    for (std::size_t i = 1; i < cuts.size(); ++i)
      if (!(cuts[i] > cuts[i - 1])) throw InvalidParams("terminal test cuts must increase");
    for (const auto* vs : {&levels, &at_cut})
      for (double v : *vs)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidParams("test values must lie in [0,1]");
  }
};

struct PayoffTerm {
  double coefficient = 1.0;  // a
  double strike = 0.0;       // K
  TerminalTest test = TerminalTest::always();
  // Knocked out unless the discretely monitored running maximum stays strictly below it.
  double up_out_barrier = std::numeric_limits<double>::infinity();

  bool path_dependent() const { return std::isfinite(up_out_barrier); }

  double test_value(double terminal, double running_max) const {
    if (running_max >= up_out_barrier) return 0.0;
    return test(terminal);
  }
  double value(double terminal, double running_max) const {
    return (coefficient * terminal - strike) * test_value(terminal, running_max);
  }
};

struct Payoff {
  std::string kind;  // "call", "put", ... or "sum"
  std::vector<PayoffTerm> terms;

  bool path_dependent() const {
    for (const auto& t : terms)
      if (t.path_dependent()) return true;
    return false;
  }
  double value(double terminal, double running_max) const {
    double h = 0.0;
    for (const auto& t : terms) h += t.value(terminal, running_max);
    return h;
  }
  /// True for a plain European call: one leg (S_T - K) 1{S_T > K} without barrier.
  bool is_call() const {
    if (terms.size() != 1) return false;
    const auto& t = terms.front();
    return kind == "call" && t.coefficient == 1.0 && !t.path_dependent() && t.test.cuts.size() == 1 &&
           t.test.cuts.front() == t.strike;
  }
};

inline Payoff operator+(Payoff a, const Payoff& b) {
  a.kind = "sum";
  a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
  return a;
}

namespace detail {
inline void require_strike(double k) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidParams("strike must be a finite nonnegative number");
}
}  // namespace detail

inline Payoff payoff_european_call(double k) {
  detail::require_strike(k);
  return {"call", {PayoffTerm{1.0, k, TerminalTest::above(k)}}};
}

inline Payoff payoff_european_put(double k) {
  detail::require_strike(k);
  return {"put", {PayoffTerm{-1.0, -k, TerminalTest::below(k)}}};
}

inline Payoff payoff_straddle(double k) {
  Payoff p = payoff_european_call(k) + payoff_european_put(k);
  p.kind = "straddle";
  return p;
}

inline Payoff payoff_strangle(double k1, double k2) {
  if (!(k1 <= k2)) throw InvalidParams("strangle requires K1 <= K2");
  Payoff p = payoff_european_put(k1) + payoff_european_call(k2);
  p.kind = "strangle";
  return p;
}

/// Pays 1 when S_T > K.
inline Payoff payoff_digital(double k) {
  detail::require_strike(k);
  return {"digital", {PayoffTerm{0.0, -1.0, TerminalTest::above(k)}}};
}

inline Payoff payoff_barrier_up_out(double k, double barrier) {
  detail::require_strike(k);
  if (!(barrier > 0.0)) throw InvalidParams("barrier must be positive");
  return {"barrier_up_out", {PayoffTerm{1.0, k, TerminalTest::above(k), barrier}}};
}

// ---------------------------------------------------------------------------

/// Powers of one leg's test under the forward measure Q1 and the pricing measure Q.
struct TermPowers {
  double coefficient;
  double strike;
  double power_q1;  // E_{Q1}(phi)
  double power_q;   // E_Q(phi)
};

/// A price assembled from test powers: sum_j a_j s0 E_{Q1}(phi_j) - discount K_j E_Q(phi_j).
struct PriceReport {
  double price = 0.0;
  double s0 = 0.0;
  double discount = 1.0;
  std::vector<TermPowers> terms;

  static PriceReport assemble(double s0, double discount, std::vector<TermPowers> terms) {
    PriceReport r{0.0, s0, discount, std::move(terms)};
    for (const auto& t : r.terms) r.price += t.coefficient * s0 * t.power_q1 - discount * t.strike * t.power_q;
    return r;
  }
};

}  // namespace lecam

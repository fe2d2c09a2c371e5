#pragma once

// Option prices on lattice markets, computed two ways: as the discounted
// expectation of the payoff, and as a linear combination of test powers on the
// induced financial experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "lecam/detail/numeric.hpp"
#include "lecam/errors.hpp"
#include "lecam/experiment.hpp"
#include "lecam/lattice_market.hpp"
#include "lecam/payoff.hpp"

namespace lecam {

namespace detail {

/// Calls fn(x_T, running_max_S, q_prob) for every path, depth first.
template <class Fn>
void for_each_path(const LatticeMarket& m, const MartingaleMeasure& q, Fn&& fn) {
  std::vector<double> bond(m.steps() + 1);
  for (std::size_t t = 0; t <= m.steps(); ++t) bond[t] = m.bond(t);
  auto rec = [&](auto&& self, std::size_t j, double x, double prob, double running_max) -> void {
    if (j == m.steps()) {
      fn(x, running_max, prob);
      return;
    }
    const auto& ret = m.step(j).returns;
    for (std::size_t k = 0; k < ret.size(); ++k) {
      const double nx = x * ret[k];
      self(self, j + 1, nx, prob * q.steps[j][k], std::max(running_max, m.s0() * bond[j + 1] * nx));
    }
  };
  rec(rec, 0, 1.0, 1.0, m.s0());
}

}  // namespace detail

/// E_Q[H / B_T]: recombining aggregation for terminal payoffs, path enumeration otherwise.
inline double price_direct(const LatticeMarket& m, const MartingaleMeasure& q, const Payoff& payoff,
                           std::uint64_t cap = limits::max_paths()) {
  check_measure_shape(m, q);
  const double growth = m.bond(m.steps());
  detail::CompensatedSum sum;
  if (!payoff.path_dependent()) {
    for (const auto& a : terminal_law(m, q)) {
      const double s = m.s0() * growth * a.x;
      sum += a.q * payoff.value(s, s);
    }
  } else {
    check_path_cap(m, cap);
    detail::for_each_path(m, q, [&](double x, double running_max, double prob) {
      sum += prob * payoff.value(m.s0() * growth * x, running_max);
    });
  }
  return sum.value() / growth;
}

/// Price assembled from the powers E_{Q1}(phi_j), E_Q(phi_j) of each leg's test on the
/// induced path experiment. Lattices beyond the path cap fall back to the experiment of
/// the terminal value, which is sufficient for terminal payoffs.
inline PriceReport price_via_tests(const LatticeMarket& m, const MartingaleMeasure& q,
                                   const Payoff& payoff, std::uint64_t cap = limits::max_paths()) {
  check_measure_shape(m, q);
  const double growth = m.bond(m.steps());
  std::vector<TermPowers> powers;

  if (m.n_paths() <= cap) {
    const auto exp = induced_experiment(m, q, cap);
    const auto x = discounted_likelihood_process(m, cap);
    // Running maximum of S along every path.
    std::vector<double> run{m.s0()};
    for (std::size_t t = 1; t <= m.steps(); ++t) {
      const std::size_t k = m.support(t - 1);
      std::vector<double> next(x[t].size());
      for (std::size_t w = 0; w < next.size(); ++w)
        next[w] = std::max(run[w / k], m.s0() * m.bond(t) * x[t][w]);
      run = std::move(next);
    }
    for (const auto& term : payoff.terms) {
      std::vector<double> phi(exp.size());
      for (std::size_t w = 0; w < phi.size(); ++w)
        phi[w] = term.test_value(m.s0() * growth * x.back()[w], run[w]);
      const Test test(std::move(phi));
      powers.push_back({term.coefficient, term.strike, power(test, exp, "Q1"), power(test, exp, "Q")});
    }
  } else {
    if (payoff.path_dependent()) throw SizeLimitExceeded("path-dependent payoff beyond the path cap");
    const auto law = terminal_law(m, q);
    for (const auto& term : payoff.terms) {
      detail::CompensatedSum p1, p0;
      for (const auto& a : law) {
        const double s = m.s0() * growth * a.x;
        const double phi = term.test_value(s, s);
        p1 += a.q * a.x * phi;
        p0 += a.q * phi;
      }
      powers.push_back({term.coefficient, term.strike, p1.value(), p0.value()});
    }
  }
  return PriceReport::assemble(m.s0(), 1.0 / growth, std::move(powers));
}

/// A European call read as a Neyman-Pearson test of Q against Q1.
struct NPDecomposition {
  double cutoff;           // c = (K / s0) * discount
  Test test;               // 1{dQ1/dQ > c}
  BinaryPriors priors;     // (c/(1+c), 1/(1+c))
  double bayes_risk;       // from the experiment
  double closed_form_risk; // (s0 - p) / (s0 + K * discount)
  double price;
};

inline NPDecomposition np_decomposition(const LatticeMarket& m, const MartingaleMeasure& q,
                                        const Payoff& payoff, std::uint64_t cap = limits::max_paths()) {
  if (!payoff.is_call()) throw NotACall("Neyman-Pearson decomposition needs a plain European call");
  const double k = payoff.terms.front().strike;
  const double disc = m.discount();
  const double c = k / m.s0() * disc;
  const auto exp = induced_experiment(m, q, cap);
  Test phi = neyman_pearson(exp, "Q", "Q1", c, 0.0);
  const BinaryPriors priors = BinaryPriors::from_cutoff(c);
  const double risk = lecam::bayes_risk(exp, "Q", "Q1", phi, priors);
  const double p = price_via_tests(m, q, payoff, cap).price;
  const double closed = (m.s0() - p) / (m.s0() + k * disc);
  return {c, std::move(phi), priors, risk, closed, p};
}

/// Price at an observed node, through the complementary market and the updated test.
inline PriceReport dynamic_price_report(const LatticeMarket& m, const MartingaleMeasure& q,
                                        const Payoff& payoff, const PathState& state,
                                        std::uint64_t cap = limits::max_paths()) {
  if (payoff.path_dependent())
    throw PathDependenceUnsupported("dynamic prices need a payoff of the terminal value only");
  check_state(m, state);
  if (state.t() == m.steps()) {
    const double s = spot_at(m, state);
    std::vector<TermPowers> powers;
    for (const auto& term : payoff.terms) {
      const double phi = term.test_value(s, s);
      powers.push_back({term.coefficient, term.strike, phi, phi});
    }
    return PriceReport::assemble(s, 1.0, std::move(powers));
  }
  return price_via_tests(complementary_market(m, q, state), q.tail(state.t()), payoff, cap);
}

inline double dynamic_price(const LatticeMarket& m, const MartingaleMeasure& q, const Payoff& payoff,
                            const PathState& state, std::uint64_t cap = limits::max_paths()) {
  return dynamic_price_report(m, q, payoff, state, cap).price;
}

struct PriceBounds {
  double lower;
  double upper;
  MartingaleMeasure argmin;
  MartingaleMeasure argmax;
};

/// Range of prices over product martingale measures: the price is affine in each step's
/// measure, so the extremes sit at per-step vertex choices. Steps with identical returns
/// are exchangeable for terminal payoffs, so only vertex multiplicities are enumerated.
inline PriceBounds price_bounds(const LatticeMarket& m, const Payoff& payoff,
                                std::uint64_t max_combinations = limits::max_paths()) {
  if (payoff.path_dependent())
    throw PathDependenceUnsupported("price bounds need a payoff of the terminal value only");
  const auto set = solve_martingale_measures(m);

  // Group steps sharing the same return vector.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < m.steps(); ++j) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return m.step(g.front()).returns == m.step(j).returns;
    });
    if (it == groups.end()) {
      groups.push_back({j});
    } else {
      it->push_back(j);
    }
  }
  double combos = 1.0;
  for (const auto& g : groups)
    combos *= detail::count_vectors(g.size(), set.steps[g.front()].vertices.size());
  if (combos > static_cast<double>(max_combinations))
    throw SizeLimitExceeded("vertex combinations exceed the cap");

  PriceBounds best{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), {}, {}};
  MartingaleMeasure q{std::vector<std::vector<double>>(m.steps())};

  // Assign vertices to the steps of group gi in non-decreasing vertex order.
  auto rec = [&](auto&& self, std::size_t gi, std::size_t pos, std::size_t min_vertex) -> void {
    if (gi == groups.size()) {
      const double p = price_direct(m, q, payoff);
      if (p < best.lower) {
        best.lower = p;
        best.argmin = q;
      }
      if (p > best.upper) {
        best.upper = p;
        best.argmax = q;
      }
      return;
    }
    const auto& g = groups[gi];
    if (pos == g.size()) {
      self(self, gi + 1, 0, 0);
      return;
    }
    const auto& vertices = set.steps[g[pos]].vertices;
    for (std::size_t v = min_vertex; v < vertices.size(); ++v) {
      q.steps[g[pos]] = vertices[v];
      self(self, gi, pos + 1, v);
    }
  };
  rec(rec, 0, 0, 0);
  return best;
}

}  // namespace lecam

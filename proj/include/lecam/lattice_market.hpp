#pragma once

// Discrete-time single-asset markets on product lattices. Per-step discounted
// gross returns are independent across steps; the normalized discounted price
// X_t / X_0 is the product of the realized returns and, under any martingale
// measure Q, equals the filtered likelihood ratio dQ_1|F_t / dQ|F_t.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lecam/detail/lattice_law.hpp"
#include "lecam/detail/numeric.hpp"
#include "lecam/errors.hpp"
#include "lecam/experiment.hpp"

namespace lecam {

/// One period: discounted gross returns with their real-world probabilities.
struct StepDistribution {
  std::vector<double> returns;
  std::vector<double> probs;
  std::vector<std::string> labels;  // filled with u/m/d (by rank) or indices when empty
};

namespace detail {

inline std::vector<std::string> default_labels(const std::vector<double>& returns) {
  const std::size_t k = returns.size();
  std::vector<std::string> labels(k);
  if (k == 2 || k == 3) {
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return returns[a] > returns[b]; });
    const bool distinct = returns[order.front()] > returns[order[1]] &&
                          returns[order[k - 2]] > returns[order.back()];
    if (distinct) {
      labels[order.front()] = "u";
      labels[order.back()] = "d";
      if (k == 3) labels[order[1]] = "m";
      return labels;
    }
  }
  for (std::size_t i = 0; i < k; ++i) labels[i] = std::to_string(i);
  return labels;
}

}  // namespace detail

class LatticeMarket {
 public:
  LatticeMarket(double s0, double horizon, std::vector<StepDistribution> steps,
                std::vector<double> bond_rates)
      : s0_(s0), horizon_(horizon), steps_(std::move(steps)), bond_rates_(std::move(bond_rates)) {
    if (!(s0_ > 0.0)) throw InvalidParams("initial price must be positive");
    if (!(horizon_ > 0.0)) throw InvalidParams("horizon must be positive");
    if (steps_.empty()) throw InvalidParams("market needs at least one step");
    if (bond_rates_.size() != steps_.size()) throw InvalidParams("one bond rate per step required");
    for (double r : bond_rates_)
      if (!(r >= 0.0)) throw InvalidParams("bond rates must be nonnegative");
    for (auto& s : steps_) {
      if (s.returns.empty() || s.returns.size() != s.probs.size())
        throw InvalidParams("step needs matching returns and probabilities");
      for (double v : s.returns)
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParams("returns must be strictly positive");
      for (double p : s.probs)
        if (!(p > 0.0)) throw InvalidParams("real-world probabilities must be strictly positive");
      if (std::abs(detail::accurate_sum(s.probs) - 1.0) > kExactTol)
        throw InvalidParams("real-world probabilities must sum to 1");
      if (s.labels.empty()) s.labels = detail::default_labels(s.returns);
      if (s.labels.size() != s.returns.size()) throw InvalidParams("one label per return required");
    }
  }

  /// Builds a market from undiscounted gross returns, discounting each step by its bond rate.
  static LatticeMarket iid(const std::vector<double>& gross_returns, const std::vector<double>& probs,
                           const std::vector<double>& bond_rates, double s0, double horizon) {
    std::vector<StepDistribution> steps;
    for (double r : bond_rates) {
      StepDistribution s;
      for (double v : gross_returns) s.returns.push_back(v / (1.0 + r));
      s.probs = probs;
      steps.push_back(std::move(s));
    }
    return LatticeMarket(s0, horizon, std::move(steps), bond_rates);
  }

  std::size_t steps() const { return steps_.size(); }
  double horizon() const { return horizon_; }
  double s0() const { return s0_; }
  const StepDistribution& step(std::size_t j) const { return steps_.at(j); }
  const std::vector<StepDistribution>& step_laws() const { return steps_; }
  const std::vector<double>& bond_rates() const { return bond_rates_; }
  std::size_t support(std::size_t j) const { return steps_.at(j).returns.size(); }

  /// Bond value at grid time t (bond starts at 1).
  double bond(std::size_t t) const {
    double b = 1.0;
    for (std::size_t j = 0; j < t; ++j) b *= 1.0 + bond_rates_[j];
    return b;
  }
  double discount() const { return 1.0 / bond(steps()); }

  /// Number of paths from step `from` to the end; saturates at UINT64_MAX.
  std::uint64_t n_paths(std::size_t from = 0) const {
    std::uint64_t n = 1;
    for (std::size_t j = from; j < steps(); ++j) {
      const std::uint64_t k = support(j);
      if (n > UINT64_MAX / k) return UINT64_MAX;
      n *= k;
    }
    return n;
  }

 private:
  double s0_;
  double horizon_;
  std::vector<StepDistribution> steps_;
  std::vector<double> bond_rates_;
};

inline LatticeMarket build_crr(double u, double d, double r, double p, std::size_t n, double s0,
                               double horizon = 1.0) {
  if (!(u > d && d > 0.0)) throw InvalidParams("CRR requires u > d > 0");
  if (!(r >= 1.0)) throw InvalidParams("CRR requires a gross bond factor r >= 1");
  if (!(p > 0.0 && p < 1.0)) throw InvalidParams("CRR requires 0 < p < 1");
  if (n == 0) throw InvalidParams("CRR requires N >= 1");
  if (!(s0 > 0.0)) throw InvalidParams("CRR requires s0 > 0");
  std::vector<StepDistribution> steps(n, StepDistribution{{u / r, d / r}, {p, 1.0 - p}, {"u", "d"}});
  return LatticeMarket(s0, horizon, std::move(steps), std::vector<double>(n, r - 1.0));
}

// ---------------------------------------------------------------------------
// Martingale measures

/// A product measure on the lattice: one probability vector per step.
struct MartingaleMeasure {
  std::vector<std::vector<double>> steps;

  static MartingaleMeasure iid(const std::vector<double>& q, std::size_t n) {
    return {std::vector<std::vector<double>>(n, q)};
  }
  MartingaleMeasure tail(std::size_t t) const {
    return {std::vector<std::vector<double>>(steps.begin() + static_cast<std::ptrdiff_t>(t), steps.end())};
  }
};

struct StepSolution {
  std::vector<std::vector<double>> vertices;
  std::vector<bool> vertex_interior;  // vertex strictly positive in every coordinate

  bool unique() const { return vertices.size() == 1; }
  /// Vertex centroid; lies in the relative interior, hence strictly positive.
  std::vector<double> centroid() const {
    std::vector<double> c(vertices.front().size(), 0.0);
    for (const auto& v : vertices)
      for (std::size_t k = 0; k < c.size(); ++k) c[k] += v[k] / static_cast<double>(vertices.size());
    return c;
  }
};

inline constexpr double kUnitReturnTol = 1e-14;

inline bool is_step_martingale(const std::vector<double>& returns, const std::vector<double>& q,
                               double tol = kExactTol) {
  if (q.size() != returns.size()) return false;
  return std::abs(detail::accurate_sum(q) - 1.0) <= tol && std::abs(detail::dot(q, returns) - 1.0) <= tol;
}

struct MartingaleMeasureSet {
  std::vector<StepSolution> steps;

  bool complete() const {
    return std::all_of(steps.begin(), steps.end(), [](const StepSolution& s) { return s.unique(); });
  }
  /// The unique measure, or the per-step vertex centroid in incomplete markets.
  MartingaleMeasure interior_point() const {
    MartingaleMeasure m;
    for (const auto& s : steps) m.steps.push_back(s.centroid());
    return m;
  }
};

/// Closed polytope {q >= 0, sum q = 1, sum q*u = 1} described by its vertices; throws
/// when no strictly positive solution exists.
inline StepSolution solve_step(const std::vector<double>& returns) {
  const std::size_t k = returns.size();
  auto above = [&](std::size_t i) { return returns[i] > 1.0 + kUnitReturnTol; };
  auto below = [&](std::size_t i) { return returns[i] < 1.0 - kUnitReturnTol; };
  bool any_above = false, any_below = false, all_unit = true;
  for (std::size_t i = 0; i < k; ++i) {
    any_above = any_above || above(i);
    any_below = any_below || below(i);
    all_unit = all_unit && !above(i) && !below(i);
  }
  if (!(any_above && any_below) && !all_unit)
    throw NoArbitrageViolation("no equivalent martingale measure: returns do not straddle 1");

  StepSolution sol;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      if (!((above(i) && below(j)) || (below(i) && above(j)))) continue;
      std::vector<double> q(k, 0.0);
      q[i] = (1.0 - returns[j]) / (returns[i] - returns[j]);
      q[j] = 1.0 - q[i];
      sol.vertices.push_back(std::move(q));
    }
  for (std::size_t i = 0; i < k; ++i) {
    if (above(i) || below(i)) continue;
    std::vector<double> q(k, 0.0);
    q[i] = 1.0;
    sol.vertices.push_back(std::move(q));
  }
  for (const auto& v : sol.vertices)
    sol.vertex_interior.push_back(std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; }));
  return sol;
}

inline MartingaleMeasureSet solve_martingale_measures(const LatticeMarket& m) {
  MartingaleMeasureSet set;
  for (std::size_t j = 0; j < m.steps(); ++j) set.steps.push_back(solve_step(m.step(j).returns));
  return set;
}

inline bool is_complete(const LatticeMarket& m) { return solve_martingale_measures(m).complete(); }

/// Membership in the set of equivalent martingale measures (strictly positive).
inline bool is_equivalent_martingale_measure(const LatticeMarket& m, const MartingaleMeasure& q) {
  if (q.steps.size() != m.steps()) return false;
  for (std::size_t j = 0; j < m.steps(); ++j) {
    const auto& qj = q.steps[j];
    if (!std::all_of(qj.begin(), qj.end(), [](double x) { return x > 0.0; })) return false;
    if (!is_step_martingale(m.step(j).returns, qj)) return false;
  }
  return true;
}

inline void check_measure_shape(const LatticeMarket& m, const MartingaleMeasure& q) {
  if (q.steps.size() != m.steps()) throw InvalidParams("measure has the wrong number of steps");
  for (std::size_t j = 0; j < m.steps(); ++j) {
    if (q.steps[j].size() != m.support(j)) throw InvalidParams("measure has the wrong support size");
    for (double x : q.steps[j])
      if (!(x >= 0.0)) throw InvalidParams("measure has a negative mass");
    if (std::abs(detail::accurate_sum(q.steps[j]) - 1.0) > kExactTol)
      throw InvalidParams("step measure does not sum to 1");
  }
}

// ---------------------------------------------------------------------------
// Tree enumeration. Nodes at time t are indexed in mixed radix, first step most
// significant: child = parent * k_t + outcome.

inline void check_path_cap(const LatticeMarket& m, std::uint64_t cap) {
  if (m.n_paths() > cap) throw SizeLimitExceeded("path count exceeds the enumeration cap");
}

/// X_t / X_0 at every node, level by level (level 0 is the root).
inline std::vector<std::vector<double>> discounted_likelihood_process(
    const LatticeMarket& m, std::uint64_t cap = limits::max_paths()) {
  check_path_cap(m, cap);
  std::vector<std::vector<double>> levels{{1.0}};
  for (std::size_t j = 0; j < m.steps(); ++j) {
    const auto& ret = m.step(j).returns;
    std::vector<double> next;
    next.reserve(levels.back().size() * ret.size());
    for (double x : levels.back())
      for (double u : ret) next.push_back(x * u);
    levels.push_back(std::move(next));
  }
  return levels;
}

/// Q-probability of every node, level by level.
inline std::vector<std::vector<double>> node_probabilities(const LatticeMarket& m,
                                                           const MartingaleMeasure& q,
                                                           std::uint64_t cap = limits::max_paths()) {
  check_path_cap(m, cap);
  check_measure_shape(m, q);
  std::vector<std::vector<double>> levels{{1.0}};
  for (std::size_t j = 0; j < m.steps(); ++j) {
    std::vector<double> next;
    next.reserve(levels.back().size() * q.steps[j].size());
    for (double p : levels.back())
      for (double qk : q.steps[j]) next.push_back(p * qk);
    levels.push_back(std::move(next));
  }
  return levels;
}

/// Path labels such as "u,d,u".
inline std::vector<std::string> path_labels(const LatticeMarket& m, std::size_t from = 0) {
  std::vector<std::string> labels{""};
  for (std::size_t j = from; j < m.steps(); ++j) {
    std::vector<std::string> next;
    for (const auto& l : labels)
      for (const auto& s : m.step(j).labels) next.push_back(l.empty() ? s : l + "," + s);
    labels = std::move(next);
  }
  return labels;
}

/// Financial experiment on the path space: Q, Q1 (dQ1/dQ = X_T/X_0) and the real-world P.
inline FiniteExperiment induced_experiment(const LatticeMarket& m, const MartingaleMeasure& q,
                                           std::uint64_t cap = limits::max_paths()) {
  const auto x = discounted_likelihood_process(m, cap);
  auto qp = node_probabilities(m, q, cap);
  MartingaleMeasure real;
  for (std::size_t j = 0; j < m.steps(); ++j) real.steps.push_back(m.step(j).probs);
  auto pp = node_probabilities(m, real, cap);
  std::vector<double> q1(qp.back().size());
  for (std::size_t w = 0; w < q1.size(); ++w) q1[w] = qp.back()[w] * x.back()[w];
  return FiniteExperiment(path_labels(m),
                          {{"Q", std::move(qp.back())}, {"Q1", std::move(q1)}, {"P", std::move(pp.back())}},
                          "Q");
}

/// E_Q[X_T/X_0 | F_t] == X_t/X_0 at every node, by backward induction.
inline bool verify_representation(const LatticeMarket& m, const MartingaleMeasure& q,
                                  double tol = kExactTol, std::uint64_t cap = limits::max_paths()) {
  check_measure_shape(m, q);
  const auto x = discounted_likelihood_process(m, cap);
  std::vector<double> v = x.back();
  for (std::size_t t = m.steps(); t-- > 0;) {
    const auto& qt = q.steps[t];
    const std::size_t k = qt.size();
    std::vector<double> prev(x[t].size());
    for (std::size_t p = 0; p < prev.size(); ++p) {
      detail::CompensatedSum s;
      for (std::size_t c = 0; c < k; ++c) s += qt[c] * v[p * k + c];
      prev[p] = s.value();
      if (!detail::close(prev[p], x[t][p], tol)) return false;
    }
    v = std::move(prev);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Complementary dynamics

/// Observed return indices for steps 1..t.
struct PathState {
  std::vector<std::size_t> indices;
  std::size_t t() const { return indices.size(); }
};

/// Parses "u,d" (labels or integer indices) against the market's step labels.
inline PathState parse_state(const LatticeMarket& m, const std::string& text) {
  PathState s;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    const std::size_t j = s.indices.size();
    if (j >= m.steps()) throw InvalidState("state is longer than the market");
    const auto& labels = m.step(j).labels;
    auto it = std::find(labels.begin(), labels.end(), tok);
    if (it != labels.end()) {
      s.indices.push_back(static_cast<std::size_t>(it - labels.begin()));
      continue;
    }
    try {
      std::size_t used = 0;
      const unsigned long idx = std::stoul(tok, &used);
      if (used != tok.size() || idx >= labels.size()) throw InvalidState("bad state token '" + tok + "'");
      s.indices.push_back(idx);
    } catch (const std::logic_error&) {
      throw InvalidState("bad state token '" + tok + "'");
    }
  }
  return s;
}

inline void check_state(const LatticeMarket& m, const PathState& state) {
  if (state.t() > m.steps()) throw InvalidState("state is longer than the market");
  for (std::size_t j = 0; j < state.t(); ++j)
    if (state.indices[j] >= m.support(j)) throw InvalidState("state index outside the step support");
}

/// X_t / X_0 along an observed path prefix.
inline double normalized_price(const LatticeMarket& m, const PathState& state) {
  check_state(m, state);
  double x = 1.0;
  for (std::size_t j = 0; j < state.t(); ++j) x *= m.step(j).returns[state.indices[j]];
  return x;
}

/// Undiscounted price S_t at an observed node.
inline double spot_at(const LatticeMarket& m, const PathState& state) {
  return m.s0() * m.bond(state.t()) * normalized_price(m, state);
}

/// The market of the remaining steps t+1..N, started from the observed price S_t.
/// Under the tail of Q its normalized discounted price is X_{t+s}/X_t.
inline LatticeMarket complementary_market(const LatticeMarket& m, const MartingaleMeasure& q,
                                          const PathState& state) {
  check_measure_shape(m, q);
  check_state(m, state);
  const std::size_t t = state.t();
  if (t == m.steps()) throw InvalidState("no remaining steps after the final time");
  if (t == 0) return m;
  std::vector<StepDistribution> rest(m.step_laws().begin() + static_cast<std::ptrdiff_t>(t),
                                     m.step_laws().end());
  std::vector<double> rates(m.bond_rates().begin() + static_cast<std::ptrdiff_t>(t), m.bond_rates().end());
  const double horizon = m.horizon() * static_cast<double>(m.steps() - t) / static_cast<double>(m.steps());
  return LatticeMarket(spot_at(m, state), horizon, std::move(rest), std::move(rates));
}

/// Partition of the path space by the node reached at time t.
inline Partition time_partition(const LatticeMarket& m, std::size_t t) {
  const std::uint64_t below = m.n_paths(t);
  const std::uint64_t total = m.n_paths();
  std::vector<std::size_t> labels(total);
  for (std::uint64_t w = 0; w < total; ++w) labels[w] = static_cast<std::size_t>(w / below);
  return Partition::from_labels(labels);
}

// ---------------------------------------------------------------------------
// Martingale-measure criterion via complementary experiments

struct CriterionRow {
  std::size_t t;
  std::size_t node;
  double lhs;  // E_{Q'_1(t)}[g | F_t]
  double rhs;  // E_Q[g | F_t]
};

struct CriterionReport {
  std::vector<CriterionRow> rows;
  bool condition_holds;    // every row has lhs == rhs
  bool star_is_martingale; // Q* = g Q / E_Q g is a martingale measure
  bool agree() const { return condition_holds == star_is_martingale; }
};

/// Checks, by exact enumeration, both the conditional-mean condition on the
/// complementary experiments and the martingale property of Q* with dQ*/dQ = g/E_Q g.
inline CriterionReport verify_mm_criterion(const LatticeMarket& m, const MartingaleMeasure& q,
                                           const std::vector<double>& g, double tol = 1e-12,
                                           std::uint64_t cap = limits::max_paths()) {
  if (!verify_representation(m, q, kExactTol, cap))
    throw InvalidParams("criterion requires Q to be a martingale measure");
  const auto x = discounted_likelihood_process(m, cap);
  const auto qp = node_probabilities(m, q, cap);
  const auto& xt = x.back();
  const auto& qw = qp.back();
  if (g.size() != qw.size()) throw InvalidParams("g must have one value per path");
  for (double v : g)
    if (!(v > 0.0)) throw InvalidParams("g must be strictly positive");

  CriterionReport rep{{}, true, true};
  for (std::size_t t = 0; t <= m.steps(); ++t) {
    const std::uint64_t width = m.n_paths(t);
    for (std::size_t node = 0; node < x[t].size(); ++node) {
      detail::CompensatedSum q_mass, qg, comp_mass, comp_g, star_mass, star_x;
      for (std::uint64_t w = node * width; w < (node + 1) * width; ++w) {
        const double resid = xt[w] / x[t][node];  // dQ'_1(t)/dQ = X_T/X_t
        q_mass += qw[w];
        qg += qw[w] * g[w];
        comp_mass += qw[w] * resid;
        comp_g += qw[w] * resid * g[w];
        star_mass += qw[w] * g[w];
        star_x += qw[w] * g[w] * xt[w];
      }
      const double lhs = comp_g.value() / comp_mass.value();
      const double rhs = qg.value() / q_mass.value();
      rep.rows.push_back({t, node, lhs, rhs});
      if (!detail::close(lhs, rhs, tol)) rep.condition_holds = false;
      if (!detail::close(star_x.value() / star_mass.value(), x[t][node], tol)) rep.star_is_martingale = false;
    }
  }
  return rep;
}

/// Density of a (possibly non-product) measure given per path, relative to Q.
inline std::vector<double> density_wrt(const LatticeMarket& m, const MartingaleMeasure& q,
                                       const std::vector<double>& path_probs,
                                       std::uint64_t cap = limits::max_paths()) {
  const auto qp = node_probabilities(m, q, cap);
  if (path_probs.size() != qp.back().size()) throw InvalidParams("one probability per path required");
  std::vector<double> g(path_probs.size());
  for (std::size_t w = 0; w < g.size(); ++w) g[w] = path_probs[w] / qp.back()[w];
  return g;
}

// ---------------------------------------------------------------------------
// Standard (image) form

struct ImageCheckReport {
  bool passed;
  std::size_t image_points;
  double max_error;
};

/// Pushes the path experiment through the trajectory of normalized prices at `times`
/// (the final time is always included) and checks that the restricted likelihood ratio
/// of the image experiment at each time is the coordinate projection.
inline ImageCheckReport image_experiment_check(const LatticeMarket& m, const MartingaleMeasure& q,
                                               std::vector<std::size_t> times = {},
                                               double tol = kExactTol,
                                               std::uint64_t cap = limits::max_paths()) {
  if (times.empty())
    for (std::size_t t = 0; t <= m.steps(); ++t) times.push_back(t);
  times.push_back(m.steps());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.back() > m.steps()) throw InvalidParams("time outside the grid");

  const auto x = discounted_likelihood_process(m, cap);
  const auto qp = node_probabilities(m, q, cap);
  const std::size_t n_paths = x.back().size();

  // Group paths by their trajectory, compared on a 1e-10 grid in log scale.
  std::map<std::vector<std::int64_t>, std::size_t> group_of_key;
  std::vector<std::vector<std::int64_t>> keys;
  std::vector<std::vector<double>> trajectories;
  std::vector<double> nu, nu1;
  for (std::size_t w = 0; w < n_paths; ++w) {
    std::vector<std::int64_t> key;
    std::vector<double> traj;
    for (std::size_t t : times) {
      const double v = x[t][w / m.n_paths(t)];
      traj.push_back(v);
      key.push_back(std::llround(std::log(v) * 1e10));
    }
    auto [it, inserted] = group_of_key.try_emplace(key, keys.size());
    if (inserted) {
      keys.push_back(key);
      trajectories.push_back(traj);
      nu.push_back(0.0);
      nu1.push_back(0.0);
    }
    nu[it->second] += qp.back()[w];
    nu1[it->second] += qp.back()[w] * x.back()[w];
  }

  std::vector<std::string> labels(keys.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::to_string(i);
  FiniteExperiment image(std::move(labels), {{"nu", nu}, {"nu1", nu1}}, "nu");

  ImageCheckReport rep{true, keys.size(), 0.0};
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    // G_t: image points sharing the trajectory prefix up to times[ti].
    std::map<std::vector<std::int64_t>, std::size_t> prefix_id;
    std::vector<std::size_t> block_labels(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      std::vector<std::int64_t> prefix(keys[i].begin(), keys[i].begin() + static_cast<std::ptrdiff_t>(ti + 1));
      block_labels[i] = prefix_id.try_emplace(std::move(prefix), prefix_id.size()).first->second;
    }
    const Partition part = Partition::from_labels(block_labels);
    const auto restricted = restrict(image, part);
    const auto ratio = likelihood_ratio(restricted, "nu1", "nu");
    for (std::size_t b = 0; b < part.n_blocks(); ++b) {
      const double projection = trajectories[part.blocks()[b].front()][ti];
      const double err = std::abs(ratio[b] - projection) / std::max(1.0, std::abs(projection));
      rep.max_error = std::max(rep.max_error, err);
      if (err > tol) rep.passed = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Recombining terminal law

struct TerminalAtom {
  double x;  // X_T / X_0
  double q;  // Q-probability
};

/// Law of X_T / X_0 under a product measure, aggregated over recombining nodes.
inline std::vector<TerminalAtom> terminal_law(const LatticeMarket& m, const MartingaleMeasure& q,
                                              std::uint64_t max_atoms = limits::kDefaultMaxLawAtoms) {
  check_measure_shape(m, q);
  std::vector<detail::StepLaw> laws;
  for (std::size_t j = 0; j < m.steps(); ++j) {
    detail::StepLaw s;
    for (double u : m.step(j).returns) s.values.push_back(std::log(u));
    s.probs = q.steps[j];
    laws.push_back(std::move(s));
  }
  std::vector<TerminalAtom> out;
  for (const auto& a : detail::sum_law(laws, max_atoms)) out.push_back({std::exp(a.value), a.prob});
  return out;
}

}  // namespace lecam

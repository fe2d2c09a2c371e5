#pragma once

// Discrete models generated by a tangent path dP_theta/dP_0 = 1 + theta g, their
// designated martingale measures, and the exact laws behind the Gaussian limit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "lecam/blackscholes.hpp"
#include "lecam/detail/lattice_law.hpp"
#include "lecam/detail/numeric.hpp"
#include "lecam/errors.hpp"
#include "lecam/lattice_market.hpp"
#include "lecam/payoff.hpp"
#include "lecam/pricing.hpp"

namespace lecam {

inline constexpr double kMomentTol = 1e-12;

/// A centred, normalised score g at P_0 with g >= -C.
struct TangentPath {
  std::vector<double> base;  // P_0
  std::vector<double> g;
  double c;                  // lower-bound constant C

  std::size_t size() const { return base.size(); }
  double theta_max() const { return 1.0 / c; }
};

/// C defaults to -min g, the smallest constant that bounds g from below.
inline TangentPath make_tangent(std::vector<double> p0, std::vector<double> g, double c = 0.0) {
  if (p0.empty() || p0.size() != g.size()) throw InvalidTangent("P0 and g must have the same nonzero length");
  for (double p : p0)
    if (!(p > 0.0)) throw InvalidTangent("P0 must be strictly positive");
  if (std::abs(detail::accurate_sum(p0) - 1.0) > kMomentTol) throw InvalidTangent("P0 must sum to 1");
  const double m1 = detail::dot(p0, g);
  if (std::abs(m1) > kMomentTol) throw InvalidTangent("g is not centred: E g = " + std::to_string(m1));
  std::vector<double> g2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
  const double m2 = detail::dot(p0, g2);
  if (std::abs(m2 - 1.0) > kMomentTol) throw InvalidTangent("g is not normalised: E g^2 = " + std::to_string(m2));
  const double lowest = *std::min_element(g.begin(), g.end());
  if (c == 0.0) c = -lowest;
  if (!(c > 0.0) || lowest < -c) throw InvalidTangent("g must be bounded below by -C with C > 0");
  return {std::move(p0), std::move(g), c};
}

/// Binomial path: P_0 = B(1, b/(a+b)) on (up, down) with g = (a, -b)/sqrt(ab).
inline TangentPath crr_tangent(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidTangent("a and b must be positive");
  const double s = std::sqrt(a * b);
  return make_tangent({b / (a + b), a / (a + b)}, {a / s, -b / s});
}

/// Trinomial path on P_0 = (a, b, c) with g = (x, y, -x), solved from the two moment conditions.
inline TangentPath trinomial_tangent(double a, double b, double c) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw InvalidTangent("probabilities must be positive");
  const double ratio = (c - a) / b;  // y = ratio * x
  const double x = 1.0 / std::sqrt(a + c + b * ratio * ratio);
  return make_tangent({a, b, c}, {x, ratio * x, -x});
}

inline std::vector<double> path_measure(const TangentPath& path, double theta) {
  if (!(theta >= 0.0) || !(theta < path.theta_max()))
    throw ThetaOutOfRange("theta must satisfy 0 <= theta < 1/C");
  std::vector<double> p(path.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = path.base[i] * (1.0 + theta * path.g[i]);
  return p;
}

/// E_{P_theta}[(1 + sigma g) / (1 + rho)] - 1.
inline double martingale_residual(const TangentPath& path, double theta, double sigma, double rho) {
  const auto p = path_measure(path, theta);
  detail::CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * (1.0 + sigma * path.g[i]) / (1.0 + rho);
  return s.value() - 1.0;
}

/// The member P_{rho/sigma} of the path, the one-period martingale measure.
inline std::vector<double> one_period_mm(const TangentPath& path, double sigma, double rho) {
  if (!(sigma > 0.0) || !(rho >= 0.0)) throw LemmaHypothesisViolated("need sigma > 0 and rho >= 0");
  if (!(sigma < path.theta_max())) throw LemmaHypothesisViolated("returns 1 + sigma g must stay positive");
  const double lowest = *std::min_element(path.g.begin(), path.g.end());
  if (rho > 0.0 && !(lowest > -sigma / rho)) throw LemmaHypothesisViolated("essinf g must exceed -sigma/rho");
  const double theta = rho / sigma;
  if (!(theta < path.theta_max())) throw LemmaHypothesisViolated("rho/sigma must lie below 1/C");
  auto q = path_measure(path, theta);
  if (std::abs(martingale_residual(path, theta, sigma, rho)) > kExactTol)
    throw LemmaHypothesisViolated("martingale identity failed numerically");
  return q;
}

// ---------------------------------------------------------------------------

/// Per-period volatilities sigma_{j,N} and rates rho_{j,N} of stage N, alongside their limits.
struct Schedule {
  std::size_t n = 1;
  double horizon = 1.0;
  std::vector<double> sigma;  // sigma_{j,N}
  std::vector<double> rho;    // rho_{j,N}; the simple rate of period j is rho_{j,N} T/N
  PiecewiseConstant limit_sigma;
  PiecewiseConstant limit_rate;
  // Optional bounds delta <= sigma <= sigma_max and rho <= rate_max; NaN means unchecked.
  double delta = std::numeric_limits<double>::quiet_NaN();
  double sigma_max = std::numeric_limits<double>::quiet_NaN();
  double rate_max = std::numeric_limits<double>::quiet_NaN();

  double dt() const { return horizon / static_cast<double>(n); }
  double step_sigma(std::size_t j) const { return sigma[j] * std::sqrt(dt()); }
  double step_rate(std::size_t j) const { return rho[j] * dt(); }

  void validate() const {
    if (n == 0 || sigma.size() != n || rho.size() != n) throw InvalidParams("schedule needs N volatilities and rates");
    if (!(horizon > 0.0)) throw InvalidParams("horizon must be positive");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(sigma[j] > 0.0)) throw InvalidParams("volatilities must be positive");
      if (!(rho[j] >= 0.0)) throw InvalidParams("rates must be nonnegative");
      if (!std::isnan(delta) && sigma[j] < delta) throw InvalidParams("volatility below delta");
      if (!std::isnan(sigma_max) && sigma[j] > sigma_max) throw InvalidParams("volatility above its bound");
      if (!std::isnan(rate_max) && rho[j] > rate_max) throw InvalidParams("rate above its bound");
    }
  }

  /// Integral over [0, T] of (sigma_N(u) - sigma(u))^2 for the step function sigma_N.
  double l2_distance() const {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = dt() * static_cast<double>(j);
      const double b = dt() * static_cast<double>(j + 1);
      const double s = sigma[j];
      sum += limit_sigma.integrate(a, b, [s](double v) { return (s - v) * (s - v); });
    }
    return sum;
  }

  /// Stage-N schedule from limit functions: cell averages of sigma and rates whose
  /// compounded bond matches exp(int r) at every grid time.
  static Schedule from_limits(const PiecewiseConstant& sigma_fn, const PiecewiseConstant& rate_fn,
                              std::size_t n, double horizon) {
    if (n == 0) throw InvalidParams("N must be positive");
    Schedule s;
    s.n = n;
    s.horizon = horizon;
    s.limit_sigma = sigma_fn;
    s.limit_rate = rate_fn;
    const double h = horizon / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double a = h * static_cast<double>(j);
      const double b = h * static_cast<double>(j + 1);
      s.sigma.push_back(sigma_fn.integral(a, b) / h);
      s.rho.push_back(std::expm1(rate_fn.integral(a, b)) / h);
    }
    s.validate();
    return s;
  }
};

struct DiscreteModel {
  TangentPath path;
  Schedule schedule;
  LatticeMarket market;
  MartingaleMeasure q;        // Q_N(j) = P_{theta_j}, theta_j = step rate / step volatility
  std::vector<double> theta;  // per-period theta_{j,N} sqrt(T/N)
};

inline DiscreteModel build_discrete_model(const TangentPath& path, const Schedule& schedule, double s0 = 1.0) {
  schedule.validate();
  std::vector<StepDistribution> steps;
  std::vector<double> rates;
  MartingaleMeasure q;
  std::vector<double> theta;
  for (std::size_t j = 0; j < schedule.n; ++j) {
    const double vol = schedule.step_sigma(j);
    const double rate = schedule.step_rate(j);
    if (!(vol < path.theta_max())) throw ThetaOutOfRange("per-period volatility exceeds 1/C; increase N");
    const double th = rate / vol;
    q.steps.push_back(path_measure(path, th));
    theta.push_back(th);
    StepDistribution s;
    for (double gv : path.g) s.returns.push_back((1.0 + vol * gv) / (1.0 + rate));
    s.probs = path.base;
    steps.push_back(std::move(s));
    rates.push_back(rate);
  }
  LatticeMarket market(s0, schedule.horizon, std::move(steps), std::move(rates));
  return {path, schedule, std::move(market), std::move(q), std::move(theta)};
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t grid_index(const Schedule& s, double t) {
  const double k = t / s.dt();
  const double kr = std::round(k);
  if (!(t >= 0.0) || std::abs(k - kr) > 1e-9 * std::max(1.0, k) || kr > static_cast<double>(s.n))
    throw InvalidParams("t must be a grid time in [0, T]");
  return static_cast<std::size_t>(kr);
}

/// Law of sum_{j<k} f(j, g(x_j)) with x_j drawn from per-period weights.
template <class F>
std::vector<Atom> period_sum_law(const TangentPath& path, const std::vector<std::vector<double>>& weights,
                                 std::size_t k, F&& f, std::uint64_t max_atoms) {
  std::vector<StepLaw> laws;
  for (std::size_t j = 0; j < k; ++j) {
    StepLaw s;
    for (double gv : path.g) s.values.push_back(f(j, gv));
    s.probs = weights[j];
    laws.push_back(std::move(s));
  }
  return sum_law(laws, max_atoms);
}

inline std::pair<double, double> atom_moments(const std::vector<Atom>& law) {
  CompensatedSum mass, m1;
  for (const auto& a : law) {
    mass += a.prob;
    m1 += a.prob * a.value;
  }
  const double mean = m1.value() / mass.value();
  CompensatedSum m2;
  for (const auto& a : law) m2 += a.prob * (a.value - mean) * (a.value - mean);
  return {mean, m2.value() / mass.value()};
}

}  // namespace detail

struct LanReport {
  double t;
  std::size_t steps;      // n(t)
  double noether_max;     // max per-period volatility sigma_{j,N} sqrt(T/N)
  double riemann_gap;     // |T/N sum sigma_{j,N}^2 - int_0^t sigma^2|
  double limit_variance;  // int_0^t sigma^2
  double mean_log_s;      // under P_0^N
  double var_log_s;
  double mean_gap;        // against -v/2
  double var_gap;         // against v
  double cdf_distance;    // sup over a 1000-point grid against N(-v/2, v)
  double alpha;           // sum of squared per-period thetas
  std::size_t atoms;
};

inline constexpr std::size_t kCdfGridPoints = 1000;

/// Exact law of log S at grid time t under P_0^N, compared with its Gaussian limit.
inline LanReport lan_diagnostics(const TangentPath& path, const Schedule& schedule, double t,
                                 std::uint64_t max_atoms = limits::kDefaultMaxLawAtoms) {
  schedule.validate();
  const std::size_t k = detail::grid_index(schedule, t);
  LanReport r{};
  r.t = t;
  r.steps = k;
  detail::CompensatedSum riemann, alpha;
  for (std::size_t j = 0; j < k; ++j) {
    const double vol = schedule.step_sigma(j);
    if (!(vol < path.theta_max())) throw ThetaOutOfRange("per-period volatility exceeds 1/C; increase N");
    r.noether_max = std::max(r.noether_max, vol);
    riemann += vol * vol;
    const double th = schedule.step_rate(j) / vol;
    alpha += th * th;
  }
  r.alpha = alpha.value();
  r.limit_variance = schedule.limit_sigma.integral_of_square(0.0, t);
  r.riemann_gap = std::abs(riemann.value() - r.limit_variance);

  const std::vector<std::vector<double>> weights(k, path.base);
  const auto law = detail::period_sum_law(
      path, weights, k, [&](std::size_t j, double gv) { return std::log1p(schedule.step_sigma(j) * gv); },
      max_atoms);
  r.atoms = law.size();
  std::tie(r.mean_log_s, r.var_log_s) = detail::atom_moments(law);
  const double v = r.limit_variance;
  r.mean_gap = std::abs(r.mean_log_s + 0.5 * v);
  r.var_gap = std::abs(r.var_log_s - v);

  if (v > 0.0) {
    const double sd = std::sqrt(v);
    std::size_t i = 0;
    double cum = 0.0;
    for (std::size_t p = 0; p < kCdfGridPoints; ++p) {
      const double z = -6.0 + 12.0 * static_cast<double>(p) / static_cast<double>(kCdfGridPoints - 1);
      const double x = -0.5 * v + z * sd;
      while (i < law.size() && law[i].value <= x) cum += law[i++].prob;
      r.cdf_distance = std::max(r.cdf_distance, std::abs(cum - normal_cdf(z)));
    }
  }
  return r;
}

struct ThirdLemmaReport {
  double t;
  double mean_z;          // Z = sum sigma_{j,N} sqrt(T/N) g under Q_N
  double var_z;
  double mean_log_s;
  double var_log_s;
  double int_rate;        // int_0^t r
  double int_variance;    // int_0^t sigma^2
  double mean_z_gap;      // |mean_z - int r|
  double mean_log_gap;    // |mean_log_s - int (r - sigma^2/2)|
  double var_gap;         // |var_log_s - int sigma^2|
};

/// Exact laws of Z and log S at grid time t under the designated martingale measure.
inline ThirdLemmaReport third_lemma_check(const TangentPath& path, const Schedule& schedule, double t,
                                          std::uint64_t max_atoms = limits::kDefaultMaxLawAtoms) {
  const auto model = build_discrete_model(path, schedule);
  const std::size_t k = detail::grid_index(schedule, t);
  ThirdLemmaReport r{};
  r.t = t;
  r.int_rate = schedule.limit_rate.integral(0.0, t);
  r.int_variance = schedule.limit_sigma.integral_of_square(0.0, t);
  const auto z = detail::period_sum_law(
      path, model.q.steps, k, [&](std::size_t j, double gv) { return schedule.step_sigma(j) * gv; }, max_atoms);
  std::tie(r.mean_z, r.var_z) = detail::atom_moments(z);
  const auto ls = detail::period_sum_law(
      path, model.q.steps, k, [&](std::size_t j, double gv) { return std::log1p(schedule.step_sigma(j) * gv); },
      max_atoms);
  std::tie(r.mean_log_s, r.var_log_s) = detail::atom_moments(ls);
  r.mean_z_gap = std::abs(r.mean_z - r.int_rate);
  r.mean_log_gap = std::abs(r.mean_log_s - (r.int_rate - 0.5 * r.int_variance));
  r.var_gap = std::abs(r.var_log_s - r.int_variance);
  return r;
}

// ---------------------------------------------------------------------------

struct ConvergenceRow {
  std::size_t n;
  double p_n;
  double p_bs;
  double abs_gap;
  double noether_max;
  double var_gap;  // |Var_{Q_N}(log S_T) - int sigma^2|
};

/// Prices the payoff on the stage-N model under Q_N for each N and compares with the limit price.
inline std::vector<ConvergenceRow> convergence_study(const TangentPath& path, const BSModel& bs,
                                                     const Payoff& payoff, const std::vector<std::size_t>& ns) {
  if (payoff.path_dependent()) throw PathDependenceUnsupported("convergence study needs a terminal payoff");
  bs.validate();
  const double p_bs = limit_price_terminal(bs, payoff).price;
  const double v = bs.total_variance();
  auto run = [&](std::size_t n) {
    const auto schedule = Schedule::from_limits(bs.sigma, bs.rate, n, bs.horizon);
    const auto model = build_discrete_model(path, schedule, bs.s0);
    ConvergenceRow row{};
    row.n = n;
    row.p_n = price_direct(model.market, model.q, payoff);
    row.p_bs = p_bs;
    row.abs_gap = std::abs(row.p_n - p_bs);
    // Independent periods: the variance of log S_T is the sum of per-period variances.
    detail::CompensatedSum var;
    for (std::size_t j = 0; j < n; ++j) {
      const double vol = schedule.step_sigma(j);
      row.noether_max = std::max(row.noether_max, vol);
      detail::CompensatedSum m1, m2;
      for (std::size_t i = 0; i < path.size(); ++i) {
        const double l = std::log1p(vol * path.g[i]);
        m1 += model.q.steps[j][i] * l;
        m2 += model.q.steps[j][i] * l * l;
      }
      var += m2.value() - m1.value() * m1.value();
    }
    row.var_gap = std::abs(var.value() - v);
    return row;
  };
  std::vector<std::future<ConvergenceRow>> tasks;
  for (std::size_t n : ns) tasks.push_back(std::async(std::launch::async, run, n));
  std::vector<ConvergenceRow> rows;
  for (auto& f : tasks) rows.push_back(f.get());
  return rows;
}

}  // namespace lecam

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "lecam/lecam.hpp"

using namespace lecam;

namespace {

// Pinned tolerances.
constexpr double kExact = 1e-12;
constexpr double kCrrTau = 1e-15;
constexpr double kBsQuadrature = 1e-9;
constexpr double kBsNp = 1e-10;
constexpr double kGapReference = 0.02;
constexpr double kGapWithRate = 0.03;
constexpr double kShapeGap = 0.05;
constexpr double kMeanLogGap = 2e-3;
constexpr double kVarLogGap = 1e-2;
constexpr double kNoetherMax = 0.01;
constexpr double kRepresentationSeconds = 10.0;
constexpr double kConvergenceSeconds = 30.0;
constexpr double kReferenceBs = 7.9656;
constexpr double kReferenceBsTol = 5e-5;
constexpr double kOracleLattice = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<std::vector<double>> returns_of(const LatticeMarket& m) {
  std::vector<std::vector<double>> r;
  for (const auto& s : m.step_laws()) r.push_back(s.returns);
  return r;
}

LatticeMarket random_market(std::mt19937_64& rng, std::size_t max_steps, std::size_t max_support) {
  std::uniform_int_distribution<std::size_t> steps(1, max_steps), support(2, max_support);
  std::uniform_real_distribution<double> up(1.05, 2.0), down(0.3, 0.95), mid(0.6, 1.6), rate(0.0, 0.05);
  const std::size_t n = steps(rng);
  std::vector<StepDistribution> laws;
  std::vector<double> rates;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = support(rng);
    StepDistribution s;
    s.returns = {up(rng), down(rng)};
    while (s.returns.size() < k) s.returns.push_back(mid(rng));
    s.probs = oracle::random_simplex(rng, k);
    laws.push_back(s);
    rates.push_back(rate(rng));
  }
  return LatticeMarket(std::uniform_real_distribution<double>(1.0, 10.0)(rng), 1.0, laws, rates);
}

/// A product martingale measure strictly inside the solution set: centroid pulled toward random vertices.
MartingaleMeasure random_interior_measure(std::mt19937_64& rng, const MartingaleMeasureSet& set) {
  auto q = set.interior_point();
  std::uniform_real_distribution<double> w(0.0, 0.9);
  for (std::size_t j = 0; j < q.steps.size(); ++j) {
    const auto& vs = set.steps[j].vertices;
    const auto& v = vs[std::uniform_int_distribution<std::size_t>(0, vs.size() - 1)(rng)];
    const double a = w(rng);
    for (std::size_t k = 0; k < v.size(); ++k) q.steps[j][k] = (1.0 - a) * q.steps[j][k] + a * v[k];
  }
  return q;
}

Outcome representation() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> eps(0.02, 0.1);
  for (int i = 0; i < 200; ++i) {
    const auto m = random_market(rng, 4, 3);
    const auto q = random_interior_measure(rng, solve_martingale_measures(m));
    o.require(verify_representation(m, q), "solved measure rejected on lattice " + std::to_string(i));

    // Oracle: the discounted likelihood process is a Q-martingale with terminal values X_T.
    const auto x = discounted_likelihood_process(m);
    const auto paths = oracle::enumerate(returns_of(m), q.steps, m.bond_rates());
    double mean = 0.0;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      mean += paths[p].prob * paths[p].x;
      o.require(std::abs(x.back()[p] - paths[p].x) <= kExact, "likelihood process differs from path product");
    }
    o.require(std::abs(mean - 1.0) <= kExact, "oracle mean of X_T differs from 1");

    // Moving mass from the lowest return to the highest at the first step breaks the martingale property.
    auto bad = q;
    auto& s = bad.steps[0];
    const auto& r = m.step(0).returns;
    const std::size_t hi = std::max_element(r.begin(), r.end()) - r.begin();
    const std::size_t lo = std::min_element(r.begin(), r.end()) - r.begin();
    const double d = std::min(eps(rng), 0.5 * s[lo]);
    s[lo] -= d;
    s[hi] += d;
    o.require(!verify_representation(m, bad), "perturbed measure accepted on lattice " + std::to_string(i));
  }
  const double t = seconds_since(t0);
  o.require(t < kRepresentationSeconds, "runtime " + num(t) + " s");
  if (o.pass) o.detail = "200 solved + 200 perturbed, " + num(t) + " s";
  return o;
}

Outcome crr_measure() {
  Outcome o;
  const auto set = solve_martingale_measures(build_crr(2.0, 0.5, 1.0, 0.5, 1, 4.0));
  const double tau = set.steps[0].vertices[0][0];
  const double kappa = tau * 2.0;
  const double tau_formula = (1.0 - 0.5) / (2.0 - 0.5);
  o.require(set.complete(), "CRR step not unique");
  o.require(std::abs(tau - 1.0 / 3.0) <= kCrrTau && std::abs(tau - tau_formula) <= kCrrTau, "tau = " + num(tau));
  o.require(std::abs(kappa - 2.0 / 3.0) <= kCrrTau, "kappa = " + num(kappa));
  if (o.pass) o.detail = "tau = 1/3, kappa = 2/3";
  return o;
}

Payoff random_payoff(std::mt19937_64& rng, double s0, int kind, double& kk) {
  std::uniform_real_distribution<double> k(0.5, 1.5), w(0.0, 0.4), b(1.1, 2.0);
  kk = s0 * k(rng);
  switch (kind % 6) {
    case 0: return payoff_european_call(kk);
    case 1: return payoff_european_put(kk);
    case 2: return payoff_straddle(kk);
    case 3: return payoff_strangle(kk, kk + s0 * w(rng));
    case 4: return payoff_digital(kk);
    default: return payoff_barrier_up_out(kk, std::max(kk, s0) * b(rng));
  }
}

Outcome pricing_theorem() {
  Outcome o;
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto m = random_market(rng, 5, 3);
    const auto q = random_interior_measure(rng, solve_martingale_measures(m));
    double k = 0.0;
    const auto payoff = random_payoff(rng, m.s0(), i, k);
    const double direct = price_direct(m, q, payoff);
    const double via = price_via_tests(m, q, payoff).price;

    double enumerated = 0.0;
    for (const auto& p : oracle::enumerate(returns_of(m), q.steps, m.bond_rates())) {
      const double st = m.s0() * p.x * m.bond(m.steps());
      enumerated += p.prob * payoff.value(st, m.s0() * p.max_x_bond);
    }
    enumerated *= m.discount();

    worst = std::max({worst, std::abs(direct - via), std::abs(via - enumerated)});
    o.require(std::abs(direct - via) <= kExact, "pair " + std::to_string(i) + " (" + payoff.kind + ")");
    o.require(std::abs(via - enumerated) <= kExact, "path oracle, pair " + std::to_string(i));

    const double parity = price_via_tests(m, q, payoff_european_call(k)).price -
                          price_via_tests(m, q, payoff_european_put(k)).price - (m.s0() - k * m.discount());
    worst = std::max(worst, std::abs(parity));
    o.require(std::abs(parity) <= kExact, "put-call parity, pair " + std::to_string(i));
  }
  if (o.pass) o.detail = "500 pairs, max diff " + num(worst);
  return o;
}

Outcome bayes_identity() {
  Outcome o;
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> k(0.3, 1.7);
  std::uniform_int_distribution<std::size_t> support(2, 12);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = support(rng);
    std::vector<double> values;
    std::uniform_real_distribution<double> up(1.05, 2.0), down(0.3, 0.95), mid(0.4, 1.9);
    values = {up(rng), down(rng)};
    while (values.size() < n) values.push_back(mid(rng));
    const double rate = std::uniform_real_distribution<double>(0.0, 0.05)(rng);
    const LatticeMarket m(5.0, 1.0, {StepDistribution{values, oracle::random_simplex(rng, n), {}}}, {rate});
    const auto q = random_interior_measure(rng, solve_martingale_measures(m));
    const auto np = np_decomposition(m, q, payoff_european_call(5.0 * k(rng)));
    worst = std::max(worst, std::abs(np.bayes_risk - np.closed_form_risk));
    o.require(std::abs(np.bayes_risk - np.closed_form_risk) <= kExact, "market " + std::to_string(i));

    const auto e = induced_experiment(m, q);
    const auto& q0 = e.measure("Q");
    const auto& q1 = e.measure("Q1");
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      double risk = 0.0;
      for (std::size_t w = 0; w < n; ++w) {
        const bool reject = (mask >> w) & 1u;
        risk += reject ? np.priors.lambda0 * q0[w] : np.priors.lambda1 * q1[w];
      }
      o.require(np.bayes_risk <= risk + kExact, "deterministic test beats NP, market " + std::to_string(i));
    }
  }
  if (o.pass) o.detail = "100 markets, max diff " + num(worst);
  return o;
}

Outcome factorization() {
  Outcome o;
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = size(rng);
    std::vector<std::string> outcomes;
    for (std::size_t w = 0; w < n; ++w) outcomes.push_back("w" + std::to_string(w));
    const FiniteExperiment e(outcomes,
                             {{"Q", oracle::random_simplex(rng, n)},
                              {"Q1", oracle::random_simplex(rng, n, 0.0)},
                              {"Q2", oracle::random_simplex(rng, n, 0.0)}},
                             "Q");
    std::vector<std::size_t> labels(n);
    std::uniform_int_distribution<std::size_t> pick(0, n / 2);
    for (auto& l : labels) l = pick(rng);
    const auto part = Partition::from_labels(labels);
    const auto c = complementary(e, part);
    const auto r = restrict(e, part);
    const auto& q = e.measure("Q");
    for (const char* name : {"Q1", "Q2"}) {
      const auto full = likelihood_ratio(e, name, "Q");
      const auto comp = likelihood_ratio(c, name, "Q");
      const auto res = likelihood_ratio(r, name, "Q");
      double m_comp = 0, m_res = 0, m_prod = 0;
      for (std::size_t w = 0; w < n; ++w) {
        const double rb = res[part.block_of(w)];
        worst = std::max(worst, std::abs(full[w] - comp[w] * rb));
        m_comp += q[w] * comp[w];
        m_res += q[w] * rb;
        m_prod += q[w] * comp[w] * rb;
      }
      const double cov = m_prod - m_comp * m_res;
      worst = std::max(worst, std::abs(cov));
      o.require(worst <= kExact, "case " + std::to_string(i));
    }
  }
  if (o.pass) o.detail = "200 cases, max residual " + num(worst);
  return o;
}

Outcome criterion_equivalence() {
  Outcome o;
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  int positives = 0;
  for (int i = 0; i < 200; ++i) {
    const auto m = random_market(rng, 3, 3);
    const auto set = solve_martingale_measures(m);
    const auto q = set.interior_point();
    std::vector<double> g(m.n_paths());
    if (i % 2 == 0) {
      for (auto& v : g) v = u(rng);
    } else {
      g = density_wrt(m, q, node_probabilities(m, random_interior_measure(rng, set)).back());
      const double scale = u(rng);
      for (auto& v : g) v *= scale;
    }
    const auto rep = verify_mm_criterion(m, q, g);
    o.require(rep.agree(), "counterexample at case " + std::to_string(i));
    positives += rep.star_is_martingale;
  }
  if (o.pass) o.detail = "200 densities, " + std::to_string(positives) + " martingale, no counterexamples";
  return o;
}

Outcome completeness() {
  Outcome o;
  o.require(is_complete(build_crr(2.0, 0.5, 1.0, 0.5, 3, 4.0)), "binomial reported incomplete");
  const LatticeMarket tri(1.0, 1.0, {StepDistribution{{1.5, 1.0, 0.5}, {0.3, 0.4, 0.3}, {}}}, {0.0});
  o.require(!is_complete(tri), "trinomial reported complete");
  const auto b = price_bounds(tri, payoff_european_call(1.0));

  // Vertex-evaluation oracle.
  const auto call = [](const std::vector<double>& q) {
    const std::vector<double> s{1.5, 1.0, 0.5};
    double v = 0.0;
    for (std::size_t k = 0; k < 3; ++k) v += q[k] * std::max(s[k] - 1.0, 0.0);
    return v;
  };
  const double lo = std::min(call({0.0, 1.0, 0.0}), call({0.5, 0.0, 0.5}));
  const double hi = std::max(call({0.0, 1.0, 0.0}), call({0.5, 0.0, 0.5}));
  o.require(b.lower == 0.0 && b.upper == 0.25, "bounds [" + num(b.lower) + ", " + num(b.upper) + "]");
  o.require(b.lower == lo && b.upper == hi, "bounds differ from the vertex oracle");
  if (o.pass) o.detail = "binomial complete; trinomial bounds [0, 0.25]";
  return o;
}

Outcome black_scholes() {
  Outcome o;
  std::mt19937_64 rng(127);
  std::uniform_real_distribution<double> s0(20.0, 200.0), r(0.0, 0.1), sig(0.05, 0.6), t(0.1, 3.0), k(0.5, 2.0);
  auto draw = [&] {
    return BSModel{s0(rng), t(rng), PiecewiseConstant(sig(rng)), PiecewiseConstant(r(rng))};
  };
  double worst_quad = 0.0, worst_np = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto m = draw();
    const double kk = m.s0 * k(rng);
    const double d = std::abs(bs_call_price(m, kk) - oracle::lognormal_call(m.s0, kk, m.integrated_rate(),
                                                                             m.total_variance()));
    worst_quad = std::max(worst_quad, d);
  }
  for (int i = 0; i < 1000; ++i) {
    const auto m = draw();
    const double kk = m.s0 * k(rng);
    worst_np = std::max(worst_np, std::abs(limit_price_via_np(m, kk).price - bs_call_price(m, kk)));
  }
  o.require(worst_quad <= kBsQuadrature, "quadrature gap " + num(worst_quad));
  o.require(worst_np <= kBsNp, "NP gap " + num(worst_np));
  if (o.pass) o.detail = "quadrature max " + num(worst_quad) + ", NP max " + num(worst_np);
  return o;
}

BSModel reference(double r) { return {100.0, 1.0, PiecewiseConstant(0.2), PiecewiseConstant(r)}; }

/// Recombining binomial tree with u, d = 1 +/- sigma sqrt(h) and bond factor e^{r h}.
double binomial_oracle(double s0, double k, double sigma, double r, std::size_t n) {
  const double h = 1.0 / static_cast<double>(n);
  const double u = 1.0 + sigma * std::sqrt(h), d = 1.0 - sigma * std::sqrt(h), g = std::exp(r * h);
  const double p = (g - d) / (u - d);
  std::vector<double> v(n + 1);
  for (std::size_t j = 0; j <= n; ++j)
    v[j] = std::max(s0 * std::pow(u, static_cast<double>(n - j)) * std::pow(d, static_cast<double>(j)) - k, 0.0);
  for (std::size_t t = n; t > 0; --t)
    for (std::size_t j = 0; j < t; ++j) v[j] = (p * v[j] + (1.0 - p) * v[j + 1]) / g;
  return v[0];
}

Outcome convergence() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto tangent = crr_tangent(1.0, 1.0);
  const auto call = payoff_european_call(100.0);
  const auto flat = convergence_study(tangent, reference(0.0), call, {4096}).back();
  const auto rate = convergence_study(tangent, reference(0.05), call, {4096}).back();
  const double t = seconds_since(t0);

  const double bs_oracle = oracle::lognormal_call(100.0, 100.0, 0.0, 0.04);
  o.require(std::abs(flat.p_bs - kReferenceBs) < kReferenceBsTol && std::abs(flat.p_bs - bs_oracle) < kBsQuadrature,
            "p_BS = " + num(flat.p_bs));
  o.require(std::abs(flat.p_n - binomial_oracle(100.0, 100.0, 0.2, 0.0, 4096)) < kOracleLattice,
            "p_N differs from the recombining tree");
  o.require(std::abs(rate.p_n - binomial_oracle(100.0, 100.0, 0.2, 0.05, 4096)) < kOracleLattice,
            "p_N (r = 0.05) differs from the recombining tree");
  o.require(flat.abs_gap < kGapReference, "gap " + num(flat.abs_gap));
  o.require(rate.abs_gap < kGapWithRate, "gap with rate " + num(rate.abs_gap));
  o.require(t < kConvergenceSeconds, "runtime " + num(t) + " s");
  if (o.pass)
    o.detail = "gap " + num(flat.abs_gap) + ", with rate " + num(rate.abs_gap) + ", " + num(t) + " s";
  return o;
}

Outcome shape_invariance() {
  Outcome o;
  for (double r : {0.0, 0.05}) {
    const auto call = payoff_european_call(100.0);
    const double tri = convergence_study(trinomial_tangent(0.3, 0.4, 0.3), reference(r), call, {4096}).back().p_n;
    const double bin = convergence_study(crr_tangent(1.0, 1.0), reference(r), call, {4096}).back().p_n;
    o.require(std::abs(tri - bin) < kShapeGap, "r = " + num(r) + ": " + num(std::abs(tri - bin)));
    if (o.pass) o.detail += (o.detail.empty() ? "" : ", ") + std::string("r = ") + num(r) + ": " + num(std::abs(tri - bin));
  }
  return o;
}

Outcome lan_moments() {
  Outcome o;
  for (double r : {0.0, 0.05}) {
    const auto tangent = crr_tangent(1.0, 1.0);
    const auto s = Schedule::from_limits(PiecewiseConstant(0.2), PiecewiseConstant(r), 4096, 1.0);
    const auto third = third_lemma_check(tangent, s, 1.0);
    const auto lan = lan_diagnostics(tangent, s, 1.0);

    // Oracle: moments of a sum of independent steps, added step by step.
    const auto q = build_discrete_model(tangent, s).q;
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < s.n; ++j) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < tangent.size(); ++i) {
        const double x = std::log1p(s.step_sigma(j) * tangent.g[i]);
        m1 += q.steps[j][i] * x;
        m2 += q.steps[j][i] * x * x;
      }
      mean += m1;
      var += m2 - m1 * m1;
    }
    o.require(std::abs(third.mean_log_s - mean) < kExact && std::abs(third.var_log_s - var) < kExact,
              "convolution moments differ from the per-step oracle");
    o.require(third.mean_log_gap < kMeanLogGap, "mean gap " + num(third.mean_log_gap));
    o.require(third.var_gap < kVarLogGap, "variance gap " + num(third.var_gap));
    o.require(lan.noether_max < kNoetherMax, "Noether max " + num(lan.noether_max));
    if (o.pass)
      o.detail += (o.detail.empty() ? "" : "; ") + std::string("r = ") + num(r) + ": mean gap " +
                  num(third.mean_log_gap) + ", var gap " + num(third.var_gap) + ", Noether max " +
                  num(lan.noether_max);
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"representation of prices as likelihood processes", representation},
      {"CRR martingale measure tau and kappa", crr_measure},
      {"pricing through test powers equals direct pricing", pricing_theorem},
      {"Bayes risk identity and NP optimality", bayes_identity},
      {"density factorization and zero covariance", factorization},
      {"martingale criterion equivalence", criterion_equivalence},
      {"completeness and trinomial price bounds", completeness},
      {"Black-Scholes closed form, quadrature and NP limit", black_scholes},
      {"CRR convergence to Black-Scholes", convergence},
      {"tangent-shape invariance of the limit price", shape_invariance},
      {"LAN moments of log S under Q_N", lan_moments},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

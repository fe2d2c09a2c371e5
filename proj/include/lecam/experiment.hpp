#pragma once

// Exact finite statistical experiments: a finite outcome set carrying a named
// family of probability vectors, all dominated by one base measure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lecam/detail/numeric.hpp"
#include "lecam/errors.hpp"

namespace lecam {

inline constexpr double kExactTol = 1e-12;

struct NamedMeasure {
  std::string name;
  std::vector<double> mass;
};

class FiniteExperiment {
 public:
  FiniteExperiment(std::vector<std::string> outcomes, std::vector<NamedMeasure> measures,
                   std::string base)
      : outcomes_(std::move(outcomes)), measures_(std::move(measures)), base_(std::move(base)) {
    validate();
  }

  std::size_t size() const { return outcomes_.size(); }
  const std::vector<std::string>& outcomes() const { return outcomes_; }
  const std::vector<NamedMeasure>& measures() const { return measures_; }
  const std::string& base() const { return base_; }

  bool has_measure(std::string_view name) const { return find(name) != nullptr; }

  const std::vector<double>& measure(std::string_view name) const {
    const NamedMeasure* m = find(name);
    if (m == nullptr) throw InvalidParams("unknown measure '" + std::string(name) + "'");
    return m->mass;
  }
  const std::vector<double>& base_measure() const { return measure(base_); }

  std::vector<std::string> measure_names() const {
    std::vector<std::string> names;
    names.reserve(measures_.size());
    for (const auto& m : measures_) names.push_back(m.name);
    return names;
  }

 private:
  const NamedMeasure* find(std::string_view name) const {
    for (const auto& m : measures_)
      if (m.name == name) return &m;
    return nullptr;
  }

  void validate() const {
    if (outcomes_.empty()) throw InvalidParams("experiment needs at least one outcome");
    if (measures_.empty()) throw InvalidParams("experiment needs at least one measure");
    for (std::size_t i = 0; i < measures_.size(); ++i)
      for (std::size_t j = i + 1; j < measures_.size(); ++j)
        if (measures_[i].name == measures_[j].name)
          throw InvalidParams("duplicate measure name '" + measures_[i].name + "'");
    const NamedMeasure* b = find(base_);
    if (b == nullptr) throw InvalidParams("base measure '" + base_ + "' is not in the family");
    for (const auto& m : measures_) {
      if (m.mass.size() != outcomes_.size())
        throw InvalidParams("measure '" + m.name + "' has wrong length");
      for (double v : m.mass)
        if (!(v >= 0.0) || !std::isfinite(v))
          throw InvalidParams("measure '" + m.name + "' has a negative or non-finite mass");
      const double total = detail::accurate_sum(m.mass);
      if (std::abs(total - 1.0) > kExactTol)
        throw InvalidParams("measure '" + m.name + "' does not sum to 1");
      for (std::size_t w = 0; w < m.mass.size(); ++w)
        if (b->mass[w] == 0.0 && m.mass[w] > 0.0)
          throw AbsoluteContinuityViolation("measure '" + m.name +
                                            "' charges a null set of the base measure");
    }
  }

  std::vector<std::string> outcomes_;
  std::vector<NamedMeasure> measures_;
  std::string base_;
};

/// A randomized test: values in [0,1] per outcome.
class Test {
 public:
  Test() = default;
  explicit Test(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidParams("test values must lie in [0,1]");
  }
  static Test constant(std::size_t n, double v) { return Test(std::vector<double>(n, v)); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Finite sub-sigma-field, given by its generating blocks of outcome indices.
class Partition {
 public:
  Partition(std::vector<std::vector<std::size_t>> blocks, std::size_t n_outcomes)
      : blocks_(std::move(blocks)), block_of_(n_outcomes, kUnassigned) {
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (blocks_[b].empty()) throw InvalidParams("partition block is empty");
      for (std::size_t w : blocks_[b]) {
        if (w >= n_outcomes) throw InvalidParams("partition refers to an unknown outcome");
        if (block_of_[w] != kUnassigned) throw InvalidParams("partition blocks overlap");
        block_of_[w] = b;
      }
    }
    for (std::size_t b : block_of_)
      if (b == kUnassigned) throw InvalidParams("partition does not cover every outcome");
  }

  static Partition trivial(std::size_t n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return Partition({std::move(all)}, n);
  }
  static Partition discrete(std::size_t n) {
    std::vector<std::vector<std::size_t>> blocks(n);
    for (std::size_t i = 0; i < n; ++i) blocks[i] = {i};
    return Partition(std::move(blocks), n);
  }
  /// Blocks given by a label per outcome; blocks are ordered by first appearance.
  static Partition from_labels(const std::vector<std::size_t>& labels) {
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::pair<std::size_t, std::size_t>> seen;  // label -> block
    for (std::size_t w = 0; w < labels.size(); ++w) {
      auto it = std::find_if(seen.begin(), seen.end(),
                             [&](const auto& p) { return p.first == labels[w]; });
      if (it == seen.end()) {
        seen.emplace_back(labels[w], blocks.size());
        blocks.push_back({w});
      } else {
        blocks[it->second].push_back(w);
      }
    }
    return Partition(std::move(blocks), labels.size());
  }

  std::size_t n_blocks() const { return blocks_.size(); }
  std::size_t n_outcomes() const { return block_of_.size(); }
  const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }
  std::size_t block_of(std::size_t outcome) const { return block_of_[outcome]; }

 private:
  static constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> blocks_;
  std::vector<std::size_t> block_of_;
};

struct BinaryPriors {
  double lambda0;
  double lambda1;

  BinaryPriors(double l0, double l1) : lambda0(l0), lambda1(l1) {
    if (!(l0 >= 0.0 && l0 <= 1.0 && l1 >= 0.0 && l1 <= 1.0) || std::abs(l0 + l1 - 1.0) > kExactTol)
      throw InvalidParams("priors must be nonnegative and sum to 1");
  }
  /// Priors for which the Neyman-Pearson test with cutoff c is Bayes.
  static BinaryPriors from_cutoff(double c) { return BinaryPriors(c / (1.0 + c), 1.0 / (1.0 + c)); }
};

// ---------------------------------------------------------------------------

/// dNum/dDen per outcome with 0/0 = 0.
inline std::vector<double> likelihood_ratio(const FiniteExperiment& exp, std::string_view num,
                                            std::string_view den) {
  const auto& n = exp.measure(num);
  const auto& d = exp.measure(den);
  std::vector<double> ratio(exp.size(), 0.0);
  for (std::size_t w = 0; w < exp.size(); ++w) {
    if (d[w] > 0.0) {
      ratio[w] = n[w] / d[w];
    } else if (n[w] > 0.0) {
      throw AbsoluteContinuityViolation("'" + std::string(num) + "' is not dominated by '" +
                                        std::string(den) + "'");
    }
  }
  return ratio;
}

inline double power(const Test& test, const FiniteExperiment& exp, std::string_view mu) {
  const auto& m = exp.measure(mu);
  if (test.size() != m.size()) throw InvalidParams("test size does not match experiment");
  return detail::dot(test.values(), m);
}

/// Relative width of the band in which a likelihood ratio counts as tied with the cutoff.
inline constexpr double kTieTol = 1e-12;

inline Test neyman_pearson(const FiniteExperiment& exp, std::string_view null, std::string_view alt,
                           double c, double gamma = 0.0) {
  if (!(c >= 0.0)) throw InvalidParams("cutoff must be nonnegative");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidParams("randomization must lie in [0,1]");
  const auto ratio = likelihood_ratio(exp, alt, null);
  const auto& base = exp.measure(null);
  std::vector<double> phi(exp.size(), 0.0);
  for (std::size_t w = 0; w < exp.size(); ++w) {
    if (base[w] == 0.0) continue;
    if (std::isinf(c)) break;
    const double r = ratio[w];
    if (std::abs(r - c) <= kTieTol * std::max(1.0, c)) {
      phi[w] = gamma;
    } else if (r > c) {
      phi[w] = 1.0;
    }
  }
  return Test(std::move(phi));
}

inline double bayes_risk(const FiniteExperiment& exp, std::string_view null, std::string_view alt,
                         const Test& test, const BinaryPriors& priors) {
  return priors.lambda0 * power(test, exp, null) + priors.lambda1 * (1.0 - power(test, exp, alt));
}

struct BayesSolution {
  double risk;
  double cutoff;
  Test test;
};

/// Minimal Bayes risk, achieved by the Neyman-Pearson test with cutoff lambda0/lambda1.
inline BayesSolution min_bayes_risk(const FiniteExperiment& exp, std::string_view null,
                                    std::string_view alt, const BinaryPriors& priors) {
  const double c = priors.lambda1 > 0.0 ? priors.lambda0 / priors.lambda1
                                        : std::numeric_limits<double>::infinity();
  // Weighted masses are compared directly, so the alternative need not be dominated by the null.
  const auto& m0 = exp.measure(null);
  const auto& m1 = exp.measure(alt);
  std::vector<double> values(exp.size(), 0.0);
  for (std::size_t w = 0; w < exp.size(); ++w) {
    const double lhs = priors.lambda1 * m1[w], rhs = priors.lambda0 * m0[w];
    if (lhs > rhs && lhs - rhs > kTieTol * std::max(lhs, rhs)) values[w] = 1.0;
  }
  Test phi(std::move(values));
  const double risk = bayes_risk(exp, null, alt, phi, priors);
  return {risk, c, std::move(phi)};
}

/// Cartesian product; measures of the same name multiply across factors.
inline FiniteExperiment product(const std::vector<FiniteExperiment>& factors,
                                std::uint64_t max_outcomes = limits::kDefaultMaxProductOutcomes) {
  if (factors.empty()) throw InvalidParams("product of zero experiments");
  if (factors.size() == 1) return factors.front();
  const auto names = factors.front().measure_names();
  std::uint64_t total = 1;
  for (const auto& f : factors) {
    auto other = f.measure_names();
    if (other.size() != names.size() ||
        !std::all_of(names.begin(), names.end(), [&](const std::string& n) { return f.has_measure(n); }))
      throw InvalidParams("product factors must share the same measure names");
    if (f.base() != factors.front().base()) throw InvalidParams("product factors must share the base");
    total *= f.size();
    if (total > max_outcomes) throw SizeLimitExceeded("product space exceeds the outcome cap");
  }

  std::vector<std::string> labels{""};
  std::vector<std::vector<double>> masses(names.size(), std::vector<double>{1.0});
  bool first = true;
  for (const auto& f : factors) {
    std::vector<std::string> next_labels;
    next_labels.reserve(labels.size() * f.size());
    for (const auto& l : labels)
      for (const auto& o : f.outcomes()) next_labels.push_back(first ? o : l + "," + o);
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& fm = f.measure(names[k]);
      std::vector<double> next;
      next.reserve(masses[k].size() * fm.size());
      for (double a : masses[k])
        for (double b : fm) next.push_back(a * b);
      masses[k] = std::move(next);
    }
    labels = std::move(next_labels);
    first = false;
  }
  std::vector<NamedMeasure> ms;
  for (std::size_t k = 0; k < names.size(); ++k) ms.push_back({names[k], std::move(masses[k])});
  return FiniteExperiment(std::move(labels), std::move(ms), factors.front().base());
}

inline FiniteExperiment restrict(const FiniteExperiment& exp, const Partition& part) {
  if (part.n_outcomes() != exp.size()) throw InvalidParams("partition size does not match experiment");
  std::vector<std::string> labels;
  for (const auto& block : part.blocks()) {
    if (block.size() == 1) {
      labels.push_back(exp.outcomes()[block.front()]);
      continue;
    }
    std::string l = "{";
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (i) l += "|";
      l += exp.outcomes()[block[i]];
    }
    labels.push_back(l + "}");
  }
  std::vector<NamedMeasure> ms;
  for (const auto& m : exp.measures()) {
    std::vector<double> mass;
    mass.reserve(part.n_blocks());
    for (const auto& block : part.blocks()) {
      detail::CompensatedSum s;
      for (std::size_t w : block) s += m.mass[w];
      mass.push_back(s.value());
    }
    ms.push_back({m.name, std::move(mass)});
  }
  return FiniteExperiment(std::move(labels), std::move(ms), exp.base());
}

/// E_mu[f | block(w)] for each outcome w; zero on mu-null blocks.
inline std::vector<double> conditional_expectation(const FiniteExperiment& exp, std::string_view mu,
                                                   const std::vector<double>& f,
                                                   const Partition& part) {
  const auto& m = exp.measure(mu);
  std::vector<double> out(exp.size(), 0.0);
  for (const auto& block : part.blocks()) {
    detail::CompensatedSum num, den;
    for (std::size_t w : block) {
      num += m[w] * f[w];
      den += m[w];
    }
    const double v = den.value() > 0.0 ? num.value() / den.value() : 0.0;
    for (std::size_t w : block) out[w] = v;
  }
  return out;
}

/// Experiment carrying the residual likelihood once the information in `part` is known.
/// Its densities are the full densities divided by the restricted ones; on blocks the
/// restricted density annihilates, the full density vanishes and the residual is set to 1
/// so that every residual measure keeps total mass one.
inline FiniteExperiment complementary(const FiniteExperiment& exp, const Partition& part) {
  if (part.n_outcomes() != exp.size()) throw InvalidParams("partition size does not match experiment");
  const auto& base = exp.base_measure();
  std::vector<NamedMeasure> ms;
  for (const auto& m : exp.measures()) {
    if (m.name == exp.base()) {
      ms.push_back(m);
      continue;
    }
    const auto full = likelihood_ratio(exp, m.name, exp.base());
    const auto restricted = conditional_expectation(exp, exp.base(), full, part);
    std::vector<double> mass(exp.size(), 0.0);
    for (std::size_t w = 0; w < exp.size(); ++w) {
      if (base[w] == 0.0) continue;
      const double f = restricted[w] > 0.0 ? full[w] / restricted[w] : 1.0;
      mass[w] = f * base[w];
    }
    ms.push_back({m.name, std::move(mass)});
  }
  return FiniteExperiment(exp.outcomes(), std::move(ms), exp.base());
}

}  // namespace lecam

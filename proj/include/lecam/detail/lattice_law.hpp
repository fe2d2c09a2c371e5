#pragma once

// Exact law of a sum of independent finitely-supported step variables.
// Steps with identical laws are aggregated through multinomial count vectors,
// so a recombining lattice of N i.i.d. k-point steps costs C(N+k-1, k-1) atoms
// instead of k^N paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lecam/errors.hpp"

namespace lecam::detail {

struct StepLaw {
  std::vector<double> values;  // additive contribution of each outcome
  std::vector<double> probs;

  bool operator==(const StepLaw&) const = default;
};

struct Atom {
  double value;
  double prob;
};

inline constexpr double kMergeResolution = 1e-12;
// Atoms lighter than e^-80 (about 1.8e-35) are dropped during aggregation.
inline constexpr double kLogProbFloor = -80.0;

/// Sorts by value and coalesces neighbours within kMergeResolution of a group's first value.
inline std::vector<Atom> merge_atoms(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
  std::vector<Atom> out;
  out.reserve(atoms.size());
  double anchor = 0.0;
  for (const Atom& a : atoms) {
    if (a.prob == 0.0) continue;
    if (!out.empty() && a.value - anchor <= kMergeResolution * std::max(1.0, std::abs(anchor))) {
      out.back().prob += a.prob;
    } else {
      out.push_back(a);
      anchor = a.value;
    }
  }
  return out;
}

/// Number of count vectors of n draws over k categories (as a double, no overflow).
inline double count_vectors(std::size_t n, std::size_t k) {
  if (k == 0) return n == 0 ? 1.0 : 0.0;
  double c = 1.0;
  for (std::size_t i = 1; i < k; ++i) c = c * static_cast<double>(n + i) / static_cast<double>(i);
  return c;
}

/// Law of the sum of n i.i.d. draws from `law`.
inline std::vector<Atom> iid_sum_law(const StepLaw& law, std::size_t n, std::uint64_t max_atoms) {
  std::vector<double> vals, logp;
  for (std::size_t k = 0; k < law.values.size(); ++k) {
    if (law.probs[k] <= 0.0) continue;
    vals.push_back(law.values[k]);
    logp.push_back(std::log(law.probs[k]));
  }
  if (vals.empty()) throw InvalidParams("step law has no mass");
  if (count_vectors(n, vals.size()) > static_cast<double>(max_atoms))
    throw SizeLimitExceeded("multinomial aggregation exceeds the atom cap");

  const std::size_t k = vals.size();
  std::vector<double> lfact(n + 1);
  for (std::size_t i = 0; i <= n; ++i) lfact[i] = std::lgamma(static_cast<double>(i) + 1.0);

  std::vector<Atom> atoms;
  // Enumerate count vectors recursively: fill categories 0..k-2, last takes the rest.
  auto recurse = [&](auto&& self, std::size_t cat, std::size_t remaining, double logw,
                     double value) -> void {
    if (cat + 1 == k) {
      const double lw = logw - lfact[remaining] + static_cast<double>(remaining) * logp[cat];
      const double lp = lfact[n] + lw;
      if (lp > kLogProbFloor) atoms.push_back({value + static_cast<double>(remaining) * vals[cat], std::exp(lp)});
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      self(self, cat + 1, remaining - c,
           logw - lfact[c] + static_cast<double>(c) * logp[cat],
           value + static_cast<double>(c) * vals[cat]);
    }
  };
  if (n == 0) return {{0.0, 1.0}};
  recurse(recurse, 0, n, 0.0, 0.0);
  return merge_atoms(std::move(atoms));
}

/// Law of the sum of independent steps; consecutive or scattered identical laws share
/// one multinomial block.
inline std::vector<Atom> sum_law(const std::vector<StepLaw>& steps,
                                 std::uint64_t max_atoms = limits::kDefaultMaxLawAtoms) {
  std::vector<StepLaw> distinct;
  std::vector<std::size_t> multiplicity;
  for (const auto& s : steps) {
    auto it = std::find(distinct.begin(), distinct.end(), s);
    if (it == distinct.end()) {
      distinct.push_back(s);
      multiplicity.push_back(1);
    } else {
      ++multiplicity[static_cast<std::size_t>(it - distinct.begin())];
    }
  }
  std::vector<Atom> law{{0.0, 1.0}};
  for (std::size_t b = 0; b < distinct.size(); ++b) {
    auto block = iid_sum_law(distinct[b], multiplicity[b], max_atoms);
    if (static_cast<double>(law.size()) * static_cast<double>(block.size()) > static_cast<double>(max_atoms))
      throw SizeLimitExceeded("convolution exceeds the atom cap");
    std::vector<Atom> next;
    next.reserve(law.size() * block.size());
    for (const Atom& a : law)
      for (const Atom& c : block) next.push_back({a.value + c.value, a.prob * c.prob});
    law = merge_atoms(std::move(next));
  }
  return law;
}

}  // namespace lecam::detail

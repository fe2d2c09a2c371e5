#pragma once

// JSON readers for experiment, market, payoff, model and study specs, plus the
// fixed 12-significant-digit number formatting used by every writer.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lecam/blackscholes.hpp"
#include "lecam/errors.hpp"
#include "lecam/experiment.hpp"
#include "lecam/lan.hpp"
#include "lecam/lattice_market.hpp"
#include "lecam/payoff.hpp"

namespace lecam::io {

using json = nlohmann::json;

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Number rounded to 12 significant digits, so JSON output is as stable as CSV.
inline json num(double x) {
  if (!std::isfinite(x)) return fmt(x);
  return std::stod(fmt(x));
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SpecError("'" + path + "': " + e.what());
  }
}

namespace detail {

template <class T>
T get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SpecError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SpecError(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.is_object() && j.contains(key) ? get<T>(j, key) : fallback;
}

}  // namespace detail

inline FiniteExperiment parse_experiment(const json& j) {
  const auto outcomes = detail::get<std::vector<std::string>>(j, "outcomes");
  const json& ms = j.at("measures");
  if (!ms.is_object()) throw SpecError("'measures' must be an object");
  std::vector<NamedMeasure> measures;
  for (const auto& [name, mass] : ms.items()) {
    try {
      measures.push_back({name, mass.get<std::vector<double>>()});
    } catch (const json::exception&) {
      throw SpecError("measure '" + name + "' must be a list of numbers");
    }
  }
  return FiniteExperiment(outcomes, std::move(measures), detail::get<std::string>(j, "base"));
}

/// Return values are undiscounted gross returns; each step is discounted by its bond rate.
inline LatticeMarket parse_market(const json& j) {
  const auto n = detail::get<std::size_t>(j, "N");
  if (n == 0) throw SpecError("N must be at least 1");
  const double horizon = detail::get_or<double>(j, "T", 1.0);
  const double s0 = detail::get<double>(j, "s0");

  std::vector<double> rates(n, 0.0);
  if (j.contains("bond")) {
    const json& b = j.at("bond");
    if (b.contains("r_simple_per_step")) {
      rates = detail::get<std::vector<double>>(b, "r_simple_per_step");
      if (rates.size() != n) throw SpecError("r_simple_per_step needs N entries");
    } else if (b.contains("const")) {
      rates.assign(n, detail::get<double>(b, "const"));
    } else {
      throw SpecError("bond needs 'r_simple_per_step' or 'const'");
    }
  }

  const json& r = j.at("returns");
  const auto type = detail::get<std::string>(r, "type");
  std::vector<double> values, probs;
  std::vector<std::string> labels;
  if (type == "crr") {
    values = {detail::get<double>(r, "u"), detail::get<double>(r, "d")};
    if (!(values[0] > values[1] && values[1] > 0.0)) throw InvalidParams("CRR requires u > d > 0");
    const double p = detail::get_or<double>(r, "p", 0.5);
    probs = {p, 1.0 - p};
    labels = {"u", "d"};
  } else if (type == "table") {
    values = detail::get<std::vector<double>>(r, "values");
    probs = r.contains("probs") ? detail::get<std::vector<double>>(r, "probs")
                                : std::vector<double>(values.size(), 1.0 / static_cast<double>(values.size()));
    labels = detail::get_or<std::vector<std::string>>(r, "labels", {});
  } else {
    throw SpecError("unknown returns type '" + type + "'");
  }
  std::vector<StepDistribution> steps;
  for (double rate : rates) {
    StepDistribution s;
    for (double v : values) s.returns.push_back(v / (1.0 + rate));
    s.probs = probs;
    s.labels = labels;
    steps.push_back(std::move(s));
  }
  return LatticeMarket(s0, horizon, std::move(steps), std::move(rates));
}

inline Payoff parse_payoff(const json& j) {
  const auto type = detail::get<std::string>(j, "type");
  if (type == "call") return payoff_european_call(detail::get<double>(j, "K"));
  if (type == "put") return payoff_european_put(detail::get<double>(j, "K"));
  if (type == "straddle") return payoff_straddle(detail::get<double>(j, "K"));
  if (type == "strangle") return payoff_strangle(detail::get<double>(j, "K1"), detail::get<double>(j, "K2"));
  if (type == "digital") return payoff_digital(detail::get<double>(j, "K"));
  if (type == "barrier_up_out")
    return payoff_barrier_up_out(detail::get<double>(j, "K"), detail::get<double>(j, "B"));
  if (type == "sum") {
    const json& parts = j.at("terms");
    if (!parts.is_array() || parts.empty()) throw SpecError("'sum' needs a nonempty 'terms' list");
    Payoff total = parse_payoff(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) total = total + parse_payoff(parts[i]);
    total.kind = "sum";
    return total;
  }
  throw SpecError("unknown payoff type '" + type + "'");
}

/// {"const": v} or {"pieces": [[t0, v0], [t1, v1], ...]} with t0 = 0; a bare number is a constant.
inline PiecewiseConstant parse_piecewise(const json& j) {
  if (j.is_number()) return PiecewiseConstant(j.get<double>());
  if (j.contains("const")) return PiecewiseConstant(detail::get<double>(j, "const"));
  if (j.contains("pieces")) {
    std::vector<std::pair<double, double>> pieces;
    for (const auto& p : j.at("pieces")) {
      if (!p.is_array() || p.size() != 2) throw SpecError("each piece must be [t, value]");
      pieces.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return PiecewiseConstant(std::move(pieces));
  }
  throw SpecError("piecewise function needs 'const' or 'pieces'");
}

inline BSModel parse_model(const json& j) {
  BSModel m;
  m.s0 = detail::get<double>(j, "s0");
  m.horizon = detail::get_or<double>(j, "T", 1.0);
  m.sigma = parse_piecewise(j.at("sigma"));
  m.rate = j.contains("rate") ? parse_piecewise(j.at("rate")) : PiecewiseConstant(0.0);
  m.validate();
  return m;
}

inline TangentPath parse_tangent(const json& j) {
  const auto type = detail::get<std::string>(j, "type");
  if (type == "crr") return crr_tangent(detail::get_or<double>(j, "a", 1.0), detail::get_or<double>(j, "b", 1.0));
  if (type == "trinomial") {
    const auto p = detail::get<std::vector<double>>(j, "probs");
    if (p.size() != 3) throw SpecError("trinomial tangent needs three probabilities");
    return trinomial_tangent(p[0], p[1], p[2]);
  }
  if (type == "custom")
    return make_tangent(detail::get<std::vector<double>>(j, "p0"), detail::get<std::vector<double>>(j, "g"),
                        detail::get_or<double>(j, "C", 0.0));
  throw SpecError("unknown tangent type '" + type + "'");
}

struct Study {
  TangentPath tangent;
  BSModel bs;
  Payoff payoff;
  std::vector<std::size_t> ns;
  double threshold = -1.0;  // negative: not given
};

inline Study parse_study(const json& j) {
  Study s{parse_tangent(j.at("tangent")), parse_model(j.at("bs")), parse_payoff(j.at("payoff")),
          detail::get<std::vector<std::size_t>>(j, "Ns"), detail::get_or<double>(j, "threshold", -1.0)};
  if (s.ns.empty()) throw SpecError("'Ns' must not be empty");
  for (auto n : s.ns)
    if (n == 0) throw SpecError("every N must be positive");
  return s;
}

// ---------------------------------------------------------------------------

/// Rows of numbers as CSV with '\n' line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) { line(header); }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(fmt(v));
    line(cells);
  }
  void line(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw InvalidParams("CSV row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::size_t width_;
  std::ostringstream out_;
};

inline json to_json(const PriceReport& r) {
  json terms = json::array();
  for (const auto& t : r.terms)
    terms.push_back({{"a", num(t.coefficient)}, {"K", num(t.strike)}, {"power_Q1", num(t.power_q1)},
                     {"power_Q", num(t.power_q)}});
  return {{"price", num(r.price)}, {"s0", num(r.s0)}, {"discount", num(r.discount)}, {"terms", terms}};
}

}  // namespace lecam::io

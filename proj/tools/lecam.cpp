// Command-line front end: reads JSON specs and writes CSV or JSON reports.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lecam/io.hpp"
#include "lecam/lecam.hpp"

namespace {

using lecam::io::CsvWriter;
using lecam::io::fmt;
using lecam::io::json;
using lecam::io::num;

constexpr int kExitIncomplete = 1;
constexpr int kExitArbitrage = 2;
constexpr int kExitSpec = 3;
constexpr int kExitThreshold = 4;

struct Options {
  std::string market, payoff, study, measure, state, output;
  std::string format = "csv";
  double threshold = -1.0;
  double t = -1.0;
  bool bounds = false;
};

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return "(" + s + ")";
}

json to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

/// Resolves --measure: "designated" (unique measure), "centroid", or an explicit
/// comma-separated probability vector used at every step.
lecam::MartingaleMeasure select_measure(const lecam::LatticeMarket& m, const std::string& selector) {
  const auto set = lecam::solve_martingale_measures(m);
  if (selector.empty() || selector == "designated") {
    if (!set.complete())
      throw lecam::SpecError(
          "market is incomplete: the martingale measure is not unique; pass --bounds or an explicit --measure");
    return set.interior_point();
  }
  if (selector == "centroid") return set.interior_point();
  std::vector<double> q;
  std::stringstream ss(selector);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      q.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw lecam::SpecError("cannot parse measure '" + selector + "'");
    }
  }
  auto mm = lecam::MartingaleMeasure::iid(q, m.steps());
  if (!lecam::is_equivalent_martingale_measure(m, mm))
    throw lecam::SpecError("--measure is not an equivalent martingale measure of this market");
  return mm;
}

std::string price_output(const Options& o, const lecam::LatticeMarket& m, const lecam::Payoff& payoff) {
  if (o.bounds) {
    const auto b = lecam::price_bounds(m, payoff);
    if (o.format == "json") return json{{"lower", num(b.lower)}, {"upper", num(b.upper)}}.dump(2) + "\n";
    CsvWriter w({"lower", "upper"});
    w.row({b.lower, b.upper});
    return w.str();
  }
  const auto q = select_measure(m, o.measure);
  const double direct = lecam::price_direct(m, q, payoff);
  const auto report = lecam::price_via_tests(m, q, payoff);
  const double diff = std::abs(direct - report.price);
  if (o.format == "json") {
    json j = lecam::io::to_json(report);
    j["price_direct"] = num(direct);
    j["price_via_tests"] = num(report.price);
    j["abs_diff"] = num(diff);
    return j.dump(2) + "\n";
  }
  std::vector<std::string> header{"price_direct", "price_via_tests", "abs_diff", "discount"};
  std::vector<double> row{direct, report.price, diff, report.discount};
  for (std::size_t i = 0; i < report.terms.size(); ++i) {
    header.push_back("power_Q1_" + std::to_string(i + 1));
    header.push_back("power_Q_" + std::to_string(i + 1));
    row.push_back(report.terms[i].power_q1);
    row.push_back(report.terms[i].power_q);
  }
  CsvWriter w(header);
  w.row(row);
  return w.str();
}

std::string dynamics_output(const Options& o, const lecam::LatticeMarket& m, const lecam::Payoff& payoff) {
  const auto q = select_measure(m, o.measure);
  const auto state = lecam::parse_state(m, o.state);
  const auto report = lecam::dynamic_price_report(m, q, payoff, state);
  const double spot = lecam::spot_at(m, state);
  if (o.format == "json") {
    json j = lecam::io::to_json(report);
    j["t"] = state.t();
    j["spot"] = num(spot);
    return j.dump(2) + "\n";
  }
  CsvWriter w({"t", "spot", "price"});
  w.row({static_cast<double>(state.t()), spot, report.price});
  return w.str();
}

std::string complete_output(const Options& o, const lecam::LatticeMarket& m, bool& complete) {
  const auto set = lecam::solve_martingale_measures(m);
  complete = set.complete();
  if (o.format == "json") {
    json steps = json::array();
    for (const auto& s : set.steps) {
      json vs = json::array();
      for (const auto& v : s.vertices) vs.push_back(to_json(v));
      steps.push_back({{"unique", s.unique()}, {"vertices", vs}, {"vertex_interior", s.vertex_interior}});
    }
    return json{{"complete", complete}, {"steps", steps}}.dump(2) + "\n";
  }
  std::string out = std::string("complete: ") + (complete ? "true" : "false");
  // Binomial steps are reported by the up-probability tau of the first step.
  if (complete && m.support(0) == 2) {
    const auto& r = m.step(0).returns;
    const std::size_t up = r[0] > r[1] ? 0 : 1;
    out += ", tau = " + fmt(set.steps[0].vertices[0][up]);
  }
  out += "\n";
  for (std::size_t j = 0; j < set.steps.size(); ++j) {
    const auto& s = set.steps[j];
    out += "step " + std::to_string(j + 1) + ": " + (s.unique() ? "unique" : "polytope");
    for (std::size_t v = 0; v < s.vertices.size(); ++v)
      out += std::string(" ") + join(s.vertices[v]) + (s.vertex_interior[v] ? "" : "*");
    out += "\n";
  }
  if (!complete) out += "(* vertex on the boundary of the simplex)\n";
  return out;
}

std::string np_output(const Options& o, const lecam::LatticeMarket& m, const lecam::Payoff& payoff) {
  const auto q = select_measure(m, o.measure);
  const auto np = lecam::np_decomposition(m, q, payoff);
  if (o.format == "json")
    return json{{"cutoff", num(np.cutoff)},
                {"lambda0", num(np.priors.lambda0)},
                {"lambda1", num(np.priors.lambda1)},
                {"bayes_risk", num(np.bayes_risk)},
                {"closed_form_risk", num(np.closed_form_risk)},
                {"price", num(np.price)},
                {"test", to_json(np.test.values())}}
               .dump(2) +
           "\n";
  CsvWriter w({"cutoff", "lambda0", "lambda1", "bayes_risk", "closed_form_risk", "price"});
  w.row({np.cutoff, np.priors.lambda0, np.priors.lambda1, np.bayes_risk, np.closed_form_risk, np.price});
  return w.str();
}

std::string converge_output(const Options& o, const lecam::io::Study& s, bool& failed) {
  const auto rows = lecam::convergence_study(s.tangent, s.bs, s.payoff, s.ns);
  const double threshold = o.threshold > 0.0 ? o.threshold : s.threshold;
  failed = rows.size() > 1 && threshold > 0.0 && !(rows.back().abs_gap < threshold);
  if (o.format == "json") {
    json a = json::array();
    for (const auto& r : rows)
      a.push_back({{"N", r.n},
                   {"p_N", num(r.p_n)},
                   {"p_BS", num(r.p_bs)},
                   {"abs_gap", num(r.abs_gap)},
                   {"noether_max", num(r.noether_max)},
                   {"var_gap", num(r.var_gap)}});
    return a.dump(2) + "\n";
  }
  CsvWriter w({"N", "p_N", "p_BS", "abs_gap", "noether_max", "var_gap"});
  for (const auto& r : rows)
    w.line({std::to_string(r.n), fmt(r.p_n), fmt(r.p_bs), fmt(r.abs_gap), fmt(r.noether_max), fmt(r.var_gap)});
  return w.str();
}

std::string lan_output(const Options& o, const lecam::io::Study& s) {
  const double t = o.t >= 0.0 ? o.t : s.bs.horizon;
  const std::vector<std::string> header{"N",         "t",        "noether_max", "riemann_gap", "mean_gap_P0",
                                        "var_gap_P0", "cdf_dist", "alpha",       "mean_gap_Q",  "var_gap_Q"};
  CsvWriter w(header);
  json a = json::array();
  for (std::size_t n : s.ns) {
    const auto schedule = lecam::Schedule::from_limits(s.bs.sigma, s.bs.rate, n, s.bs.horizon);
    const auto lan = lecam::lan_diagnostics(s.tangent, schedule, t);
    const auto third = lecam::third_lemma_check(s.tangent, schedule, t);
    const std::vector<double> row{lan.noether_max, lan.riemann_gap, lan.mean_gap, lan.var_gap,
                                  lan.cdf_distance, lan.alpha,      third.mean_log_gap, third.var_gap};
    std::vector<std::string> cells{std::to_string(n), fmt(t)};
    json j{{"N", n}, {"t", num(t)}};
    for (std::size_t i = 0; i < row.size(); ++i) {
      cells.push_back(fmt(row[i]));
      j[header[i + 2]] = num(row[i]);
    }
    w.line(cells);
    a.push_back(j);
  }
  return o.format == "json" ? a.dump(2) + "\n" : w.str();
}

void emit(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.output, std::ios::binary);
  if (!out) throw lecam::SpecError("cannot write '" + o.output + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Option prices as powers of statistical tests on lattice and Gaussian experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--output", o.output, "Write the report to this file instead of stdout");
  };
  auto add_market = [&](CLI::App* cmd) {
    cmd->add_option("--market", o.market, "Market file (JSON)")->required()->check(CLI::ExistingFile);
  };
  auto add_payoff = [&](CLI::App* cmd) {
    cmd->add_option("--payoff", o.payoff, "Payoff file (JSON)")->required()->check(CLI::ExistingFile);
  };
  auto add_measure = [&](CLI::App* cmd) {
    return cmd->add_option("--measure", o.measure,
                           "designated | centroid | comma-separated per-step probabilities");
  };

  auto* price = app.add_subcommand("price", "Price a payoff directly and through test powers");
  add_market(price);
  add_payoff(price);
  auto* measure_opt = add_measure(price);
  price->add_flag("--bounds", o.bounds, "Report the price range over martingale measures")->excludes(measure_opt);
  add_common(price);

  auto* dynamics = app.add_subcommand("dynamics", "Price at an observed node");
  add_market(dynamics);
  add_payoff(dynamics);
  add_measure(dynamics);
  dynamics->add_option("--state", o.state, "Observed returns, e.g. \"u,d\"")->required();
  add_common(dynamics);

  auto* complete = app.add_subcommand("complete", "Solve martingale measures; exit 0 if complete, 1 if not");
  add_market(complete);
  add_common(complete);

  auto* bounds = app.add_subcommand("bounds", "Price range over martingale measures");
  add_market(bounds);
  add_payoff(bounds);
  add_common(bounds);

  auto* np = app.add_subcommand("np", "Neyman-Pearson and Bayes reading of a call price");
  add_market(np);
  add_payoff(np);
  add_measure(np);
  add_common(np);

  auto* converge = app.add_subcommand("converge", "Discrete prices against the Gaussian limit");
  converge->add_option("--study", o.study, "Study file (JSON)")->required()->check(CLI::ExistingFile);
  converge->add_option("--threshold", o.threshold, "Maximum final gap; exit 4 if exceeded")
      ->check(CLI::PositiveNumber);
  add_common(converge);

  auto* lan = app.add_subcommand("lan-report", "Exact law diagnostics of log S at a grid time");
  lan->add_option("--study", o.study, "Study file (JSON)")->required()->check(CLI::ExistingFile);
  lan->add_option("--t", o.t, "Grid time (defaults to T)")->check(CLI::NonNegativeNumber);
  add_common(lan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitSpec;
  }

  try {
    int rc = 0;
    std::string text;
    auto load_market = [&] { return lecam::io::parse_market(lecam::io::read_json_file(o.market)); };
    auto load_payoff = [&] { return lecam::io::parse_payoff(lecam::io::read_json_file(o.payoff)); };
    auto load_study = [&] { return lecam::io::parse_study(lecam::io::read_json_file(o.study)); };

    if (*price) {
      text = price_output(o, load_market(), load_payoff());
    } else if (*dynamics) {
      text = dynamics_output(o, load_market(), load_payoff());
    } else if (*complete) {
      bool is_complete = false;
      text = complete_output(o, load_market(), is_complete);
      rc = is_complete ? 0 : kExitIncomplete;
    } else if (*bounds) {
      o.bounds = true;
      text = price_output(o, load_market(), load_payoff());
    } else if (*np) {
      text = np_output(o, load_market(), load_payoff());
    } else if (*converge) {
      bool failed = false;
      text = converge_output(o, load_study(), failed);
      if (failed) rc = kExitThreshold;
    } else if (*lan) {
      text = lan_output(o, load_study());
    }
    emit(o, text);
    if (rc == kExitThreshold) std::cerr << "error: final gap exceeds the threshold\n";
    return rc;
  } catch (const lecam::NoArbitrageViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArbitrage;
  } catch (const lecam::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpec;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpec;
  }
}

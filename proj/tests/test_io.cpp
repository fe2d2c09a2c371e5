#include <gtest/gtest.h>

#include <fstream>

#include "lecam/io.hpp"

using namespace lecam;
using io::json;

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(io::fmt(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::fmt(1.0), "1");
  EXPECT_EQ(io::fmt(7.965567455405804), "7.96556745541");
  EXPECT_EQ(io::fmt(2.5e-7), "2.5e-07");
  EXPECT_EQ(io::num(1.0 / 3.0).dump(), "0.333333333333");
}

TEST(Csv, HeaderAndWidth) {
  io::CsvWriter w({"a", "b"});
  w.row({1.0, 0.5});
  EXPECT_EQ(w.str(), "a,b\n1,0.5\n");
  EXPECT_THROW(w.row({1.0}), InvalidParams);
}

TEST(ParseMarket, CrrAndBondDiscounting) {
  const auto m = io::parse_market(json::parse(R"({"N": 2, "s0": 4, "returns": {"type": "crr", "u": 2, "d": 0.5}})"));
  EXPECT_EQ(m.steps(), 2u);
  EXPECT_EQ(m.s0(), 4.0);
  EXPECT_EQ(m.step(1).returns, (std::vector<double>{2.0, 0.5}));

  const auto r = io::parse_market(json::parse(
      R"({"N": 2, "s0": 1, "bond": {"r_simple_per_step": [0.1, 0.0]},
          "returns": {"type": "table", "values": [1.32, 0.88], "probs": [0.25, 0.75]}})"));
  EXPECT_NEAR(r.step(0).returns[0], 1.2, 1e-15);
  EXPECT_NEAR(r.step(0).returns[1], 0.8, 1e-15);
  EXPECT_NEAR(r.step(1).returns[0], 1.32, 1e-15);
  EXPECT_EQ(r.step(0).probs, (std::vector<double>{0.25, 0.75}));
  EXPECT_NEAR(r.bond(2), 1.1, 1e-15);
}

TEST(ParseMarket, Errors) {
  EXPECT_THROW(io::parse_market(json::parse(R"({"N": 1, "returns": {"type": "crr", "u": 2, "d": 0.5}})")), SpecError);
  EXPECT_THROW(io::parse_market(json::parse(R"({"N": 1, "s0": 1, "returns": {"type": "crr", "u": 0.5, "d": 2}})")),
               InvalidParams);
  EXPECT_THROW(io::parse_market(json::parse(R"({"N": 1, "s0": 1, "returns": {"type": "spline"}})")), SpecError);
  EXPECT_THROW(io::parse_market(json::parse(
                   R"({"N": 2, "s0": 1, "bond": {"r_simple_per_step": [0.1]}, "returns": {"type": "crr", "u": 2, "d": 0.5}})")),
               SpecError);
  EXPECT_THROW(io::parse_market(json::parse(R"({"N": 1, "s0": "four", "returns": {"type": "crr", "u": 2, "d": 0.5}})")),
               SpecError);
}

TEST(ParsePayoff, AllKinds) {
  EXPECT_TRUE(io::parse_payoff(json::parse(R"({"type": "call", "K": 5})")).is_call());
  EXPECT_EQ(io::parse_payoff(json::parse(R"({"type": "put", "K": 5})")).value(3.0, 3.0), 2.0);
  EXPECT_EQ(io::parse_payoff(json::parse(R"({"type": "straddle", "K": 5})")).value(3.0, 3.0), 2.0);
  EXPECT_EQ(io::parse_payoff(json::parse(R"({"type": "strangle", "K1": 4, "K2": 6})")).value(7.0, 7.0), 1.0);
  EXPECT_EQ(io::parse_payoff(json::parse(R"({"type": "digital", "K": 5})")).value(6.0, 6.0), 1.0);
  const auto b = io::parse_payoff(json::parse(R"({"type": "barrier_up_out", "K": 5, "B": 9})"));
  EXPECT_TRUE(b.path_dependent());
  EXPECT_EQ(b.value(8.0, 8.5), 3.0);
  EXPECT_EQ(b.value(8.0, 9.5), 0.0);
  const auto s = io::parse_payoff(
      json::parse(R"({"type": "sum", "terms": [{"type": "call", "K": 5}, {"type": "digital", "K": 5}]})"));
  EXPECT_EQ(s.value(7.0, 7.0), 3.0);
  EXPECT_THROW(io::parse_payoff(json::parse(R"({"type": "asian", "K": 5})")), SpecError);
  EXPECT_THROW(io::parse_payoff(json::parse(R"({"type": "call"})")), SpecError);
}

TEST(ParseStudy, ReferenceAndPieces) {
  const auto s = io::parse_study(json::parse(R"({
    "tangent": {"type": "trinomial", "probs": [0.3, 0.4, 0.3]},
    "bs": {"s0": 100, "sigma": {"pieces": [[0, 0.1], [0.5, 0.3]]}, "rate": {"const": 0.05}},
    "payoff": {"type": "call", "K": 100},
    "Ns": [4, 8]})"));
  EXPECT_EQ(s.tangent.size(), 3u);
  EXPECT_EQ(s.bs.horizon, 1.0);
  EXPECT_EQ(s.bs.sigma(0.75), 0.3);
  EXPECT_EQ(s.bs.rate(0.2), 0.05);
  EXPECT_EQ(s.ns, (std::vector<std::size_t>{4, 8}));
  EXPECT_LT(s.threshold, 0.0);
  EXPECT_THROW(io::parse_study(json::parse(R"({"tangent": {"type": "crr"}, "bs": {"s0": 1, "sigma": 0.2},
                                              "payoff": {"type": "call", "K": 1}, "Ns": []})")),
               SpecError);
  EXPECT_THROW(io::parse_tangent(json::parse(R"({"type": "custom", "p0": [0.5, 0.5], "g": [1, 1]})")), InvalidTangent);
}

TEST(ParseExperiment, Basic) {
  const auto e = io::parse_experiment(
      json::parse(R"({"outcomes": ["a", "b"], "measures": {"Q": [0.5, 0.5], "Q1": [0.25, 0.75]}, "base": "Q"})"));
  EXPECT_EQ(e.size(), 2u);
  EXPECT_EQ(e.measure("Q1")[1], 0.75);
}

TEST(ReadFile, MissingAndMalformed) {
  EXPECT_THROW(io::read_json_file("/nonexistent/market.json"), SpecError);
  const std::string path = ::testing::TempDir() + "malformed.json";
  std::ofstream(path) << "{\"N\": 1,";
  EXPECT_THROW(io::read_json_file(path), SpecError);
}

TEST(ToJson, PriceReport) {
  const auto m = io::parse_market(json::parse(R"({"N": 1, "s0": 4, "returns": {"type": "crr", "u": 2, "d": 0.5}})"));
  const auto q = solve_martingale_measures(m).interior_point();
  const auto j = io::to_json(price_via_tests(m, q, payoff_european_call(5.0)));
  EXPECT_EQ(j.at("price").get<double>(), 1.0);
  EXPECT_EQ(j.at("terms").size(), 1u);
  EXPECT_EQ(j.at("terms")[0].at("power_Q1").dump(), "0.666666666667");
}

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "otlab/io.hpp"

using namespace otlab;

TEST(Numbers, RoundTrip) {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 0.130812}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(kInf), "inf");
  EXPECT_EQ(format_double(-kInf), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(parse_double(" inf "), kInf);
  EXPECT_EQ(parse_double("-inf"), -kInf);
  EXPECT_THROW(parse_double(""), std::invalid_argument);
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_double("nan"), std::invalid_argument);
}

TEST(MeasureCsv, RoundTrip) {
  DiscreteMeasure mu({Point{0.0, 1.0}, Point{0.25, -3.0}, Point{1.0 / 3.0, 2.0}}, {0.2, 0.3, 0.5});
  std::stringstream ss;
  write_measure_csv(ss, mu);
  EXPECT_EQ(ss.str().substr(0, 13), "x1,x2,weight\n");
  EXPECT_EQ(parse_measure_csv(ss), mu);
}

TEST(MeasureCsv, HeaderOptionalAndComments) {
  std::istringstream in("# atoms\n0, 0.5\n\n1, 0.5\n");
  const auto mu = parse_measure_csv(in);
  EXPECT_EQ(mu.size(), 2u);
  EXPECT_DOUBLE_EQ(mu.weight(1), 0.5);
}

TEST(MeasureCsv, Rejects) {
  std::istringstream ragged("x1,weight\n0,0.5\n1,2,0.5\n");
  EXPECT_THROW(parse_measure_csv(ragged), std::invalid_argument);
  std::istringstream bad("x1,weight\n0,abc\n");
  EXPECT_THROW(parse_measure_csv(bad), std::invalid_argument);
  std::istringstream empty("x1,weight\n");
  EXPECT_THROW(parse_measure_csv(empty), std::invalid_argument);
  std::istringstream unnormalized("0,0.5\n1,0.7\n");
  EXPECT_THROW(parse_measure_csv(unnormalized), std::invalid_argument);
  EXPECT_THROW(read_measure_csv("/nonexistent/mu.csv"), std::invalid_argument);
}

TEST(Json, ReportShape) {
  DiscreteMeasure mu({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  const auto r = solve_mk_lp(mu, mu, cost_matrix(CostSpec::quadratic(), mu.support(), mu.support()));
  const auto j = to_json(r);
  EXPECT_EQ(j["termination"], "optimal");
  EXPECT_EQ(j["plan"]["weights"].size(), 2u);
  EXPECT_EQ(j["plan"]["source"][1], 1.0);
  EXPECT_EQ(j["value"], 0.0);
  EXPECT_EQ(to_json(std::vector<double>{1.0, kInf})[1], "inf");
  EXPECT_EQ(to_json(Point{1.0, 2.0}).size(), 2u);
}

TEST(Specs, Cost) {
  EXPECT_EQ(parse_cost_spec("quadratic").describe(), CostSpec::quadratic().describe());
  EXPECT_DOUBLE_EQ(eval_cost(parse_cost_spec("power:3"), Point{2.0}), 8.0);
  EXPECT_NEAR(eval_cost(parse_cost_spec("cramer:poisson"), Point{2.0}), 2 * std::log(2.0) - 1, 1e-12);
  EXPECT_NEAR(eval_cost(parse_cost_spec("contracted:1"), Point{-0.7}), 0.7, 1e-12);
  EXPECT_THROW(parse_cost_spec("cubic"), std::invalid_argument);
  EXPECT_THROW(parse_cost_spec("power"), std::invalid_argument);
  EXPECT_THROW(parse_cost_spec("cramer:cauchy"), std::invalid_argument);
}

TEST(Specs, Noise) {
  EXPECT_TRUE(std::holds_alternative<ScaledGaussian>(parse_noise_spec("gaussian:2")));
  EXPECT_TRUE(std::holds_alternative<IIDSum>(parse_noise_spec("iid:bernoulli")));
  EXPECT_TRUE(std::holds_alternative<PowerGaussian>(parse_noise_spec("power:1.5")));
  EXPECT_TRUE(std::holds_alternative<GibbsOf>(parse_noise_spec("gibbs")));
  EXPECT_THROW(parse_noise_spec("uniform"), std::invalid_argument);
  EXPECT_TRUE(std::holds_alternative<IIDSum>(noise_for_cost(parse_cost_spec("cramer:exponential"), 1)));
  EXPECT_THROW(noise_for_cost(CostSpec::power(3.0), 1), std::invalid_argument);
}

TEST(Specs, Grid) {
  const auto g = parse_grid_spec("-1:1:5");
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g[1], -0.5);
  EXPECT_THROW(parse_grid_spec("1:0:5"), std::invalid_argument);
  EXPECT_THROW(parse_grid_spec("0:1:2.5"), std::invalid_argument);
  EXPECT_THROW(parse_grid_spec("0:1"), std::invalid_argument);
}

TEST(Hash, Fnv1a) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "otlab/experiments.hpp"
#include "otlab/io.hpp"

using namespace otlab;

namespace {

std::vector<Point> grid(double a, double b, std::size_t n) {
  std::vector<Point> out;
  for (double x : linspace(a, b, n)) out.push_back(Point{x});
  return out;
}

Instance small_instance() {
  DiscreteMeasure mu(grid(0, 1, 4), {0.1, 0.4, 0.3, 0.2});
  DiscreteMeasure nu(grid(0, 1, 4), {0.25, 0.25, 0.35, 0.15});
  return Instance{mu, nu, CostSpec::quadratic(), TestFamily::canonical_1d(8, 1.0)};
}

}  // namespace

TEST(GammaSweep, SingletonMatchesDirectSolve) {
  const auto inst = small_instance();
  const auto rows = gamma_sweep(inst, {16});
  ASSERT_EQ(rows.size(), 1u);
  const auto pi = build_reference_gibbs(inst.mu, reference_targets(inst), inst.cost, 16);
  const auto r = solve_tk_sinkhorn(inst.mu, inst.nu, pi);
  EXPECT_EQ(rows[0].value, r.value);
  EXPECT_EQ(rows[0].iterations, r.iterations);
  EXPECT_EQ(rows[0].seconds, 0.0);
  EXPECT_FALSE(rows[0].alpha.has_value());
}

TEST(GammaSweep, TypicalSecondMarginalGivesZero) {
  auto inst = small_instance();
  for (int k : {1, 8, 64}) {
    inst.nu = second_marginal(build_reference_gibbs(inst.mu, reference_targets(inst), inst.cost, k));
    const auto rows = gamma_sweep(inst, {k});
    EXPECT_NEAR(rows[0].value, 0.0, 1e-9) << "k=" << k;
  }
}

TEST(GammaSweep, EntropyBoundAndSorting) {
  const auto inst = small_instance();
  const auto rows = gamma_sweep(inst, {64, 1, 8});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].k, 1);
  EXPECT_EQ(rows[2].k, 64);
  for (const auto& r : rows) EXPECT_LE(std::abs(r.gap_to_limit), std::log(4.0) / r.k + 1e-9);
  EXPECT_THROW(gamma_sweep(inst, {}), std::invalid_argument);
  EXPECT_THROW(gamma_sweep(inst, {0}), std::invalid_argument);
}

TEST(Recovery, FullSupportKeepsNu) {
  const auto rows = recovery_sequence(small_instance(), {1, 4});
  for (const auto& r : rows) {
    EXPECT_TRUE(r.nu_reachable);
    EXPECT_EQ(r.distance, 0.0);
  }
}

TEST(Recovery, LatticeKernelOffLatticeNu) {
  const CramerFamily bern{CramerLaw::BernoulliPM1, 1.0, {}};
  Instance inst{DiscreteMeasure::dirac(Point{0.0}), DiscreteMeasure::dirac(Point{0.3}), CostSpec::cramer(bern),
                TestFamily::canonical_1d(8, 1.0), KernelMode::density, IIDSum{bern}, grid(-1, 1, 2049)};
  const auto rows = recovery_sequence(inst, dyadic_ks(64));
  ASSERT_EQ(rows.size(), 7u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_FALSE(rows[i].nu_reachable);
    EXPECT_TRUE(std::isfinite(rows[i].value));
    if (i > 0) EXPECT_LE(rows[i].distance, rows[i - 1].distance + 1e-12) << "k=" << rows[i].k;
  }
  EXPECT_LT(rows.back().distance, rows.front().distance);
  EXPECT_NEAR(rows.back().value, cramer_closed(bern, 0.3), 0.05);
}

TEST(DoubleLimit, AlphaZeroAndMonotone) {
  const auto inst = small_instance();
  const auto res = double_limit(inst, {4, 32}, {0.0, 1.0, 4.0, 16.0});
  ASSERT_EQ(res.cells.size(), 8u);
  // Penalty off: every source atom goes to its cheapest target.
  double cheapest = 0.0;
  for (std::size_t z = 0; z < inst.mu.size(); ++z) {
    double best = kInf;
    for (const auto& x : inst.nu.support()) best = std::min(best, std::pow(inst.mu.atom(z)[0] - x[0], 2) / 2);
    cheapest += inst.mu.weight(z) * best;
  }
  EXPECT_NEAR(res.mk_alpha[0], cheapest, 1e-12);
  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    const auto& c = res.cells[i];
    if (i % 4 != 0) EXPECT_GE(c.value, res.cells[i - 1].value - 1e-9);
    if (i % 4 == 0) EXPECT_NEAR(c.value, 0.0, 1e-9);  // rho = pi^k
  }
  EXPECT_LE(res.mk_alpha.back(), res.mk + 1e-12);
}

TEST(DoubleLimit, RejectsNonSeparatingFamily) {
  auto inst = small_instance();
  inst.fam = TestFamily::canonical_1d(1, 1.0);
  EXPECT_THROW(double_limit(inst, {1}, {1.0}), std::invalid_argument);
}

TEST(Trace, DistanceShrinks) {
  const auto rows = minimizer_trace(small_instance(), {2, 64, 512}, 8.0);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LT(rows[2].distance, rows[0].distance);
  EXPECT_LT(rows[2].value_gap, rows[0].value_gap);
}

TEST(Schedules, Dyadic) {
  EXPECT_EQ(dyadic_ks(1024).size(), 11u);
  EXPECT_EQ(dyadic_alphas(64).back(), 64.0);
}

TEST(Config, ParsesAndHashes) {
  const std::string text = R"(
seed = 7
ks = [1, 4]
alphas = [2.0]
[instance]
cost = "quadratic"
mu = { grid = [0.0, 1.0, 5], weights = "random" }
nu = { points = [0.0, 0.5, 1.0], weights = [0.2, 0.3, 0.5] }
[solver]
penalty_method = "mirror"
[particles]
k = 2
n_values = [10, 20]
replicates = 500
)";
  const auto cfg = parse_config(text);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.inst.mu.size(), 5u);
  EXPECT_EQ(cfg.inst.nu.weight(2), 0.5);
  EXPECT_EQ(cfg.ks, (std::vector<int>{1, 4}));
  EXPECT_EQ(cfg.sweep.penalty.method, PenaltyMethod::mirror_descent);
  EXPECT_EQ(cfg.ldp.replicates, 500u);
  EXPECT_EQ(cfg.ldp.seed, 7u);
  EXPECT_EQ(parse_config(text).inst.mu, cfg.inst.mu);
  const auto h = output_header(cfg);
  EXPECT_EQ(h.rfind("# otlab ", 0), 0u);
  EXPECT_NE(h.find("config_hash=" + hex64(fnv1a64(text))), std::string::npos);
  EXPECT_NE(h.find(" seed=7"), std::string::npos);
}

TEST(Config, Defaults) {
  const auto cfg = parse_config("[instance]\nmu = { points = [0.0] }\nnu = { points = [1.0] }\n");
  EXPECT_EQ(cfg.ks, dyadic_ks());
  EXPECT_EQ(cfg.alphas, dyadic_alphas());
  EXPECT_FALSE(cfg.sweep.timing);
}

TEST(Config, MeasureFileRelativeToConfig) {
  const auto dir = std::filesystem::temp_directory_path() / "otlab_config_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "mu.csv") << "x1,weight\n0,0.5\n1,0.5\n";
  std::ofstream(dir / "run.toml") << "[instance]\nmu = { file = \"mu.csv\" }\nnu = { file = \"mu.csv\" }\n";
  const auto cfg = load_config((dir / "run.toml").string());
  EXPECT_EQ(cfg.inst.mu.size(), 2u);
  std::filesystem::remove_all(dir);
}

TEST(Config, Rejects) {
  EXPECT_THROW(parse_config("seed = "), std::invalid_argument);
  EXPECT_THROW(parse_config("seed = 1\n"), std::invalid_argument);
  const std::string base = "[instance]\nmu = { points = [0.0] }\nnu = { points = [1.0] }\n";
  EXPECT_THROW(parse_config("seed = -1\n" + base), std::invalid_argument);
  EXPECT_THROW(parse_config("ks = [0]\n" + base), std::invalid_argument);
  EXPECT_THROW(parse_config(base + "kernel = \"lattice\"\n"), std::invalid_argument);
  EXPECT_THROW(parse_config(base + "cost = \"cubic\"\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[instance]\nmu = { points = [0.0, 1.0], weights = [1.0] }\nnu = { points = [1.0] }\n"),
               std::invalid_argument);
}

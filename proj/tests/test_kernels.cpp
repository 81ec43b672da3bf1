#include <gtest/gtest.h>

#include <cmath>

#include "otlab/kernels.hpp"

using namespace otlab;

namespace {

std::vector<Point> pts(std::initializer_list<double> xs) {
  std::vector<Point> out;
  for (double x : xs) out.push_back(Point{x});
  return out;
}

std::vector<Point> grid(double a, double b, std::size_t n) {
  std::vector<Point> out;
  for (double x : linspace(a, b, n)) out.push_back(Point{x});
  return out;
}

void expect_stochastic(const ReferenceCoupling& pi) {
  for (std::size_t z = 0; z < pi.rows.rows(); ++z) {
    double s = 0.0;
    for (double v : pi.rows.row(z)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const auto m0 = marginal0(pi.as_coupling());
  ASSERT_EQ(m0.size(), pi.mu.size());
  for (std::size_t z = 0; z < m0.size(); ++z) EXPECT_NEAR(m0.weight(z), pi.mu.weight(z), 1e-15);
}

}  // namespace

TEST(Gibbs, TwoTargets) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  auto pi = build_reference_gibbs(mu, pts({0.0, 1.0}), CostSpec::quadratic(), 2);
  EXPECT_NEAR(pi.rows(0, 0), 0.731059, 1e-6);
  EXPECT_NEAR(pi.rows(0, 1), 0.268941, 1e-6);
  EXPECT_NEAR(pi.rows(0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  expect_stochastic(pi);
  EXPECT_EQ(pi.mode, KernelMode::gibbs);
}

TEST(Gibbs, ConcentratesAndUniformForZeroCost) {
  auto mu = DiscreteMeasure::dirac(Point{0.3});
  auto pi = build_reference_gibbs(mu, pts({0.3, 1.3}), CostSpec::quadratic(), 50);
  EXPECT_GE(pi.rows(0, 0), 1.0 - std::exp(-25.0) - 1e-15);
  Matrix c(1, 3, 0.0);
  auto flat = build_reference_gibbs(mu, CostMatrix({Point{0.3}}, pts({0.0, 1.0, 2.0}), c), 7);
  for (double v : flat.rows.row(0)) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Gibbs, InfiniteCostsAndErrors) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  const CostSpec bern = CostSpec::cramer({CramerLaw::BernoulliPM1, 1.0, {}});
  auto pi = build_reference_gibbs(mu, pts({-3.0, 0.0, 0.5, 3.0}), bern, 3);
  EXPECT_EQ(pi.rows(0, 0), 0.0);
  EXPECT_EQ(pi.log_rows(0, 0), -kInf);
  EXPECT_EQ(pi.rows(0, 3), 0.0);
  expect_stochastic(pi);
  EXPECT_THROW(build_reference_gibbs(mu, pts({-3.0, 3.0}), bern, 3), std::invalid_argument);
  EXPECT_THROW(build_reference_gibbs(mu, pts({0.0}), CostSpec::quadratic(), 0),
               std::invalid_argument);
}

TEST(Gibbs, NoUnderflowAtLargeK) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  auto pi = build_reference_gibbs(mu, pts({5.0, 6.0}), CostSpec::quadratic(), 100000);
  EXPECT_EQ(pi.rows(0, 0), 1.0);
  expect_stochastic(pi);
}

TEST(Gibbs, ConcentrationMonotoneInK) {
  DiscreteMeasure mu(pts({0.0, 0.5, 1.0}), {0.2, 0.3, 0.5});
  const auto target = grid(-1.0, 2.0, 13);
  std::vector<double> prev(3, 2.0);
  for (int k = 1; k <= 256; k *= 2) {
    auto pi = build_reference_gibbs(mu, target, CostSpec::quadratic(), k);
    for (std::size_t z = 0; z < 3; ++z) {
      double outside = 0.0;
      for (std::size_t x = 0; x < target.size(); ++x) {
        if (target[x] != mu.atom(z)) outside += pi.rows(z, x);
      }
      EXPECT_LE(outside, prev[z]);
      prev[z] = outside;
    }
  }
}

TEST(Density, ScaledGaussianExample) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  auto pi = build_reference_density(mu, pts({-1.0, 0.0, 1.0}), ScaledGaussian{1}, 1);
  EXPECT_NEAR(pi.rows(0, 0), 0.274069, 1e-6);
  EXPECT_NEAR(pi.rows(0, 1), 0.451863, 1e-6);
  EXPECT_EQ(pi.rows(0, 0), pi.rows(0, 2));
  expect_stochastic(pi);
}

TEST(Density, MatchesGibbsForGaussianQuadratic) {
  DiscreteMeasure mu(pts({-0.5, 0.25, 1.0}), {0.2, 0.3, 0.5});
  const auto target = grid(-2.0, 3.0, 41);
  for (int k : {1, 3, 16, 200}) {
    auto a = build_reference_density(mu, target, ScaledGaussian{1}, k);
    auto b = build_reference_gibbs(mu, target, CostSpec::quadratic(), k);
    for (std::size_t i = 0; i < a.rows.data().size(); ++i) {
      EXPECT_NEAR(a.rows.data()[i], b.rows.data()[i], 1e-12);
    }
  }
}

TEST(Density, PoissonLattice) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  const int k = 3;
  std::vector<Point> target;
  for (int j = 0; j <= 30; ++j) target.push_back(Point{j / 3.0});
  target.push_back(Point{0.5});  // off lattice
  auto pi = build_reference_density(mu, target, IIDSum{{CramerLaw::PoissonMean1, 1.0, {}}}, k);
  // Poisson(3) masses at 3x, renormalized over j <= 30.
  double total = 0.0;
  std::vector<double> mass;
  for (int j = 0; j <= 30; ++j) {
    mass.push_back(std::exp(-3.0 + j * std::log(3.0) - std::lgamma(j + 1.0)));
    total += mass.back();
  }
  for (int j = 0; j <= 30; ++j) EXPECT_NEAR(pi.rows(0, j), mass[j] / total, 1e-14);
  EXPECT_EQ(pi.rows(0, 31), 0.0);
  expect_stochastic(pi);
}

TEST(Density, BernoulliNeedsMatchingLattice) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  const IIDSum bern{{CramerLaw::BernoulliPM1, 1.0, {}}};
  auto pi = build_reference_density(mu, pts({-1.0, 0.0, 1.0}), bern, 2);
  EXPECT_NEAR(pi.rows(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(pi.rows(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(pi.rows(0, 2), 0.25, 1e-15);
  EXPECT_THROW(build_reference_density(mu, pts({-0.7, 0.3}), bern, 2), std::invalid_argument);
}

TEST(Density, ExponentialGamma) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  const auto target = grid(-1.0, 4.0, 51);
  const int k = 4;
  auto pi = build_reference_density(mu, target, IIDSum{{CramerLaw::ExponentialMean1, 1.0, {}}}, k);
  double total = 0.0;
  std::vector<double> dens;
  for (const auto& x : target) {
    const double s = x[0];
    dens.push_back(s > 0 ? std::pow(s, k - 1) * std::exp(-k * s) : 0.0);
    total += dens.back();
  }
  for (std::size_t i = 0; i < target.size(); ++i) EXPECT_NEAR(pi.rows(0, i), dens[i] / total, 1e-13);
}

TEST(Density, PowerGaussian) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  const auto target = grid(-2.0, 2.0, 40);  // excludes 0
  auto pi = build_reference_density(mu, target, PowerGaussian{1.0}, 3);
  double total = 0.0;
  std::vector<double> dens;
  for (const auto& x : target) {
    const double r = std::abs(x[0]);
    dens.push_back(std::pow(r, -0.5) * std::exp(-3.0 * r));
    total += dens.back();
  }
  for (std::size_t i = 0; i < target.size(); ++i) EXPECT_NEAR(pi.rows(0, i), dens[i] / total, 1e-13);
  EXPECT_THROW(build_reference_density(mu, pts({0.0, 1.0}), PowerGaussian{1.0}, 3),
               std::domain_error);
  EXPECT_THROW(build_reference_density(mu, pts({0.0}), GibbsOf{CostSpec::quadratic()}, 3),
               std::invalid_argument);
}

TEST(MonteCarlo, MeanWithinStandardError) {
  auto mu = DiscreteMeasure::dirac(Point{0.4});
  const auto target = grid(-3.0, 4.0, 701);
  const std::size_t n = 100000;
  const int k = 4;
  auto pi = build_reference_montecarlo(mu, target, ScaledGaussian{1}, k, n, 17);
  double mean = 0.0;
  for (std::size_t x = 0; x < target.size(); ++x) mean += pi.rows(0, x) * target[x][0];
  const double sigma = 1.0 / std::sqrt(static_cast<double>(k));
  EXPECT_NEAR(mean, 0.4, 3 * sigma / std::sqrt(static_cast<double>(n)));
  expect_stochastic(pi);
}

TEST(MonteCarlo, DeterministicAndSingleSample) {
  DiscreteMeasure mu(pts({0.0, 1.0}), {0.5, 0.5});
  const auto target = grid(-2.0, 3.0, 21);
  auto a = build_reference_montecarlo(mu, target, ScaledGaussian{1}, 2, 1000, 5);
  auto b = build_reference_montecarlo(mu, target, ScaledGaussian{1}, 2, 1000, 5);
  EXPECT_EQ(a.rows, b.rows);
  auto one = build_reference_montecarlo(mu, target, ScaledGaussian{1}, 2, 1, 5);
  for (std::size_t z = 0; z < 2; ++z) {
    int ones = 0;
    for (double v : one.rows.row(z)) {
      if (v == 1.0) ++ones;
      else EXPECT_EQ(v, 0.0);
    }
    EXPECT_EQ(ones, 1);
  }
  EXPECT_THROW(build_reference_montecarlo(mu, target, ScaledGaussian{1}, 2, 0, 5),
               std::invalid_argument);
}

TEST(MonteCarlo, AgreesWithDensity) {
  auto mu = DiscreteMeasure::dirac(Point{0.0});
  const auto target = grid(-3.0, 3.0, 25);
  const std::size_t n = 100000;
  for (int k : {1, 4}) {
    auto d = build_reference_density(mu, target, ScaledGaussian{1}, k);
    auto m = build_reference_montecarlo(mu, target, ScaledGaussian{1}, k, n, 99);
    // Binning to cells vs midpoint densities differ by O(h^2); compare
    // against 4 standard errors plus that discretization allowance. The two
    // end cells also collect the tails, so only interior cells are compared.
    const double h = 0.25;
    for (std::size_t x = 1; x + 1 < target.size(); ++x) {
      const double p = d.rows(0, x);
      const double se = std::sqrt(p * (1 - p) / n);
      EXPECT_NEAR(m.rows(0, x), p, 4 * se + k * h * h * p / 6 + 1e-12) << k << " " << x;
    }
  }
}

TEST(NearestTarget, TiesGoToLowestIndex) {
  auto target = pts({1.0, 0.0, 2.0});
  NearestTarget nt(target);
  EXPECT_EQ(nt(Point{0.5}), 0u);
  EXPECT_EQ(nt(Point{1.5}), 0u);
  EXPECT_EQ(nt(Point{-4.0}), 1u);
  EXPECT_EQ(nt(Point{9.0}), 2u);
  std::vector<Point> t2{Point{0.0, 0.0}, Point{1.0, 0.0}};
  NearestTarget n2(t2);
  EXPECT_EQ(n2(Point{0.5, 3.0}), 0u);
  EXPECT_EQ(n2(Point{0.6, 3.0}), 1u);
}

TEST(SecondMarginal, MatchesColumnSums) {
  DiscreteMeasure mu(pts({0.0, 1.0}), {0.25, 0.75});
  auto pi = build_reference_gibbs(mu, pts({0.0, 1.0}), CostSpec::quadratic(), 1);
  auto nu = second_marginal(pi);
  const double a = 1.0 / (1.0 + std::exp(-0.5));
  EXPECT_NEAR(nu.weight(0), 0.25 * a + 0.75 * (1 - a), 1e-15);
}

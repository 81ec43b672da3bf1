#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "otlab/costs.hpp"
#include "otlab/legendre.hpp"

using namespace otlab;

namespace {

template <class F>
GridFunction1D sample(const std::vector<double>& grid, F f) {
  std::vector<double> v;
  for (double y : grid) v.push_back(f(y));
  return GridFunction1D(grid, v);
}

}  // namespace

TEST(GridFunction, Validation) {
  EXPECT_THROW(GridFunction1D({0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(GridFunction1D({0.0, 1.0}, {kInf, kInf}), std::invalid_argument);
  EXPECT_THROW(GridFunction1D({0.0, 1.0}, {-kInf, 0.0}), std::invalid_argument);
  EXPECT_NO_THROW(GridFunction1D({0.0, 1.0}, {kInf, 0.0}));
}

TEST(Lft, QuadraticSelfDual) {
  auto f = sample(linspace(-5, 5, 401), [](double y) { return 0.5 * y * y; });
  const auto xs = linspace(-3, 3, 61);
  auto g = lft(f, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(g.value(i), 0.5 * xs[i] * xs[i], 1e-3);
}

TEST(Lft, AbsoluteValue) {
  auto f = sample(linspace(-5, 5, 401), [](double y) { return std::abs(y); });
  const auto xs = linspace(-3, 3, 61);
  auto g = lft(f, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::abs(xs[i]) <= 1.0) {
      EXPECT_NEAR(g.value(i), 0.0, 1e-12);
    } else {
      EXPECT_NEAR(g.value(i), 5.0 * (std::abs(xs[i]) - 1.0), 1e-9);
    }
  }
}

TEST(Lft, PoissonAtTwo) {
  auto f = sample(linspace(-6, 4, 20001), [](double z) { return std::expm1(z); });
  EXPECT_NEAR(lft_at(f, 2.0), 2.0 * std::log(2.0) - 1.0, 1e-4);
}

TEST(Lft, FastAgreesWithReference) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> grid = linspace(-3, 3, 97), vals;
    for (double y : grid) vals.push_back(std::abs(y) * (1 + 0.3 * n(gen)) + 0.2 * n(gen));
    if (t % 3 == 0) vals[5] = kInf;
    GridFunction1D f(grid, vals);
    const auto xs = linspace(-4, 4, 203);
    auto a = lft(f, xs);
    auto b = lft_fast(f, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(a.value(i), b.value(i), 1e-12);
  }
}

TEST(Lft, YoungFenchelConvexityAndBiconjugate) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto grid = linspace(-2, 2, 41);
  std::vector<double> vals;
  for (double y : grid) vals.push_back(y * y + 0.3 * u(gen));
  GridFunction1D f(grid, vals);
  const auto xs = linspace(-6, 6, 121);
  auto fs = lft(f, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      EXPECT_GE(fs.value(i), xs[i] * grid[j] - f.value(j));
    }
  }
  EXPECT_TRUE(fs.is_convex(1e-12));
  auto fss = lft(fs, grid);
  const auto hull = lft(lft_fast(f, linspace(-50, 50, 20001)), grid);
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_LE(fss.value(j), f.value(j) + 1e-12);
  // At vertices of the lower hull the biconjugate (over a wide dual grid)
  // reproduces f.
  std::size_t touching = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (std::abs(hull.value(j) - f.value(j)) <= 1e-9) ++touching;
  }
  EXPECT_GE(touching, 2u);
}

TEST(CramerNumeric, GaussianBernoulliExponential) {
  {
    auto f = sample(linspace(-12, 12, 20001), [](double z) { return 0.5 * z * z; });
    auto c = cramer_numeric(f, linspace(-2, 2, 81));
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c.value(i), 0.5 * c.x(i) * c.x(i), 1e-4);
  }
  {
    auto f = sample(linspace(-15, 15, 20001), [](double z) {
      return std::abs(z) + std::log1p(std::exp(-2 * std::abs(z))) - std::log(2.0);
    });
    auto c = cramer_numeric(f, linspace(-0.99, 0.99, 199));
    const CramerFamily b{CramerLaw::BernoulliPM1, 1.0, {}};
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_NEAR(c.value(i), cramer_closed(b, c.x(i)), 1e-4) << c.x(i);
    }
  }
  {
    const CramerFamily e{CramerLaw::ExponentialMean1, 1.0, {}};
    auto f = sample_log_mgf(e, default_zeta_grid(e.law));
    auto c = cramer_numeric(f, linspace(0.2, 3, 57));
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_NEAR(c.value(i), c.x(i) - 1 - std::log(c.x(i)), 1e-4) << c.x(i);
    }
  }
}

TEST(CramerNumeric, OutsideSlopeRangeIsInfinite) {
  auto f = sample(linspace(-3, 3, 61), [](double z) { return 0.5 * z * z; });
  std::vector<double> u{-5.0, 0.0, 5.0};
  auto c = cramer_numeric(f, u);
  EXPECT_EQ(c.value(0), kInf);
  EXPECT_EQ(c.value(1), 0.0);
  EXPECT_EQ(c.value(2), kInf);
  EXPECT_THROW(cramer_numeric(GridFunction1D({0.0, 1.0}, {0.0, kInf}), u), std::invalid_argument);
}

TEST(MoreauYosida, Examples) {
  const auto grid = linspace(-2, 2, 81);
  auto c = moreau_yosida(sample(grid, [](double) { return 1.5; }), 3);
  for (double v : c.values()) EXPECT_EQ(v, 1.5);
  auto z = moreau_yosida(sample(grid, [](double) { return 0.0; }), 1);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
  auto f = sample(grid, [](double y) { return std::min(std::abs(y), 1.0); });
  auto m = moreau_yosida(f, 1);
  EXPECT_EQ(m.value(40), 0.0);
  EXPECT_EQ(m.value(80), 1.0);
  EXPECT_THROW(moreau_yosida(GridFunction1D({0.0, 1.0}, {0.0, kInf}), 1), std::invalid_argument);
}

TEST(MoreauYosida, PropertiesAndAgreement) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto grid = linspace(-1, 1, 101);
  std::vector<double> vals;
  for (std::size_t i = 0; i < grid.size(); ++i) vals.push_back(u(gen));
  GridFunction1D f(grid, vals);
  GridFunction1D prev = moreau_yosida(f, 1);
  for (double n : {2.0, 4.0, 8.0, 16.0, 64.0}) {
    auto a = moreau_yosida(f, n);
    auto b = moreau_yosida_direct(f, n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EXPECT_NEAR(a.value(i), b.value(i), 1e-12);
      EXPECT_GE(a.value(i), f.value(i));
      EXPECT_LE(a.value(i), prev.value(i));
      if (i > 0) EXPECT_LE(std::abs(a.value(i) - a.value(i - 1)), n * (grid[i] - grid[i - 1]) + 1e-12);
    }
    prev = a;
  }
}

TEST(MoreauYosida, ConvergesForLipschitz) {
  const auto grid = linspace(-1, 1, 2001);
  auto f = sample(grid, [](double y) { return std::sin(3 * y) - std::abs(y); });
  auto m = moreau_yosida(f, 4096);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, m.value(i) - f.value(i));
  EXPECT_LT(err, 1e-3);
}

TEST(MoreauYosida, DecreasingSupremumAgainstInfCompactPenalty) {
  const auto grid = linspace(-3, 3, 301);
  auto f = sample(grid, [](double y) { return std::cos(2 * y); });
  auto j = sample(grid, [](double y) { return y * y; });
  double prev = kInf;
  for (double n : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 1024.0}) {
    auto fn = moreau_yosida(f, n);
    double s = -kInf;
    for (std::size_t i = 0; i < grid.size(); ++i) s = std::max(s, fn.value(i) - j.value(i));
    EXPECT_LE(s, prev);
    prev = s;
  }
  double limit = -kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) limit = std::max(limit, f.value(i) - j.value(i));
  EXPECT_NEAR(prev, limit, 1e-12);
}

TEST(ConjugateGammaCheck, SmoothedAbsoluteValue) {
  const auto grid = linspace(-20, 20, 8001);
  std::vector<GridFunction1D> gs;
  for (double n : {1.0, 4.0, 16.0, 100.0}) {
    gs.push_back(sample(grid, [n](double y) { return std::sqrt(y * y + 1 / n); }));
  }
  auto g = sample(grid, [](double y) { return std::abs(y); });
  std::vector<double> probes{-0.5, 0.0, 0.5};
  auto r = conjugate_gamma_check(gs, g, probes, 0.1);
  EXPECT_TRUE(r.inputs_convex);
  EXPECT_TRUE(r.bound_ok);
  EXPECT_NEAR(r.linear_bound, 1.0, 1e-12);
  EXPECT_TRUE(r.functions_converge);
  ASSERT_EQ(r.probes.size(), 3u);
  EXPECT_LE(std::abs(r.probes[2].conjugate_values.back()), 0.087);
  EXPECT_NEAR(r.probes[2].conjugate_values.back(), -std::sqrt(0.75 / 100), 1e-3);
  EXPECT_TRUE(r.ok());
}

TEST(ConjugateGammaCheck, ConstantAndShiftedSequences) {
  const auto grid = linspace(-4, 4, 801);
  auto g = sample(grid, [](double y) { return 0.5 * y * y; });
  std::vector<GridFunction1D> same(3, g);
  std::vector<double> probes{-1.0, 0.3, 2.0};
  EXPECT_TRUE(conjugate_gamma_check(same, g, probes).ok());

  std::vector<GridFunction1D> shifted;
  for (double n : {1.0, 10.0, 100.0}) {
    shifted.push_back(sample(grid, [n](double y) { return 0.5 * y * y + 1 / n; }));
  }
  auto r = conjugate_gamma_check(shifted, g, probes, 0.02);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.probes[1].conjugate_values[0], 0.5 * 0.09 - 1.0, 1e-9);
}

TEST(ConjugateGammaCheck, FlagsNonConvexInput) {
  const auto grid = linspace(-2, 2, 41);
  auto bumpy = sample(grid, [](double y) { return std::cos(3 * y); });
  auto g = sample(grid, [](double y) { return y * y; });
  std::vector<GridFunction1D> gs{bumpy};
  std::vector<double> probes{0.0};
  auto r = conjugate_gamma_check(gs, g, probes);
  EXPECT_FALSE(r.inputs_convex);
  EXPECT_FALSE(r.ok());
}

#include "otlab/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace otlab {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct HullVertex {
  double y;
  double f;
};

// Lower convex hull of the finite samples, left to right.
std::vector<HullVertex> lower_hull(const GridFunction1D& f) {
  std::vector<HullVertex> hull;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f.value(i))) continue;
    const HullVertex c{f.x(i), f.value(i)};
    while (hull.size() >= 2) {
      const HullVertex& a = hull[hull.size() - 2];
      const HullVertex& b = hull.back();
      // Drop b unless it lies strictly below the chord a-c.
      if ((b.f - a.f) * (c.y - b.y) >= (c.f - b.f) * (b.y - a.y)) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(c);
  }
  return hull;
}

void require_increasing(std::span<const double> xs, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) throw std::invalid_argument(std::string(what) + ": non-finite grid");
    if (i > 0 && !(xs[i] > xs[i - 1])) {
      throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
    }
  }
}

bool nonincreasing(std::span<const double> xs, double slack) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] > xs[i - 1] + slack) return false;
  }
  return true;
}

}  // namespace

GridFunction1D::GridFunction1D(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.empty()) throw std::invalid_argument("grid function: empty grid");
  if (grid_.size() != values_.size()) {
    throw std::invalid_argument("grid function: grid and values differ in length");
  }
  require_increasing(grid_, "grid function");
  bool any_finite = false;
  for (double v : values_) {
    if (std::isnan(v) || v == -kInfinity) {
      throw std::invalid_argument("grid function: values must be finite or +inf");
    }
    any_finite = any_finite || std::isfinite(v);
  }
  if (!any_finite) throw std::invalid_argument("grid function: all values are +inf");
}

bool GridFunction1D::is_convex(double tol) const {
  double prev_slope = -kInfinity;
  std::size_t prev = size();
  for (std::size_t i = 0; i < size(); ++i) {
    if (!std::isfinite(values_[i])) continue;
    if (prev != size()) {
      const double slope = (values_[i] - values_[prev]) / (grid_[i] - grid_[prev]);
      const double scale = std::max({1.0, std::abs(slope), std::abs(prev_slope)});
      if (std::isfinite(prev_slope) && slope < prev_slope - tol * scale) return false;
      prev_slope = slope;
    }
    prev = i;
  }
  return true;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> out(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + h * static_cast<double>(i);
  out.back() = b;
  return out;
}

double lft_at(const GridFunction1D& f, double x) {
  double best = -kInfinity;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (!std::isfinite(f.value(j))) continue;
    best = std::max(best, x * f.x(j) - f.value(j));
  }
  return best;
}

GridFunction1D lft(const GridFunction1D& f, std::span<const double> dual_grid) {
  require_increasing(dual_grid, "lft dual grid");
  std::vector<double> out(dual_grid.size());
  for (std::size_t i = 0; i < dual_grid.size(); ++i) out[i] = lft_at(f, dual_grid[i]);
  return GridFunction1D({dual_grid.begin(), dual_grid.end()}, std::move(out));
}

GridFunction1D lft_fast(const GridFunction1D& f, std::span<const double> dual_grid) {
  require_increasing(dual_grid, "lft dual grid");
  const auto hull = lower_hull(f);
  std::vector<double> out(dual_grid.size());
  std::size_t p = 0;
  for (std::size_t i = 0; i < dual_grid.size(); ++i) {
    const double x = dual_grid[i];
    while (p + 1 < hull.size() &&
           x * hull[p + 1].y - hull[p + 1].f >= x * hull[p].y - hull[p].f) {
      ++p;
    }
    out[i] = x * hull[p].y - hull[p].f;
  }
  return GridFunction1D({dual_grid.begin(), dual_grid.end()}, std::move(out));
}

SlopeRange subdifferential_range(const GridFunction1D& f) {
  const auto hull = lower_hull(f);
  if (hull.size() < 2) return {-kInfinity, kInfinity};
  const auto slope = [&](std::size_t i) {
    return (hull[i + 1].f - hull[i].f) / (hull[i + 1].y - hull[i].y);
  };
  return {slope(0), slope(hull.size() - 2)};
}

GridFunction1D cramer_numeric(const GridFunction1D& log_mgf, std::span<const double> u_grid) {
  for (double v : log_mgf.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("cramer_numeric: log-MGF must be finite");
  }
  auto conj = lft_fast(log_mgf, u_grid);
  const SlopeRange range = subdifferential_range(log_mgf);
  double h_max = 0.0;
  for (std::size_t i = 1; i < log_mgf.size(); ++i) {
    h_max = std::max(h_max, log_mgf.x(i) - log_mgf.x(i - 1));
  }
  const double slope_scale = std::max(std::abs(range.lo), std::abs(range.hi));
  std::vector<double> values = conj.values();
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    const double u = u_grid[i];
    if (!(u > range.lo && u < range.hi)) {
      values[i] = kInfinity;
      continue;
    }
    const double bound = h_max * (std::abs(u) + slope_scale);
    if (values[i] < 0.0 && -values[i] <= bound) values[i] = 0.0;
  }
  return GridFunction1D(conj.grid(), std::move(values));
}

GridFunction1D moreau_yosida(const GridFunction1D& f, double n) {
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("moreau_yosida: n must be positive");
  }
  for (double v : f.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("moreau_yosida: input not bounded above");
  }
  const std::size_t m = f.size();
  std::vector<double> left(m), right(m);
  left[0] = f.value(0);
  for (std::size_t i = 1; i < m; ++i) {
    left[i] = std::max(f.value(i), left[i - 1] - n * (f.x(i) - f.x(i - 1)));
  }
  right[m - 1] = f.value(m - 1);
  for (std::size_t i = m - 1; i-- > 0;) {
    right[i] = std::max(f.value(i), right[i + 1] - n * (f.x(i + 1) - f.x(i)));
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = std::max(left[i], right[i]);
  return GridFunction1D(f.grid(), std::move(out));
}

GridFunction1D moreau_yosida_direct(const GridFunction1D& f, double n) {
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("moreau_yosida: n must be positive");
  }
  for (double v : f.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("moreau_yosida: input not bounded above");
  }
  std::vector<double> out(f.size(), -kInfinity);
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      out[i] = std::max(out[i], f.value(j) - n * std::abs(f.x(i) - f.x(j)));
    }
  }
  return GridFunction1D(f.grid(), std::move(out));
}

bool ConjugateCheckReport::ok() const {
  if (!inputs_convex || !bound_ok || !functions_converge) return false;
  for (const auto& p : probes) {
    if (p.in_domain && !p.pointwise_ok) return false;
  }
  return true;
}

ConjugateCheckReport conjugate_gamma_check(std::span<const GridFunction1D> gs,
                                           const GridFunction1D& g_limit,
                                           std::span<const double> probes, double tol) {
  if (gs.empty()) throw std::invalid_argument("conjugate_gamma_check: empty sequence");
  ConjugateCheckReport report;

  report.inputs_convex = g_limit.is_convex();
  for (const auto& g : gs) {
    if (g.grid() != g_limit.grid()) {
      throw std::invalid_argument("conjugate_gamma_check: all functions must share one grid");
    }
    for (double v : g.values()) {
      if (!std::isfinite(v)) throw std::invalid_argument("conjugate_gamma_check: g_n must be finite");
    }
    report.inputs_convex = report.inputs_convex && g.is_convex();
  }
  if (!report.inputs_convex) return report;

  // Smallest c with |g_n(y)| <= c (1 + |y|) on the grid, uniformly in n.
  double c = 0.0;
  for (const auto& g : gs) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      c = std::max(c, std::abs(g.value(i)) / (1.0 + std::abs(g.x(i))));
    }
  }
  report.linear_bound = c;
  report.bound_ok = std::isfinite(c);

  for (const auto& g : gs) {
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, std::abs(g.value(i) - g_limit.value(i)));
    }
    report.sup_errors.push_back(err);
  }
  report.functions_converge =
      nonincreasing(report.sup_errors, 1e-12) && report.sup_errors.back() <= tol;

  const SlopeRange domain = subdifferential_range(g_limit);
  for (double x : probes) {
    ConjugateProbe probe;
    probe.x = x;
    probe.in_domain = x > domain.lo && x < domain.hi;
    probe.limit_value = lft_at(g_limit, x);
    for (const auto& g : gs) {
      const double fx = lft_at(g, x);
      probe.conjugate_values.push_back(fx);
      probe.errors.push_back(std::abs(fx - probe.limit_value));
    }
    probe.pointwise_ok =
        probe.in_domain && nonincreasing(probe.errors, 1e-12) && probe.errors.back() <= tol;
    report.probes.push_back(std::move(probe));
  }
  return report;
}

}  // namespace otlab

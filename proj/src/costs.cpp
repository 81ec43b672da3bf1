#include "otlab/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace otlab {

namespace {

double base_cramer(CramerLaw law, double s) {
  switch (law) {
    case CramerLaw::StandardGaussian:
      return 0.5 * s * s;
    case CramerLaw::BernoulliPM1: {
      const double a = std::abs(s);
      if (a > 1.0) return kInf;
      if (a == 1.0) return std::numbers::ln2;
      // (1+s)log(1+s) + (1-s)log(1-s), accurate near 0 and near +-1.
      return 0.5 * ((1.0 + s) * std::log1p(s) + (1.0 - s) * std::log1p(-s));
    }
    case CramerLaw::ExponentialMean1:
      if (s <= 0.0) return kInf;
      return (s - 1.0) - std::log(s);
    case CramerLaw::PoissonMean1:
      if (s < 0.0) return kInf;
      if (s == 0.0) return 1.0;
      return s * std::log(s) - s + 1.0;
  }
  return kInf;
}

double base_log_mgf(CramerLaw law, double t) {
  switch (law) {
    case CramerLaw::StandardGaussian:
      return 0.5 * t * t;
    case CramerLaw::BernoulliPM1: {
      const double a = std::abs(t);
      return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    }
    case CramerLaw::ExponentialMean1:
      if (t >= 1.0) return kInf;
      return -std::log1p(-t);
    case CramerLaw::PoissonMean1:
      return std::expm1(t);
  }
  return kInf;
}

double base_mean(CramerLaw law) {
  switch (law) {
    case CramerLaw::StandardGaussian:
    case CramerLaw::BernoulliPM1:
      return 0.0;
    case CramerLaw::ExponentialMean1:
    case CramerLaw::PoissonMean1:
      return 1.0;
  }
  return 0.0;
}

double family_cramer(const CramerFamily& family, double u, std::size_t coord) {
  const double s = (u - family.shift_at(coord)) / family.scale;
  return base_cramer(family.law, s);
}

double numeric_cramer_at(const CramerNumericCost& c, double u) {
  const SlopeRange range = subdifferential_range(*c.log_mgf);
  if (!(u > range.lo && u < range.hi)) return kInf;
  double v = lft_at(*c.log_mgf, u);
  if (v < 0.0) v = 0.0;
  return v;
}

}  // namespace

void CramerFamily::validate() const {
  if (!std::isfinite(scale) || scale == 0.0) {
    throw std::invalid_argument("Cramer family: scale must be finite and nonzero");
  }
  for (double b : shift) {
    if (!std::isfinite(b)) throw std::invalid_argument("Cramer family: shift must be finite");
  }
}

double CramerFamily::mean(std::size_t coord) const {
  return scale * base_mean(law) + shift_at(coord);
}

std::string to_string(CramerLaw law) {
  switch (law) {
    case CramerLaw::StandardGaussian:
      return "gaussian";
    case CramerLaw::BernoulliPM1:
      return "bernoulli";
    case CramerLaw::ExponentialMean1:
      return "exponential";
    case CramerLaw::PoissonMean1:
      return "poisson";
  }
  return "unknown";
}

CramerLaw parse_cramer_law(const std::string& name) {
  if (name == "gaussian" || name == "normal") return CramerLaw::StandardGaussian;
  if (name == "bernoulli") return CramerLaw::BernoulliPM1;
  if (name == "exponential") return CramerLaw::ExponentialMean1;
  if (name == "poisson") return CramerLaw::PoissonMean1;
  throw std::invalid_argument("unknown Cramer family '" + name + "'");
}

double cramer_closed(const CramerFamily& family, double u) {
  family.validate();
  if (std::isnan(u)) throw std::invalid_argument("cramer_closed: u is NaN");
  return family_cramer(family, u, 0);
}

double log_mgf(const CramerFamily& family, double zeta) {
  family.validate();
  const double base = base_log_mgf(family.law, family.scale * zeta);
  if (!std::isfinite(base)) return kInf;
  return zeta * family.shift_at(0) + base;
}

GridFunction1D sample_log_mgf(const CramerFamily& family, std::span<const double> zeta_grid) {
  std::vector<double> grid, values;
  for (double z : zeta_grid) {
    const double v = log_mgf(family, z);
    if (!std::isfinite(v)) continue;
    grid.push_back(z);
    values.push_back(v);
  }
  return GridFunction1D(std::move(grid), std::move(values));
}

std::vector<double> default_zeta_grid(CramerLaw law, std::size_t n) {
  switch (law) {
    case CramerLaw::StandardGaussian:
      return linspace(-12.0, 12.0, n);
    case CramerLaw::BernoulliPM1:
      return linspace(-15.0, 15.0, n);
    case CramerLaw::ExponentialMean1:
      return linspace(-60.0, 0.99, n);
    case CramerLaw::PoissonMean1:
      return linspace(-10.0, 5.0, n);
  }
  return {};
}

Point power_map(double p, const Point& v) {
  if (!(p > 0.0)) throw std::invalid_argument("power_map: p must be positive");
  const double r = v.norm();
  if (r == 0.0) return v;
  const double factor = std::pow(2.0, -1.0 / p) * std::pow(r, 2.0 / p - 1.0);
  std::vector<double> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = factor * v[i];
  return Point(std::move(out));
}

Point power_map_inverse(double p, const Point& u) {
  if (!(p > 0.0)) throw std::invalid_argument("power_map_inverse: p must be positive");
  const double r = u.norm();
  if (r == 0.0) return u;
  const double rv = std::numbers::sqrt2 * std::pow(r, 0.5 * p);
  std::vector<double> out(u.dim());
  for (std::size_t i = 0; i < u.dim(); ++i) out[i] = u[i] * (rv / r);
  return Point(std::move(out));
}

ContractionMap ContractionMap::power(double p) {
  if (!(p > 0.0)) throw std::invalid_argument("power contraction: p must be positive");
  return ContractionMap{"power", p, [p](const Point& v) { return power_map(p, v); },
                        [p](const Point& u) { return power_map_inverse(p, u); }};
}

// ---------------------------------------------------------------------------

CostSpec CostSpec::quadratic() { return CostSpec(QuadraticCost{}); }

CostSpec CostSpec::power(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("power cost: p must be > 0");
  return CostSpec(PowerCost{p});
}

CostSpec CostSpec::cramer(CramerFamily family) {
  family.validate();
  return CostSpec(CramerClosedCost{std::move(family)});
}

CostSpec CostSpec::cramer_numeric(GridFunction1D log_mgf) {
  for (double v : log_mgf.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("numeric Cramer cost: log-MGF must be finite");
  }
  return CostSpec(CramerNumericCost{std::make_shared<const GridFunction1D>(std::move(log_mgf))});
}

CostSpec CostSpec::contracted(CostSpec base, ContractionMap map) {
  if (!map.forward || !map.inverse) throw std::invalid_argument("contraction map needs both directions");
  return CostSpec(ContractedCost{std::make_shared<const CostSpec>(std::move(base)), std::move(map)});
}

std::string CostSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticCost>) {
          os << "quadratic";
        } else if constexpr (std::is_same_v<T, PowerCost>) {
          os << "power(p=" << c.p << ")";
        } else if constexpr (std::is_same_v<T, CramerClosedCost>) {
          os << "cramer(" << to_string(c.family.law) << ", a=" << c.family.scale << ")";
        } else if constexpr (std::is_same_v<T, CramerNumericCost>) {
          os << "cramer_numeric(" << c.log_mgf->size() << " samples)";
        } else {
          os << "contracted(" << c.base->describe() << ", " << c.map.name << " "
             << c.map.parameter << ")";
        }
      },
      v_);
  return os.str();
}

double eval_cost(const CostSpec& spec, const Point& u) {
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticCost>) {
          return 0.5 * u.squared_norm();
        } else if constexpr (std::is_same_v<T, PowerCost>) {
          const double r = u.norm();
          return r == 0.0 ? 0.0 : std::pow(r, c.p);
        } else if constexpr (std::is_same_v<T, CramerClosedCost>) {
          double total = 0.0;
          for (std::size_t i = 0; i < u.dim(); ++i) total += family_cramer(c.family, u[i], i);
          return total;
        } else if constexpr (std::is_same_v<T, CramerNumericCost>) {
          double total = 0.0;
          for (std::size_t i = 0; i < u.dim(); ++i) total += numeric_cramer_at(c, u[i]);
          return total;
        } else {
          const Point v = c.map.inverse(u);
          const Point back = c.map.forward(v);
          const double err = (back - u).norm();
          if (!(err <= 1e-9 * std::max(1.0, u.norm()))) {
            throw std::domain_error("contracted cost: map is not invertible at u");
          }
          return eval_cost(*c.base, v);
        }
      },
      spec.variant());
}

bool is_convex_cost(const CostSpec& spec) {
  return std::visit(
      [](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PowerCost>) {
          return c.p >= 1.0;
        } else if constexpr (std::is_same_v<T, ContractedCost>) {
          return c.map.name == "power" && c.map.parameter >= 1.0 &&
                 std::holds_alternative<QuadraticCost>(c.base->variant());
        } else {
          return true;
        }
      },
      spec.variant());
}

CostMatrix::CostMatrix(std::vector<Point> source, std::vector<Point> target, Matrix values)
    : source_(std::move(source)), target_(std::move(target)), values_(std::move(values)) {
  if (source_.size() != values_.rows() || target_.size() != values_.cols()) {
    throw std::invalid_argument("cost matrix: support sizes do not match values");
  }
  for (double v : values_.data()) {
    if (std::isnan(v) || v < 0.0) throw std::invalid_argument("cost matrix: entries must be >= 0");
  }
}

CostMatrix cost_matrix(const CostSpec& spec, std::span<const Point> source,
                       std::span<const Point> target) {
  if (source.empty() || target.empty()) throw std::invalid_argument("cost_matrix: empty support");
  const std::size_t d = source.front().dim();
  for (const auto& p : source) {
    if (p.dim() != d) throw std::invalid_argument("cost_matrix: dimension mismatch");
  }
  for (const auto& p : target) {
    if (p.dim() != d) throw std::invalid_argument("cost_matrix: dimension mismatch");
  }
  Matrix values(source.size(), target.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    for (std::size_t j = 0; j < target.size(); ++j) {
      values(i, j) = eval_cost(spec, target[j] - source[i]);
    }
  }
  return CostMatrix({source.begin(), source.end()}, {target.begin(), target.end()},
                    std::move(values));
}

}  // namespace otlab

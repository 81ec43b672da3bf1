#pragma once

// Displacement costs c(x0, x1) = c(x1 - x0): quadratic, power, closed-form
// Cramer transforms, numeric Cramer transforms from log-MGF samples, and
// costs contracted through an invertible map.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "otlab/legendre.hpp"
#include "otlab/matrix.hpp"
#include "otlab/measures.hpp"

namespace otlab {

enum class CramerLaw { StandardGaussian, BernoulliPM1, ExponentialMean1, PoissonMean1 };

/// Law of aY + b for a base law Y. An empty shift means b = 0.
struct CramerFamily {
  CramerLaw law = CramerLaw::StandardGaussian;
  double scale = 1.0;
  std::vector<double> shift;

  /// Throws unless scale is finite and nonzero.
  void validate() const;
  /// E[aY + b] in coordinate i.
  double mean(std::size_t coord = 0) const;
  double shift_at(std::size_t coord) const { return coord < shift.size() ? shift[coord] : 0.0; }
};

std::string to_string(CramerLaw law);
CramerLaw parse_cramer_law(const std::string& name);

/// Closed-form Cramer transform of the (affine) family at scalar u.
double cramer_closed(const CramerFamily& family, double u);

/// log E exp(zeta (aY + b)), +inf where the MGF diverges.
double log_mgf(const CramerFamily& family, double zeta);
/// log-MGF sampled on a grid (entries with infinite MGF dropped).
GridFunction1D sample_log_mgf(const CramerFamily& family, std::span<const double> zeta_grid);
/// A zeta grid wide enough for interior u-ranges used in practice.
std::vector<double> default_zeta_grid(CramerLaw law, std::size_t n = 20001);

/// alpha_p(v) = 2^{-1/p} |v|^{2/p - 1} v.
Point power_map(double p, const Point& v);
/// Inverse of alpha_p: same direction, |v| = 2^{1/2} |u|^{p/2}.
Point power_map_inverse(double p, const Point& u);

/// Continuous map with an explicit inverse, used to contract a base cost.
struct ContractionMap {
  std::string name;
  double parameter = 0.0;
  std::function<Point(const Point&)> forward;
  std::function<Point(const Point&)> inverse;

  static ContractionMap power(double p);
};

class CostSpec;

struct QuadraticCost {};
struct PowerCost {
  double p = 2.0;
};
struct CramerClosedCost {
  CramerFamily family;
};
struct CramerNumericCost {
  std::shared_ptr<const GridFunction1D> log_mgf;
};
struct ContractedCost {
  std::shared_ptr<const CostSpec> base;
  ContractionMap map;
};

/// Symbolic cost definition. Every variant is a displacement cost.
class CostSpec {
 public:
  using Variant =
      std::variant<QuadraticCost, PowerCost, CramerClosedCost, CramerNumericCost, ContractedCost>;

  CostSpec() : v_(QuadraticCost{}) {}

  static CostSpec quadratic();
  static CostSpec power(double p);
  static CostSpec cramer(CramerFamily family);
  static CostSpec cramer_numeric(GridFunction1D log_mgf);
  static CostSpec contracted(CostSpec base, ContractionMap map);

  const Variant& variant() const { return v_; }
  std::string describe() const;

 private:
  explicit CostSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Cost of the displacement u = x1 - x0, in [0, +inf].
double eval_cost(const CostSpec& spec, const Point& u);

/// True for costs whose displacement function is known to be convex.
bool is_convex_cost(const CostSpec& spec);

/// Cost values on source x target supports, +inf entries allowed.
class CostMatrix {
 public:
  CostMatrix(std::vector<Point> source, std::vector<Point> target, Matrix values);

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  const std::vector<Point>& source_support() const { return source_; }
  const std::vector<Point>& target_support() const { return target_; }
  const Matrix& values() const { return values_; }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }

 private:
  std::vector<Point> source_;
  std::vector<Point> target_;
  Matrix values_;
};

/// values[i][j] = eval_cost(spec, target[j] - source[i]).
CostMatrix cost_matrix(const CostSpec& spec, std::span<const Point> source,
                       std::span<const Point> target);

/// weight * cost with the convention 0 * inf = 0.
inline double mass_times_cost(double weight, double cost) {
  return weight == 0.0 ? 0.0 : weight * cost;
}

}  // namespace otlab

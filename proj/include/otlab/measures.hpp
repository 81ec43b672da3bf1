#pragma once

// Finite discrete measures on R^d, couplings between them, and the
// narrow-convergence metric built from a finite Fourier test family.

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "otlab/matrix.hpp"

namespace otlab {

/// +inf stands for an infinite cost or entropy. It is never produced by
/// arithmetic on finite inputs, so it can serve as an explicit sentinel.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Point of R^d with finite coordinates.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords);
  Point(std::initializer_list<double> coords);

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const { return coords_; }

  double norm() const;
  double squared_norm() const;

  Point operator-(const Point& other) const;
  Point operator+(const Point& other) const;

  bool operator==(const Point&) const = default;
  std::partial_ordering operator<=>(const Point& other) const {
    return coords_ <=> other.coords_;
  }

 private:
  std::vector<double> coords_;
};

/// Probability measure with finitely many atoms.
///
/// Atoms are stored sorted lexicographically with duplicates merged, so two
/// measures built from the same atoms in any order compare equal. Weights
/// are renormalized when their sum is within 1e-9 of one; construction fails
/// otherwise. Zero-weight atoms are kept.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Point> support, std::vector<double> weights);

  static DiscreteMeasure dirac(Point atom);
  static DiscreteMeasure uniform(std::vector<Point> atoms);
  /// Empirical measure with weight 1/n per sample.
  static DiscreteMeasure empirical(std::span<const Point> samples);

  std::size_t size() const { return support_.size(); }
  std::size_t dim() const { return support_.front().dim(); }
  const std::vector<Point>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  const Point& atom(std::size_t i) const { return support_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// Index of an exactly matching atom.
  std::optional<std::size_t> find(const Point& p) const;
  /// Index of the first atom within `tol` (max-norm) of p.
  std::optional<std::size_t> find_near(const Point& p, double tol) const;

  bool operator==(const DiscreteMeasure&) const = default;

 private:
  std::vector<Point> support_;
  std::vector<double> weights_;
};

/// Same atoms (ignoring zero-weight atoms) with weights within `tol`.
bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol);

/// Joint weight matrix over source x target supports. Rows index the source.
class Coupling {
 public:
  Coupling() = default;
  Coupling(std::vector<Point> source, std::vector<Point> target, Matrix weights);

  std::size_t rows() const { return weights_.rows(); }
  std::size_t cols() const { return weights_.cols(); }
  const std::vector<Point>& source_support() const { return source_; }
  const std::vector<Point>& target_support() const { return target_; }
  const Matrix& weights() const { return weights_; }
  double operator()(std::size_t i, std::size_t j) const { return weights_(i, j); }

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;

 private:
  std::vector<Point> source_;
  std::vector<Point> target_;
  Matrix weights_;
};

DiscreteMeasure marginal0(const Coupling& rho);
DiscreteMeasure marginal1(const Coupling& rho);
Coupling product_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// One test function g(x) = 1/2 cos(<omega,x>) or 1/2 sin(<omega,x>).
struct FourierFeature {
  std::vector<double> omega;
  bool is_sine = false;

  double operator()(const Point& x) const;
};

/// Ordered test family {g_i} with weights 2^{-i}, i = 1..m. Every member is
/// bounded by 1/2 in sup-norm, which keeps |<g_i, a - b>| <= 1 for any two
/// probability measures and makes the metric a convex seminorm.
class TestFamily {
 public:
  explicit TestFamily(std::vector<FourierFeature> features);

  /// g_{2j-1} = 1/2 cos(j pi x / R), g_{2j} = 1/2 sin(j pi x / R).
  static TestFamily canonical_1d(std::size_t m, double radius);
  /// Multi-index lattice frequencies ordered by l1-norm, then
  /// lexicographically; first nonzero component positive.
  static TestFamily canonical(std::size_t dim, std::size_t m, double radius);
  /// Canonical family with R = enclosing radius of the given supports.
  static TestFamily for_support(std::size_t m, std::span<const Point> support);

  std::size_t size() const { return features_.size(); }
  double weight(std::size_t i) const { return weights_[i]; }
  const FourierFeature& feature(std::size_t i) const { return features_[i]; }
  double eval(std::size_t i, const Point& x) const { return features_[i](x); }

  /// <g_i, gamma> for every member.
  std::vector<double> moments(const DiscreteMeasure& gamma) const;

 private:
  std::vector<FourierFeature> features_;
  std::vector<double> weights_;
};

/// max_i |x_i| over every point; 1 when all points are at the origin.
double enclosing_radius(std::span<const Point> support);

/// sum_i 2^{-i} min(|<g_i, gamma> - <g_i, nu>|, 1).
double narrow_metric(const DiscreteMeasure& gamma, const DiscreteMeasure& nu,
                     const TestFamily& fam);

/// Same metric from precomputed moments.
double narrow_metric_from_moments(std::span<const double> gamma_moments,
                                  std::span<const double> nu_moments,
                                  const TestFamily& fam);

/// True when [g_i(x_j)] stacked with a row of ones has full column rank, so
/// the metric separates measures carried by `support`.
bool separates_support(const TestFamily& fam, std::span<const Point> support);

/// Numerical rank by Gaussian elimination with partial pivoting.
std::size_t matrix_rank(Matrix a, double rel_tol = 1e-10);

}  // namespace otlab

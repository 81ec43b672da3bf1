#pragma once

// Discrete Legendre-Fenchel transforms on 1D grids, numeric Cramer
// transforms, Moreau-Yosida regularization and the conjugate convergence
// check for sequences of convex grid functions.

#include <cstddef>
#include <span>
#include <vector>

namespace otlab {

/// Samples of an extended-real function (finite or +inf) on a strictly
/// increasing grid. At least one sample is finite.
class GridFunction1D {
 public:
  GridFunction1D(std::vector<double> grid, std::vector<double> values);

  std::size_t size() const { return grid_.size(); }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double x(std::size_t i) const { return grid_[i]; }
  double value(std::size_t i) const { return values_[i]; }

  /// Discrete slopes of consecutive finite samples are nondecreasing.
  bool is_convex(double tol = 1e-12) const;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

/// n points from a to b inclusive.
std::vector<double> linspace(double a, double b, std::size_t n);

/// Legendre-Fenchel transform f*(x) = max_j {x y_j - f(y_j)} by direct scan
/// over the finite samples. O(N M). The dual grid need not be sorted but the
/// result requires it to be strictly increasing.
GridFunction1D lft(const GridFunction1D& f, std::span<const double> dual_grid);

/// Same transform in O(N + M): lower convex hull of the samples, then a
/// monotone walk over the dual grid.
GridFunction1D lft_fast(const GridFunction1D& f, std::span<const double> dual_grid);

/// Single-point transform, used for cost evaluation.
double lft_at(const GridFunction1D& f, double x);

/// [min slope, max slope] of the lower convex hull of the finite samples.
struct SlopeRange {
  double lo;
  double hi;
};
SlopeRange subdifferential_range(const GridFunction1D& f);

/// c^Y(u) = sup_zeta {zeta u - log E e^{zeta Y}} from sampled log-MGF values.
/// Dual points outside the open slope range of the samples get +inf; small
/// negative values produced by the grid are clipped to 0 since c^Y >= 0.
GridFunction1D cramer_numeric(const GridFunction1D& log_mgf, std::span<const double> u_grid);

/// F^n(x) = max_j {f(y_j) - n |x - y_j|} on f's own grid. Requires f bounded
/// above (no +inf samples). Computed with two linear sweeps.
GridFunction1D moreau_yosida(const GridFunction1D& f, double n);

/// Brute-force O(N^2) version of moreau_yosida for cross-checks.
GridFunction1D moreau_yosida_direct(const GridFunction1D& f, double n);

struct ConjugateProbe {
  double x = 0.0;
  bool in_domain = false;  ///< strictly inside the limit conjugate's domain
  std::vector<double> conjugate_values;  ///< f_n(x) for each n
  double limit_value = 0.0;              ///< f(x)
  std::vector<double> errors;            ///< |f_n(x) - f(x)|
  bool pointwise_ok = false;
};

struct ConjugateCheckReport {
  bool inputs_convex = false;
  double linear_bound = 0.0;  ///< smallest c with |g_n(y)| <= c (1 + |y|)
  bool bound_ok = false;
  std::vector<double> sup_errors;  ///< max_y |g_n(y) - g(y)| for each n
  bool functions_converge = false;
  std::vector<ConjugateProbe> probes;

  bool ok() const;
};

/// Checks on grids that convergence of convex g_n carries over to their
/// conjugates: a linear growth bound on the g_n, pointwise
/// convergence g_n -> g, and convergence of f_n = g_n^* to f = g^* at the
/// probes. A sequence "converges" here when its error sequence is
/// nonincreasing and the last error is at most `tol`.
ConjugateCheckReport conjugate_gamma_check(std::span<const GridFunction1D> gs,
                                           const GridFunction1D& g_limit,
                                           std::span<const double> probes, double tol = 0.05);

}  // namespace otlab

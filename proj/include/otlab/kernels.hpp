#pragma once

// Reference couplings pi^k(dz dx) = mu(dz) kappa^k_z(dx) on a discrete target
// support, where kappa^k_z is the law of z + U^k. Three constructions: a
// Gibbs surrogate exp(-k c), the exact density (or lattice mass function) of
// U^k evaluated at grid points, and a Monte Carlo histogram.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "otlab/costs.hpp"
#include "otlab/matrix.hpp"
#include "otlab/measures.hpp"
#include "otlab/rng.hpp"

namespace otlab {

/// U^k = Y / sqrt(k), Y standard Gaussian in R^dim.
struct ScaledGaussian {
  std::size_t dim = 1;
};
/// U^k = (1/k) sum_{m<=k} Y_m, Y_m i.i.d. from the family (per coordinate).
struct IIDSum {
  CramerFamily family;
};
/// U^k = (2k)^{-1/p} |Y|^{2/p-1} Y, Y standard Gaussian.
struct PowerGaussian {
  double p = 2.0;
};
/// No sampling law, only the Gibbs weights exp(-k c).
struct GibbsOf {
  CostSpec cost;
};

using NoiseSpec = std::variant<ScaledGaussian, IIDSum, PowerGaussian, GibbsOf>;

/// Throws std::invalid_argument on p <= 0, dim 0 or an invalid family.
void validate(const NoiseSpec& noise);
std::string describe(const NoiseSpec& noise);

/// Rate function of U^k (the cost the noise induces in the k-limit).
CostSpec induced_cost(const NoiseSpec& noise);

enum class KernelMode { gibbs, density, montecarlo };
std::string to_string(KernelMode mode);

struct ReferenceCoupling {
  DiscreteMeasure mu;
  std::vector<Point> target;
  Matrix rows;      ///< kappa^k_z(x), one row per atom of mu
  Matrix log_rows;  ///< log kappa^k_z(x), -inf on zero entries
  int k = 1;
  KernelMode mode = KernelMode::gibbs;

  /// Weights mu_z kappa^k_z(x).
  Coupling as_coupling() const;
};

ReferenceCoupling build_reference_gibbs(const DiscreteMeasure& mu, const std::vector<Point>& target,
                                        const CostSpec& cost, int k);
/// Gibbs rows from precomputed costs whose source support is mu's support.
ReferenceCoupling build_reference_gibbs(const DiscreteMeasure& mu, const CostMatrix& cost, int k);

/// Density (or lattice mass) of U^k at x - z, renormalized per row.
/// Lattice laws keep only targets within 1e-9 of the lattice.
ReferenceCoupling build_reference_density(const DiscreteMeasure& mu,
                                          const std::vector<Point>& target,
                                          const NoiseSpec& noise, int k);

/// Histogram of n_samples draws of z + U^k per row, each draw assigned to
/// the nearest target (lowest index on ties). Row z uses its own stream.
ReferenceCoupling build_reference_montecarlo(const DiscreteMeasure& mu,
                                             const std::vector<Point>& target,
                                             const NoiseSpec& noise, int k,
                                             std::size_t n_samples, std::uint64_t seed);

/// One draw of U^k.
Point sample_noise(const NoiseSpec& noise, int k, std::size_t dim, CounterRng& rng);

DiscreteMeasure second_marginal(const ReferenceCoupling& pi);

/// Nearest-point lookup over a fixed target list, lowest index on ties.
class NearestTarget {
 public:
  explicit NearestTarget(const std::vector<Point>& target);
  std::size_t operator()(const Point& x) const;

 private:
  const std::vector<Point>* target_;
  std::vector<std::pair<double, std::size_t>> sorted_;  // 1-d fast path
};

}  // namespace otlab

#pragma once

// Particle systems X_i = z_i + U^k_i started from a triangular array of
// sites, their empirical measures, and Monte Carlo slopes of
// log P(N^k_n in a ball) against n.

#include <cstdint>
#include <vector>

#include "otlab/kernels.hpp"
#include "otlab/measures.hpp"

namespace otlab {

enum class SiteGenerator { quantile1d, seeded_iid };

struct SiteArray {
  std::vector<Point> sites;
  SiteGenerator generator = SiteGenerator::quantile1d;
  std::uint64_t seed = 0;  ///< only meaningful for seeded_iid

  std::size_t n() const { return sites.size(); }
};

/// z_i = F^{-1}((i - 1/2) / n) for a 1-d measure.
SiteArray quantile_sites(const DiscreteMeasure& mu, std::size_t n);
/// n i.i.d. draws from mu (any dimension).
SiteArray iid_sites(const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed);
/// quantile_sites in 1-d, iid_sites otherwise.
SiteArray default_sites(const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed);

/// count draws of U^k in R^dim. Draw i uses its own stream.
std::vector<Point> sample_noise(const NoiseSpec& noise, int k, std::size_t count,
                                std::uint64_t seed, std::size_t dim = 1);

struct ParticleRun {
  int k = 1;
  std::uint64_t seed = 0;
  std::vector<Point> sites;
  std::vector<Point> endpoints;

  std::size_t n() const { return endpoints.size(); }
};

/// Endpoints of one replicate. Particle i of replicate r draws from stream
/// (r, i), so runs are reproducible and independent of evaluation order.
ParticleRun run_particles(const SiteArray& sites, const NoiseSpec& noise, int k,
                          std::uint64_t seed, std::uint64_t replicate = 0);

/// N^k_n = (1/n) sum_i delta_{X_i}.
DiscreteMeasure simulate_Nkn(const SiteArray& sites, const NoiseSpec& noise, int k,
                             std::uint64_t seed);
/// M^k_n = (1/n) sum_i delta_{(z_i, X_i)} on (distinct sites) x (distinct endpoints).
Coupling simulate_Mkn(const SiteArray& sites, const NoiseSpec& noise, int k, std::uint64_t seed);

struct LdpOptions {
  std::vector<std::size_t> n_values;
  std::size_t replicates = 100000;
  double delta = 0.1;
  std::uint64_t seed = 0;
  /// Support of the reference second marginal, used for the search of the
  /// ball's minimizer. At most 4 points.
  std::vector<Point> lattice;
  std::size_t bootstrap = 200;
  std::size_t min_hits = 30;
};

struct LdpPoint {
  std::size_t n = 0;
  std::size_t hits = 0;
  double log_prob = 0.0;  ///< NaN when below min_hits
  double stderr_log = 0.0;
  bool reliable = false;
};

struct LdpEstimate {
  DiscreteMeasure center;
  double delta = 0.0;
  std::size_t replicates = 0;
  std::vector<LdpPoint> points;
  double slope = 0.0;     ///< least squares over the reliable points
  double slope_se = 0.0;  ///< parametric bootstrap of the hit counts
  DiscreteMeasure nu_hat;
  double tk_nu_hat = 0.0;
  double reference_rate = 0.0;  ///< k T_k(nu_hat)
  bool reliable = false;        ///< every point had at least min_hits hits

  /// slope / (-reference_rate).
  double ratio() const { return -slope / reference_rate; }
};

/// Fraction of replicates with d(N^k_n, nu) <= delta, for each n; slope of
/// the log frequency in n; and the minimal rate over the ball found by a
/// coarse-to-fine grid search over measures on options.lattice.
LdpEstimate estimate_ldp_slope(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const NoiseSpec& noise, int k, const TestFamily& fam,
                               const LdpOptions& options);

/// Minimizer of T_k over {gamma on lattice : d(gamma, nu) <= delta}, with
/// its value. Throws std::invalid_argument when the ball misses the grid.
std::pair<DiscreteMeasure, double> minimize_tk_over_ball(const ReferenceCoupling& pi,
                                                        const DiscreteMeasure& nu, double delta,
                                                        const TestFamily& fam);

}  // namespace otlab

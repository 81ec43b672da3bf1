#pragma once

// Sweeps over k and alpha that trace the limits T_k -> T and
// MK_k^alpha -> MK^alpha -> MK, plus config loading for the CLI.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otlab/costs.hpp"
#include "otlab/kernels.hpp"
#include "otlab/measures.hpp"
#include "otlab/particles.hpp"
#include "otlab/solvers.hpp"

namespace otlab {

struct Instance {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  CostSpec cost;
  TestFamily fam;
  KernelMode kernel_mode = KernelMode::gibbs;
  NoiseSpec noise = ScaledGaussian{1};
  /// Support of the reference second marginal. Empty means the union of
  /// the supports of mu and nu.
  std::vector<Point> targets;

  void validate() const;
};

std::vector<Point> reference_targets(const Instance& inst);
/// pi^k on mu's support x targets, by Gibbs weights or noise density.
ReferenceCoupling build_reference(const Instance& inst, int k, const std::vector<Point>& targets);

struct SweepOptions {
  SinkhornOptions sinkhorn;
  PenaltyOptions penalty;
  /// Record wall-clock seconds. Off by default so outputs are reproducible.
  bool timing = false;
};

struct SweepRow {
  int k = 0;
  std::optional<double> alpha;
  double value = 0.0;
  double gap_to_limit = 0.0;
  long iterations = 0;
  double seconds = 0.0;
  Termination termination = Termination::optimal;
};

/// T_k(nu) for each k with gap T_k(nu) - T(nu).
std::vector<SweepRow> gamma_sweep(const Instance& inst, const std::vector<int>& ks,
                                  const SweepOptions& opts = {});

struct RecoveryRow {
  int k = 0;
  DiscreteMeasure nu_k;
  double value = 0.0;     ///< T_k(nu_k)
  double distance = 0.0;  ///< d(nu_k, nu)
  bool nu_reachable = false;  ///< nu_k = nu
};

/// nu_k = nu when pi^k charges every atom of nu from every source atom;
/// otherwise the optimal plan's targets are moved to the nearest point
/// charged by kappa^k of their source.
std::vector<RecoveryRow> recovery_sequence(const Instance& inst, const std::vector<int>& ks,
                                           const SweepOptions& opts = {});

struct DoubleLimitResult {
  double mk = 0.0;                ///< T_c(mu, nu)
  std::vector<double> alphas;
  std::vector<double> mk_alpha;   ///< MK^alpha value per alpha
  std::vector<SweepRow> cells;    ///< gap_to_limit = value - MK^alpha, sorted by (k, alpha)
};

/// Penalized problems live on nu's support; the test family must separate it.
DoubleLimitResult double_limit(const Instance& inst, const std::vector<int>& ks,
                               const std::vector<double>& alphas, const SweepOptions& opts = {});

struct TraceRow {
  int k = 0;
  double distance = 0.0;   ///< max-norm distance of rho_k^alpha to the MK^alpha optimal set
  double value_gap = 0.0;  ///< MK_k^alpha - MK^alpha
};

std::vector<TraceRow> minimizer_trace(const Instance& inst, const std::vector<int>& ks, double alpha,
                                      const SweepOptions& opts = {});

/// Dyadic schedules 1, 2, 4, ..., up to max.
std::vector<int> dyadic_ks(int max_k = 1024);
std::vector<double> dyadic_alphas(double max_alpha = 64.0);

// --- configs -----------------------------------------------------------------

struct ExperimentConfig {
  std::string text;  ///< raw file contents, hashed into output headers
  std::uint64_t seed = 0;
  Instance inst;
  std::vector<int> ks;
  std::vector<double> alphas;
  double alpha = 1.0;  ///< for the minimizer trace
  SweepOptions sweep;
  // particles section
  int particle_k = 1;
  LdpOptions ldp;
};

/// Parses a TOML experiment file. Relative measure paths resolve against
/// the file's directory. Throws std::invalid_argument on bad input.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");

/// "# otlab <version> config_hash=<hex> seed=<seed>"
std::string output_header(const ExperimentConfig& cfg);
std::string version_string();

}  // namespace otlab

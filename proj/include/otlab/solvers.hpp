#pragma once

// Exact, entropic and penalized transport problems on finite supports.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "otlab/costs.hpp"
#include "otlab/kernels.hpp"
#include "otlab/measures.hpp"

namespace otlab {

enum class Termination { optimal, tolerance_reached, iteration_cap };
std::string to_string(Termination t);

/// No plan with finite objective exists (infinite cost or entropy).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  double value = 0.0;
  Coupling plan;
  std::vector<double> dual_phi;  ///< on the plan's source support
  std::vector<double> dual_psi;  ///< on the plan's target support
  long iterations = 0;
  /// LP solvers: max marginal violation. Sinkhorn: max marginal TV
  /// residual. Penalized entropic: duality gap.
  double residual = 0.0;
  Termination termination = Termination::optimal;
};

struct PenaltyProblem {
  double alpha = 0.0;
  TestFamily fam;
  DiscreteMeasure target;

  void validate() const;
};

// --- entropy ---------------------------------------------------------------

/// H(q|p) = sum q log(q/p) over a finite set; 0 log 0 = 0, +inf when q
/// charges a p-null point.
double relative_entropy(std::span<const double> q, std::span<const double> p);
/// Same for two couplings on identical supports.
double relative_entropy(const Coupling& rho, const Coupling& pi);
/// H(rho_0|pi_0) + sum_z rho_0(z) H(rho(.|z) | pi(.|z)).
double relative_entropy_tensorized(const Coupling& rho, const Coupling& pi);
/// <f, q> - log <e^f, p>, maximized at f = log(q/p).
double entropy_variational_value(std::span<const double> f, std::span<const double> q,
                                 std::span<const double> p);
/// <f, q> - max_x (f(x) - J(x)); the sup over f equals <J, q> at f = J.
double penalty_dual_value(std::span<const double> f, std::span<const double> q,
                          std::span<const double> j);

// --- exact transport -------------------------------------------------------

/// True when some coupling of the weight vectors avoids the +inf cells
/// (bipartite max-flow over the finite cells).
bool finite_plan_exists(std::span<const double> a, std::span<const double> b, const Matrix& cost);

/// Transportation simplex. Throws InfeasibleError when every coupling
/// charges an infinite-cost cell.
SolveReport solve_mk_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& c);

/// Monotone coupling of sorted 1-d supports; requires a convex cost.
SolveReport solve_mk_1d_monotone(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                 const CostSpec& spec);

/// S_1 f(z) = min_j (C[z][j] + f[j]), lowest index on ties.
std::vector<double> ctransform_s1(std::span<const double> f, const CostMatrix& c);
/// sum_z mu_z S_1 f(z) - sum_x nu_x f(x).
double kantorovich_dual_value(std::span<const double> f, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const CostMatrix& c);
/// report.value minus the dual value at f = -dual_psi.
double duality_gap(const SolveReport& report, const DiscreteMeasure& mu,
                   const DiscreteMeasure& nu, const CostMatrix& c);
/// sum_z mu_z S_01 g(z) - <g, rho> with S_01 g(z) = min_x (C[z][x] + g[z][x])
/// over finite-cost cells.
double coupling_dual_value(const Matrix& g, const Coupling& rho, const CostMatrix& c);
/// sum C rho with 0 * inf = 0.
double transport_cost(const Coupling& rho, const CostMatrix& c);

// --- entropic --------------------------------------------------------------

struct SinkhornOptions {
  double tol = 1e-9;
  long max_iters = 100000;
  /// Starting column scaling (log-domain) on nu's support; zero by default.
  std::optional<std::vector<double>> initial_log_scaling;
};

/// T_k(nu) = (1/k) min H(rho | pi^k) over couplings of (mu, nu). The plan
/// lives on mu's support x nu's support; every atom of nu must be a target
/// of pi. Throws InfeasibleError when no coupling is absolutely continuous
/// with respect to pi.
SolveReport solve_tk_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const ReferenceCoupling& pi, const SinkhornOptions& opts = {});

// --- penalized -------------------------------------------------------------

/// min sum C rho + alpha sum_i w_i |<g_i, rho_1 - nu>| over rho with
/// rho_0 = mu, supported on the cost matrix cells.
SolveReport solve_mk_alpha_lp(const DiscreteMeasure& mu, const CostMatrix& c,
                              const PenaltyProblem& pen);

/// max-norm distance from `plan` (on mu's support x the cost's targets) to
/// the set of plans whose penalized cost is within value_tol (relative,
/// floor 1) of the optimum. Solved as one LP.
double mk_alpha_face_distance(const DiscreteMeasure& mu, const CostMatrix& c,
                              const PenaltyProblem& pen, const Matrix& plan,
                              double value_tol = 1e-12);

/// Objective of the penalized entropic problem at a plan whose first
/// marginal is pi.mu: (1/k) H(rho | pi) + alpha d(rho_1, nu).
double mkk_alpha_objective(const Matrix& plan, const ReferenceCoupling& pi,
                           const PenaltyProblem& pen);

enum class PenaltyMethod { dual_newton, mirror_descent };

struct PenaltyOptions {
  double tol = 1e-12;
  long max_iters = 500;
  std::uint64_t seed = 0;
  PenaltyMethod method = PenaltyMethod::dual_newton;
};

/// min (1/k) H(rho | pi^k) + alpha d(rho_1, nu) over rho with rho_0 = mu.
/// The default method maximizes the concave dual over the box
/// lambda in [-1, 1]^m by projected Newton; the seed picks the starting
/// lambda. The residual is the duality gap.
SolveReport solve_mkk_alpha(const ReferenceCoupling& pi, const PenaltyProblem& pen,
                            const PenaltyOptions& opts = {});

// --- oracle ----------------------------------------------------------------

/// Exhaustive grid search over couplings of (mu, nu) at the given mass
/// resolution. At most 4 free parameters and 5e7 grid points.
double brute_force_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const std::function<double(const Matrix&)>& objective,
                            double resolution);
/// Same over all plans with first marginal mu and n_targets columns.
double brute_force_coupling(const DiscreteMeasure& mu, std::size_t n_targets,
                            const std::function<double(const Matrix&)>& objective,
                            double resolution);

}  // namespace otlab

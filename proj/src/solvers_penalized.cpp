#include <algorithm>
#include <cmath>
#include <limits>

#include "otlab/lp.hpp"
#include "otlab/rng.hpp"
#include "otlab/solvers.hpp"

namespace otlab {

namespace {

// g_i(x) for every member and target point.
Matrix feature_table(const TestFamily& fam, const std::vector<Point>& target) {
  Matrix g(fam.size(), target.size());
  for (std::size_t i = 0; i < fam.size(); ++i) {
    for (std::size_t x = 0; x < target.size(); ++x) g(i, x) = fam.eval(i, target[x]);
  }
  return g;
}

std::vector<double> column_sums(const Matrix& plan) {
  std::vector<double> s(plan.cols(), 0.0);
  for (std::size_t z = 0; z < plan.rows(); ++z) {
    for (std::size_t x = 0; x < plan.cols(); ++x) s[x] += plan(z, x);
  }
  return s;
}

// v_i = <g_i, rho_1> - <g_i, nu>.
std::vector<double> moment_gaps(const Matrix& g, std::span<const double> rho1,
                                std::span<const double> nu_moments) {
  std::vector<double> v(g.rows());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double s = 0.0;
    for (std::size_t x = 0; x < g.cols(); ++x) s += g(i, x) * rho1[x];
    v[i] = s - nu_moments[i];
  }
  return v;
}

double penalty_value(const PenaltyProblem& pen, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += pen.fam.weight(i) * std::min(std::abs(v[i]), 1.0);
  return pen.alpha == 0.0 ? 0.0 : pen.alpha * s;
}

// min sum C rho + alpha sum_i w_i t_i over finite cells rho and t, with the
// rows of rho summing to mu and t_i >= |<g_i, rho_1> - <g_i, nu>|.
// Variables: rho over `cells`, then t_1..t_m, then `extra_cols` unused
// columns; `extra_rows` zero rows follow the structural ones.
struct PenaltyLp {
  DenseLp lp;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  Matrix g;
  std::vector<double> nu_m;
};

PenaltyLp build_penalty_lp(const DiscreteMeasure& mu, const CostMatrix& c, const PenaltyProblem& pen,
                           std::size_t extra_cols, std::size_t extra_rows) {
  pen.validate();
  if (c.source_support() != mu.support()) {
    throw std::invalid_argument("penalized LP: cost rows do not match mu");
  }
  const std::size_t n0 = c.rows(), n1 = c.cols(), m = pen.fam.size();
  PenaltyLp out;
  auto& cells = out.cells;
  for (std::size_t z = 0; z < n0; ++z) {
    bool any = false;
    for (std::size_t x = 0; x < n1; ++x) {
      if (std::isfinite(c(z, x))) {
        cells.emplace_back(z, x);
        any = true;
      }
    }
    if (!any && mu.weight(z) > 0.0) {
      throw InfeasibleError("penalized LP: a source atom has only infinite-cost targets");
    }
  }
  out.g = feature_table(pen.fam, c.target_support());
  out.nu_m = pen.fam.moments(pen.target);
  const Matrix& g = out.g;

  const std::size_t nv = cells.size() + m + extra_cols;
  const std::size_t nr = n0 + 2 * m + extra_rows;
  DenseLp& lp = out.lp;
  lp.a = Matrix(nr, nv);
  lp.b.assign(nr, 0.0);
  lp.rel.assign(nr, RowRel::eq);
  lp.c.assign(nv, 0.0);
  for (std::size_t v = 0; v < cells.size(); ++v) {
    const auto [z, x] = cells[v];
    lp.c[v] = c(z, x);
    lp.a(z, v) = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      lp.a(n0 + 2 * i, v) = -g(i, x);     // t_i - <g_i, rho_1> >= -<g_i, nu>
      lp.a(n0 + 2 * i + 1, v) = g(i, x);  // t_i + <g_i, rho_1> >= <g_i, nu>
    }
  }
  for (std::size_t z = 0; z < n0; ++z) lp.b[z] = mu.weight(z);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t t = cells.size() + i;
    lp.c[t] = pen.alpha * pen.fam.weight(i);
    lp.a(n0 + 2 * i, t) = 1.0;
    lp.a(n0 + 2 * i + 1, t) = 1.0;
    lp.b[n0 + 2 * i] = -out.nu_m[i];
    lp.b[n0 + 2 * i + 1] = out.nu_m[i];
    lp.rel[n0 + 2 * i] = RowRel::ge;
    lp.rel[n0 + 2 * i + 1] = RowRel::ge;
  }
  return out;
}

}  // namespace

SolveReport solve_mk_alpha_lp(const DiscreteMeasure& mu, const CostMatrix& c,
                              const PenaltyProblem& pen) {
  PenaltyLp built = build_penalty_lp(mu, c, pen, 0, 0);
  const DenseLp& lp = built.lp;
  const auto& cells = built.cells;
  const Matrix& g = built.g;
  const auto& nu_m = built.nu_m;
  const std::size_t n0 = c.rows(), n1 = c.cols(), m = pen.fam.size();
  const DenseLpResult res = solve_dense_lp(lp);
  if (res.status == LpStatus::infeasible) throw InfeasibleError("penalized LP: infeasible");
  if (res.status == LpStatus::unbounded) throw std::domain_error("penalized LP: unbounded");

  SolveReport r;
  r.termination = res.status == LpStatus::optimal ? Termination::optimal : Termination::iteration_cap;
  r.iterations = res.pivots;
  if (res.status != LpStatus::optimal) return r;
  Matrix plan(n0, n1);
  for (std::size_t v = 0; v < cells.size(); ++v) plan(cells[v].first, cells[v].second) = res.x[v];
  double worst = 0.0;
  for (std::size_t z = 0; z < n0; ++z) {
    double s = 0.0;
    for (std::size_t x = 0; x < n1; ++x) s += plan(z, x);
    worst = std::max(worst, std::abs(s - mu.weight(z)));
  }
  r.residual = worst;
  const auto v = moment_gaps(g, column_sums(plan), nu_m);
  r.plan = Coupling(mu.support(), c.target_support(), std::move(plan));
  r.value = transport_cost(r.plan, c) + penalty_value(pen, v);
  r.dual_phi.assign(res.y.begin(), res.y.begin() + static_cast<long>(n0));
  r.dual_psi.assign(n1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double lam = res.y[n0 + 2 * i + 1] - res.y[n0 + 2 * i];
    for (std::size_t x = 0; x < n1; ++x) r.dual_psi[x] += lam * g(i, x);
  }
  return r;
}

double mk_alpha_face_distance(const DiscreteMeasure& mu, const CostMatrix& c,
                              const PenaltyProblem& pen, const Matrix& plan, double value_tol) {
  if (plan.rows() != c.rows() || plan.cols() != c.cols()) {
    throw std::invalid_argument("face distance: plan shape does not match the cost matrix");
  }
  const SolveReport opt = solve_mk_alpha_lp(mu, c, pen);
  if (opt.termination != Termination::optimal) throw std::domain_error("face distance: LP did not converge");
  const double bound = opt.value + value_tol * std::max(1.0, std::abs(opt.value));

  // Mass on infinite-cost cells is at distance at least its size from any
  // feasible plan; the LP below covers the finite cells.
  double outside = 0.0;
  for (std::size_t z = 0; z < c.rows(); ++z) {
    for (std::size_t x = 0; x < c.cols(); ++x) {
      if (!std::isfinite(c(z, x))) outside = std::max(outside, plan(z, x));
    }
  }
  const std::size_t n0 = c.rows(), m = pen.fam.size();
  std::size_t n_cells = 0;
  for (double v : c.values().data()) n_cells += std::isfinite(v) ? 1 : 0;
  // Extra column s; extra rows: rho_c - s <= plan_c, rho_c + s >= plan_c,
  // and the objective bound.
  PenaltyLp built = build_penalty_lp(mu, c, pen, 1, 2 * n_cells + 1);
  DenseLp& lp = built.lp;
  const std::size_t s_col = built.cells.size() + m;
  const std::size_t r0 = n0 + 2 * m;
  std::vector<double> cost(lp.c);
  std::fill(lp.c.begin(), lp.c.end(), 0.0);
  lp.c[s_col] = 1.0;
  for (std::size_t v = 0; v < built.cells.size(); ++v) {
    const double target = plan(built.cells[v].first, built.cells[v].second);
    lp.a(r0 + 2 * v, v) = 1.0;
    lp.a(r0 + 2 * v, s_col) = -1.0;
    lp.b[r0 + 2 * v] = target;
    lp.rel[r0 + 2 * v] = RowRel::le;
    lp.a(r0 + 2 * v + 1, v) = 1.0;
    lp.a(r0 + 2 * v + 1, s_col) = 1.0;
    lp.b[r0 + 2 * v + 1] = target;
    lp.rel[r0 + 2 * v + 1] = RowRel::ge;
  }
  const std::size_t last = r0 + 2 * built.cells.size();
  for (std::size_t j = 0; j < s_col; ++j) lp.a(last, j) = cost[j];
  lp.b[last] = bound;
  lp.rel[last] = RowRel::le;
  const DenseLpResult res = solve_dense_lp(lp);
  if (res.status != LpStatus::optimal) throw std::domain_error("face distance: LP did not converge");
  return std::max(outside, res.value);
}

double mkk_alpha_objective(const Matrix& plan, const ReferenceCoupling& pi,
                           const PenaltyProblem& pen) {
  pen.validate();
  if (plan.rows() != pi.rows.rows() || plan.cols() != pi.rows.cols()) {
    throw std::invalid_argument("penalized objective: plan shape does not match the reference");
  }
  double h = 0.0;
  for (std::size_t z = 0; z < plan.rows(); ++z) {
    for (std::size_t x = 0; x < plan.cols(); ++x) {
      const double w = plan(z, x);
      if (w == 0.0) continue;
      const double p = pi.mu.weight(z) * pi.rows(z, x);
      if (p == 0.0) return kInf;
      h += w * (std::log(w) - std::log(pi.mu.weight(z)) - pi.log_rows(z, x));
    }
  }
  const Matrix g = feature_table(pen.fam, pi.target);
  const auto v = moment_gaps(g, column_sums(plan), pen.fam.moments(pen.target));
  return std::max(h, 0.0) / pi.k + penalty_value(pen, v);
}

namespace {

// Dual of the penalized entropic problem over lambda in [-1, 1]^m:
//   F(lambda) = (1/k) sum_z mu_z log sum_x kappa_zx exp(-k h(x))
//               + alpha sum_i w_i lambda_i <g_i, nu>,
//   h = alpha sum_i w_i lambda_i g_i.
// The primal minimizer is rho_zx = mu_z kappa_zx exp(-k h(x)) / Z_z.
class PenaltyDual {
 public:
  PenaltyDual(const ReferenceCoupling& pi, const PenaltyProblem& pen)
      : pi_(pi), pen_(pen), g_(feature_table(pen.fam, pi.target)),
        nu_m_(pen.fam.moments(pen.target)), a_(g_.rows(), g_.cols()),
        plan_(pi.rows.rows(), pi.rows.cols()), lse_(pi.rows.rows()), t_(pi.k) {
    for (std::size_t i = 0; i < g_.rows(); ++i) {
      for (std::size_t x = 0; x < g_.cols(); ++x) {
        a_(i, x) = pen.alpha * pen.fam.weight(i) * g_(i, x);
      }
    }
  }

  std::size_t dim() const { return g_.rows(); }
  /// The multiplier of h in the exponent; k for the actual problem, smaller
  /// values give the smoother problems used for continuation.
  void set_scale(double t) { t_ = t; }
  double scale() const { return t_; }

  // Evaluates F, its gradient and the primal plan at lambda.
  double eval(std::span<const double> lambda, std::vector<double>* grad, Matrix* hess) {
    const std::size_t m = dim(), n0 = plan_.rows(), n1 = plan_.cols();
    const double k = t_;
    std::vector<double> h(n1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t x = 0; x < n1; ++x) h[x] += lambda[i] * a_(i, x);
    }
    double f = 0.0;
    std::vector<double> s(n1);
    if (hess) *hess = Matrix(m, m);
    std::vector<double> ea(m);
    for (std::size_t z = 0; z < n0; ++z) {
      const double mz = pi_.mu.weight(z);
      double top = -kInf;
      for (std::size_t x = 0; x < n1; ++x) {
        s[x] = pi_.log_rows(z, x) - k * h[x];
        top = std::max(top, s[x]);
      }
      double sum = 0.0;
      for (std::size_t x = 0; x < n1; ++x) sum += std::exp(s[x] - top);
      lse_[z] = top + std::log(sum);
      if (mz > 0.0) f += mz * lse_[z] / k;
      for (std::size_t x = 0; x < n1; ++x) plan_(z, x) = mz * std::exp(s[x] - lse_[z]);
      if (hess && mz > 0.0) {
        // k mu_z Cov_{r_z}(a_i, a_j)
        for (std::size_t i = 0; i < m; ++i) {
          ea[i] = 0.0;
          for (std::size_t x = 0; x < n1; ++x) ea[i] += plan_(z, x) * a_(i, x);
          ea[i] /= mz;
        }
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = i; j < m; ++j) {
            double e2 = 0.0;
            for (std::size_t x = 0; x < n1; ++x) {
              e2 += plan_(z, x) * (a_(i, x) - ea[i]) * (a_(j, x) - ea[j]);
            }
            (*hess)(i, j) += k * e2;
          }
        }
      }
    }
    if (hess) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < i; ++j) (*hess)(i, j) = (*hess)(j, i);
      }
    }
    for (std::size_t i = 0; i < m; ++i) f += pen_.alpha * pen_.fam.weight(i) * lambda[i] * nu_m_[i];
    gaps_ = moment_gaps(g_, column_sums(plan_), nu_m_);
    if (grad) {
      grad->resize(m);
      for (std::size_t i = 0; i < m; ++i) (*grad)[i] = -pen_.alpha * pen_.fam.weight(i) * gaps_[i];
    }
    return f;
  }

  // alpha sum_i w_i (|v_i| - lambda_i v_i) at the last evaluated point.
  double gap(std::span<const double> lambda) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      s += pen_.fam.weight(i) * (std::abs(gaps_[i]) - lambda[i] * gaps_[i]);
    }
    return pen_.alpha * std::max(s, 0.0);
  }

  const Matrix& plan() const { return plan_; }
  const std::vector<double>& lse() const { return lse_; }
  std::vector<double> h(std::span<const double> lambda) const {
    std::vector<double> out(g_.cols(), 0.0);
    for (std::size_t i = 0; i < dim(); ++i) {
      for (std::size_t x = 0; x < g_.cols(); ++x) out[x] += lambda[i] * a_(i, x);
    }
    return out;
  }

 private:
  const ReferenceCoupling& pi_;
  const PenaltyProblem& pen_;
  Matrix g_;
  std::vector<double> nu_m_;
  Matrix a_;
  Matrix plan_;
  std::vector<double> lse_;
  std::vector<double> gaps_;
  double t_;
};

// Solves (H + tau I) d = r for symmetric positive semidefinite H by
// Cholesky, raising tau until the factorization succeeds.
std::vector<double> regularized_solve(const Matrix& hess, const std::vector<double>& r) {
  const std::size_t n = r.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += hess(i, i);
  double tau = 1e-14 * std::max(trace, 1e-300);
  for (int attempt = 0; attempt < 40; ++attempt, tau *= 10.0) {
    Matrix l(n, n);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = hess(i, j) + (i == j ? tau : 0.0);
        for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
        if (i == j) {
          if (!(s > 0.0)) {
            ok = false;
            break;
          }
          l(i, i) = std::sqrt(s);
        } else {
          l(i, j) = s / l(j, j);
        }
      }
    }
    if (!ok) continue;
    std::vector<double> y(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = r[i];
      for (std::size_t p = 0; p < i; ++p) s -= l(i, p) * y[p];
      y[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = y[i];
      for (std::size_t p = i + 1; p < n; ++p) s -= l(p, i) * d[p];
      d[i] = s / l(i, i);
    }
    return d;
  }
  return std::vector<double>(r);
}

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

double projected_gradient_norm(std::span<const double> lambda, std::span<const double> grad) {
  double pg = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    pg = std::max(pg, std::abs(lambda[i] - clamp1(lambda[i] - grad[i])));
  }
  return pg;
}

SolveReport finish_report(const ReferenceCoupling& pi, const PenaltyProblem& pen,
                          const Matrix& plan, std::vector<double> phi, std::vector<double> psi,
                          long iterations, double gap, double tol) {
  SolveReport r;
  r.plan = Coupling(pi.mu.support(), pi.target, plan);
  r.value = mkk_alpha_objective(plan, pi, pen);
  r.dual_phi = std::move(phi);
  r.dual_psi = std::move(psi);
  r.iterations = iterations;
  r.residual = gap;
  r.termination = gap <= tol ? Termination::tolerance_reached : Termination::iteration_cap;
  return r;
}

// Projected Newton on one scale of the dual, from lambda. Returns the
// duality gap at the final iterate; `it` counts iterations across stages.
double newton_stage(PenaltyDual& dual, std::vector<double>& lambda, double tol, long max_iters, long& it) {
  const std::size_t m = dual.dim();
  std::vector<double> grad;
  Matrix hess;
  double f = dual.eval(lambda, &grad, &hess);
  double gap = dual.gap(lambda);
  for (long local = 0; gap > tol && local < max_iters; ++local) {
    ++it;
    // Bertsekas' projected Newton: coordinates pinned at a bound with the
    // gradient pushing outward take a plain gradient step, the rest a
    // Newton step on the free block.
    const double pg = projected_gradient_norm(lambda, grad);
    const double eps = std::min(1e-3, pg);
    std::vector<char> active(m, 0);
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < m; ++i) {
      if ((lambda[i] <= -1.0 + eps && grad[i] > 0.0) || (lambda[i] >= 1.0 - eps && grad[i] < 0.0)) {
        active[i] = 1;
      } else {
        free_idx.push_back(i);
      }
    }
    std::vector<double> d(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (active[i]) d[i] = -grad[i];
    }
    if (!free_idx.empty()) {
      Matrix hf(free_idx.size(), free_idx.size());
      std::vector<double> rf(free_idx.size());
      for (std::size_t a = 0; a < free_idx.size(); ++a) {
        rf[a] = -grad[free_idx[a]];
        for (std::size_t b = 0; b < free_idx.size(); ++b) hf(a, b) = hess(free_idx[a], free_idx[b]);
      }
      const auto df = regularized_solve(hf, rf);
      for (std::size_t a = 0; a < free_idx.size(); ++a) d[free_idx[a]] = df[a];
    }

    // Armijo search along the projection arc.
    double step = 1.0;
    bool accepted = false;
    std::vector<double> trial(m);
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      double decrease = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        trial[i] = clamp1(lambda[i] + step * d[i]);
        decrease += grad[i] * (trial[i] - lambda[i]);
      }
      if (!(decrease < 0.0)) continue;
      const double ft = dual.eval(trial, nullptr, nullptr);
      if (ft <= f + 1e-4 * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Near the optimum F moves below its rounding level while the
      // gradient, computed from the primal plan, stays measurable. Steps
      // that keep F within rounding and shrink the projected gradient are
      // taken.
      const double flat = 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
      std::vector<double> gt;
      step = 1.0;
      for (int ls = 0; ls < 30 && !accepted; ++ls, step *= 0.5) {
        for (std::size_t i = 0; i < m; ++i) trial[i] = clamp1(lambda[i] + step * d[i]);
        const double ft = dual.eval(trial, &gt, nullptr);
        if (ft <= f + flat && projected_gradient_norm(trial, gt) < pg) accepted = true;
      }
    }
    if (!accepted) {
      // Fall back to a projected gradient step with backtracking.
      step = 1.0;
      for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
        double decrease = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          trial[i] = clamp1(lambda[i] - step * grad[i]);
          decrease += grad[i] * (trial[i] - lambda[i]);
        }
        if (!(decrease < 0.0)) break;
        const double ft = dual.eval(trial, nullptr, nullptr);
        if (ft <= f + 1e-4 * decrease) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      f = dual.eval(lambda, &grad, &hess);
      gap = dual.gap(lambda);
      break;  // no further progress in floating point
    }
    lambda = trial;
    f = dual.eval(lambda, &grad, &hess);
    gap = dual.gap(lambda);
  }

  return gap;
}

SolveReport solve_dual_newton(const ReferenceCoupling& pi, const PenaltyProblem& pen,
                              const PenaltyOptions& opts) {
  PenaltyDual dual(pi, pen);
  std::vector<double> lambda(dual.dim());
  CounterRng rng(opts.seed, 0x70656e616c747931ull);
  for (auto& l : lambda) l = 2.0 * rng.uniform() - 1.0;

  // Continuation in the scale: for large k the dual is nearly piecewise
  // linear and Newton from a cold start can creep along the box faces.
  std::vector<double> scales{static_cast<double>(pi.k)};
  while (scales.back() > 16.0) scales.push_back(scales.back() / 4.0);
  long it = 0;
  double gap = kInf;
  for (std::size_t j = scales.size(); j-- > 0;) {
    dual.set_scale(scales[j]);
    const bool last = j == 0;
    gap = newton_stage(dual, lambda, last ? opts.tol : std::max(opts.tol, 1e-8),
                       last ? opts.max_iters : std::min<long>(opts.max_iters, 100), it);
  }
  const auto h = dual.h(lambda);
  std::vector<double> phi(pi.mu.size()), psi(h.size());
  for (std::size_t z = 0; z < phi.size(); ++z) phi[z] = -dual.lse()[z] / pi.k;
  for (std::size_t x = 0; x < psi.size(); ++x) psi[x] = -h[x];
  return finish_report(pi, pen, dual.plan(), std::move(phi), std::move(psi), it, gap, opts.tol);
}

// Averaged entropic mirror descent on the conditional rows.
SolveReport solve_mirror_descent(const ReferenceCoupling& pi, const PenaltyProblem& pen,
                                 const PenaltyOptions& opts) {
  const std::size_t n0 = pi.rows.rows(), n1 = pi.rows.cols(), m = pen.fam.size();
  const double k = pi.k;
  const Matrix g = feature_table(pen.fam, pi.target);
  const auto nu_m = pen.fam.moments(pen.target);
  CounterRng rng(opts.seed, 0x6d6972726f72ull);

  Matrix logr(n0, n1);
  for (std::size_t z = 0; z < n0; ++z) {
    for (std::size_t x = 0; x < n1; ++x) {
      logr(z, x) = pi.log_rows(z, x) == -kInf ? -kInf : pi.log_rows(z, x) + (rng.uniform() - 0.5);
    }
  }
  const auto normalize = [&](std::size_t z) {
    double top = -kInf;
    for (std::size_t x = 0; x < n1; ++x) top = std::max(top, logr(z, x));
    double s = 0.0;
    for (std::size_t x = 0; x < n1; ++x) s += std::exp(logr(z, x) - top);
    const double l = top + std::log(s);
    for (std::size_t x = 0; x < n1; ++x) {
      if (logr(z, x) != -kInf) logr(z, x) -= l;
    }
  };
  for (std::size_t z = 0; z < n0; ++z) normalize(z);

  const auto plan_of = [&](const Matrix& lr) {
    Matrix p(n0, n1);
    for (std::size_t z = 0; z < n0; ++z) {
      for (std::size_t x = 0; x < n1; ++x) p(z, x) = pi.mu.weight(z) * std::exp(lr(z, x));
    }
    return p;
  };

  const double eta0 = 1.0 / (pen.alpha + 1.0);
  Matrix avg(n0, n1);
  std::vector<double> sign_avg(m, 0.0);
  Matrix best = plan_of(logr);
  double best_obj = mkk_alpha_objective(best, pi, pen);
  long it = 0;
  double gap = kInf;
  PenaltyDual dual(pi, pen);
  while (it < opts.max_iters) {
    ++it;
    const Matrix p = plan_of(logr);
    const auto v = moment_gaps(g, column_sums(p), nu_m);
    std::vector<double> s(m);
    for (std::size_t i = 0; i < m; ++i) s[i] = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
    const double eta = eta0 / std::sqrt(static_cast<double>(it));
    for (std::size_t z = 0; z < n0; ++z) {
      for (std::size_t x = 0; x < n1; ++x) {
        if (logr(z, x) == -kInf) continue;
        double sub = (logr(z, x) - pi.log_rows(z, x)) / k;
        for (std::size_t i = 0; i < m; ++i) sub += pen.alpha * pen.fam.weight(i) * s[i] * g(i, x);
        logr(z, x) -= eta * sub;
      }
      normalize(z);
    }
    const double wt = 1.0 / static_cast<double>(it);
    for (std::size_t c = 0; c < avg.data().size(); ++c) {
      avg.data()[c] += wt * (p.data()[c] - avg.data()[c]);
    }
    for (std::size_t i = 0; i < m; ++i) sign_avg[i] += wt * (s[i] - sign_avg[i]);
    if (it % 50 == 0 || it == opts.max_iters) {
      const double obj = mkk_alpha_objective(avg, pi, pen);
      if (obj < best_obj) {
        best_obj = obj;
        best = avg;
      }
      const double dval = -dual.eval(sign_avg, nullptr, nullptr);
      gap = std::max(0.0, best_obj - dval);
      if (gap <= opts.tol) break;
    }
  }
  return finish_report(pi, pen, best, {}, {}, it, gap, opts.tol);
}

}  // namespace

SolveReport solve_mkk_alpha(const ReferenceCoupling& pi, const PenaltyProblem& pen,
                            const PenaltyOptions& opts) {
  pen.validate();
  if (!(opts.tol > 0.0) || opts.max_iters < 1) {
    throw std::invalid_argument("penalized entropic: tol must be positive and max_iters >= 1");
  }
  if (pen.target.dim() != pi.mu.dim()) {
    throw std::invalid_argument("penalized entropic: dimension mismatch");
  }
  return opts.method == PenaltyMethod::dual_newton ? solve_dual_newton(pi, pen, opts)
                                                   : solve_mirror_descent(pi, pen, opts);
}

// --- brute force -------------------------------------------------------------

namespace {

constexpr double kMaxGridPoints = 5e7;

std::vector<double> mass_grid(double upper, double res) {
  std::vector<double> out;
  for (long s = 0;; ++s) {
    const double v = static_cast<double>(s) * res;
    if (v >= upper - 1e-15) break;
    out.push_back(v);
  }
  out.push_back(std::max(upper, 0.0));
  return out;
}

double enumerate(const std::vector<std::vector<double>>& axes,
                 const std::function<bool(const std::vector<double>&, double&)>& eval) {
  double points = 1.0;
  for (const auto& a : axes) points *= static_cast<double>(a.size());
  if (points > kMaxGridPoints) {
    throw std::invalid_argument("brute force: grid too large for the requested resolution");
  }
  std::vector<std::size_t> idx(axes.size(), 0);
  std::vector<double> p(axes.size());
  double best = kInf;
  bool any = false;
  for (bool done = false; !done;) {
    for (std::size_t a = 0; a < axes.size(); ++a) p[a] = axes[a][idx[a]];
    double v = 0.0;
    if (eval(p, v)) {
      any = true;
      best = std::min(best, v);
    }
    std::size_t a = axes.size();
    while (true) {
      if (a == 0) {
        done = true;
        break;
      }
      --a;
      if (++idx[a] < axes[a].size()) break;
      idx[a] = 0;
    }
  }
  if (!any) throw std::invalid_argument("brute force: no feasible plan on the grid");
  return best;
}

void check_resolution(double res) {
  if (!(res > 0.0) || !(res < 1.0)) throw std::invalid_argument("brute force: resolution in (0, 1)");
}

}  // namespace

double brute_force_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const std::function<double(const Matrix&)>& objective,
                            double resolution) {
  check_resolution(resolution);
  const std::size_t n0 = mu.size(), n1 = nu.size();
  const std::size_t free = (n0 - 1) * (n1 - 1);
  if (free > 4) throw std::invalid_argument("brute force: more than 4 free parameters");
  std::vector<std::vector<double>> axes;
  for (std::size_t z = 0; z + 1 < n0; ++z) {
    for (std::size_t x = 0; x + 1 < n1; ++x) {
      axes.push_back(mass_grid(std::min(mu.weight(z), nu.weight(x)), resolution));
    }
  }
  Matrix plan(n0, n1);
  const auto eval = [&](const std::vector<double>& p, double& out) {
    std::size_t c = 0;
    std::vector<double> col_rest(nu.weights());
    for (std::size_t z = 0; z + 1 < n0; ++z) {
      double row = mu.weight(z);
      for (std::size_t x = 0; x + 1 < n1; ++x) {
        plan(z, x) = p[c++];
        row -= plan(z, x);
        col_rest[x] -= plan(z, x);
      }
      if (row < -1e-12) return false;
      plan(z, n1 - 1) = std::max(row, 0.0);
      col_rest[n1 - 1] -= plan(z, n1 - 1);
    }
    for (std::size_t x = 0; x < n1; ++x) {
      if (col_rest[x] < -1e-12) return false;
      plan(n0 - 1, x) = std::max(col_rest[x], 0.0);
    }
    out = objective(plan);
    return true;
  };
  return enumerate(axes, eval);
}

double brute_force_coupling(const DiscreteMeasure& mu, std::size_t n_targets,
                            const std::function<double(const Matrix&)>& objective,
                            double resolution) {
  check_resolution(resolution);
  if (n_targets == 0) throw std::invalid_argument("brute force: no target points");
  const std::size_t n0 = mu.size();
  if (n0 * (n_targets - 1) > 4) throw std::invalid_argument("brute force: more than 4 free parameters");
  std::vector<std::vector<double>> axes;
  for (std::size_t z = 0; z < n0; ++z) {
    for (std::size_t x = 0; x + 1 < n_targets; ++x) axes.push_back(mass_grid(mu.weight(z), resolution));
  }
  Matrix plan(n0, n_targets);
  const auto eval = [&](const std::vector<double>& p, double& out) {
    std::size_t c = 0;
    for (std::size_t z = 0; z < n0; ++z) {
      double row = mu.weight(z);
      for (std::size_t x = 0; x + 1 < n_targets; ++x) {
        plan(z, x) = p[c++];
        row -= plan(z, x);
      }
      if (row < -1e-12) return false;
      plan(z, n_targets - 1) = std::max(row, 0.0);
    }
    out = objective(plan);
    return true;
  };
  return enumerate(axes, eval);
}

}  // namespace otlab

#include <algorithm>
#include <cmath>

#include "otlab/solvers.hpp"

namespace otlab {

namespace {

double log_sum_exp(std::span<const double> v) {
  double top = -kInf;
  for (double x : v) top = std::max(top, x);
  if (top == -kInf) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

double safe_log(double w) { return w > 0.0 ? std::log(w) : -kInf; }

}  // namespace

SolveReport solve_tk_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const ReferenceCoupling& pi, const SinkhornOptions& opts) {
  if (mu.support() != pi.mu.support()) {
    throw std::invalid_argument("sinkhorn: mu does not match the reference coupling's source");
  }
  if (!(opts.tol > 0.0) || opts.max_iters < 1) {
    throw std::invalid_argument("sinkhorn: tol must be positive and max_iters >= 1");
  }
  const std::size_t m = mu.size(), n = nu.size();
  const double k = static_cast<double>(pi.k);

  // Column j of the plan is target column col[j] of pi.
  std::vector<std::size_t> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t found = pi.target.size();
    for (std::size_t t = 0; t < pi.target.size(); ++t) {
      if (pi.target[t] == nu.atom(j)) {
        found = t;
        break;
      }
    }
    if (found == pi.target.size()) {
      if (nu.weight(j) > 0.0) {
        throw InfeasibleError("entropic transport: nu charges a point outside the reference targets");
      }
      col[j] = pi.target.size();
    } else {
      col[j] = found;
    }
  }
  Matrix logk(m, n, -kInf);
  Matrix support(m, n, kInf);
  for (std::size_t z = 0; z < m; ++z) {
    for (std::size_t j = 0; j < n; ++j) {
      if (col[j] == pi.target.size()) continue;
      logk(z, j) = pi.log_rows(z, col[j]);
      if (logk(z, j) > -kInf) support(z, j) = 0.0;
    }
  }
  if (!finite_plan_exists(mu.weights(), nu.weights(), support)) {
    throw InfeasibleError("entropic transport: no coupling of (mu, nu) is absolutely continuous "
                          "with respect to the reference coupling");
  }

  std::vector<double> log_a(m), log_b(n);
  for (std::size_t z = 0; z < m; ++z) log_a[z] = safe_log(mu.weight(z));
  for (std::size_t j = 0; j < n; ++j) log_b[j] = safe_log(nu.weight(j));

  std::vector<double> f(m, -kInf), g(n, 0.0);
  if (opts.initial_log_scaling) {
    if (opts.initial_log_scaling->size() != n) {
      throw std::invalid_argument("sinkhorn: initial scaling has the wrong length");
    }
    g = *opts.initial_log_scaling;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (log_b[j] == -kInf) g[j] = -kInf;
  }

  std::vector<double> buf(std::max(m, n));
  const auto row_lse = [&](std::size_t z) {
    for (std::size_t j = 0; j < n; ++j) buf[j] = logk(z, j) + g[j];
    return log_sum_exp({buf.data(), n});
  };
  const auto col_lse = [&](std::size_t j) {
    for (std::size_t z = 0; z < m; ++z) buf[z] = logk(z, j) + f[z];
    return log_sum_exp({buf.data(), m});
  };

  SolveReport r;
  r.termination = Termination::iteration_cap;
  long it = 0;
  double residual = kInf;
  while (it < opts.max_iters) {
    ++it;
    for (std::size_t z = 0; z < m; ++z) {
      f[z] = log_a[z] == -kInf ? -kInf : log_a[z] - row_lse(z);
    }
    for (std::size_t j = 0; j < n; ++j) {
      g[j] = log_b[j] == -kInf ? -kInf : log_b[j] - col_lse(j);
    }
    double row_tv = 0.0, col_tv = 0.0;
    for (std::size_t z = 0; z < m; ++z) {
      const double s = f[z] == -kInf ? 0.0 : std::exp(f[z] + row_lse(z));
      row_tv += std::abs(s - mu.weight(z));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double s = g[j] == -kInf ? 0.0 : std::exp(g[j] + col_lse(j));
      col_tv += std::abs(s - nu.weight(j));
    }
    residual = 0.5 * std::max(row_tv, col_tv);
    if (residual <= opts.tol) {
      r.termination = Termination::tolerance_reached;
      break;
    }
  }

  Matrix plan(m, n);
  double value = 0.0;
  for (std::size_t z = 0; z < m; ++z) {
    if (f[z] == -kInf) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (g[j] == -kInf || logk(z, j) == -kInf) continue;
      const double w = std::exp(f[z] + logk(z, j) + g[j]);
      plan(z, j) = w;
      // log(rho / pi) = f - log mu + g
      if (w > 0.0) value += w * (f[z] - log_a[z] + g[j]);
    }
  }
  r.value = std::max(0.0, value / k);
  r.plan = Coupling(mu.support(), nu.support(), std::move(plan));
  r.dual_phi.resize(m);
  r.dual_psi.resize(n);
  for (std::size_t z = 0; z < m; ++z) r.dual_phi[z] = f[z] == -kInf ? 0.0 : (f[z] - log_a[z]) / k;
  for (std::size_t j = 0; j < n; ++j) r.dual_psi[j] = g[j] / k;
  r.iterations = it;
  r.residual = residual;
  return r;
}

}  // namespace otlab

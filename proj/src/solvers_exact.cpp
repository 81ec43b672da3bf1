#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "otlab/solvers.hpp"

namespace otlab {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::optimal:
      return "optimal";
    case Termination::tolerance_reached:
      return "tolerance_reached";
    case Termination::iteration_cap:
      return "iteration_cap";
  }
  return "unknown";
}

void PenaltyProblem::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("penalty: alpha must be finite and >= 0");
  }
  if (fam.size() == 0) throw std::invalid_argument("penalty: empty test family");
}

// --- entropy ---------------------------------------------------------------

double relative_entropy(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw std::invalid_argument("relative_entropy: size mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    if (p[i] == 0.0) return kInf;
    h += q[i] * std::log(q[i] / p[i]);
  }
  return std::max(h, 0.0);
}

double relative_entropy(const Coupling& rho, const Coupling& pi) {
  if (rho.source_support() != pi.source_support() || rho.target_support() != pi.target_support()) {
    throw std::invalid_argument("relative_entropy: couplings live on different supports");
  }
  return relative_entropy(rho.weights().data(), pi.weights().data());
}

double relative_entropy_tensorized(const Coupling& rho, const Coupling& pi) {
  if (rho.source_support() != pi.source_support() || rho.target_support() != pi.target_support()) {
    throw std::invalid_argument("relative_entropy: couplings live on different supports");
  }
  const auto r0 = rho.row_sums();
  const auto p0 = pi.row_sums();
  double h = relative_entropy(r0, p0);
  if (!std::isfinite(h)) return kInf;
  std::vector<double> rc(rho.cols()), pc(rho.cols());
  for (std::size_t z = 0; z < rho.rows(); ++z) {
    if (r0[z] == 0.0) continue;
    for (std::size_t x = 0; x < rho.cols(); ++x) {
      rc[x] = rho(z, x) / r0[z];
      pc[x] = pi(z, x) / p0[z];
    }
    const double hz = relative_entropy(rc, pc);
    if (!std::isfinite(hz)) return kInf;
    h += r0[z] * hz;
  }
  return h;
}

double entropy_variational_value(std::span<const double> f, std::span<const double> q,
                                 std::span<const double> p) {
  if (f.size() != q.size() || q.size() != p.size()) {
    throw std::invalid_argument("entropy_variational_value: size mismatch");
  }
  double top = -kInf;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (p[i] > 0.0) top = std::max(top, f[i]);
  }
  double s = 0.0, fq = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::exp(f[i] - top);
    if (q[i] > 0.0) fq += q[i] * f[i];
  }
  return fq - (top + std::log(s));
}

double penalty_dual_value(std::span<const double> f, std::span<const double> q,
                          std::span<const double> j) {
  if (f.size() != q.size() || q.size() != j.size()) {
    throw std::invalid_argument("penalty_dual_value: size mismatch");
  }
  double fq = 0.0, top = -kInf;
  for (std::size_t i = 0; i < f.size(); ++i) {
    fq += q[i] * f[i];
    top = std::max(top, f[i] - j[i]);
  }
  return fq - top;
}

// --- feasibility -----------------------------------------------------------

namespace {

// Dinic max-flow on source -> rows -> cols -> sink.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t n) : adj_(n) {}

  void add_edge(std::size_t u, std::size_t v, double cap) {
    adj_[u].push_back(edges_.size());
    edges_.push_back({v, cap});
    adj_[v].push_back(edges_.size());
    edges_.push_back({u, 0.0});
  }

  double run(std::size_t s, std::size_t t) {
    double flow = 0.0;
    while (bfs(s, t)) {
      it_.assign(adj_.size(), 0);
      while (true) {
        const double f = dfs(s, t, kInf);
        if (f <= 0.0) break;
        flow += f;
      }
    }
    return flow;
  }

 private:
  struct Edge {
    std::size_t to;
    double cap;
  };
  static constexpr double kEps = 1e-15;

  bool bfs(std::size_t s, std::size_t t) {
    level_.assign(adj_.size(), -1);
    std::deque<std::size_t> q{s};
    level_[s] = 0;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop_front();
      for (std::size_t e : adj_[u]) {
        if (edges_[e].cap > kEps && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          q.push_back(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(std::size_t u, std::size_t t, double pushed) {
    if (u == t) return pushed;
    for (; it_[u] < adj_[u].size(); ++it_[u]) {
      const std::size_t e = adj_[u][it_[u]];
      const std::size_t v = edges_[e].to;
      if (edges_[e].cap <= kEps || level_[v] != level_[u] + 1) continue;
      const double f = dfs(v, t, std::min(pushed, edges_[e].cap));
      if (f > 0.0) {
        edges_[e].cap -= f;
        edges_[e ^ 1].cap += f;
        return f;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
};

}  // namespace

bool finite_plan_exists(std::span<const double> a, std::span<const double> b, const Matrix& cost) {
  const std::size_t m = a.size(), n = b.size();
  if (cost.rows() != m || cost.cols() != n) {
    throw std::invalid_argument("finite_plan_exists: size mismatch");
  }
  MaxFlow g(m + n + 2);
  const std::size_t s = m + n, t = m + n + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (a[i] > 0.0) g.add_edge(s, i, a[i]);
    total += a[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (b[j] > 0.0) g.add_edge(m + j, t, b[j]);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (a[i] <= 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (b[j] > 0.0 && std::isfinite(cost(i, j))) g.add_edge(i, m + j, 2.0 * total + 1.0);
    }
  }
  return g.run(s, t) >= total - 1e-9;
}

// --- transportation simplex -------------------------------------------------

namespace {

class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> a, std::vector<double> b, const Matrix& cost)
      : m_(a.size()), n_(b.size()), a_(std::move(a)), b_(std::move(b)), c_(cost),
        basic_(m_ * n_, 0), pot_(m_ + n_, 0.0) {
    max_finite_ = 0.0;
    for (double v : c_.data()) {
      if (std::isfinite(v)) {
        max_finite_ = std::max(max_finite_, v);
        has_finite_ = true;
      } else {
        has_inf_ = true;
      }
    }
    north_west_corner();
  }

  // Returns false when the pivot budget runs out.
  bool solve(long max_pivots) {
    if (has_inf_) {
      if (!run(/*phase1=*/true, max_pivots)) return false;
      double inf_flow = 0.0;
      for (auto& cell : basis_) {
        if (!std::isfinite(c_(cell.i, cell.j))) inf_flow += cell.flow;
      }
      if (inf_flow > 1e-9) throw InfeasibleError("exact transport: every coupling uses an infinite-cost cell");
      for (auto& cell : basis_) {
        if (!std::isfinite(c_(cell.i, cell.j))) cell.flow = 0.0;
      }
    }
    return run(/*phase1=*/false, max_pivots);
  }

  long pivots() const { return pivots_; }

  Matrix plan() const {
    Matrix x(m_, n_);
    for (const auto& cell : basis_) x(cell.i, cell.j) = cell.flow;
    return x;
  }
  std::vector<double> phi() const { return {pot_.begin(), pot_.begin() + m_}; }
  std::vector<double> psi() const { return {pot_.begin() + m_, pot_.end()}; }

 private:
  struct Cell {
    std::size_t i, j;
    double flow;
  };

  void north_west_corner() {
    std::vector<double> ra(a_), rb(b_);
    std::size_t i = 0, j = 0;
    while (true) {
      const bool row_done = ra[i] <= rb[j];
      const double x = std::min(ra[i], rb[j]);
      add_basic(i, j, x);
      ra[i] -= x;
      rb[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (j == n_ - 1 || (row_done && i < m_ - 1)) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void add_basic(std::size_t i, std::size_t j, double flow) {
    basis_.push_back({i, j, flow});
    basic_[i * n_ + j] = 1;
  }

  double phase_cost(std::size_t i, std::size_t j, bool phase1) const {
    const double c = c_(i, j);
    if (phase1) return std::isfinite(c) ? 0.0 : 1.0;
    return std::isfinite(c) ? c : max_finite_;
  }

  // Potentials with pot[0] = 0 and the tree's parent structure.
  void build_tree(bool phase1) {
    const std::size_t nodes = m_ + n_;
    adj_.assign(nodes, {});
    for (std::size_t e = 0; e < basis_.size(); ++e) {
      adj_[basis_[e].i].push_back(e);
      adj_[m_ + basis_[e].j].push_back(e);
    }
    parent_edge_.assign(nodes, kNone);
    depth_.assign(nodes, -1);
    std::deque<std::size_t> q{0};
    depth_[0] = 0;
    pot_[0] = 0.0;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop_front();
      for (std::size_t e : adj_[u]) {
        const std::size_t v = u < m_ ? m_ + basis_[e].j : basis_[e].i;
        if (depth_[v] >= 0) continue;
        depth_[v] = depth_[u] + 1;
        parent_edge_[v] = e;
        pot_[v] = phase_cost(basis_[e].i, basis_[e].j, phase1) - pot_[u];
        q.push_back(v);
      }
    }
  }

  std::size_t other_end(std::size_t e, std::size_t node) const {
    return node < m_ ? m_ + basis_[e].j : basis_[e].i;
  }

  bool run(bool phase1, long max_pivots) {
    double scale = 1.0;
    if (!phase1) scale = std::max(1.0, max_finite_);
    const double eps = 1e-12 * scale;
    int degenerate_streak = 0;
    while (true) {
      build_tree(phase1);
      const bool bland = degenerate_streak >= 50;
      std::size_t ei = 0, ej = 0;
      double best = -eps;
      bool found = false;
      for (std::size_t i = 0; i < m_ && !(found && bland); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          if (basic_[i * n_ + j]) continue;
          if (!phase1 && !std::isfinite(c_(i, j))) continue;
          const double r = phase_cost(i, j, phase1) - pot_[i] - pot_[m_ + j];
          if (r < best) {
            ei = i;
            ej = j;
            found = true;
            if (bland) break;
            best = r;
          }
        }
      }
      if (!found) return true;
      if (pivots_ >= max_pivots) return false;

      // Cycle: entering edge (+), then the tree path from column ej back to
      // row ei with alternating signs starting at (-).
      std::vector<std::size_t> up_col, up_row;
      std::size_t u = m_ + ej, v = ei;
      while (depth_[u] > depth_[v]) {
        up_col.push_back(parent_edge_[u]);
        u = other_end(parent_edge_[u], u);
      }
      while (depth_[v] > depth_[u]) {
        up_row.push_back(parent_edge_[v]);
        v = other_end(parent_edge_[v], v);
      }
      while (u != v) {
        up_col.push_back(parent_edge_[u]);
        u = other_end(parent_edge_[u], u);
        up_row.push_back(parent_edge_[v]);
        v = other_end(parent_edge_[v], v);
      }
      std::vector<std::size_t> path(up_col);
      path.insert(path.end(), up_row.rbegin(), up_row.rend());

      double theta = kInf;
      for (std::size_t t = 0; t < path.size(); ++t) {
        const Cell& cell = basis_[path[t]];
        const bool minus = t % 2 == 0;
        if (minus) {
          theta = std::min(theta, cell.flow);
        } else if (!phase1 && !std::isfinite(c_(cell.i, cell.j))) {
          theta = 0.0;  // infinite-cost cells may not gain mass
        }
      }
      std::size_t leave = kNone;
      std::size_t leave_key = kNone;
      for (std::size_t t = 0; t < path.size(); ++t) {
        const Cell& cell = basis_[path[t]];
        const bool minus = t % 2 == 0;
        const bool blocking =
            minus ? cell.flow == theta
                  : (theta == 0.0 && !phase1 && !std::isfinite(c_(cell.i, cell.j)));
        const std::size_t key = cell.i * n_ + cell.j;
        if (blocking && key < leave_key) {
          leave = path[t];
          leave_key = key;
        }
      }
      for (std::size_t t = 0; t < path.size(); ++t) {
        Cell& cell = basis_[path[t]];
        cell.flow += t % 2 == 0 ? -theta : theta;
      }
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
      Cell& out = basis_[leave];
      basic_[out.i * n_ + out.j] = 0;
      out = Cell{ei, ej, theta};
      basic_[ei * n_ + ej] = 1;
      ++pivots_;
    }
  }

  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t m_, n_;
  std::vector<double> a_, b_;
  const Matrix& c_;
  std::vector<Cell> basis_;
  std::vector<char> basic_;
  std::vector<double> pot_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::size_t> parent_edge_;
  std::vector<int> depth_;
  double max_finite_ = 0.0;
  bool has_finite_ = false;
  bool has_inf_ = false;
  long pivots_ = 0;
};

double marginal_violation(const Matrix& x, std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  std::vector<double> cols(b.size(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      r += x(i, j);
      cols[j] += x(i, j);
    }
    worst = std::max(worst, std::abs(r - a[i]));
  }
  for (std::size_t j = 0; j < b.size(); ++j) worst = std::max(worst, std::abs(cols[j] - b[j]));
  return worst;
}

void check_supports(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& c) {
  if (c.source_support() != mu.support() || c.target_support() != nu.support()) {
    throw std::invalid_argument("cost matrix supports do not match the measures");
  }
}

}  // namespace

double transport_cost(const Coupling& rho, const CostMatrix& c) {
  if (rho.rows() != c.rows() || rho.cols() != c.cols()) {
    throw std::invalid_argument("transport_cost: size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) total += mass_times_cost(rho(i, j), c(i, j));
  }
  return total;
}

SolveReport solve_mk_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& c) {
  check_supports(mu, nu, c);
  if (!finite_plan_exists(mu.weights(), nu.weights(), c.values())) {
    throw InfeasibleError("exact transport: no coupling avoids the infinite-cost cells");
  }
  TransportSimplex simplex(mu.weights(), nu.weights(), c.values());
  const long cap = 100L * static_cast<long>(mu.size() * nu.size()) + 10000;
  const bool done = simplex.solve(cap);
  SolveReport r;
  Matrix x = simplex.plan();
  r.residual = marginal_violation(x, mu.weights(), nu.weights());
  r.plan = Coupling(mu.support(), nu.support(), std::move(x));
  r.value = transport_cost(r.plan, c);
  r.dual_phi = simplex.phi();
  r.dual_psi = simplex.psi();
  r.iterations = simplex.pivots();
  r.termination = done ? Termination::optimal : Termination::iteration_cap;
  return r;
}

SolveReport solve_mk_1d_monotone(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                 const CostSpec& spec) {
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw std::invalid_argument("monotone coupling: measures must be one-dimensional");
  }
  if (!is_convex_cost(spec)) {
    throw std::invalid_argument("monotone coupling: cost must be convex");
  }
  const std::size_t m = mu.size(), n = nu.size();
  Matrix x(m, n);
  std::vector<double> ra(mu.weights()), rb(nu.weights());
  std::size_t i = 0, j = 0;
  while (true) {
    const bool row_done = ra[i] <= rb[j];
    const double t = std::min(ra[i], rb[j]);
    x(i, j) += t;
    ra[i] -= t;
    rb[j] -= t;
    if (i == m - 1 && j == n - 1) break;
    if (j == n - 1 || (row_done && i < m - 1)) {
      ++i;
    } else {
      ++j;
    }
  }
  SolveReport r;
  r.residual = marginal_violation(x, mu.weights(), nu.weights());
  r.plan = Coupling(mu.support(), nu.support(), std::move(x));
  r.value = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double w = r.plan(a, b);
      if (w != 0.0) r.value += mass_times_cost(w, eval_cost(spec, nu.atom(b) - mu.atom(a)));
    }
  }
  r.iterations = static_cast<long>(m + n - 1);
  r.termination = Termination::optimal;
  return r;
}

std::vector<double> ctransform_s1(std::span<const double> f, const CostMatrix& c) {
  if (f.size() != c.cols()) throw std::invalid_argument("ctransform: size mismatch");
  std::vector<double> out(c.rows(), kInf);
  for (std::size_t z = 0; z < c.rows(); ++z) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      if (!std::isfinite(c(z, j))) continue;
      const double v = c(z, j) + f[j];
      if (v < out[z]) out[z] = v;
    }
  }
  return out;
}

double kantorovich_dual_value(std::span<const double> f, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const CostMatrix& c) {
  check_supports(mu, nu, c);
  const auto s = ctransform_s1(f, c);
  double v = 0.0;
  for (std::size_t z = 0; z < mu.size(); ++z) v += mass_times_cost(mu.weight(z), s[z]);
  for (std::size_t x = 0; x < nu.size(); ++x) v -= nu.weight(x) * f[x];
  return v;
}

double duality_gap(const SolveReport& report, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                   const CostMatrix& c) {
  std::vector<double> f(report.dual_psi.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = -report.dual_psi[j];
  return std::max(0.0, report.value - kantorovich_dual_value(f, mu, nu, c));
}

double coupling_dual_value(const Matrix& g, const Coupling& rho, const CostMatrix& c) {
  if (g.rows() != c.rows() || g.cols() != c.cols() || rho.rows() != c.rows() ||
      rho.cols() != c.cols()) {
    throw std::invalid_argument("coupling_dual_value: size mismatch");
  }
  const auto mu = rho.row_sums();
  double v = 0.0;
  for (std::size_t z = 0; z < c.rows(); ++z) {
    double s = kInf;
    for (std::size_t x = 0; x < c.cols(); ++x) {
      if (std::isfinite(c(z, x))) s = std::min(s, c(z, x) + g(z, x));
    }
    v += mass_times_cost(mu[z], s);
    for (std::size_t x = 0; x < c.cols(); ++x) v -= g(z, x) * rho(z, x);
  }
  return v;
}

}  // namespace otlab

#include "otlab/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace otlab {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : t_(rows + 1, cols + 1), basis_(rows) {}

  std::size_t rows() const { return t_.rows() - 1; }
  std::size_t cols() const { return t_.cols() - 1; }
  double& at(std::size_t i, std::size_t j) { return t_(i, j); }
  double at(std::size_t i, std::size_t j) const { return t_(i, j); }
  double& rhs(std::size_t i) { return t_(i, cols()); }
  double& obj(std::size_t j) { return t_(rows(), j); }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = t_(r, c);
    for (std::size_t j = 0; j <= cols(); ++j) t_(r, j) /= p;
    t_(r, c) = 1.0;
    for (std::size_t i = 0; i <= rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols(); ++j) t_(i, j) -= f * t_(r, j);
      t_(i, c) = 0.0;
    }
    basis_[r] = c;
  }

  // Sets the objective row to reduced costs of `cost` for the current basis.
  void price(const std::vector<double>& cost) {
    for (std::size_t j = 0; j <= cols(); ++j) obj(j) = j < cols() ? cost[j] : 0.0;
    for (std::size_t i = 0; i < rows(); ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols(); ++j) obj(j) -= cb * t_(i, j);
    }
  }

  // Bland's rule over columns [0, allowed). Returns false on unbounded.
  LpStatus run(std::size_t allowed, long& pivots, long max_pivots) {
    while (true) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (obj(j) < -kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return LpStatus::optimal;
      if (pivots >= max_pivots) return LpStatus::iteration_cap;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a > kPivotTol) best = std::min(best, std::max(0.0, t_(i, cols())) / a);
      }
      if (!std::isfinite(best)) return LpStatus::unbounded;
      std::size_t leave = rows();
      for (std::size_t i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(0.0, t_(i, cols())) / a;
        if (ratio <= best + 1e-14 && (leave == rows() || basis_[i] < basis_[leave])) leave = i;
      }
      pivot(leave, enter);
      ++pivots;
    }
  }

 private:
  Matrix t_;
  std::vector<std::size_t> basis_;
};

}  // namespace

DenseLpResult solve_dense_lp(const DenseLp& lp, long max_pivots) {
  const std::size_t m = lp.a.rows();
  const std::size_t n = lp.a.cols();
  if (lp.b.size() != m || lp.rel.size() != m || lp.c.size() != n) {
    throw std::invalid_argument("dense LP: inconsistent dimensions");
  }

  std::vector<double> sign(m, 1.0);
  std::vector<RowRel> rel(lp.rel);
  for (std::size_t i = 0; i < m; ++i) {
    if (lp.b[i] < 0.0) {
      sign[i] = -1.0;
      if (rel[i] == RowRel::le) {
        rel[i] = RowRel::ge;
      } else if (rel[i] == RowRel::ge) {
        rel[i] = RowRel::le;
      }
    }
  }
  std::size_t n_slack = 0, n_art = 0;
  for (auto r : rel) {
    if (r != RowRel::eq) ++n_slack;
    if (r != RowRel::le) ++n_art;
  }
  const std::size_t art0 = n + n_slack;
  const std::size_t total = art0 + n_art;
  Tableau tab(m, total);
  std::vector<std::size_t> unit_col(m);
  std::size_t s = n, a = art0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign[i] * lp.a(i, j);
    tab.rhs(i) = sign[i] * lp.b[i];
    if (rel[i] == RowRel::le) {
      tab.at(i, s) = 1.0;
      tab.basis()[i] = s;
      unit_col[i] = s++;
    } else {
      if (rel[i] == RowRel::ge) tab.at(i, s++) = -1.0;
      tab.at(i, a) = 1.0;
      tab.basis()[i] = a;
      unit_col[i] = a++;
    }
  }

  DenseLpResult result;
  std::vector<double> phase1(total, 0.0);
  for (std::size_t j = art0; j < total; ++j) phase1[j] = 1.0;
  tab.price(phase1);
  LpStatus st = tab.run(total, result.pivots, max_pivots);
  if (st == LpStatus::iteration_cap) {
    result.status = st;
    return result;
  }
  double infeas = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.basis()[i] >= art0) infeas += tab.rhs(i);
  }
  double scale = 1.0;
  for (double v : lp.b) scale = std::max(scale, std::abs(v));
  if (infeas > 1e-9 * scale) {
    result.status = LpStatus::infeasible;
    return result;
  }
  // Drive zero-level artificials out of the basis where possible.
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.basis()[i] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j) {
      if (std::abs(tab.at(i, j)) > 1e-9) {
        tab.pivot(i, j);
        ++result.pivots;
        break;
      }
    }
  }

  std::vector<double> cost(total, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = lp.c[j];
  tab.price(cost);
  st = tab.run(art0, result.pivots, max_pivots);
  result.status = st;
  if (st != LpStatus::optimal) return result;

  result.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.basis()[i] < n) result.x[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  }
  result.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) result.value += lp.c[j] * result.x[j];
  result.y.resize(m);
  for (std::size_t i = 0; i < m; ++i) result.y[i] = -sign[i] * tab.obj(unit_col[i]);
  return result;
}

}  // namespace otlab

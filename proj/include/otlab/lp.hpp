#pragma once

// Dense two-phase tableau simplex for small linear programs in the form
//   minimize c^T x  subject to  A x (rel) b,  x >= 0
// with one relation (<=, =, >=) per row. Bland's rule throughout.

#include <vector>

#include "otlab/matrix.hpp"

namespace otlab {

enum class RowRel { le, eq, ge };

struct DenseLp {
  Matrix a;
  std::vector<double> b;
  std::vector<RowRel> rel;
  std::vector<double> c;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_cap };

struct DenseLpResult {
  LpStatus status = LpStatus::infeasible;
  double value = 0.0;
  std::vector<double> x;
  /// Multipliers y with c - A^T y >= 0 on the structural columns; y_i >= 0
  /// for >= rows and <= 0 for <= rows.
  std::vector<double> y;
  long pivots = 0;
};

DenseLpResult solve_dense_lp(const DenseLp& lp, long max_pivots = 1000000);

}  // namespace otlab

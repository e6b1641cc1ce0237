#pragma once

#include <vector>

#include "teforge/common.hpp"

namespace teforge {

/// maximize c.x subject to Ax <= b, x >= 0, with b >= 0.
/// Rows are sparse (column, coefficient) lists.
struct LpProblem {
  int num_vars = 0;
  std::vector<double> objective;
  struct Row {
    std::vector<std::pair<int, double>> coeffs;
    double rhs = 0.0;
  };
  std::vector<Row> rows;
};

struct LpSolution {
  double objective = 0.0;
  std::vector<double> x;
};

/// Dense primal simplex with Bland's rule; deterministic and exact at the
/// double-precision noise floor. All right-hand sides must be nonnegative so
/// the slack basis is feasible (true for capacity and volume caps). Throws
/// SolverError on malformed input or nontermination.
LpSolution solve_lp_max(const LpProblem& problem);

}  // namespace teforge

#include "teforge/lp.hpp"

#include <cmath>

namespace teforge {

LpSolution solve_lp_max(const LpProblem& problem) {
  const int n = problem.num_vars;
  const int m = static_cast<int>(problem.rows.size());
  if (static_cast<int>(problem.objective.size()) != n)
    throw SolverError("objective size does not match variable count");

  // Tableau: m rows x (n + m + 1) columns; slack basis start.
  const int cols = n + m + 1;
  std::vector<std::vector<double>> tab(m, std::vector<double>(cols, 0.0));
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    const auto& row = problem.rows[i];
    if (row.rhs < 0.0) throw SolverError("negative right-hand side in LP row");
    for (const auto& [col, coeff] : row.coeffs) {
      if (col < 0 || col >= n) throw SolverError("LP coefficient out of range");
      tab[i][col] += coeff;
    }
    tab[i][n + i] = 1.0;
    tab[i][cols - 1] = row.rhs;
    basis[i] = n + i;
  }

  // Reduced-cost row for maximize: z_j - c_j, stored negated as c_j - z_j so
  // a positive entry means improvement. Slack basis => z_j = 0 initially.
  std::vector<double> reduced(n + m, 0.0);
  for (int j = 0; j < n; ++j) reduced[j] = problem.objective[j];
  double objective = 0.0;

  const double tol = kEpsNum;
  const long max_pivots = 4096L + 64L * static_cast<long>(n + m) * (n + m);
  for (long pivots = 0;; ++pivots) {
    if (pivots > max_pivots) throw SolverError("simplex did not terminate");

    // Bland: entering = lowest-index column with positive reduced cost.
    int enter = -1;
    for (int j = 0; j < n + m; ++j) {
      if (reduced[j] > tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;  // optimal

    // Ratio test; ties resolved by lowest basis variable index (Bland).
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      double a = tab[i][enter];
      if (a > tol) {
        double ratio = tab[i][cols - 1] / a;
        if (leave < 0 || ratio < best_ratio - tol ||
            (std::abs(ratio - best_ratio) <= tol && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) throw SolverError("LP unbounded");

    // Pivot.
    double pivot = tab[leave][enter];
    for (int j = 0; j < cols; ++j) tab[leave][j] /= pivot;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      double factor = tab[i][enter];
      if (factor == 0.0) continue;
      for (int j = 0; j < cols; ++j) tab[i][j] -= factor * tab[leave][j];
    }
    double red_factor = reduced[enter];
    for (int j = 0; j < n + m; ++j) reduced[j] -= red_factor * tab[leave][j];
    objective += red_factor * tab[leave][cols - 1];
    basis[leave] = enter;
  }

  LpSolution sol;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) sol.x[basis[i]] = std::max(0.0, tab[i][cols - 1]);
  }
  // Recompute from x rather than trusting the incrementally updated value.
  (void)objective;
  sol.objective = 0.0;
  for (int j = 0; j < n; ++j) sol.objective += problem.objective[j] * sol.x[j];
  return sol;
}

}  // namespace teforge

#pragma once

#include <Eigen/Sparse>
#include <limits>
#include <vector>

#include "cqr/numerics.hpp"
#include "cqr/quantile_grid.hpp"

namespace cqr {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

/// Equality-form linear program: minimize c'x subject to A x = rhs, x >= 0.
struct LpProblem {
  SparseMatrix A;
  Vector c;
  Vector rhs;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }
};

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Vector x;
  Vector duals;
  Vector reduced_costs;
  int iterations = 0;
};

struct SimplexOptions {
  int max_iterations = 0;  ///< 0 selects a limit based on problem size.
  double pivot_tol = 1e-10;
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-9;
  bool bland = false;  ///< force Bland's rule for every pivot (slow, anti-cycling)
};

/// A set of basic columns carried between solves that share A and rhs but
/// differ in objective (e.g. a penalty sweep). Passed in as a starting basis
/// and updated to the final basis on successful exit.
struct LpBasis {
  std::vector<int> basic_cols;
};

LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& options = {},
                    LpBasis* basis = nullptr);

/// Column/row layout of the composite quantile regression LP.
///
/// Rows are grouped by quantile level: row(i, k) = k*n + i carries
///   b_k + x_i'beta + u_plus(i,k) - u_minus(i,k) = y_i.
/// Columns hold, in order, the residual splits u+ and u-, the intercept
/// splits b+ and b-, and the slope splits beta+ and beta-.
struct CqrColumnMap {
  int n = 0;
  int K = 0;
  int p = 0;

  int row(int i, int k) const { return k * n + i; }
  int u_plus(int i, int k) const { return k * n + i; }
  int u_minus(int i, int k) const { return n * K + k * n + i; }
  int b_plus(int k) const { return 2 * n * K + k; }
  int b_minus(int k) const { return 2 * n * K + K + k; }
  int beta_plus(int j) const { return 2 * n * K + 2 * K + j; }
  int beta_minus(int j) const { return 2 * n * K + 2 * K + p + j; }
  int rows() const { return n * K; }
  int cols() const { return 2 * n * K + 2 * K + 2 * p; }
};

/// Assemble the LP for (optionally penalty-weighted) composite quantile
/// regression: minimize sum_k sum_i rho_{tau_k}(y_i - b_k - x_i'beta)
/// + sum_j penalty_weights_j |beta_j|. An empty penalty_weights vector means
/// no penalty (the plain fit); otherwise it must have length p.
LpProblem build_cqr_lp(const Matrix& X, const Vector& y, const QuantileGrid& grid,
                       const Vector& penalty_weights = Vector());

Vector cqr_extract_beta(const CqrColumnMap& map, const Vector& x);
Vector cqr_extract_intercepts(const CqrColumnMap& map, const Vector& x);

}  // namespace cqr

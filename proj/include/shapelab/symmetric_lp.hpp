#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace shapelab {

/// Linear program over paired columns:
///
///   minimize  sum_k cost_k (lambda_k+ + lambda_k-)
///   subject to sum_k (lambda_k+ - lambda_k-) g_k = b,  lambda >= 0.
///
/// Column 2k is +g_k and column 2k+1 is -g_k. Any set of rows(G) independent
/// generators is a feasible starting basis after flipping signs, so no
/// artificial phase is needed. G must have full row rank.
struct PairedLp {
  const Eigen::MatrixXd* generators = nullptr;  ///< r x M
  Eigen::VectorXd cost;                         ///< M entries, all > 0
  Eigen::VectorXd rhs;                          ///< r entries
  std::vector<Eigen::Index> start;              ///< r independent generator indices
};

struct PairedLpOptions {
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
  int refactor_every = 0;  ///< 0: max(64, rows)
  int degenerate_before_bland = 50;
  std::size_t max_iterations = 0;  ///< 0: 20 * (rows + columns) + 1000
};

struct PairedLpSolution {
  enum class Status { kOptimal, kIterationCap, kNumerical };

  Status status = Status::kOptimal;
  double objective = 0.0;
  std::vector<Eigen::Index> basis;  ///< signed column indices 2k / 2k+1
  Eigen::VectorXd values;           ///< basic values, aligned with basis
  std::size_t iterations = 0;
};

/// Revised simplex with an explicit basis inverse, product-form updates and
/// periodic refactorization. Dantzig pricing, switching to Bland's rule after
/// a run of degenerate pivots.
PairedLpSolution solve_paired_lp(const PairedLp& lp, const PairedLpOptions& options = {});

}  // namespace shapelab

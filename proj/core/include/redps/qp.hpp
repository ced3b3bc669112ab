#pragma once

#include "redps/event_set.hpp"
#include "redps/types.hpp"

#include <span>
#include <vector>

namespace redps {

/// Exclusion half-space accumulated during the sequential search:
/// feasible points must satisfy s^T (x - a) <= -delta_cut.
struct Cut {
  Vector tilt;
  Vector point;
};

struct QpOptions {
  double tol_feas = 1e-8;
  double tol_kkt = 1e-8;
  /// Margin enforcing strictness of the cuts; the feasible region of the
  /// sequential search is open and an exact-boundary optimum would
  /// duplicate an already-found point.
  double delta_cut = 0.0;
  int max_iter = 0;  // 0 -> 100 + 20 * (#constraints)
};

struct QpResult {
  enum class Status { optimal, infeasible };
  Status status = Status::infeasible;
  Vector x_star;
  /// Rate value at the optimum, 0.5 (x - mean)^T cov^{-1} (x - mean).
  double objective = 0.0;
  /// Indices into the combined constraint list: piece rows first, then cuts.
  std::vector<int> active_rows;
  Vector multipliers;
  double kkt_residual = 0.0;
};

/// Minimizes the Gaussian rate 0.5 (x - mean)^T cov^{-1} (x - mean) over one
/// polyhedron piece intersected with the strict-cut half-spaces. Dual-feasible
/// active-set iteration on the strictly convex quadratic with dense KKT
/// solves; cov enters only through its lower Cholesky factor.
///
/// Returns status infeasible when the dual iteration certifies that no point
/// satisfies all constraints; the certificate is cross-checked by a projection
/// (max-violation descent) probe, and disagreement raises NumericalError.
QpResult min_rate_point(const Vector& mean, const Matrix& chol_lower,
                        const Polyhedron& piece, std::span<const Cut> cuts,
                        const QpOptions& options = {});

}  // namespace redps

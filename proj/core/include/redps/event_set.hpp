#pragma once

#include "redps/types.hpp"

#include <span>
#include <vector>

namespace redps {

/// Feasibility tolerance on normalized rows: a point is accepted as inside a
/// half-space when its slack is >= -kMemberTol. Dominating points sit exactly
/// on piece boundaries and the estimator must count them as hits (the event
/// set is closed).
constexpr double kMemberTol = 1e-9;

/// One affine constraint w^T x >= b with ||w||_2 = 1 after normalization.
struct HalfSpaceRow {
  Vector w;
  double b = 0.0;
};

/// Convex polyhedron {x : w_i^T x >= b_i for all i}.
class Polyhedron {
 public:
  Polyhedron(std::vector<HalfSpaceRow> rows, int dimension);

  int dimension() const { return dim_; }
  const std::vector<HalfSpaceRow>& rows() const { return rows_; }

  bool contains(const Vector& x, double tol = kMemberTol) const;
  /// max_i (b_i - w_i^T x); <= 0 iff x is inside.
  double max_violation(const Vector& x) const;

 private:
  std::vector<HalfSpaceRow> rows_;
  int dim_;
};

/// Rescales rows to unit normals. Rows whose norm is already within 1e-12 of
/// one are left untouched bit-for-bit, so the operation is idempotent.
std::vector<HalfSpaceRow> normalize_rows(std::vector<HalfSpaceRow> rows);

/// Rare-event set as a finite union of convex polyhedra.
class PolyhedralUnion {
 public:
  PolyhedralUnion(std::vector<Polyhedron> pieces, double gamma = 0.0);

  int dimension() const { return dim_; }
  double gamma() const { return gamma_; }
  const std::vector<Polyhedron>& pieces() const { return pieces_; }

  bool contains(const Vector& x, double tol = kMemberTol) const;

 private:
  std::vector<Polyhedron> pieces_;
  int dim_;
  double gamma_;
};

/// The random-walk overshoot set union_{m=1..T} {x in R^T : sum_{i<=m} x_i >= a},
/// one half-space piece per horizon index.
PolyhedralUnion overshoot_set(int horizon, double a);

/// A retained dominating point with its tilt vector; s^T (x - a) >= 0 is the
/// supporting half-space the point contributes to the cover of E.
struct CutPoint {
  Vector point;
  Vector tilt;
};

/// Partition of E induced by a truncated dominating set:
/// E1 = E intersect union_i {s_i^T (x - a_i) >= 0}, E2 = E \ E1.
class RegionSplit {
 public:
  RegionSplit(PolyhedralUnion base, std::vector<CutPoint> cut_points);

  const PolyhedralUnion& base() const { return base_; }
  const std::vector<CutPoint>& cut_points() const { return cuts_; }

  /// True when some cut half-space covers x (normalized slack >= -kMemberTol).
  bool covered(const Vector& x) const;

  bool in_e1(const Vector& x) const { return base_.contains(x) && covered(x); }
  bool in_e2(const Vector& x) const { return base_.contains(x) && !covered(x); }

 private:
  PolyhedralUnion base_;
  std::vector<CutPoint> cuts_;
  std::vector<double> tilt_norms_;
};

RegionSplit split_regions(const PolyhedralUnion& set, std::vector<CutPoint> cut_points);

}  // namespace redps

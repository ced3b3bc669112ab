#include "redps/event_set.hpp"

#include <cmath>
#include <utility>

namespace redps {

std::vector<HalfSpaceRow> normalize_rows(std::vector<HalfSpaceRow> rows) {
  for (auto& row : rows) {
    const double norm = row.w.norm();
    if (!(norm > 0.0)) throw ConfigError("polyhedron row has zero normal vector");
    if (std::abs(norm - 1.0) > 1e-12) {
      row.w /= norm;
      row.b /= norm;
    }
  }
  return rows;
}

Polyhedron::Polyhedron(std::vector<HalfSpaceRow> rows, int dimension)
    : rows_(normalize_rows(std::move(rows))), dim_(dimension) {
  if (rows_.empty()) throw ConfigError("polyhedron needs at least one row");
  for (const auto& row : rows_) {
    if (row.w.size() != dim_) {
      throw ConfigError("polyhedron row dimension mismatch");
    }
  }
}

bool Polyhedron::contains(const Vector& x, double tol) const {
  if (x.size() != dim_) throw ConfigError("contains: dimension mismatch");
  for (const auto& row : rows_) {
    if (row.w.dot(x) - row.b < -tol) return false;
  }
  return true;
}

double Polyhedron::max_violation(const Vector& x) const {
  if (x.size() != dim_) throw ConfigError("max_violation: dimension mismatch");
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& row : rows_) {
    worst = std::max(worst, row.b - row.w.dot(x));
  }
  return worst;
}

PolyhedralUnion::PolyhedralUnion(std::vector<Polyhedron> pieces, double gamma)
    : pieces_(std::move(pieces)), gamma_(gamma) {
  if (pieces_.empty()) throw ConfigError("polyhedral union needs at least one piece");
  dim_ = pieces_.front().dimension();
  for (const auto& p : pieces_) {
    if (p.dimension() != dim_) throw ConfigError("union pieces have mixed dimensions");
  }
}

bool PolyhedralUnion::contains(const Vector& x, double tol) const {
  for (const auto& p : pieces_) {
    if (p.contains(x, tol)) return true;
  }
  return false;
}

PolyhedralUnion overshoot_set(int horizon, double a) {
  if (horizon < 1) throw ConfigError("overshoot_set: horizon must be >= 1");
  if (!(a > 0.0)) throw ConfigError("overshoot_set: a must be > 0");
  std::vector<Polyhedron> pieces;
  pieces.reserve(horizon);
  for (int m = 1; m <= horizon; ++m) {
    Vector w = Vector::Zero(horizon);
    for (int i = 0; i < m; ++i) w[i] = 1.0;
    pieces.emplace_back(std::vector<HalfSpaceRow>{{std::move(w), a}}, horizon);
  }
  return PolyhedralUnion(std::move(pieces), a);
}

RegionSplit::RegionSplit(PolyhedralUnion base, std::vector<CutPoint> cut_points)
    : base_(std::move(base)), cuts_(std::move(cut_points)) {
  if (cuts_.empty()) throw ConfigError("region split needs at least one cut point");
  tilt_norms_.reserve(cuts_.size());
  for (const auto& c : cuts_) {
    if (c.point.size() != base_.dimension() || c.tilt.size() != base_.dimension()) {
      throw ConfigError("region split cut dimension mismatch");
    }
    const double n = c.tilt.norm();
    // A zero tilt covers everything (the vacuous cut of the untilted law).
    tilt_norms_.push_back(n > 0.0 ? n : 1.0);
  }
}

bool RegionSplit::covered(const Vector& x) const {
  for (std::size_t i = 0; i < cuts_.size(); ++i) {
    const double slack = cuts_[i].tilt.dot(x - cuts_[i].point) / tilt_norms_[i];
    if (slack >= -kMemberTol) return true;
  }
  return false;
}

RegionSplit split_regions(const PolyhedralUnion& set, std::vector<CutPoint> cut_points) {
  return RegionSplit(set, std::move(cut_points));
}

}  // namespace redps

#pragma once

#include "redps/event_set.hpp"
#include "redps/qp.hpp"
#include "redps/rate_model.hpp"
#include "redps/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace redps {

struct DominatingPoint {
  Vector point;
  double rate = 0.0;
  Vector tilt;
};

/// Ordered result of the sequential search: rates are non-decreasing, every
/// point satisfies all earlier cuts strictly, and exactly one of the stop
/// flags explains why the search ended.
struct DominatingSet {
  std::vector<DominatingPoint> points;
  bool stopped_early = false;  // next candidate's rate exceeded C * rate_k
  double threshold_c = 0.0;
  bool exhausted = false;  // residual region empty: all r points found

  int size() const { return static_cast<int>(points.size()); }

  /// Cut half-spaces of the first k points (k = 0 or > size means all).
  std::vector<CutPoint> cut_points(int k = 0) const;
};

struct DominatingOptions {
  int max_points = 1000;
  QpOptions qp;
};

/// Sequential dominating-point discovery for a Gaussian model over a
/// polyhedral union. Each round solves one rate-minimization QP per piece
/// under the cuts accumulated so far and keeps the smallest feasible
/// candidate; stops early once the candidate rate exceeds threshold_c times
/// the last accepted rate (pass +inf to enumerate everything).
DominatingSet find_dominating_set(const RateModel& model, const PolyhedralUnion& set,
                                  double threshold_c,
                                  const DominatingOptions& options = {});

struct CoverReport {
  std::uint64_t probes = 0;
  std::uint64_t counterexamples = 0;
  std::optional<Vector> first_counterexample;
  /// minimality: point i is necessary iff some probe is covered only by it.
  std::vector<bool> point_necessary;
};

/// Statistical check of Definition-style coverage: samples n_probe points
/// from the Gaussian law restricted to the pieces (hit-and-run) and reports
/// any probe not covered by the cut half-spaces, plus a per-point minimality
/// re-probe. Requires an exhausted dominating set (a claim of full cover).
CoverReport verify_dominating_set(const DominatingSet& dom, const PolyhedralUnion& set,
                                  const RateModel& model, std::uint64_t n_probe,
                                  std::uint64_t seed);

}  // namespace redps

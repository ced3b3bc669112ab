#include "redps/dominating.hpp"

#include "redps/rng.hpp"
#include "redps/special.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace redps {

std::vector<CutPoint> DominatingSet::cut_points(int k) const {
  const int n = (k <= 0 || k > size()) ? size() : k;
  std::vector<CutPoint> cuts;
  cuts.reserve(n);
  for (int i = 0; i < n; ++i) {
    cuts.push_back({points[i].point, points[i].tilt});
  }
  return cuts;
}

namespace {

bool lexicographically_before(const Vector& a, const Vector& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace

DominatingSet find_dominating_set(const RateModel& model, const PolyhedralUnion& set,
                                  double threshold_c,
                                  const DominatingOptions& options) {
  if (model.kind() != RateModel::Kind::gaussian) {
    throw ConfigError(
        "find_dominating_set: only gaussian models are supported (1-D models "
        "have closed-form dominating points)");
  }
  if (!(threshold_c > 1.0)) {
    throw ConfigError("find_dominating_set: threshold C must be > 1");
  }
  if (set.dimension() != model.dimension()) {
    throw ConfigError("find_dominating_set: set/model dimension mismatch");
  }
  if (set.contains(model.mean())) {
    throw ConfigError("find_dominating_set: the mean lies inside the event set");
  }

  DominatingSet out;
  out.threshold_c = threshold_c;
  std::vector<Cut> cuts;

  while (true) {
    if (out.size() >= options.max_points) {
      std::ostringstream os;
      os << "find_dominating_set: reached max_points=" << options.max_points
         << " before exhausting the set; rerun with a larger cap";
      throw NumericalError(os.str(), static_cast<double>(out.size()));
    }
    QpOptions qp_opts = options.qp;
    const double last_rate = out.points.empty() ? 0.0 : out.points.back().rate;
    qp_opts.delta_cut = 1e-7 * (1.0 + last_rate);

    std::optional<QpResult> best;
    for (const auto& piece : set.pieces()) {
      QpResult r = min_rate_point(model.mean(), model.chol_lower(), piece, cuts, qp_opts);
      if (r.status != QpResult::Status::optimal) continue;
      if (!best) {
        best = std::move(r);
        continue;
      }
      const double scale = std::max({1.0, best->objective, r.objective});
      if (r.objective < best->objective - 1e-10 * scale) {
        best = std::move(r);
      } else if (std::abs(r.objective - best->objective) <= 1e-10 * scale &&
                 lexicographically_before(r.x_star, best->x_star)) {
        best = std::move(r);  // deterministic tie-break
      }
    }

    if (!best) {
      out.exhausted = true;
      return out;
    }
    if (!out.points.empty() && best->objective > threshold_c * last_rate) {
      out.stopped_early = true;
      return out;
    }

    DominatingPoint dp;
    dp.point = best->x_star;
    dp.rate = best->objective;
    dp.tilt = model.tilt_param(dp.point);
    if (dp.rate < last_rate - 1e-9 * (1.0 + last_rate)) {
      throw NumericalError("find_dominating_set: rate ordering violated", dp.rate);
    }
    for (const auto& cut : cuts) {
      const double slack = cut.tilt.dot(dp.point - cut.point) / cut.tilt.norm();
      if (slack > -0.5 * qp_opts.delta_cut / cut.tilt.norm()) {
        throw NumericalError("find_dominating_set: new point violates a prior cut",
                             slack);
      }
    }
    cuts.push_back({dp.tilt, dp.point});
    out.points.push_back(std::move(dp));
  }
}

namespace {

// One hit-and-run step for N(mean, cov) restricted to a polyhedron: move
// along a random Sigma-shaped direction, sampling the 1-D conditional normal
// truncated to the feasible chord.
Vector hit_and_run_step(const Vector& x, const Polyhedron& piece, const RateModel& model,
                        Philox& rng) {
  const int dim = model.dimension();
  Vector g(dim);
  for (int i = 0; i < dim; ++i) g[i] = rng.normal();
  Vector dir = model.chol_lower() * g;
  const double dn = dir.norm();
  if (!(dn > 0.0)) return x;
  dir /= dn;

  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (const auto& row : piece.rows()) {
    const double wd = row.w.dot(dir);
    const double slack = row.w.dot(x) - row.b;
    if (std::abs(wd) < 1e-14) continue;
    const double t_bound = -slack / wd;
    if (wd > 0.0) {
      t_lo = std::max(t_lo, t_bound);
    } else {
      t_hi = std::min(t_hi, t_bound);
    }
  }
  if (t_lo > t_hi) return x;

  // Conditional law of t given the direction: N(m_t, s_t^2).
  Vector sol = dir;
  model.chol_lower().triangularView<Eigen::Lower>().solveInPlace(sol);
  const double q = sol.squaredNorm();
  Vector xr = x - model.mean();
  model.chol_lower().triangularView<Eigen::Lower>().solveInPlace(xr);
  const double c = sol.dot(xr);
  const double m_t = -c / q;
  const double s_t = 1.0 / std::sqrt(q);

  const double alpha = (t_lo - m_t) / s_t;
  const double beta = (t_hi - m_t) / s_t;
  const double u = rng.uniform();
  double z;
  if (alpha > 0.0) {
    // Work with tails to keep precision when the chord sits far right.
    const double ta = normal_tail(alpha);
    const double tb = std::isfinite(beta) ? normal_tail(beta) : 0.0;
    const double tail = tb + u * (ta - tb);
    z = tail > 0.0 ? -inverse_normal_cdf(tail) : alpha;
  } else if (beta < 0.0) {
    const double ca = normal_cdf(alpha);
    const double cb = normal_cdf(beta);
    const double cdf = ca + u * (cb - ca);
    z = cdf > 0.0 ? inverse_normal_cdf(cdf) : beta;
  } else {
    const double ca = std::isfinite(alpha) ? normal_cdf(alpha) : 0.0;
    const double cb = std::isfinite(beta) ? normal_cdf(beta) : 1.0;
    z = inverse_normal_cdf(ca + u * (cb - ca));
  }
  z = std::clamp(z, alpha, beta);
  return x + (m_t + s_t * z) * dir;
}

bool covered_excluding(const std::vector<DominatingPoint>& pts, const Vector& x,
                       int excluded) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (static_cast<int>(i) == excluded) continue;
    const double norm = pts[i].tilt.norm();
    const double slack =
        pts[i].tilt.dot(x - pts[i].point) / (norm > 0.0 ? norm : 1.0);
    if (slack >= -kMemberTol) return true;
  }
  return false;
}

}  // namespace

CoverReport verify_dominating_set(const DominatingSet& dom, const PolyhedralUnion& set,
                                  const RateModel& model, std::uint64_t n_probe,
                                  std::uint64_t seed) {
  if (!dom.exhausted) {
    throw ConfigError("verify_dominating_set: requires an exhausted dominating set");
  }
  if (dom.points.empty()) throw ConfigError("verify_dominating_set: empty set");

  CoverReport report;
  report.point_necessary.assign(dom.points.size(), false);
  const int n_pieces = static_cast<int>(set.pieces().size());
  constexpr int kBurnIn = 32;

  // Anchor each piece's chain at its own min-rate point.
  std::vector<Vector> anchors;
  anchors.reserve(n_pieces);
  for (const auto& piece : set.pieces()) {
    QpResult r = min_rate_point(model.mean(), model.chol_lower(), piece, {}, {});
    if (r.status != QpResult::Status::optimal) {
      throw NumericalError("verify_dominating_set: piece is empty");
    }
    anchors.push_back(r.x_star);
  }

  std::uint64_t stream = 0;
  for (int piece_idx = 0; piece_idx < n_pieces; ++piece_idx) {
    const auto& piece = set.pieces()[piece_idx];
    Philox rng(seed, stream++);
    Vector x = anchors[piece_idx];
    const std::uint64_t quota = n_probe / n_pieces + (piece_idx == 0 ? n_probe % n_pieces : 0);
    for (std::uint64_t j = 0; j < quota + kBurnIn; ++j) {
      x = hit_and_run_step(x, piece, model, rng);
      if (j < kBurnIn) continue;
      ++report.probes;
      if (!covered_excluding(dom.points, x, -1)) {
        ++report.counterexamples;
        if (!report.first_counterexample) report.first_counterexample = x;
      }
      for (std::size_t i = 0; i < dom.points.size(); ++i) {
        if (!report.point_necessary[i] &&
            !covered_excluding(dom.points, x, static_cast<int>(i))) {
          report.point_necessary[i] = true;
        }
      }
    }
  }
  return report;
}

}  // namespace redps

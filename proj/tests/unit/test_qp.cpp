#include "redps/qp.hpp"

#include "redps/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

using namespace redps;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

struct RawConstraints {
  Matrix normals;
  Vector offsets;
};

// Same combined constraint list the solver works on: normalized piece rows,
// then cuts s^T (x - a) <= -delta rewritten as half-spaces.
RawConstraints combined(const Polyhedron& piece, std::span<const Cut> cuts,
                        double delta_cut) {
  const int dim = piece.dimension();
  const int n = static_cast<int>(piece.rows().size() + cuts.size());
  RawConstraints rc;
  rc.normals.resize(n, dim);
  rc.offsets.resize(n);
  int r = 0;
  for (const auto& row : piece.rows()) {
    rc.normals.row(r) = row.w.transpose();
    rc.offsets[r] = row.b;
    ++r;
  }
  for (const auto& cut : cuts) {
    const double norm = cut.tilt.norm();
    rc.normals.row(r) = (-cut.tilt / norm).transpose();
    rc.offsets[r] = (delta_cut - cut.tilt.dot(cut.point)) / norm;
    ++r;
  }
  return rc;
}

// Exact reference by KKT enumeration: for every active subset of size <= dim
// solve the equality-constrained minimizer and keep the best candidate that
// is primal feasible with nonnegative multipliers. For a strictly convex QP
// the minimizer (if the problem is feasible) appears among these candidates.
struct RefResult {
  bool feasible = false;
  double objective = 0.0;
  Vector x;
};

RefResult qp_reference(const Vector& mean, const Matrix& cov, const RawConstraints& rc) {
  const int n = static_cast<int>(rc.offsets.size());
  const int dim = static_cast<int>(mean.size());
  const Matrix cov_inv = cov.inverse();
  const auto objective_at = [&](const Vector& x) {
    return 0.5 * (x - mean).dot(cov_inv * (x - mean));
  };
  const auto feasible_at = [&](const Vector& x) {
    for (int i = 0; i < n; ++i) {
      if (rc.normals.row(i).dot(x) < rc.offsets[i] - 1e-9) return false;
    }
    return true;
  };

  RefResult best;
  std::vector<int> subset;
  const auto consider = [&](const std::vector<int>& active) {
    Vector x;
    if (active.empty()) {
      x = mean;
    } else {
      const int k = static_cast<int>(active.size());
      Matrix c(k, dim);
      Vector d(k);
      for (int i = 0; i < k; ++i) {
        c.row(i) = rc.normals.row(active[static_cast<std::size_t>(i)]);
        d[i] = rc.offsets[active[static_cast<std::size_t>(i)]];
      }
      const Matrix m = c * cov * c.transpose();
      const Eigen::FullPivLU<Matrix> lu(m);
      if (!lu.isInvertible()) return;  // dependent normals; a smaller subset covers it
      const Vector u = lu.solve(d - c * mean);
      if (u.minCoeff() < -1e-9) return;  // multipliers must be nonnegative
      x = mean + cov * c.transpose() * u;
    }
    if (!feasible_at(x)) return;
    const double obj = objective_at(x);
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
      best.x = x;
    }
  };

  // Enumerate subsets of size 0..dim.
  std::vector<int> idx;
  const std::function<void(int, int)> recurse = [&](int start, int remaining) {
    consider(idx);
    if (remaining == 0) return;
    for (int i = start; i < n; ++i) {
      idx.push_back(i);
      recurse(i + 1, remaining - 1);
      idx.pop_back();
    }
  };
  recurse(0, dim);
  return best;
}

Matrix chol_of(const Matrix& cov) {
  return Eigen::LLT<Matrix>(cov).matrixL();
}

}  // namespace

TEST_CASE("projection onto a single half-space") {
  const Polyhedron piece({{vec2(1.0, 1.0), 4.0}}, 2);
  const QpResult r = min_rate_point(Vector::Zero(2), Matrix::Identity(2, 2), piece, {});
  REQUIRE(r.status == QpResult::Status::optimal);
  CHECK(r.x_star.isApprox(vec2(2.0, 2.0), 1e-9));
  CHECK(r.objective == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(r.kkt_residual < 1e-8);
}

TEST_CASE("inactive cut leaves the projection unchanged") {
  const Polyhedron piece({{vec2(1.0, -1.0), 6.0}}, 2);
  const std::vector<Cut> cuts{{vec2(2.0, 2.0), vec2(2.0, 2.0)}};
  QpOptions opts;
  opts.delta_cut = 1e-7;
  const QpResult r =
      min_rate_point(Vector::Zero(2), Matrix::Identity(2, 2), piece, cuts, opts);
  REQUIRE(r.status == QpResult::Status::optimal);
  CHECK(r.x_star.isApprox(vec2(3.0, -3.0), 1e-6));
  CHECK(r.objective == doctest::Approx(9.0).epsilon(1e-8));
  // The cut is strictly slack at the optimum.
  CHECK(vec2(2.0, 2.0).dot(r.x_star - vec2(2.0, 2.0)) < 0.0);
}

TEST_CASE("a cut that excludes the whole piece certifies infeasibility") {
  Vector e1(2);
  e1 << 1.0, 0.0;
  const Polyhedron piece({{e1, 1.0}}, 2);
  const std::vector<Cut> cuts{{e1, e1}};  // s = (1,0), a = (1,0): x1 <= 1 - delta
  QpOptions opts;
  opts.delta_cut = 1e-7;
  const QpResult r =
      min_rate_point(Vector::Zero(2), Matrix::Identity(2, 2), piece, cuts, opts);
  CHECK(r.status == QpResult::Status::infeasible);
}

TEST_CASE("anisotropic covariance projection") {
  Matrix cov(2, 2);
  cov << 4.0, 0.0, 0.0, 1.0;
  const Polyhedron piece({{vec2(1.0, 1.0), 6.0}}, 2);
  const QpResult r = min_rate_point(Vector::Zero(2), chol_of(cov), piece, {});
  REQUIRE(r.status == QpResult::Status::optimal);
  // Minimize x'Sigma^{-1}x/2 on x1+x2=6: x = Sigma w t with w=(1,1)/sqrt2.
  CHECK(r.x_star.isApprox(vec2(4.8, 1.2), 1e-8));
  const RawConstraints rc = combined(piece, {}, 0.0);
  const RefResult ref = qp_reference(Vector::Zero(2), cov, rc);
  REQUIRE(ref.feasible);
  CHECK(r.objective == doctest::Approx(ref.objective).epsilon(1e-10));
}

TEST_CASE("random instances agree with the KKT enumeration oracle") {
  Philox rng(60601, 0);
  int infeasible_count = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 3;
    const int n_rows = 1 + static_cast<int>(rng.uniform() * 4.0);

    Vector mean(dim);
    for (int i = 0; i < dim; ++i) mean[i] = 0.5 * rng.normal();
    Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
    }
    const Matrix cov = a * a.transpose() + 0.4 * Matrix::Identity(dim, dim);

    std::vector<HalfSpaceRow> rows;
    for (int r = 0; r < n_rows; ++r) {
      Vector w(dim);
      for (int i = 0; i < dim; ++i) w[i] = rng.normal();
      if (w.norm() < 1e-6) w[0] = 1.0;
      rows.push_back({w, -1.0 + 4.0 * rng.uniform()});
    }
    const Polyhedron piece(rows, dim);

    std::vector<Cut> cuts;
    if (trial % 3 == 0) {
      Vector s(dim), pt(dim);
      for (int i = 0; i < dim; ++i) {
        s[i] = rng.normal();
        pt[i] = rng.normal();
      }
      if (s.norm() > 1e-6) cuts.push_back({s, pt});
    }

    QpOptions opts;
    opts.delta_cut = 1e-7;
    const QpResult got = min_rate_point(mean, chol_of(cov), piece, cuts, opts);
    const RefResult ref = qp_reference(mean, cov, combined(piece, cuts, opts.delta_cut));

    if (ref.feasible) {
      REQUIRE_MESSAGE(got.status == QpResult::Status::optimal,
                      "solver reported infeasible on a feasible instance, trial ",
                      trial);
      CHECK_MESSAGE(std::abs(got.objective - ref.objective) <=
                        1e-7 * (1.0 + std::abs(ref.objective)),
                    "objective mismatch at trial ", trial, ": got ", got.objective,
                    " want ", ref.objective);
    } else if (got.status == QpResult::Status::optimal) {
      // Tolerance-marginal instance: the reference works at 1e-9 while the
      // solver accepts 1e-8 slack. The solver's point must still be feasible
      // to a loose tolerance for this to count as marginal rather than wrong.
      const RawConstraints rc = combined(piece, cuts, opts.delta_cut);
      double viol = -1e300;
      for (int i = 0; i < rc.offsets.size(); ++i) {
        viol = std::max(viol, rc.offsets[i] - rc.normals.row(i).dot(got.x_star));
      }
      CHECK_MESSAGE(viol <= 1e-7,
                    "solver point violates constraints by ", viol, " at trial ", trial);
    } else {
      ++infeasible_count;
    }
  }
  CHECK(infeasible_count > 0);  // the family must actually exercise both branches
}

TEST_CASE("kkt conditions hold at reported optima") {
  Philox rng(8080, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 3;
    Vector mean = Vector::Zero(dim);
    std::vector<HalfSpaceRow> rows;
    for (int r = 0; r < 3; ++r) {
      Vector w(dim);
      for (int i = 0; i < dim; ++i) w[i] = rng.normal();
      rows.push_back({w, 0.5 + rng.uniform()});
    }
    const Polyhedron piece(rows, dim);
    const QpResult r = min_rate_point(mean, Matrix::Identity(dim, dim), piece, {});
    if (r.status != QpResult::Status::optimal) continue;
    CHECK(r.kkt_residual <= 1e-7);
    CHECK(piece.contains(r.x_star, 1e-7));
    if (r.multipliers.size() > 0) CHECK(r.multipliers.minCoeff() >= -1e-8);
  }
}

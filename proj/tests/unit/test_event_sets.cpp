#include "redps/dominating.hpp"
#include "redps/event_set.hpp"
#include "redps/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace redps;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector scalar(double x) {
  Vector v(1);
  v[0] = x;
  return v;
}

PolyhedralUnion two_tail_1d(double gamma, double k_tail) {
  std::vector<Polyhedron> pieces;
  pieces.emplace_back(std::vector<HalfSpaceRow>{{scalar(1.0), gamma}}, 1);
  pieces.emplace_back(std::vector<HalfSpaceRow>{{scalar(-1.0), k_tail * gamma}}, 1);
  return PolyhedralUnion(std::move(pieces), gamma);
}

}  // namespace

TEST_CASE("overshoot_set basics") {
  const PolyhedralUnion single = overshoot_set(1, 1.0);
  CHECK(single.pieces().size() == 1);
  CHECK(single.contains(scalar(1.0)));
  CHECK(single.contains(scalar(2.0)));
  CHECK_FALSE(single.contains(scalar(0.999)));

  const double a = 3.3;
  const PolyhedralUnion set = overshoot_set(10, a);
  CHECK(set.dimension() == 10);
  CHECK(set.pieces().size() == 10);
  CHECK(set.gamma() == a);

  // Boundary of the last piece: the flat path at a/T.
  Vector flat = Vector::Constant(10, a / 10.0);
  CHECK(set.contains(flat));
  Vector spike = Vector::Zero(10);
  spike[0] = a;
  CHECK(set.contains(spike));
  CHECK_FALSE(set.contains(Vector::Zero(10)));

  // S_3 = 3.4 crosses even though later partial sums fall back.
  Vector dip = Vector::Zero(10);
  dip[0] = 1.2;
  dip[1] = 1.2;
  dip[2] = 1.0;
  dip[3] = -2.0;
  CHECK(set.contains(dip));
}

TEST_CASE("overshoot membership equals the partial-sum oracle") {
  const double a = 3.3;
  const PolyhedralUnion set = overshoot_set(10, a);
  Philox rng(505, 0);
  int hits = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    Vector x(10);
    // Mix ambient and crossing-scale draws so both outcomes occur.
    const double scale = trial % 2 == 0 ? 0.45 : 1.1;
    for (int i = 0; i < 10; ++i) x[i] = scale * rng.normal();
    double s = 0.0;
    double smax = -1e300;
    for (int i = 0; i < 10; ++i) {
      s += x[i];
      smax = std::max(smax, s);
    }
    const bool direct = smax >= a - 1e-9 * std::sqrt(10.0);
    const bool member = set.contains(x);
    if (direct != member) {
      // Disagreement is only allowed within the membership tolerance band.
      CHECK(std::abs(smax - a) < 1e-7);
    }
    hits += member;
  }
  CHECK(hits > 0);
  CHECK(hits < 100000);
}

TEST_CASE("row normalization is idempotent bit-for-bit") {
  std::vector<HalfSpaceRow> rows;
  rows.push_back({vec2(3.0, 4.0), 10.0});
  rows.push_back({vec2(-1.0, 1.0), 0.5});
  rows.push_back({vec2(0.0, 2.0), -3.0});
  const auto once = normalize_rows(rows);
  const auto twice = normalize_rows(once);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(std::memcmp(once[i].w.data(), twice[i].w.data(),
                      sizeof(double) * once[i].w.size()) == 0);
    CHECK(std::memcmp(&once[i].b, &twice[i].b, sizeof(double)) == 0);
  }
  CHECK(once[0].w.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(once[0].b == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(normalize_rows({{Vector::Zero(2), 1.0}}), ConfigError);
}

TEST_CASE("contains rejects dimension mismatch and far points") {
  const PolyhedralUnion set = two_tail_1d(2.0, 2.0);
  CHECK_THROWS_AS(set.contains(vec2(1.0, 1.0)), ConfigError);
  CHECK_FALSE(set.contains(scalar(0.0)));
  CHECK(set.contains(scalar(2.0)));   // boundary inclusion
  CHECK(set.contains(scalar(-4.0)));  // boundary of the left piece
  CHECK_FALSE(set.contains(scalar(-3.999)));
}

TEST_CASE("two-tail split with one retained point gives the far tail as E2") {
  const double gamma = 2.0;
  const PolyhedralUnion set = two_tail_1d(gamma, 2.0);
  // a1 = gamma with tilt s = gamma covers exactly {x >= gamma}.
  RegionSplit split = split_regions(set, {{scalar(gamma), scalar(gamma)}});
  CHECK(split.in_e1(scalar(2.5)));
  CHECK_FALSE(split.in_e2(scalar(2.5)));
  CHECK(split.in_e2(scalar(-4.5)));
  CHECK_FALSE(split.in_e1(scalar(-4.5)));
  CHECK_FALSE(split.in_e1(scalar(0.0)));
  CHECK_FALSE(split.in_e2(scalar(0.0)));
}

TEST_CASE("split with all points leaves E2 empty") {
  const double gamma = 2.0;
  const PolyhedralUnion set = two_tail_1d(gamma, 2.0);
  RegionSplit split = split_regions(set, {{scalar(gamma), scalar(gamma)},
                                          {scalar(-2.0 * gamma), scalar(-2.0 * gamma)}});
  Philox rng(11, 0);
  for (int i = 0; i < 20000; ++i) {
    const double x = -8.0 + 16.0 * rng.uniform();
    CHECK_FALSE(split.in_e2(scalar(x)));
    CHECK(split.in_e1(scalar(x)) == set.contains(scalar(x)));
  }
}

TEST_CASE("partition property on random points") {
  const PolyhedralUnion set = two_tail_1d(1.5, 3.0);
  RegionSplit split = split_regions(set, {{scalar(1.5), scalar(1.5)}});
  Philox rng(23, 0);
  for (int i = 0; i < 100000; ++i) {
    const double x = (i % 2 == 0 ? 1.5 : -4.5) + 2.0 * rng.normal();
    const Vector v = scalar(x);
    const bool e1 = split.in_e1(v);
    const bool e2 = split.in_e2(v);
    const bool in = set.contains(v);
    const bool partitioned = (e1 || e2) == in;
    const bool disjoint = !(e1 && e2);
    CHECK(partitioned);
    CHECK(disjoint);
  }
}

TEST_CASE("2-D wedge split against a grid classification") {
  // E = {x1 + x2 >= 4} union {x1 - x2 >= 6}; keeping only a1 = (2,2) with
  // tilt (2,2) leaves E2 = the part of the second wedge below x1 + x2 = 4.
  std::vector<Polyhedron> pieces;
  pieces.emplace_back(std::vector<HalfSpaceRow>{{vec2(1.0, 1.0), 4.0}}, 2);
  pieces.emplace_back(std::vector<HalfSpaceRow>{{vec2(1.0, -1.0), 6.0}}, 2);
  const PolyhedralUnion set(pieces, 0.0);
  RegionSplit split = split_regions(set, {{vec2(2.0, 2.0), vec2(2.0, 2.0)}});

  const int side = 1000;  // 10^6 grid points over [-8, 8]^2
  std::uint64_t checked = 0;
  // Offset 0.37 keeps grid points off the exact wedge boundaries, where the
  // direct float comparison and the tolerance-based classifier may differ.
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double x1 = -8.0 + 16.0 * (i + 0.37) / side;
      const double x2 = -8.0 + 16.0 * (j + 0.37) / side;
      const Vector v = vec2(x1, x2);
      const bool in_set = (x1 + x2 >= 4.0) || (x1 - x2 >= 6.0);
      const bool covered = x1 + x2 >= 4.0;
      const bool want_e2 = in_set && !covered;  // second wedge, below the cut
      if (split.in_e2(v) != want_e2) {
        const bool near_boundary =
            std::abs(x1 + x2 - 4.0) < 1e-7 || std::abs(x1 - x2 - 6.0) < 1e-7;
        CHECK(near_boundary);
      }
      ++checked;
    }
  }
  CHECK(checked == 1000000);
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "geometry.hpp"
#include "oracles.hpp"

using namespace stemseg;

namespace {

constexpr double kPi = std::numbers::pi;

bool same_ring_cyclic(const Ring& a, const Ring& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t shift = 0; shift < a.size(); ++shift) {
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      const Point d = a[(i + shift) % a.size()] - b[i];
      ok = std::abs(d.x) < tol && std::abs(d.y) < tol;
    }
    if (ok) return true;
  }
  return false;
}

TargetRegion square_region(double x0, double y0, double s) {
  TargetRegion r;
  r.outer = {{x0, y0}, {x0 + s, y0}, {x0 + s, y0 + s}, {x0, y0 + s}};
  r.area = s * s;
  r.bbox = bounding_box(r.outer);
  return r;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("decode_rect vertices") {
    CHECK(same_ring_cyclic(decode_rect({4, 2, {0, 0}, 0}), {{-2, -1}, {2, -1}, {2, 1}, {-2, 1}}, 1e-12));
    CHECK(same_ring_cyclic(decode_rect({4, 2, {0, 0}, kPi / 2}), {{1, -2}, {1, 2}, {-1, 2}, {-1, -2}},
                           1e-12));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
      const RectPoly r = oracle::random_rect(rng, {0, 0}, 10, 0.5, 20, 0.5, 5);
      const Ring ring = decode_rect(r);
      CHECK(signed_area(ring) == doctest::Approx(r.a * r.b).epsilon(1e-12));
    }
    CHECK(decode_rect({4, 0, {0, 0}, 0}).empty());
  }

  TEST_CASE("polygon_area basics and MC agreement") {
    CHECK(polygon_area(Ring{{0, 0}, {1, 0}, {1, 1}, {0, 1}}) == doctest::Approx(1.0));
    CHECK(polygon_area(Ring{{0, 0}, {4, 0}, {0, 3}}) == doctest::Approx(6.0));
    std::mt19937_64 rng(4);
    const TargetRegion reg = oracle::random_region(rng, {0, 0}, 10, false);
    const AreaEstimate est = mc_area_oracle([&](Point p) { return oracle::inside_ring(p, reg.outer); },
                                            reg.bbox, 1000000, 9);
    CHECK(std::abs(est.area - polygon_area(reg.outer)) <= 3 * est.std_error);
  }

  TEST_CASE("mc_area_oracle sanity") {
    const AreaEstimate sq =
        mc_area_oracle([](Point p) { return p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1; },
                       {0, 0, 1, 1}, 1000000, 1);
    CHECK(std::abs(sq.area - 1.0) <= 0.002);
    const AreaEstimate disk =
        mc_area_oracle([](Point p) { return p.x * p.x + p.y * p.y <= 1; }, {-1, -1, 1, 1}, 1000000, 2);
    CHECK(std::abs(disk.area - kPi) <= 3 * disk.std_error);
    CHECK(mc_area_oracle([](Point) { return false; }, {0, 0, 1, 1}, 1000, 3).area == 0.0);
  }

  TEST_CASE("clip_area_rect cases") {
    const TargetRegion big = square_region(0, 0, 100);
    CHECK(clip_area_rect(big, {10, 4, {50, 50}, 0.3}) == doctest::Approx(40.0));
    CHECK(clip_area_rect(big, {10, 4, {500, 500}, 0.3}) == 0.0);
    const TargetRegion unit = square_region(0, 0, 1);
    CHECK(clip_area_rect(unit, {1, 1, {1.0, 0.5}, 0}) == doctest::Approx(0.5));
  }

  TEST_CASE("clip_area_rect on regions with holes matches the independent clipper") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
      const TargetRegion reg = oracle::random_region(rng, {0, 0}, 15, i % 2 == 0);
      const RectPoly r = oracle::random_rect(rng, {0, 0}, 10, 2, 25, 1, 8);
      const double got = clip_area_rect(reg, r);
      CHECK(got == doctest::Approx(oracle::region_convex_area(reg, oracle::corners(r))).epsilon(1e-9));
      CHECK(got <= std::min(reg.area, r.a * r.b) + 1e-9);
      CHECK(got >= 0.0);
    }
  }

  TEST_CASE("rect_rect_area cases and symmetry") {
    const RectPoly r{3, 2, {1, 1}, 0.4};
    CHECK(rect_rect_area(r, r) == doctest::Approx(6.0));
    CHECK(rect_rect_area({1, 0.2, {0, 0}, 0}, {1, 0.2, {0, 0}, kPi / 2}) == doctest::Approx(0.04));
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
      const RectPoly a = oracle::random_rect(rng, {0, 0}, 3, 1, 10, 0.5, 4);
      const RectPoly b = oracle::random_rect(rng, {0, 0}, 3, 1, 10, 0.5, 4);
      const double ab = rect_rect_area(a, b);
      CHECK(ab == doctest::Approx(rect_rect_area(b, a)).epsilon(1e-12));
      const double ref = std::abs(oracle::shoelace(
          oracle::convex_intersection(oracle::corners(a), oracle::corners(b))));
      CHECK(ab == doctest::Approx(ref).epsilon(1e-9));
    }
  }

  TEST_CASE("triple_area cases, symmetry and monotonicity") {
    const TargetRegion big = square_region(-50, -50, 100);
    const RectPoly r{6, 2, {0, 0}, 0.2};
    CHECK(triple_area(big, r, r) == doctest::Approx(12.0));
    CHECK(triple_area(big, r, {6, 2, {30, 30}, 0.2}) == 0.0);
    std::mt19937_64 rng(13);
    for (int i = 0; i < 100; ++i) {
      const TargetRegion reg = oracle::random_region(rng, {0, 0}, 12, i % 3 == 0);
      const RectPoly a = oracle::random_rect(rng, {0, 0}, 6, 2, 20, 1, 6);
      const RectPoly b = oracle::random_rect(rng, {0, 0}, 6, 2, 20, 1, 6);
      const double t = triple_area(reg, a, b);
      CHECK(t == doctest::Approx(triple_area(reg, b, a)).epsilon(1e-9));
      CHECK(t <= rect_rect_area(a, b) + 1e-9);
      CHECK(t <= clip_area_rect(reg, a) + 1e-9);
      CHECK(t <= clip_area_rect(reg, b) + 1e-9);
      const Ring ab = oracle::convex_intersection(oracle::corners(a), oracle::corners(b));
      CHECK(t == doctest::Approx(oracle::region_convex_area(reg, ab)).epsilon(1e-9));
    }
  }

  TEST_CASE("rigid motion leaves areas unchanged") {
    std::mt19937_64 rng(21);
    const double ang = 0.7;
    const Point shift{123.25, -45.5};
    auto move = [&](Point p) {
      return Point{std::cos(ang) * p.x - std::sin(ang) * p.y + shift.x,
                   std::sin(ang) * p.x + std::cos(ang) * p.y + shift.y};
    };
    for (int i = 0; i < 30; ++i) {
      TargetRegion reg = oracle::random_region(rng, {0, 0}, 10, true);
      const RectPoly a = oracle::random_rect(rng, {0, 0}, 5, 2, 15, 1, 5);
      const RectPoly b = oracle::random_rect(rng, {0, 0}, 5, 2, 15, 1, 5);
      TargetRegion reg2 = reg;
      for (Point& p : reg2.outer) p = move(p);
      for (Ring& h : reg2.holes)
        for (Point& p : h) p = move(p);
      reg2.bbox = bounding_box(reg2.outer);
      const RectPoly a2{a.a, a.b, move(a.center), a.rho + ang};
      const RectPoly b2{b.a, b.b, move(b.center), b.rho + ang};
      auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(x)); };
      CHECK(rel(clip_area_rect(reg, a), clip_area_rect(reg2, a2)) < 1e-9);
      CHECK(rel(rect_rect_area(a, b), rect_rect_area(a2, b2)) < 1e-9);
      CHECK(rel(triple_area(reg, a, b), triple_area(reg2, a2, b2)) < 1e-9);
    }
  }

  TEST_CASE("intersection_area of general polygons") {
    const Ring sq{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
    const Ring l_shape{{0, 0}, {3, 0}, {3, 1}, {1, 1}, {1, 3}, {0, 3}};
    CHECK(intersection_area(sq, l_shape) == doctest::Approx(3.0));
    Ring cw = l_shape;
    std::reverse(cw.begin(), cw.end());
    CHECK(intersection_area(cw, sq) == doctest::Approx(3.0));
    std::mt19937_64 rng(31);
    for (int i = 0; i < 20; ++i) {
      const TargetRegion reg = oracle::random_region(rng, {0, 0}, 8, false);
      const RectPoly r = oracle::random_rect(rng, {0, 0}, 4, 2, 12, 1, 6);
      CHECK(intersection_area(reg.outer, decode_rect(r)) ==
            doctest::Approx(oracle::region_convex_area(reg, oracle::corners(r))).epsilon(1e-9));
    }
  }

  TEST_CASE("oriented_bbox") {
    const RectPoly r = oriented_bbox(decode_rect({4, 2, {1, 1}, 0}));
    CHECK(r.a == doctest::Approx(4));
    CHECK(r.b == doctest::Approx(2));
    CHECK(angle_deviation(r.rho, 0) < 1e-9);
    const RectPoly rot = oriented_bbox(decode_rect({4, 2, {0, 0}, kPi / 6}));
    CHECK(rot.a == doctest::Approx(4));
    CHECK(rot.b == doctest::Approx(2));
    CHECK(angle_deviation(rot.rho, kPi / 6) < 1e-9);
    std::mt19937_64 rng(41);
    for (int i = 0; i < 50; ++i) {
      const TargetRegion reg = oracle::random_region(rng, {3, -2}, 10, false);
      const RectPoly ob = oriented_bbox(reg.outer);
      CHECK(ob.a >= ob.b);
      RectPoly grown = ob;
      grown.a += 1e-7;
      grown.b += 1e-7;
      for (const Point& p : reg.outer) CHECK(point_in_rect(p, grown));
      CHECK(ob.a * ob.b <= reg.bbox.area() + 1e-9);
    }
  }

  TEST_CASE("angles") {
    CHECK(canonical_angle(-0.1) == doctest::Approx(kPi - 0.1));
    CHECK(canonical_angle(kPi) == doctest::Approx(0.0));
    CHECK(angle_deviation(0.05, kPi - 0.05) == doctest::Approx(0.1));
    CHECK(angle_deviation(0.0, kPi / 2) == doctest::Approx(kPi / 2));
  }
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "contour.hpp"

using namespace stemseg;

namespace {

ProbabilityRaster blank(std::uint32_t w, std::uint32_t h) {
  ProbabilityRaster r;
  r.width = w;
  r.height = h;
  r.values.assign(static_cast<std::size_t>(w) * h, 0.0f);
  return r;
}

Ring square(double x0, double y0, double s, bool ccw = true) {
  Ring r{{x0, y0}, {x0 + s, y0}, {x0 + s, y0 + s}, {x0, y0 + s}};
  if (!ccw) std::reverse(r.begin(), r.end());
  return r;
}

}  // namespace

TEST_SUITE("contour") {
  TEST_CASE("constant background gives no rings") {
    CHECK(extract_level_contours(blank(5, 5), 0.5).empty());
  }

  TEST_CASE("single pixel gives a diamond around its center") {
    ProbabilityRaster r = blank(3, 3);
    r.at(1, 1) = 1.0f;
    const auto rings = extract_level_contours(r, 0.5);
    REQUIRE(rings.size() == 1);
    const Ring& d = rings[0];
    REQUIRE(d.size() == 4);
    // Crossings halfway between (1.5,1.5) and its four neighbours.
    for (const Point& p : d) {
      CHECK(std::abs(p.x - 1.5) + std::abs(p.y - 1.5) == doctest::Approx(0.5));
    }
    CHECK(signed_area(d) == doctest::Approx(0.5));
  }

  TEST_CASE("rasterized disk area within 2 percent") {
    const int n = 80;
    ProbabilityRaster r = blank(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (std::hypot(x + 0.5 - 40, y + 0.5 - 40) <= 30) r.at(x, y) = 1.0f;
    const auto rings = extract_level_contours(r, 0.5);
    REQUIRE(rings.size() == 1);
    CHECK(std::abs(polygon_area(rings[0]) - std::numbers::pi * 900) < 0.02 * std::numbers::pi * 900);
  }

  TEST_CASE("every foreground pixel center lies inside exactly one outer ring") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    ProbabilityRaster r = blank(30, 20);
    for (float& v : r.values) v = u(rng) < 0.35f ? 1.0f : 0.0f;
    const auto rings = extract_level_contours(r, 0.5);
    for (std::uint32_t y = 0; y < r.height; ++y) {
      for (std::uint32_t x = 0; x < r.width; ++x) {
        const Point c{x + 0.5, y + 0.5};
        int outer = 0, hole = 0;
        for (const Ring& ring : rings) {
          if (!point_in_ring(c, ring)) continue;
          (signed_area(ring) > 0 ? outer : hole)++;
        }
        if (r.at(x, y) >= 0.5f) CHECK(outer - hole == 1);
        else CHECK(outer - hole == 0);
      }
    }
  }

  TEST_CASE("binary raster region area is close to pixel count") {
    ProbabilityRaster r = blank(40, 30);
    for (int y = 5; y < 20; ++y)
      for (int x = 3; x < 30; ++x) r.at(x, y) = 1.0f;
    for (int y = 10; y < 14; ++y)
      for (int x = 10; x < 15; ++x) r.at(x, y) = 0.0f;
    const TargetRegionSet set = extract_regions(r, 0.5, 0.0);
    REQUIRE(set.regions.size() == 1);
    CHECK(set.regions[0].holes.size() == 1);
    const double pixels = 27 * 15 - 20;
    const double boundary = 2 * (27 + 15) + 2 * (5 + 4);
    CHECK(std::abs(set.regions[0].area - pixels) <= boundary);
  }

  TEST_CASE("simplify drops a collinear midpoint") {
    Ring sq{{0, 0}, {1, 0}, {2, 0}, {2, 2}, {0, 2}};
    const Ring s = simplify_polygon(sq, 0.1);
    CHECK(s.size() == 4);
    CHECK(polygon_area(s) == doctest::Approx(4.0));
  }

  TEST_CASE("simplify with eps 0 is the identity") {
    Ring sq{{0, 0}, {1, 0.01}, {2, 0}, {2, 2}, {0, 2}};
    CHECK(simplify_polygon(sq, 0.0) == sq);
  }

  TEST_CASE("noisy circle: fewer vertices, deviation bounded, idempotent") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    Ring circle;
    for (int k = 0; k < 1000; ++k) {
      const double a = 2 * std::numbers::pi * k / 1000;
      const double rad = 50 + u(rng);
      circle.push_back({rad * std::cos(a), rad * std::sin(a)});
    }
    const Ring s = simplify_polygon(circle, 0.5);
    CHECK(s.size() < circle.size());
    CHECK(s.size() >= 3);
    double worst = 0.0;
    for (const Point& p : circle) {
      double best = 1e300;
      for (std::size_t i = 0; i < s.size(); ++i)
        best = std::min(best, point_segment_distance(p, s[i], s[(i + 1) % s.size()]));
      worst = std::max(worst, best);
    }
    CHECK(worst <= 0.5 + 1e-9);
    CHECK(simplify_polygon(s, 0.5) == s);
  }

  TEST_CASE("region building") {
    SUBCASE("one square") {
      const auto set = build_regions({square(0, 0, 4)});
      REQUIRE(set.regions.size() == 1);
      CHECK(set.regions[0].holes.empty());
      CHECK(set.regions[0].area == doctest::Approx(16));
    }
    SUBCASE("square with hole") {
      const auto set = build_regions({square(0, 0, 4), square(1, 1, 2, false)});
      REQUIRE(set.regions.size() == 1);
      CHECK(set.regions[0].holes.size() == 1);
      CHECK(set.regions[0].area == doctest::Approx(12));
    }
    SUBCASE("two disjoint squares sorted by area") {
      const auto set = build_regions({square(0, 0, 2), square(10, 10, 3)});
      REQUIRE(set.regions.size() == 2);
      CHECK(set.regions[0].area == doctest::Approx(9));
      CHECK(set.regions[1].area == doctest::Approx(4));
    }
    SUBCASE("hole goes to the smallest enclosing outer") {
      const auto set = build_regions(
          {square(0, 0, 20), square(2, 2, 16, false), square(5, 5, 10), square(7, 7, 2, false)});
      REQUIRE(set.regions.size() == 2);
      CHECK(set.regions[0].area == doctest::Approx(400 - 256));
      CHECK(set.regions[1].area == doctest::Approx(100 - 4));
    }
  }

  TEST_CASE("region area sum bounded by raster size and small regions dropped") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    ProbabilityRaster r = blank(25, 25);
    for (float& v : r.values) v = u(rng);
    double total = 0;
    for (const auto& reg : extract_regions(r, 0.5, 1.0).regions) total += reg.area;
    CHECK(total <= 25.0 * 25.0);
    for (const auto& reg : extract_regions(r, 0.5, 1.0, 5.0).regions) CHECK(reg.area >= 5.0);
  }
}

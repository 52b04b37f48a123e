#include "sac.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace stemseg {

namespace {

struct Hypothesis {
  Point origin;
  Point dir;
  std::size_t inliers = 0;
  double residual = std::numeric_limits<double>::infinity();
  double lo = 0.0;
  double hi = 0.0;
};

Hypothesis score(const std::vector<Point>& pts, Point origin, Point dir, double d_sac) {
  Hypothesis h{origin, dir};
  h.residual = 0.0;
  h.lo = std::numeric_limits<double>::infinity();
  h.hi = -h.lo;
  for (const Point& p : pts) {
    const Point d = p - origin;
    const double dist = std::abs(cross(dir, d));
    if (dist > d_sac) continue;
    ++h.inliers;
    h.residual += dist * dist;
    const double t = dot(d, dir);
    h.lo = std::min(h.lo, t);
    h.hi = std::max(h.hi, t);
  }
  return h;
}

// Principal axis of the inlier set; keeps the hypothesis geometry if the
// refit would shrink the extent below the minimum length.
LineSegment refine(const std::vector<Point>& inliers, const Hypothesis& h, double l_sac) {
  Point mean{};
  for (const Point& p : inliers) mean = mean + p;
  mean = (1.0 / static_cast<double>(inliers.size())) * mean;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Point& p : inliers) {
    const Point d = p - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  const Point dir = direction(angle);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Point& p : inliers) {
    const double t = dot(p - mean, dir);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (hi - lo >= l_sac) {
    return {mean + lo * dir, mean + hi * dir, inliers.size()};
  }
  return {h.origin + h.lo * h.dir, h.origin + h.hi * h.dir, inliers.size()};
}

}  // namespace

std::vector<LineSegment> detect_lines(const BinaryMask& mask, const SacParams& params,
                                      std::uint64_t seed) {
  std::vector<Point> pixels;
  for (std::uint32_t row = 0; row < mask.height; ++row) {
    for (std::uint32_t col = 0; col < mask.width; ++col) {
      if (mask.at(col, row)) pixels.push_back({col + 0.5, row + 0.5});
    }
  }
  return detect_lines(std::move(pixels), params, seed);
}

std::vector<LineSegment> detect_lines(std::vector<Point> remaining, const SacParams& params,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LineSegment> accepted;
  const std::size_t min_pts = std::max<std::size_t>(2, params.n_sac);

  while (accepted.size() < params.max_rounds && remaining.size() >= min_pts) {
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    Hypothesis best;
    bool found = false;
    for (std::size_t k = 0; k < params.hypotheses_per_round; ++k) {
      const std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      while (j == i) j = pick(rng);
      const Point d = remaining[j] - remaining[i];
      const double len = norm(d);
      if (len <= 0.0) continue;
      const Hypothesis h = score(remaining, remaining[i], (1.0 / len) * d, params.d_sac);
      if (h.inliers < params.n_sac || h.hi - h.lo < params.l_sac) continue;
      if (!found || h.inliers > best.inliers ||
          (h.inliers == best.inliers && h.residual < best.residual)) {
        best = h;
        found = true;
      }
    }
    if (!found) break;

    std::vector<Point> inliers;
    inliers.reserve(best.inliers);
    auto is_inlier = [&](const Point& p) {
      return std::abs(cross(best.dir, p - best.origin)) <= params.d_sac;
    };
    for (const Point& p : remaining) {
      if (is_inlier(p)) inliers.push_back(p);
    }
    accepted.push_back(refine(inliers, best, params.l_sac));
    std::erase_if(remaining, is_inlier);
  }
  return accepted;
}

ModelState init_shapes(const std::vector<LineSegment>& segments, int default_width, double w0,
                       const ShapeBounds& bounds) {
  ModelState state;
  state.bounds = bounds;
  for (const LineSegment& seg : segments) {
    const double len = seg.length();
    const Point d = seg.p1 - seg.p0;
    const double rho = canonical_angle(std::atan2(d.y, d.x));
    const Point mid = 0.5 * (seg.p0 + seg.p1);
    const int a = std::clamp(static_cast<int>(std::lround(len)), bounds.a_lo, bounds.a_hi);
    state.shapes.push_back({a, default_width, mid, rho});
    state.boxes.push_back({mid, rho, len, w0});
  }
  return state;
}

}  // namespace stemseg

#include "geometry.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace stemseg {

namespace {

constexpr double kPi = std::numbers::pi;

// Clips `subject` against the half-planes of `convex`, writing into `out`.
// `scratch` is reused between passes to avoid allocation in the hot path.
void clip_into(std::span<const Point> subject, std::span<const Point> convex, Ring& out,
               Ring& scratch) {
  out.assign(subject.begin(), subject.end());
  const std::size_t m = convex.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Point c0 = convex[e];
    const Point edge = convex[(e + 1) % m] - c0;
    const double len = norm(edge);
    if (len < 1e-12) continue;
    const Point n = (1.0 / len) * edge;

    scratch.swap(out);
    out.clear();
    const std::size_t k = scratch.size();
    Point prev = scratch[k - 1];
    double s_prev = cross(n, prev - c0);
    for (std::size_t i = 0; i < k; ++i) {
      const Point cur = scratch[i];
      const double s_cur = cross(n, cur - c0);
      const bool in_cur = s_cur >= -kGeomEps;
      const bool in_prev = s_prev >= -kGeomEps;
      if (in_cur != in_prev) {
        const double t = s_prev / (s_prev - s_cur);
        out.push_back(prev + t * (cur - prev));
      }
      if (in_cur) out.push_back(cur);
      prev = cur;
      s_prev = s_cur;
    }
    if (out.size() < 3) out.clear();
  }
}

struct ClipBuffers {
  Ring a;
  Ring b;
};

ClipBuffers& buffers() {
  thread_local ClipBuffers bufs;
  return bufs;
}

double clipped_abs_area(std::span<const Point> subject, std::span<const Point> convex) {
  auto& bufs = buffers();
  clip_into(subject, convex, bufs.a, bufs.b);
  return std::abs(signed_area(bufs.a));
}

}  // namespace

double canonical_angle(double angle) {
  double r = std::fmod(angle, kPi);
  if (r < 0.0) r += kPi;
  if (r >= kPi) r = 0.0;
  return r;
}

double angle_deviation(double a, double b) {
  const double d = canonical_angle(a - b);
  return std::min(d, kPi - d);
}

double signed_area(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) s += cross(ring[j], ring[i]);
  return 0.5 * s;
}

double polygon_area(std::span<const Point> ring) { return std::abs(signed_area(ring)); }

BBox bounding_box(std::span<const Point> ring) {
  if (ring.empty()) return {};
  BBox b{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
  for (const Point& p : ring) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

BBox rect_bbox(const RectPoly& rect) {
  const double c = std::abs(std::cos(rect.rho));
  const double s = std::abs(std::sin(rect.rho));
  const double hx = 0.5 * (rect.a * c + rect.b * s);
  const double hy = 0.5 * (rect.a * s + rect.b * c);
  return {rect.center.x - hx, rect.center.y - hy, rect.center.x + hx, rect.center.y + hy};
}

Ring decode_rect(const RectPoly& rect) {
  if (!(rect.a > 0.0) || !(rect.b > 0.0)) return {};
  const Point u = direction(rect.rho);
  const Point v{-u.y, u.x};
  const double ha = 0.5 * rect.a;
  const double hb = 0.5 * rect.b;
  const Point c = rect.center;
  return {c - ha * u - hb * v, c + ha * u - hb * v, c + ha * u + hb * v, c - ha * u + hb * v};
}

Ring clip_to_convex(std::span<const Point> subject, std::span<const Point> convex) {
  Ring out;
  Ring scratch;
  clip_into(subject, convex, out, scratch);
  return out;
}

double clip_area_convex(const TargetRegion& region, std::span<const Point> convex) {
  if (convex.size() < 3) return 0.0;
  const BBox cb = bounding_box(convex);
  if (!cb.intersects(region.bbox)) return 0.0;
  double area = clipped_abs_area(region.outer, convex);
  if (area <= 0.0) return 0.0;
  for (const Ring& hole : region.holes) {
    if (!bounding_box(hole).intersects(cb)) continue;
    area -= clipped_abs_area(hole, convex);
  }
  return std::max(0.0, area);
}

double clip_area_rect(const TargetRegion& region, const RectPoly& rect) {
  if (!rect_bbox(rect).intersects(region.bbox)) return 0.0;
  const Ring r = decode_rect(rect);
  return clip_area_convex(region, r);
}

double rect_rect_area(const RectPoly& r1, const RectPoly& r2) {
  if (!rect_bbox(r1).intersects(rect_bbox(r2))) return 0.0;
  const Ring p = decode_rect(r1);
  const Ring q = decode_rect(r2);
  if (p.empty() || q.empty()) return 0.0;
  return clipped_abs_area(p, q);
}

double triple_area(const TargetRegion& region, const RectPoly& r1, const RectPoly& r2) {
  const BBox b1 = rect_bbox(r1);
  const BBox b2 = rect_bbox(r2);
  if (!b1.intersects(b2) || !b1.intersects(region.bbox) || !b2.intersects(region.bbox)) {
    return 0.0;
  }
  const Ring p = decode_rect(r1);
  const Ring q = decode_rect(r2);
  if (p.empty() || q.empty()) return 0.0;
  const Ring pq = clip_to_convex(p, q);
  if (pq.size() < 3 || std::abs(signed_area(pq)) <= 0.0) return 0.0;
  return clip_area_convex(region, pq);
}

double intersection_area(std::span<const Point> p, std::span<const Point> q) {
  if (p.size() < 3 || q.size() < 3) return 0.0;
  if (!bounding_box(p).intersects(bounding_box(q))) return 0.0;
  // Signed fan decomposition of q: the winding numbers of the fan
  // triangles sum to q's indicator function almost everywhere.
  const double q_sign = signed_area(q) >= 0.0 ? 1.0 : -1.0;
  double total = 0.0;
  Ring tri(3);
  for (std::size_t k = 1; k + 1 < q.size(); ++k) {
    tri[0] = q[0];
    tri[1] = q[k];
    tri[2] = q[k + 1];
    const double s = signed_area(tri);
    if (std::abs(s) < 1e-15) continue;
    if (s < 0.0) std::swap(tri[1], tri[2]);
    total += (s > 0.0 ? 1.0 : -1.0) * clipped_abs_area(p, tri);
  }
  return std::max(0.0, q_sign * total);
}

Ring convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(),
            [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  Ring hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

RectPoly oriented_bbox(std::span<const Point> ring) {
  const Ring hull = convex_hull(std::vector<Point>(ring.begin(), ring.end()));
  if (hull.empty()) return {};
  if (hull.size() == 1) return {0.0, 0.0, hull[0], 0.0};
  if (hull.size() == 2) {
    const Point d = hull[1] - hull[0];
    return {norm(d), 0.0, 0.5 * (hull[0] + hull[1]), canonical_angle(std::atan2(d.y, d.x))};
  }

  double best_area = std::numeric_limits<double>::infinity();
  RectPoly best;
  const std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point e = hull[(i + 1) % n] - hull[i];
    const double len = norm(e);
    if (len < 1e-12) continue;
    const Point u = (1.0 / len) * e;
    const Point v{-u.y, u.x};
    double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo;
    double v_lo = u_lo, v_hi = -u_lo;
    for (const Point& p : hull) {
      const double pu = dot(p, u);
      const double pv = dot(p, v);
      u_lo = std::min(u_lo, pu);
      u_hi = std::max(u_hi, pu);
      v_lo = std::min(v_lo, pv);
      v_hi = std::max(v_hi, pv);
    }
    const double area = (u_hi - u_lo) * (v_hi - v_lo);
    if (area < best_area * (1.0 - 1e-12)) {
      best_area = area;
      const double cu = 0.5 * (u_lo + u_hi);
      const double cv = 0.5 * (v_lo + v_hi);
      const Point center = cu * u + cv * v;
      const double du = u_hi - u_lo;
      const double dv = v_hi - v_lo;
      const double angle = std::atan2(u.y, u.x);
      if (du >= dv) {
        best = {du, dv, center, canonical_angle(angle)};
      } else {
        best = {dv, du, center, canonical_angle(angle + 0.5 * kPi)};
      }
    }
  }
  return best;
}

bool point_in_ring(Point p, std::span<const Point> ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point a = ring[i];
    const Point b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool point_in_region(Point p, const TargetRegion& region) {
  if (!region.bbox.contains(p) || !point_in_ring(p, region.outer)) return false;
  for (const Ring& hole : region.holes) {
    if (point_in_ring(p, hole)) return false;
  }
  return true;
}

bool point_in_rect(Point p, const RectPoly& rect) {
  const Point u = direction(rect.rho);
  const Point d = p - rect.center;
  const double along = dot(d, u);
  const double across = cross(u, d);
  return std::abs(along) <= 0.5 * rect.a && std::abs(across) <= 0.5 * rect.b;
}

double point_segment_distance(Point p, Point s0, Point s1) {
  const Point d = s1 - s0;
  const double len2 = dot(d, d);
  if (len2 <= 0.0) return norm(p - s0);
  const double t = std::clamp(dot(p - s0, d) / len2, 0.0, 1.0);
  return norm(p - (s0 + t * d));
}

double point_line_distance(Point p, Point origin, Point unit_dir) {
  return std::abs(cross(unit_dir, p - origin));
}

AreaEstimate mc_area_oracle(const std::function<bool(Point)>& inside, const BBox& box,
                            std::size_t samples, std::uint64_t seed) {
  if (samples == 0) return {};
  std::mt19937_64 rng(seed);
  // 53 random bits per coordinate; std::uniform_real_distribution is several
  // times slower here.
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double w = box.max_x - box.min_x;
  const double h = box.max_y - box.min_y;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = box.min_x + w * unit();
    const Point p{x, box.min_y + h * unit()};
    if (inside(p)) ++hits;
  }
  const double n = static_cast<double>(samples);
  const double frac = static_cast<double>(hits) / n;
  const double box_area = box.area();
  return {frac * box_area, box_area * std::sqrt(frac * (1.0 - frac) / n)};
}

}  // namespace stemseg

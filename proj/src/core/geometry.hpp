#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace stemseg {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point p, Point q) { return {p.x + q.x, p.y + q.y}; }
  friend Point operator-(Point p, Point q) { return {p.x - q.x, p.y - q.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point, Point) = default;
};

inline double dot(Point p, Point q) { return p.x * q.x + p.y * q.y; }
inline double cross(Point p, Point q) { return p.x * q.y - p.y * q.x; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline Point direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Closed polygon ring; the first vertex is not repeated at the end.
/// Positive signed shoelace area marks an outer ring, negative a hole.
using Ring = std::vector<Point>;

struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool intersects(const BBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  bool contains(Point p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  double area() const { return (max_x - min_x) * (max_y - min_y); }
};

/// A connected high-probability region: outer ring plus holes.
struct TargetRegion {
  Ring outer;
  std::vector<Ring> holes;
  double area = 0.0;
  BBox bbox;
};

/// Oriented rectangle. `a` runs along the axis at angle `rho`, `b` across it.
struct RectPoly {
  double a = 0.0;
  double b = 0.0;
  Point center;
  double rho = 0.0;
};

inline constexpr double kGeomEps = 1e-9;

/// Maps any angle into [0, pi).
double canonical_angle(double angle);
/// Undirected angular deviation in [0, pi/2].
double angle_deviation(double a, double b);

double signed_area(std::span<const Point> ring);
double polygon_area(std::span<const Point> ring);
BBox bounding_box(std::span<const Point> ring);
BBox rect_bbox(const RectPoly& rect);

/// Vertices of the rectangle in counter-clockwise (positive area) order;
/// empty when a or b is not positive.
Ring decode_rect(const RectPoly& rect);

/// Sutherland-Hodgman: clips an arbitrary ring against a convex,
/// positively oriented ring. Orientation of `subject` is preserved.
Ring clip_to_convex(std::span<const Point> subject, std::span<const Point> convex);

/// Area of region ∩ convex polygon (convex must be positively oriented).
double clip_area_convex(const TargetRegion& region, std::span<const Point> convex);
double clip_area_rect(const TargetRegion& region, const RectPoly& rect);
double rect_rect_area(const RectPoly& r1, const RectPoly& r2);
double triple_area(const TargetRegion& region, const RectPoly& r1, const RectPoly& r2);

/// Intersection area of two simple polygons of either orientation.
double intersection_area(std::span<const Point> p, std::span<const Point> q);

Ring convex_hull(std::vector<Point> points);
/// Minimum-area enclosing rectangle; the result has a >= b.
RectPoly oriented_bbox(std::span<const Point> ring);

bool point_in_ring(Point p, std::span<const Point> ring);
bool point_in_region(Point p, const TargetRegion& region);
bool point_in_rect(Point p, const RectPoly& rect);

double point_segment_distance(Point p, Point s0, Point s1);
double point_line_distance(Point p, Point origin, Point unit_dir);

struct AreaEstimate {
  double area = 0.0;
  double std_error = 0.0;
};

/// Uniform Monte Carlo estimate of the measure of {p in box : inside(p)}.
AreaEstimate mc_area_oracle(const std::function<bool(Point)>& inside, const BBox& box,
                            std::size_t samples, std::uint64_t seed);

}  // namespace stemseg

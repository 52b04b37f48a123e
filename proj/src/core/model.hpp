#pragma once

#include <cstddef>
#include <vector>

#include "geometry.hpp"

namespace stemseg {

/// Integer pixel bounds on rectangle length a and width b. b_lo is 0 so a
/// shape can be disabled.
struct ShapeBounds {
  int a_lo = 1;
  int a_hi = 1;
  int b_lo = 0;
  int b_hi = 1;

  bool contains(int a, int b) const { return a >= a_lo && a <= a_hi && b >= b_lo && b <= b_hi; }
};

/// Box around a shape's initialization that its center must stay inside.
struct ConstraintBox {
  Point center0;
  double rho0 = 0.0;
  double l0 = 1.0;
  double w0 = 1.0;

  bool contains(Point p) const {
    const Point u = direction(rho0);
    const Point d = p - center0;
    return std::abs(dot(d, u)) <= 0.5 * l0 + kGeomEps &&
           std::abs(cross(u, d)) <= 0.5 * w0 + kGeomEps;
  }
};

/// One evolving rectangle in pixel units. Width 0 means disabled.
struct Shape {
  int a = 0;
  int b = 0;
  Point center;
  double rho = 0.0;

  bool active() const { return b > 0; }
  RectPoly rect() const { return {static_cast<double>(a), static_cast<double>(b), center, rho}; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct ModelState {
  std::vector<Shape> shapes;
  std::vector<ConstraintBox> boxes;  // one per shape
  ShapeBounds bounds;

  std::size_t size() const { return shapes.size(); }
  std::size_t active_count() const;
};

/// True when every shape respects the bounds and every active center lies in
/// its box.
bool satisfies_invariants(const ModelState& state);

}  // namespace stemseg

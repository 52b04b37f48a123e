#pragma once

#include <cstdint>
#include <vector>

#include "geometry.hpp"
#include "model.hpp"
#include "raster.hpp"

namespace stemseg {

struct LineSegment {
  Point p0;
  Point p1;
  std::size_t inlier_count = 0;

  double length() const { return norm(p1 - p0); }
};

struct SacParams {
  double d_sac = 7.0;   // inlier distance, px
  double l_sac = 20.0;  // minimum projected extent, px
  std::size_t n_sac = 30;
  std::size_t hypotheses_per_round = 500;
  std::size_t max_rounds = 1000;
};

/// Greedy iterative sample consensus. Each round draws two-point hypotheses
/// from the remaining foreground pixel centers, accepts the valid one with the
/// most inliers (ties: smaller residual) and removes its inliers.
std::vector<LineSegment> detect_lines(const BinaryMask& mask, const SacParams& params,
                                      std::uint64_t seed);
std::vector<LineSegment> detect_lines(std::vector<Point> pixels, const SacParams& params,
                                      std::uint64_t seed);

/// One shape and one constraint box per segment.
ModelState init_shapes(const std::vector<LineSegment>& segments, int default_width, double w0,
                       const ShapeBounds& bounds);

}  // namespace stemseg

#pragma once

#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "raster.hpp"

namespace stemseg {

struct TargetRegionSet {
  std::vector<TargetRegion> regions;  // sorted by descending area
};

class MalformedContours : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Marching squares over pixel centers (col + 0.5, row + 0.5). The raster is
/// padded with zeros so every ring closes. Outer rings come out with positive
/// signed area, holes with negative. Saddle cells are disambiguated by the
/// mean of the four corner samples.
std::vector<Ring> extract_level_contours(const ProbabilityRaster& raster, double q);

/// Douglas-Peucker on a closed ring, anchored at vertex 0 and the vertex
/// farthest from it. Returns an empty ring if fewer than 3 vertices survive.
Ring simplify_polygon(const Ring& ring, double eps_d);

/// Assigns each hole to the smallest enclosing outer ring.
TargetRegionSet build_regions(const std::vector<Ring>& rings);

TargetRegion make_region(Ring outer, std::vector<Ring> holes = {});

/// extract -> simplify -> build, discarding regions below `min_area` px^2.
TargetRegionSet extract_regions(const ProbabilityRaster& raster, double q, double eps_d,
                                double min_area = 0.0);

}  // namespace stemseg

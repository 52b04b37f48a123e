#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace stemseg {

/// Rates are absent when their denominator is empty.
struct PolygonEvalReport {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> mean_iou_matched;
  std::vector<bool> ref_matched;
  std::vector<bool> det_matched;
  std::vector<double> ref_best_iou;
};

/// A ref matches when some det covers more than half of it; a det matches when
/// some ref covers more than half of it.
PolygonEvalReport match_polygons(const std::vector<Ring>& refs, const std::vector<Ring>& dets);

double polygon_iou(const Ring& p, const Ring& q);

struct Centerline {
  Point p0;
  Point p1;

  double length() const { return norm(p1 - p0); }
};

/// Midline of the minimum-area bounding rectangle along its longer side.
Centerline ref_centerline(const Ring& ref);
/// Midline along the longer side; a square uses the side at angle rho.
Centerline det_centerline(const RectPoly& det);

struct LineMatchParams {
  double angle_max = 5.0 * std::numbers::pi / 180.0;
  double dist_max = 0.35;
  double cover_min = 0.6;
  std::size_t samples = 10;
  double recall_coverage = 0.65;
  double curve_step = 0.05;
};

/// Mean distance from evenly spaced points of r to the line through d.
double mean_projected_distance(const Centerline& r, const Centerline& d, std::size_t samples);
/// Length of r's projection onto d, clipped to d.
double projection_cover(const Centerline& r, const Centerline& d);
/// Fraction of r's length covered by d's projection onto r.
double ref_coverage(const Centerline& r, const Centerline& d);

bool lines_match(const Centerline& r, const Centerline& d, const LineMatchParams& params = {});

struct LineEvalReport {
  std::optional<double> precision;
  std::optional<double> precision_simple;
  std::optional<double> precision_complex;
  std::optional<double> recall;
  std::optional<double> recall_at_coverage;
  std::vector<std::pair<double, double>> coverage_curve;  // threshold -> fraction of refs
  std::vector<bool> ref_matched;
  std::vector<bool> det_matched;
  std::vector<double> ref_coverage;
  std::vector<bool> ref_complex;
  std::vector<bool> det_complex;
};

/// ref_complex / det_complex label the strata for the split precisions.
LineEvalReport match_lines(const std::vector<Centerline>& refs,
                           const std::vector<Centerline>& dets,
                           const std::vector<bool>& ref_complex,
                           const std::vector<bool>& det_complex,
                           const LineMatchParams& params = {});

/// A ref is complex when it overlaps another ref with positive area.
std::vector<bool> classify_complexity(const std::vector<Ring>& refs);

/// Each det takes the stratum of the ref it overlaps most, or the ref with the
/// nearest centroid when it overlaps none.
std::vector<bool> det_strata(const std::vector<Ring>& refs, const std::vector<bool>& ref_complex,
                             const std::vector<Ring>& dets);

/// Full line evaluation from polygons: ref centerlines from their bounding
/// rectangles, det centerlines from the given rectangles.
LineEvalReport evaluate_lines(const std::vector<Ring>& refs, const std::vector<RectPoly>& dets,
                              const LineMatchParams& params = {});

std::string report_json(const PolygonEvalReport& report);
std::string report_json(const LineEvalReport& report);

}  // namespace stemseg

#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace stemseg {

using json = nlohmann::ordered_json;

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Point centroid(const Ring& ring) {
  Point c{};
  for (const Point& p : ring) c = c + p;
  return (1.0 / static_cast<double>(ring.size())) * c;
}

double line_angle(const Centerline& s) {
  const Point d = s.p1 - s.p0;
  return std::atan2(d.y, d.x);
}

// Overlap length of [min(t0,t1), max(t0,t1)] with [0, len].
double interval_overlap(double t0, double t1, double len) {
  const double lo = std::max(std::min(t0, t1), 0.0);
  const double hi = std::min(std::max(t0, t1), len);
  return std::max(0.0, hi - lo);
}

}  // namespace

double polygon_iou(const Ring& p, const Ring& q) {
  const double inter = intersection_area(p, q);
  const double uni = polygon_area(p) + polygon_area(q) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

PolygonEvalReport match_polygons(const std::vector<Ring>& refs, const std::vector<Ring>& dets) {
  PolygonEvalReport rep;
  rep.ref_matched.assign(refs.size(), false);
  rep.det_matched.assign(dets.size(), false);
  rep.ref_best_iou.assign(refs.size(), 0.0);
  std::vector<double> ref_area(refs.size()), det_area(dets.size());
  std::vector<BBox> ref_box(refs.size()), det_box(dets.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    ref_area[i] = polygon_area(refs[i]);
    ref_box[i] = bounding_box(refs[i]);
  }
  for (std::size_t j = 0; j < dets.size(); ++j) {
    det_area[j] = polygon_area(dets[j]);
    det_box[j] = bounding_box(dets[j]);
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (!ref_box[i].intersects(det_box[j])) continue;
      const double inter = intersection_area(refs[i], dets[j]);
      if (inter <= 0.0) continue;
      if (ref_area[i] > 0.0 && inter / ref_area[i] > 0.5) rep.ref_matched[i] = true;
      if (det_area[j] > 0.0 && inter / det_area[j] > 0.5) rep.det_matched[j] = true;
      const double uni = ref_area[i] + det_area[j] - inter;
      if (uni > 0.0) rep.ref_best_iou[i] = std::max(rep.ref_best_iou[i], inter / uni);
    }
  }
  const auto n_ref = static_cast<std::size_t>(std::count(rep.ref_matched.begin(), rep.ref_matched.end(), true));
  const auto n_det = static_cast<std::size_t>(std::count(rep.det_matched.begin(), rep.det_matched.end(), true));
  rep.precision = ratio(n_det, dets.size());
  rep.recall = ratio(n_ref, refs.size());
  if (n_ref > 0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (rep.ref_matched[i]) sum += rep.ref_best_iou[i];
    }
    rep.mean_iou_matched = sum / static_cast<double>(n_ref);
  }
  return rep;
}

Centerline ref_centerline(const Ring& ref) { return det_centerline(oriented_bbox(ref)); }

Centerline det_centerline(const RectPoly& r) {
  const bool along = r.a >= r.b;
  const double len = along ? r.a : r.b;
  const Point u = direction(along ? r.rho : r.rho + 0.5 * std::numbers::pi);
  return {r.center - (0.5 * len) * u, r.center + (0.5 * len) * u};
}

double mean_projected_distance(const Centerline& r, const Centerline& d, std::size_t samples) {
  const double len = d.length();
  if (len <= 0.0 || samples == 0) return std::numeric_limits<double>::infinity();
  const Point u = (1.0 / len) * (d.p1 - d.p0);
  double sum = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = samples == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(samples - 1);
    const Point p = r.p0 + t * (r.p1 - r.p0);
    sum += point_line_distance(p, d.p0, u);
  }
  return sum / static_cast<double>(samples);
}

double projection_cover(const Centerline& r, const Centerline& d) {
  const double len = d.length();
  if (len <= 0.0) return 0.0;
  const Point u = (1.0 / len) * (d.p1 - d.p0);
  return interval_overlap(dot(r.p0 - d.p0, u), dot(r.p1 - d.p0, u), len);
}

double ref_coverage(const Centerline& r, const Centerline& d) {
  const double len = r.length();
  if (len <= 0.0) return 0.0;
  return projection_cover(d, r) / len;
}

bool lines_match(const Centerline& r, const Centerline& d, const LineMatchParams& p) {
  if (r.length() <= 0.0 || d.length() <= 0.0) return false;
  if (!(angle_deviation(line_angle(r), line_angle(d)) < p.angle_max)) return false;
  if (!(mean_projected_distance(r, d, p.samples) < p.dist_max)) return false;
  return projection_cover(r, d) >= p.cover_min * d.length();
}

LineEvalReport match_lines(const std::vector<Centerline>& refs,
                           const std::vector<Centerline>& dets,
                           const std::vector<bool>& ref_complex,
                           const std::vector<bool>& det_complex, const LineMatchParams& p) {
  LineEvalReport rep;
  rep.ref_matched.assign(refs.size(), false);
  rep.det_matched.assign(dets.size(), false);
  rep.ref_coverage.assign(refs.size(), 0.0);
  rep.ref_complex = ref_complex;
  rep.det_complex = det_complex;
  rep.ref_complex.resize(refs.size(), false);
  rep.det_complex.resize(dets.size(), false);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (!lines_match(refs[i], dets[j], p)) continue;
      rep.ref_matched[i] = true;
      rep.det_matched[j] = true;
      rep.ref_coverage[i] = std::max(rep.ref_coverage[i], ref_coverage(refs[i], dets[j]));
    }
  }
  std::size_t m_ref = 0, m_det = 0, covered = 0;
  std::size_t n_simple = 0, n_complex = 0, m_simple = 0, m_complex = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    m_ref += rep.ref_matched[i];
    covered += rep.ref_matched[i] && rep.ref_coverage[i] >= p.recall_coverage;
  }
  for (std::size_t j = 0; j < dets.size(); ++j) {
    m_det += rep.det_matched[j];
    if (rep.det_complex[j]) {
      ++n_complex;
      m_complex += rep.det_matched[j];
    } else {
      ++n_simple;
      m_simple += rep.det_matched[j];
    }
  }
  rep.precision = ratio(m_det, dets.size());
  rep.precision_simple = ratio(m_simple, n_simple);
  rep.precision_complex = ratio(m_complex, n_complex);
  rep.recall = ratio(m_ref, refs.size());
  rep.recall_at_coverage = ratio(covered, refs.size());
  if (!refs.empty() && p.curve_step > 0.0) {
    const auto steps = static_cast<std::size_t>(std::floor(1.0 / p.curve_step + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = std::min(1.0, static_cast<double>(k) * p.curve_step);
      std::size_t n = 0;
      for (std::size_t i = 0; i < refs.size(); ++i) {
        n += rep.ref_matched[i] && rep.ref_coverage[i] >= t;
      }
      rep.coverage_curve.emplace_back(t, static_cast<double>(n) / static_cast<double>(refs.size()));
    }
  }
  return rep;
}

std::vector<bool> classify_complexity(const std::vector<Ring>& refs) {
  std::vector<bool> out(refs.size(), false);
  std::vector<BBox> box(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) box[i] = bounding_box(refs[i]);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (std::size_t j = i + 1; j < refs.size(); ++j) {
      if (!box[i].intersects(box[j])) continue;
      if (intersection_area(refs[i], refs[j]) > kGeomEps) out[i] = out[j] = true;
    }
  }
  return out;
}

std::vector<bool> det_strata(const std::vector<Ring>& refs, const std::vector<bool>& ref_complex,
                             const std::vector<Ring>& dets) {
  std::vector<bool> out(dets.size(), false);
  if (refs.empty()) return out;
  std::vector<Point> ref_c(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) ref_c[i] = centroid(refs[i]);
  for (std::size_t j = 0; j < dets.size(); ++j) {
    double best_area = 0.0;
    std::size_t best = refs.size();
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const double a = intersection_area(refs[i], dets[j]);
      if (a > best_area) {
        best_area = a;
        best = i;
      }
    }
    if (best == refs.size()) {
      const Point c = centroid(dets[j]);
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < refs.size(); ++i) {
        const double d = norm(ref_c[i] - c);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
    }
    out[j] = ref_complex[best];
  }
  return out;
}

LineEvalReport evaluate_lines(const std::vector<Ring>& refs, const std::vector<RectPoly>& dets,
                              const LineMatchParams& params) {
  std::vector<Centerline> ref_lines, det_lines;
  std::vector<Ring> det_rings;
  for (const Ring& r : refs) ref_lines.push_back(ref_centerline(r));
  for (const RectPoly& d : dets) {
    det_lines.push_back(det_centerline(d));
    det_rings.push_back(decode_rect(d));
  }
  const std::vector<bool> ref_complex = classify_complexity(refs);
  return match_lines(ref_lines, det_lines, ref_complex, det_strata(refs, ref_complex, det_rings),
                     params);
}

std::string report_json(const PolygonEvalReport& r) {
  json j;
  j["mode"] = "poly";
  j["refs"] = r.ref_matched.size();
  j["dets"] = r.det_matched.size();
  j["precision"] = opt(r.precision);
  j["recall"] = opt(r.recall);
  j["mean_iou_matched"] = opt(r.mean_iou_matched);
  j["ref_matched"] = r.ref_matched;
  j["det_matched"] = r.det_matched;
  j["ref_best_iou"] = r.ref_best_iou;
  return j.dump(2) + "\n";
}

std::string report_json(const LineEvalReport& r) {
  json j;
  j["mode"] = "line";
  j["refs"] = r.ref_matched.size();
  j["dets"] = r.det_matched.size();
  j["precision"] = opt(r.precision);
  j["precision_simple"] = opt(r.precision_simple);
  j["precision_complex"] = opt(r.precision_complex);
  j["recall"] = opt(r.recall);
  j["recall_at_coverage"] = opt(r.recall_at_coverage);
  json curve = json::array();
  for (const auto& [t, f] : r.coverage_curve) curve.push_back({{"threshold", t}, {"fraction", f}});
  j["coverage_curve"] = std::move(curve);
  j["ref_matched"] = r.ref_matched;
  j["det_matched"] = r.det_matched;
  j["ref_coverage"] = r.ref_coverage;
  j["ref_complex"] = r.ref_complex;
  j["det_complex"] = r.det_complex;
  return j.dump(2) + "\n";
}

}  // namespace stemseg

#include "contour.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <utility>

namespace stemseg {

namespace {

// Padded sample lattice: samples sx in [-1, W], sy in [-1, H]; out-of-raster
// samples read as 0 so every contour closes.
class SampleGrid {
 public:
  SampleGrid(const ProbabilityRaster& r, double q) : r_(r), q_(q), stride_(r.width + 2) {}

  double value(long sx, long sy) const {
    if (sx < 0 || sy < 0 || sx >= static_cast<long>(r_.width) ||
        sy >= static_cast<long>(r_.height)) {
      return 0.0;
    }
    return r_.at(static_cast<std::uint32_t>(sx), static_cast<std::uint32_t>(sy));
  }
  bool fg(long sx, long sy) const { return value(sx, sy) >= q_; }

  long index(long sx, long sy) const { return (sy + 1) * stride_ + (sx + 1); }
  long h_edge(long sx, long sy) const { return 2 * index(sx, sy); }
  long v_edge(long sx, long sy) const { return 2 * index(sx, sy) + 1; }

  // Crossing point on an edge, always interpolated from its left/top sample
  // so both adjacent cells agree bit-for-bit.
  Point crossing(long edge) const {
    const long idx = edge / 2;
    const long sx = idx % stride_ - 1;
    const long sy = idx / stride_ - 1;
    const bool horizontal = (edge % 2) == 0;
    const long tx = horizontal ? sx + 1 : sx;
    const long ty = horizontal ? sy : sy + 1;
    const double va = value(sx, sy);
    const double vb = value(tx, ty);
    const double t = std::clamp((q_ - va) / (vb - va), 0.0, 1.0);
    const Point a{sx + 0.5, sy + 0.5};
    const Point b{tx + 0.5, ty + 0.5};
    return a + t * (b - a);
  }

 private:
  const ProbabilityRaster& r_;
  double q_;
  long stride_;
};

void dp_chain(const Ring& pts, std::size_t first, std::size_t last, double eps,
              std::vector<char>& keep) {
  const std::size_t n = pts.size();
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    const auto [i0, i1] = stack.back();
    stack.pop_back();
    const Point a = pts[i0 % n];
    const Point b = pts[i1 % n];
    double best = -1.0;
    std::size_t best_k = i0;
    for (std::size_t k = i0 + 1; k < i1; ++k) {
      const double d = point_segment_distance(pts[k % n], a, b);
      if (d > best) {
        best = d;
        best_k = k;
      }
    }
    if (best > eps) {
      keep[best_k % n] = 1;
      stack.emplace_back(i0, best_k);
      stack.emplace_back(best_k, i1);
    }
  }
}

}  // namespace

std::vector<Ring> extract_level_contours(const ProbabilityRaster& raster, double q) {
  const SampleGrid g(raster, q);
  const long w = raster.width;
  const long h = raster.height;

  // Directed segments keyed by their start edge; foreground lies to the left.
  std::unordered_map<long, long> next;
  std::vector<long> starts;

  for (long cy = -1; cy < h; ++cy) {
    for (long cx = -1; cx < w; ++cx) {
      // Corners in walk order: top-left, top-right, bottom-right, bottom-left.
      const bool f[4] = {g.fg(cx, cy), g.fg(cx + 1, cy), g.fg(cx + 1, cy + 1),
                         g.fg(cx, cy + 1)};
      const int code = f[0] | (f[1] << 1) | (f[2] << 2) | (f[3] << 3);
      if (code == 0 || code == 15) continue;

      const long edge[4] = {g.h_edge(cx, cy), g.v_edge(cx + 1, cy), g.h_edge(cx, cy + 1),
                            g.v_edge(cx, cy)};
      int exits[2];
      int entries[2];
      int n_exit = 0;
      int n_entry = 0;
      for (int k = 0; k < 4; ++k) {
        const bool a = f[k];
        const bool b = f[(k + 1) % 4];
        if (a && !b) exits[n_exit++] = k;
        if (!a && b) entries[n_entry++] = k;
      }

      auto link = [&](int from, int to) {
        next.emplace(edge[from], edge[to]);
        starts.push_back(edge[from]);
      };

      if (n_exit == 1) {
        link(exits[0], entries[0]);
      } else {
        const double center = 0.25 * (g.value(cx, cy) + g.value(cx + 1, cy) +
                                      g.value(cx + 1, cy + 1) + g.value(cx, cy + 1));
        const bool joined = center >= q;
        for (int e = 0; e < 2; ++e) {
          const int k = exits[e];
          // Joined foreground: pair each exit with the following entry,
          // cutting off a background corner. Otherwise the preceding entry.
          const int target = joined ? (k + 1) % 4 : (k + 3) % 4;
          link(k, target);
        }
      }
    }
  }

  std::vector<Ring> rings;
  std::unordered_map<long, bool> used;
  used.reserve(starts.size());
  for (long s : starts) {
    if (used[s]) continue;
    Ring ring;
    long cur = s;
    while (!used[cur]) {
      used[cur] = true;
      const Point p = g.crossing(cur);
      if (ring.empty() || norm(p - ring.back()) > 1e-12) ring.push_back(p);
      cur = next.at(cur);
    }
    while (ring.size() > 1 && norm(ring.front() - ring.back()) <= 1e-12) ring.pop_back();
    if (ring.size() >= 3 && signed_area(ring) != 0.0) rings.push_back(std::move(ring));
  }
  return rings;
}

Ring simplify_polygon(const Ring& ring, double eps_d) {
  const std::size_t n = ring.size();
  if (n < 3) return {};
  if (eps_d <= 0.0) return ring;

  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = norm(ring[i] - ring[0]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  if (far_d <= 0.0) return {};

  std::vector<char> keep(n, 0);
  keep[0] = 1;
  keep[far] = 1;
  dp_chain(ring, 0, far, eps_d, keep);
  dp_chain(ring, far, n, eps_d, keep);

  Ring out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(ring[i]);
  }
  if (out.size() < 3 || signed_area(out) == 0.0) return {};
  return out;
}

TargetRegion make_region(Ring outer, std::vector<Ring> holes) {
  TargetRegion r;
  r.bbox = bounding_box(outer);
  r.area = polygon_area(outer);
  for (const Ring& h : holes) r.area -= polygon_area(h);
  r.outer = std::move(outer);
  r.holes = std::move(holes);
  return r;
}

TargetRegionSet build_regions(const std::vector<Ring>& rings) {
  std::vector<std::size_t> outers;
  std::vector<std::size_t> holes;
  for (std::size_t i = 0; i < rings.size(); ++i) {
    (signed_area(rings[i]) > 0.0 ? outers : holes).push_back(i);
  }

  std::vector<std::vector<Ring>> assigned(outers.size());
  for (std::size_t h : holes) {
    const Ring& hole = rings[h];
    std::size_t best = outers.size();
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < outers.size(); ++o) {
      const Ring& outer = rings[outers[o]];
      const double area = polygon_area(outer);
      if (area >= best_area) continue;
      const bool inside = std::any_of(hole.begin(), hole.end(),
                                      [&](Point p) { return point_in_ring(p, outer); });
      if (inside) {
        best = o;
        best_area = area;
      }
    }
    if (best == outers.size()) {
      throw MalformedContours("hole ring without an enclosing outer ring");
    }
    assigned[best].push_back(hole);
  }

  TargetRegionSet set;
  for (std::size_t o = 0; o < outers.size(); ++o) {
    TargetRegion r = make_region(rings[outers[o]], std::move(assigned[o]));
    if (r.area > 0.0) set.regions.push_back(std::move(r));
  }
  std::stable_sort(set.regions.begin(), set.regions.end(),
                   [](const TargetRegion& a, const TargetRegion& b) { return a.area > b.area; });
  return set;
}

TargetRegionSet extract_regions(const ProbabilityRaster& raster, double q, double eps_d,
                                double min_area) {
  std::vector<Ring> simplified;
  for (const Ring& ring : extract_level_contours(raster, q)) {
    Ring s = simplify_polygon(ring, eps_d);
    if (!s.empty()) simplified.push_back(std::move(s));
  }
  TargetRegionSet set = build_regions(simplified);
  std::erase_if(set.regions, [&](const TargetRegion& r) { return r.area < min_area; });
  return set;
}

}  // namespace stemseg

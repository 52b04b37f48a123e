#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace stemseg {

using json = nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double draw(std::mt19937_64& rng, Range r) {
  if (r.hi <= r.lo) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

RectPoly grown(const RectPoly& r, double by) { return {r.a + by, r.b + by, r.center, r.rho}; }

class Placer {
 public:
  Placer(const SynthSceneSpec& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {
    x0_ = spec.origin_x + spec.margin_m;
    y0_ = spec.origin_y + spec.margin_m;
    x1_ = spec.origin_x + spec.width * spec.gsd - spec.margin_m;
    y1_ = spec.origin_y + spec.height * spec.gsd - spec.margin_m;
    if (!(x1_ > x0_ && y1_ > y0_)) throw std::invalid_argument("synth: margin exceeds raster");
  }

  Point random_center() {
    return {std::uniform_real_distribution<double>(x0_, x1_)(rng_),
            std::uniform_real_distribution<double>(y0_, y1_)(rng_)};
  }

  RectPoly random_stem(Point center) {
    const double a = draw(rng_, spec_.length_m);
    const double b = draw(rng_, spec_.width_m);
    const double rho = canonical_angle(draw(rng_, spec_.angle_deg) * kDeg);
    return {a, b, center, rho};
  }

  bool fits(const std::vector<RectPoly>& group) const {
    for (const RectPoly& r : group) {
      for (const Point& p : decode_rect(r)) {
        if (p.x < x0_ || p.x > x1_ || p.y < y0_ || p.y > y1_) return false;
      }
      for (const RectPoly& e : placed_) {
        if (rect_rect_area(grown(r, spec_.spacing_m), grown(e, spec_.spacing_m)) > 0.0) {
          return false;
        }
      }
    }
    return true;
  }

  void commit(const std::vector<RectPoly>& group) {
    placed_.insert(placed_.end(), group.begin(), group.end());
  }

  std::vector<RectPoly> take() { return std::move(placed_); }

 private:
  const SynthSceneSpec& spec_;
  std::mt19937_64& rng_;
  double x0_, y0_, x1_, y1_;
  std::vector<RectPoly> placed_;
};

std::vector<RectPoly> make_group(const SynthSceneSpec& spec, Placer& placer, std::mt19937_64& rng,
                                 std::size_t count) {
  std::vector<RectPoly> group;
  const Point c = placer.random_center();
  switch (spec.mode) {
    case OverlapMode::Disjoint:
      group.push_back(placer.random_stem(c));
      break;
    case OverlapMode::CrossingPairs: {
      RectPoly s1 = placer.random_stem(c);
      RectPoly s2 = placer.random_stem(c);
      s2.rho = canonical_angle(s1.rho + 0.5 * std::numbers::pi);
      // Both stems pass through c; shift each along its own axis.
      std::uniform_real_distribution<double> f(-0.3, 0.3);
      s1.center = c + (f(rng) * s1.a) * direction(s1.rho);
      s2.center = c + (f(rng) * s2.a) * direction(s2.rho);
      group.push_back(s1);
      if (count > 1) group.push_back(s2);
      break;
    }
    case OverlapMode::Clusters: {
      std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
      std::uniform_real_distribution<double> rad(0.0, 1.0);
      for (std::size_t k = 0; k < count; ++k) {
        const Point off = (spec.cluster_radius_m * std::sqrt(rad(rng))) * direction(ang(rng));
        group.push_back(placer.random_stem(c + off));
      }
      break;
    }
  }
  return group;
}

void validate(const SynthSceneSpec& s) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("synth: ") + msg);
  };
  require(s.width > 0 && s.height > 0, "raster size must be positive");
  require(s.gsd > 0.0 && std::isfinite(s.gsd), "gsd must be positive");
  require(s.length_m.lo > 0.0 && s.length_m.hi >= s.length_m.lo, "invalid length range");
  require(s.width_m.lo > 0.0 && s.width_m.hi >= s.width_m.lo, "invalid width range");
  require(s.angle_deg.hi >= s.angle_deg.lo, "invalid angle range");
  require(s.p_in >= 0.0 && s.p_in <= 1.0 && s.p_out >= 0.0 && s.p_out <= 1.0,
          "probabilities must lie in [0, 1]");
  require(s.p_out < s.p_in, "p_out must be below p_in");
  require(s.noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(s.gap_probability >= 0.0 && s.gap_probability <= 1.0,
          "gap_probability must lie in [0, 1]");
  require(s.gap_width_m >= 0.0 && s.spacing_m >= 0.0 && s.margin_m >= 0.0,
          "distances must be >= 0");
  require(s.cluster_size >= 1, "cluster_size must be >= 1");
}

Range read_range(const json& j, const char* key, Range def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw std::invalid_argument(std::string("synth spec: ") + key + " must be [lo, hi]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

std::vector<Ring> truth_rings(const std::vector<RectPoly>& truth) {
  std::vector<Ring> out;
  out.reserve(truth.size());
  for (const RectPoly& r : truth) out.push_back(decode_rect(r));
  return out;
}

SynthScene generate_scene(const SynthSceneSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  Placer placer(spec, rng);

  const std::size_t per_group = spec.mode == OverlapMode::Disjoint        ? 1
                                : spec.mode == OverlapMode::CrossingPairs ? 2
                                                                          : spec.cluster_size;
  std::size_t remaining = spec.stems;
  while (remaining > 0) {
    const std::size_t count = std::min(per_group, remaining);
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      std::vector<RectPoly> group = make_group(spec, placer, rng, count);
      if (placer.fits(group)) {
        placer.commit(group);
        placed = true;
      }
    }
    if (!placed) throw std::invalid_argument("synth: could not place all stems; enlarge the raster");
    remaining -= count;
  }

  SynthScene scene;
  scene.truth = placer.take();
  ProbabilityRaster& r = scene.raster;
  r.width = spec.width;
  r.height = spec.height;
  r.gsd = spec.gsd;
  r.origin_x = spec.origin_x;
  r.origin_y = spec.origin_y;
  const std::size_t n_pix = static_cast<std::size_t>(r.width) * r.height;

  std::vector<std::uint8_t> inside(n_pix, 0);
  std::vector<std::uint8_t> gap(n_pix, 0);
  auto pixel_world = [&](std::uint32_t col, std::uint32_t row) {
    return Point{spec.origin_x + (col + 0.5) * spec.gsd, spec.origin_y + (row + 0.5) * spec.gsd};
  };
  auto for_pixels = [&](const RectPoly& rect, auto&& fn) {
    const BBox b = rect_bbox(rect);
    const auto lo = [&](double v, double o, std::uint32_t n) {
      return static_cast<std::uint32_t>(std::clamp(std::floor((v - o) / spec.gsd), 0.0, double(n)));
    };
    const auto hi = [&](double v, double o, std::uint32_t n) {
      return static_cast<std::uint32_t>(std::clamp(std::ceil((v - o) / spec.gsd), 0.0, double(n)));
    };
    for (std::uint32_t row = lo(b.min_y, spec.origin_y, r.height);
         row < hi(b.max_y, spec.origin_y, r.height); ++row) {
      for (std::uint32_t col = lo(b.min_x, spec.origin_x, r.width);
           col < hi(b.max_x, spec.origin_x, r.width); ++col) {
        const Point p = pixel_world(col, row);
        if (point_in_rect(p, rect)) fn(static_cast<std::size_t>(row) * r.width + col, p);
      }
    }
  };
  for (const RectPoly& t : scene.truth) {
    for_pixels(t, [&](std::size_t idx, Point) { inside[idx] = 1; });
  }

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t k = 0; k < scene.truth.size(); ++k) {
    const RectPoly& t = scene.truth[k];
    if (!(u01(rng) < spec.gap_probability)) continue;
    const double pos = (u01(rng) - 0.5) * 0.5 * t.a;
    const Point u = direction(t.rho);
    for_pixels(t, [&](std::size_t idx, Point p) {
      if (std::abs(dot(p - t.center, u) - pos) >= 0.5 * spec.gap_width_m) return;
      for (std::size_t o = 0; o < scene.truth.size(); ++o) {
        if (o != k && point_in_rect(p, scene.truth[o])) return;
      }
      gap[idx] = 1;
    });
  }

  r.values.resize(n_pix);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n_pix; ++i) {
    double v = inside[i] && !gap[i] ? spec.p_in : spec.p_out;
    if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
    r.values[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return scene;
}

SynthSceneSpec parse_scene_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synth spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("synth spec must be a JSON object");
  static const std::set<std::string> allowed{
      "width",       "height",        "gsd",         "origin_x",        "origin_y",
      "stems",       "length_m",      "width_m",     "angle_deg",       "mode",
      "p_in",        "p_out",         "noise_sigma", "gap_probability", "gap_width_m",
      "spacing_m",   "margin_m",      "cluster_size", "cluster_radius_m", "seed"};
  for (const auto& [key, v] : j.items()) {
    if (!allowed.contains(key)) throw std::invalid_argument("unknown synth spec key " + key);
  }
  SynthSceneSpec s;
  try {
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.gsd = j.value("gsd", s.gsd);
    s.origin_x = j.value("origin_x", s.origin_x);
    s.origin_y = j.value("origin_y", s.origin_y);
    s.stems = j.value("stems", s.stems);
    s.p_in = j.value("p_in", s.p_in);
    s.p_out = j.value("p_out", s.p_out);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.gap_probability = j.value("gap_probability", s.gap_probability);
    s.gap_width_m = j.value("gap_width_m", s.gap_width_m);
    s.spacing_m = j.value("spacing_m", s.spacing_m);
    s.margin_m = j.value("margin_m", s.margin_m);
    s.cluster_size = j.value("cluster_size", s.cluster_size);
    s.cluster_radius_m = j.value("cluster_radius_m", s.cluster_radius_m);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synth spec: ") + e.what());
  }
  s.length_m = read_range(j, "length_m", s.length_m);
  s.width_m = read_range(j, "width_m", s.width_m);
  s.angle_deg = read_range(j, "angle_deg", s.angle_deg);
  if (j.contains("mode")) {
    const std::string m = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
    if (m == "disjoint") s.mode = OverlapMode::Disjoint;
    else if (m == "crossing") s.mode = OverlapMode::CrossingPairs;
    else if (m == "clusters") s.mode = OverlapMode::Clusters;
    else throw std::invalid_argument("synth spec: mode must be disjoint, crossing or clusters");
  }
  validate(s);
  return s;
}

SynthSceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open synth spec " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str());
}

TrainingSet synth_training_set(const SynthSceneSpec& spec, std::size_t n_shapes,
                               std::size_t n_pairs) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  TrainingSet out;
  for (std::size_t i = 0; i < n_shapes; ++i) {
    out.shapes.push_back({draw(rng, spec.length_m), draw(rng, spec.width_m)});
  }
  auto stem = [&](Point c) {
    return RectPoly{draw(rng, spec.length_m), draw(rng, spec.width_m), c,
                    canonical_angle(u01(rng) * std::numbers::pi)};
  };
  for (std::size_t k = 0; k < n_pairs; ++k) {
    RectPoly r1, r2;
    const bool positive = k % 2 == 0;
    if (positive) {
      const RectPoly full = stem({0.0, 0.0});
      const double split = (0.25 + 0.5 * u01(rng)) * full.a;
      const double g = 0.2 + 0.8 * u01(rng);
      const double len1 = std::max(0.3, split - 0.5 * g);
      const double len2 = std::max(0.3, full.a - split - 0.5 * g);
      const Point u = direction(full.rho);
      const Point v = direction(full.rho + 0.5 * std::numbers::pi);
      const double lat1 = 0.05 * n01(rng), lat2 = 0.05 * n01(rng);
      r1 = {len1, full.b, (-0.5 * full.a + 0.5 * len1) * u + lat1 * v,
            canonical_angle(full.rho + 2.0 * kDeg * n01(rng))};
      r2 = {len2, full.b, (0.5 * full.a - 0.5 * len2) * u + lat2 * v,
            canonical_angle(full.rho + 2.0 * kDeg * n01(rng))};
    } else {
      r1 = stem({0.0, 0.0});
      if (u01(rng) < 0.5) {
        // Near-parallel neighbour offset sideways.
        r2 = stem({0.0, 0.0});
        r2.rho = canonical_angle(r1.rho + 3.0 * kDeg * n01(rng));
        const double side = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.8 + 2.2 * u01(rng));
        const double along = (u01(rng) - 0.5) * r1.a;
        r2.center = along * direction(r1.rho) + side * direction(r1.rho + 0.5 * std::numbers::pi);
      } else {
        const Point off = (3.0 * std::sqrt(u01(rng))) * direction(2.0 * std::numbers::pi * u01(rng));
        r2 = stem(off);
      }
    }
    out.pairs.push_back({pair_features(r1, r2, 1.0), positive});
  }
  return out;
}

}  // namespace stemseg

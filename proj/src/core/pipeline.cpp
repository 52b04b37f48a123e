#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "contour.hpp"

namespace stemseg {

using json = nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key " + where + "." + key);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    out = v.get<double>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
      throw ConfigError(where + "." + key + " must be a non-negative integer");
    }
    out = v.get<T>();
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct RegionOutput {
  std::vector<Detection> detections;
  std::vector<RegionTraceRow> trace;
  std::string diagnostic;
};

RegionOutput process_region(const ProbabilityRaster& raster, const Priors& priors,
                            const PipelineConfig& config, const TargetRegion& region,
                            std::size_t region_id, bool record_trace) {
  RegionOutput out;
  const double gsd = raster.gsd;
  const std::uint64_t seed = region_seed(config.seed, region_id);
  const ShapeBounds bounds = shape_bounds(config, gsd);

  const std::vector<LineSegment> segments =
      detect_lines(region_pixels(raster, region, config.q), sac_params(config, gsd), seed);
  if (segments.empty()) return out;
  const ModelState init =
      init_shapes(segments, default_width_px(config, gsd), w0_px(config, gsd), bounds);

  EnergyContext ctx;
  ctx.region = &region;
  ctx.priors = &priors;
  ctx.config = config.energy;
  ctx.config.merge_threshold = config.merge_threshold.value_or(priors.merge_threshold);
  ctx.gsd = gsd;

  AnnealConfig ac = config.anneal;
  ac.seed = seed;
  AnnealResult res = anneal(init, ctx, ac, record_trace);

  for (const TraceRow& row : res.trace) out.trace.push_back({region_id, row});
  const double tol = 1e-9;
  for (std::size_t i = 0; i < res.state.size(); ++i) {
    const Shape& s = res.state.shapes[i];
    if (!s.active()) continue;
    Detection d;
    d.rect_px = s.rect();
    d.length_m = s.a * gsd;
    d.width_m = s.b * gsd;
    if (d.length_m < config.min_length_m - tol || d.length_m > config.max_length_m + tol) continue;
    d.angle_deg = canonical_angle(s.rho) / kDeg;
    for (const Point& p : decode_rect(d.rect_px)) d.polygon.push_back(pixel_to_world(raster, p));
    d.region_id = region_id;
    d.shape_index = i;
    d.energy = res.energy;
    out.detections.push_back(std::move(d));
  }
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  const std::string root = "config";
  check_keys(j, root,
             {"q", "eps_d", "sac", "min_length_m", "max_length_m", "max_width_m", "min_width_m",
              "energy", "anneal", "workers", "seed"});
  read(j, "q", c.q, root);
  read(j, "eps_d", c.eps_d, root);
  read(j, "min_length_m", c.min_length_m, root);
  read(j, "max_length_m", c.max_length_m, root);
  read(j, "max_width_m", c.max_width_m, root);
  read(j, "min_width_m", c.min_width_m, root);
  read(j, "workers", c.workers, root);
  read(j, "seed", c.seed, root);

  if (j.contains("sac")) {
    const json& s = j["sac"];
    const std::string w = "sac";
    check_keys(s, w,
               {"d_sac_m", "l_sac_m", "n_sac", "hypotheses_per_round", "max_rounds",
                "default_width_m", "w0_m"});
    read(s, "d_sac_m", c.sac.d_sac_m, w);
    read(s, "l_sac_m", c.sac.l_sac_m, w);
    read(s, "n_sac", c.sac.n_sac, w);
    read(s, "hypotheses_per_round", c.sac.hypotheses_per_round, w);
    read(s, "max_rounds", c.sac.max_rounds, w);
    read(s, "default_width_m", c.sac.default_width_m, w);
    read(s, "w0_m", c.sac.w0_m, w);
  }
  if (j.contains("energy")) {
    const json& e = j["energy"];
    const std::string w = "energy";
    check_keys(e, w,
               {"gamma_s", "gamma_c", "pi_p", "sigma_o_deg", "epsilon", "merge_threshold"});
    read(e, "gamma_s", c.energy.gamma_s, w);
    read(e, "gamma_c", c.energy.gamma_c, w);
    read(e, "pi_p", c.energy.pi_p, w);
    double sigma_deg = c.energy.sigma_o / kDeg;
    read(e, "sigma_o_deg", sigma_deg, w);
    c.energy.sigma_o = sigma_deg * kDeg;
    read(e, "epsilon", c.energy.epsilon, w);
    if (e.contains("merge_threshold")) {
      double t = 0.0;
      read(e, "merge_threshold", t, w);
      c.merge_threshold = t;
    }
  }
  if (j.contains("anneal")) {
    const json& a = j["anneal"];
    const std::string w = "anneal";
    check_keys(a, w,
               {"restarts", "iters_per_temp", "cooling", "t0", "t_min_ratio", "trace_stride",
                "audit_interval", "steps"});
    read(a, "restarts", c.anneal.restarts, w);
    read(a, "iters_per_temp", c.anneal.iters_per_temp, w);
    read(a, "cooling", c.anneal.cooling, w);
    read(a, "t0", c.anneal.t0, w);
    read(a, "t_min_ratio", c.anneal.t_min_ratio, w);
    read(a, "trace_stride", c.anneal.trace_stride, w);
    read(a, "audit_interval", c.anneal.audit_interval, w);
    if (a.contains("steps")) {
      const json& s = a["steps"];
      const std::string ws = "anneal.steps";
      check_keys(s, ws, {"length_px", "width_px", "angle_deg", "axis_px", "x_px", "y_px"});
      StepBounds& st = c.anneal.steps;
      read(s, "length_px", st.length, ws);
      read(s, "width_px", st.width, ws);
      double angle_deg = st.angle / kDeg;
      read(s, "angle_deg", angle_deg, ws);
      st.angle = angle_deg * kDeg;
      read(s, "axis_px", st.axis, ws);
      read(s, "x_px", st.x, ws);
      read(s, "y_px", st.y, ws);
    }
  }
  validate(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const PipelineConfig& c) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.q > 0.0 && c.q < 1.0, "q must lie in (0, 1)");
  require(c.eps_d >= 0.0 && std::isfinite(c.eps_d), "eps_d must be >= 0");
  require(c.min_length_m > 0.0 && c.max_length_m >= c.min_length_m,
          "length bounds must satisfy 0 < min_length_m <= max_length_m");
  require(c.max_width_m > 0.0, "max_width_m must be > 0");
  require(c.min_width_m >= 0.0 && c.min_width_m <= c.max_width_m,
          "min_width_m must lie in [0, max_width_m]");
  require(c.sac.d_sac_m > 0.0 && c.sac.l_sac_m > 0.0, "SAC distances must be > 0");
  require(c.sac.n_sac >= 2, "sac.n_sac must be >= 2");
  require(c.sac.default_width_m > 0.0 && c.sac.default_width_m <= c.max_width_m,
          "sac.default_width_m must lie in (0, max_width_m]");
  require(c.sac.w0_m > 0.0, "sac.w0_m must be > 0");
  require(c.energy.gamma_s >= 0.0 && c.energy.gamma_c >= 0.0, "energy weights must be >= 0");
  require(c.energy.pi_p >= 0.0 && c.energy.pi_p <= 1.0, "energy.pi_p must lie in [0, 1]");
  require(c.energy.sigma_o > 0.0, "energy.sigma_o_deg must be > 0");
  require(c.energy.epsilon > 0.0 && c.energy.epsilon < 1.0, "energy.epsilon must lie in (0, 1)");
  require(!c.merge_threshold || (*c.merge_threshold >= 0.0 && *c.merge_threshold <= 1.0),
          "energy.merge_threshold must lie in [0, 1]");
  require(c.workers >= 1, "workers must be >= 1");
  try {
    validate(c.anneal);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ShapeBounds shape_bounds(const PipelineConfig& c, double gsd) {
  ShapeBounds b;
  b.a_lo = std::max(1, static_cast<int>(std::ceil(c.min_length_m / gsd - 1e-9)));
  b.a_hi = std::max(b.a_lo, static_cast<int>(std::floor(c.max_length_m / gsd + 1e-9)));
  b.b_lo = 0;
  b.b_hi = std::max(1, static_cast<int>(std::ceil(c.max_width_m / gsd - 1e-9)));
  return b;
}

SacParams sac_params(const PipelineConfig& c, double gsd) {
  SacParams p;
  p.d_sac = std::ceil(c.sac.d_sac_m / gsd - 1e-9);
  p.l_sac = c.sac.l_sac_m / gsd;
  p.n_sac = c.sac.n_sac;
  p.hypotheses_per_round = c.sac.hypotheses_per_round;
  p.max_rounds = c.sac.max_rounds;
  return p;
}

int default_width_px(const PipelineConfig& c, double gsd) {
  const ShapeBounds b = shape_bounds(c, gsd);
  return std::clamp(static_cast<int>(std::lround(c.sac.default_width_m / gsd)), 1, b.b_hi);
}

double w0_px(const PipelineConfig& c, double gsd) {
  return std::max(1.0, std::round(c.sac.w0_m / gsd));
}

std::uint64_t region_seed(std::uint64_t master, std::size_t region_id) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(region_id)));
}

Point pixel_to_world(const ProbabilityRaster& r, Point px) {
  return {r.origin_x + px.x * r.gsd, r.origin_y + px.y * r.gsd};
}

std::vector<Point> region_pixels(const ProbabilityRaster& raster, const TargetRegion& region,
                                 double q) {
  std::vector<Point> out;
  const auto clamp_index = [](double v, std::uint32_t n) {
    return static_cast<std::uint32_t>(std::clamp(v, 0.0, static_cast<double>(n)));
  };
  const std::uint32_t c0 = clamp_index(std::floor(region.bbox.min_x), raster.width);
  const std::uint32_t c1 = clamp_index(std::ceil(region.bbox.max_x), raster.width);
  const std::uint32_t r0 = clamp_index(std::floor(region.bbox.min_y), raster.height);
  const std::uint32_t r1 = clamp_index(std::ceil(region.bbox.max_y), raster.height);
  for (std::uint32_t row = r0; row < r1; ++row) {
    for (std::uint32_t col = c0; col < c1; ++col) {
      if (raster.at(col, row) < q) continue;
      const Point p{col + 0.5, row + 0.5};
      if (point_in_region(p, region)) out.push_back(p);
    }
  }
  return out;
}

PipelineResult run(const ProbabilityRaster& raster, const Priors& priors,
                   const PipelineConfig& config, bool record_trace) {
  validate(raster);
  validate(config);
  PipelineResult result;
  const double gsd = raster.gsd;
  const double min_area = config.min_length_m * config.min_width_m / (gsd * gsd);
  const TargetRegionSet regions = extract_regions(raster, config.q, config.eps_d, min_area);
  result.region_count = regions.regions.size();
  if (regions.regions.empty()) {
    result.diagnostics.push_back("no target regions above q; empty result");
    return result;
  }

  std::vector<RegionOutput> outputs(regions.regions.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < outputs.size(); i = next++) {
      try {
        outputs[i] =
            process_region(raster, priors, config, regions.regions[i], i, record_trace);
      } catch (const std::exception& e) {
        outputs[i] = {};
        outputs[i].diagnostic = "region " + std::to_string(i) + " skipped: " + e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(config.workers, outputs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (RegionOutput& o : outputs) {
    if (!o.diagnostic.empty()) result.diagnostics.push_back(std::move(o.diagnostic));
    for (Detection& d : o.detections) result.detections.push_back(std::move(d));
    for (RegionTraceRow& t : o.trace) result.trace.push_back(t);
  }
  return result;
}

const std::vector<std::string>& detection_property_order() {
  static const std::vector<std::string> order{"id",        "length_m", "width_m",   "angle_deg",
                                              "region_id", "e_data",   "e_shape",   "e_overlap",
                                              "e_collin",  "total"};
  return order;
}

std::vector<PolygonFeature> to_features(const std::vector<Detection>& detections) {
  std::vector<PolygonFeature> out;
  out.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& d = detections[i];
    PolygonFeature f;
    f.ring = d.polygon;
    f.properties = {{"id", static_cast<double>(i)},
                    {"length_m", d.length_m},
                    {"width_m", d.width_m},
                    {"angle_deg", d.angle_deg},
                    {"region_id", static_cast<double>(d.region_id)},
                    {"e_data", d.energy.e_data},
                    {"e_shape", d.energy.e_shape},
                    {"e_overlap", d.energy.e_overlap},
                    {"e_collin", d.energy.e_collin},
                    {"total", d.energy.total}};
    out.push_back(std::move(f));
  }
  return out;
}

void export_geojson(const std::vector<Detection>& detections, const std::filesystem::path& path) {
  save_geojson(to_features(detections), detection_property_order(), path);
}

void write_trace_csv(const std::vector<RegionTraceRow>& trace, std::ostream& out) {
  out << "region,restart,iteration,temperature,energy,best,accepted\n";
  char buf[64];
  auto num = [&](double v) -> const char* {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const RegionTraceRow& t : trace) {
    out << t.region << ',' << t.row.restart << ',' << t.row.iteration << ',';
    out << num(t.row.temperature) << ',';
    out << num(t.row.energy) << ',';
    out << num(t.row.best) << ',' << (t.row.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace stemseg

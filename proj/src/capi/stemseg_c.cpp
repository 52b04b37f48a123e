#include "stemseg/stemseg.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <string>

#include "contour.hpp"
#include "eval.hpp"
#include "geojson.hpp"
#include "pipeline.hpp"
#include "priors.hpp"
#include "raster.hpp"
#include "synth.hpp"

struct stemseg_raster {
  stemseg::ProbabilityRaster raster;
};
struct stemseg_priors {
  stemseg::Priors priors;
};
struct stemseg_config {
  stemseg::PipelineConfig config;
};
struct stemseg_detections {
  std::vector<stemseg::Detection> detections;
  std::vector<std::string> diagnostics;
};

namespace {

thread_local std::string g_last_error;

constexpr double kDeg = std::numbers::pi / 180.0;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

stemseg_status fail(stemseg_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
stemseg_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return STEMSEG_OK;
  } catch (const IoError& e) {
    return fail(STEMSEG_IO, e.what());
  } catch (const stemseg::FormatError& e) {
    return fail(STEMSEG_FORMAT, e.what());
  } catch (const stemseg::PriorError& e) {
    return fail(STEMSEG_FORMAT, e.what());
  } catch (const stemseg::GeoJsonError& e) {
    return fail(STEMSEG_FORMAT, e.what());
  } catch (const stemseg::MalformedContours& e) {
    return fail(STEMSEG_FORMAT, e.what());
  } catch (const stemseg::ConfigError& e) {
    return fail(STEMSEG_INVALID_ARGUMENT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(STEMSEG_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(STEMSEG_IO, e.what());
  } catch (const std::runtime_error& e) {
    return fail(STEMSEG_IO, e.what());
  } catch (const std::exception& e) {
    return fail(STEMSEG_INTERNAL, e.what());
  } catch (...) {
    return fail(STEMSEG_INTERNAL, "unknown error");
  }
}

void require_readable(const char* path, const char* what) {
  if (path == nullptr) throw std::invalid_argument(std::string(what) + " path is NULL");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + " '" + path + "'");
}

void require_path(const char* path, const char* what) {
  if (path == nullptr) throw std::invalid_argument(std::string(what) + " path is NULL");
}

// Rectangle for a detection feature: exact from its properties when present,
// otherwise the minimum-area bounding rectangle of the ring.
stemseg::RectPoly feature_rect(const stemseg::PolygonFeature& f) {
  const auto& p = f.properties;
  if (p.contains("length_m") && p.contains("width_m") && p.contains("angle_deg")) {
    stemseg::Point c{};
    for (const auto& v : f.ring) c = c + v;
    c = (1.0 / static_cast<double>(f.ring.size())) * c;
    return {p.at("length_m"), p.at("width_m"), c, p.at("angle_deg") * kDeg};
  }
  return stemseg::oriented_bbox(f.ring);
}

}  // namespace

extern "C" {

const char* stemseg_version(void) { return "0.1.0"; }

const char* stemseg_last_error(void) { return g_last_error.c_str(); }

stemseg_status stemseg_raster_load(const char* path, stemseg_raster** out) {
  if (out == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    require_readable(path, "raster");
    auto h = std::make_unique<stemseg_raster>();
    h->raster = stemseg::load_raster(path);
    *out = h.release();
  });
}

stemseg_status stemseg_raster_info_get(const stemseg_raster* raster, stemseg_raster_info* out) {
  if (raster == nullptr || out == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "NULL argument");
  const auto& r = raster->raster;
  *out = {r.width, r.height, r.gsd, r.origin_x, r.origin_y};
  return STEMSEG_OK;
}

void stemseg_raster_free(stemseg_raster* raster) { delete raster; }

stemseg_status stemseg_priors_load(const char* path, stemseg_priors** out) {
  if (out == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    require_readable(path, "priors");
    auto h = std::make_unique<stemseg_priors>();
    h->priors = stemseg::load_priors(path);
    *out = h.release();
  });
}

void stemseg_priors_free(stemseg_priors* priors) { delete priors; }

stemseg_status stemseg_config_load(const char* path, stemseg_config** out) {
  if (out == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<stemseg_config>();
    if (path != nullptr) {
      require_readable(path, "config");
      h->config = stemseg::load_config(path);
    }
    *out = h.release();
  });
}

stemseg_status stemseg_config_set_seed(stemseg_config* config, uint64_t seed) {
  if (config == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "config is NULL");
  config->config.seed = seed;
  return STEMSEG_OK;
}

stemseg_status stemseg_config_set_workers(stemseg_config* config, uint32_t workers) {
  if (config == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "config is NULL");
  if (workers == 0) return fail(STEMSEG_INVALID_ARGUMENT, "workers must be >= 1");
  config->config.workers = workers;
  return STEMSEG_OK;
}

void stemseg_config_free(stemseg_config* config) { delete config; }

stemseg_status stemseg_segment(const stemseg_raster* raster, const stemseg_priors* priors,
                               const stemseg_config* config, const char* trace_path,
                               stemseg_detections** out) {
  if (out == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  if (raster == nullptr || priors == nullptr || config == nullptr) {
    return fail(STEMSEG_INVALID_ARGUMENT, "raster, priors and config are required");
  }
  return guarded([&] {
    std::ofstream trace;
    if (trace_path != nullptr) {
      trace.open(trace_path, std::ios::binary);
      if (!trace) throw IoError(std::string("cannot open trace '") + trace_path + "'");
    }
    stemseg::PipelineResult res =
        stemseg::run(raster->raster, priors->priors, config->config, trace_path != nullptr);
    if (trace_path != nullptr) {
      stemseg::write_trace_csv(res.trace, trace);
      if (!trace) throw IoError(std::string("failed writing trace '") + trace_path + "'");
    }
    auto h = std::make_unique<stemseg_detections>();
    h->detections = std::move(res.detections);
    h->diagnostics = std::move(res.diagnostics);
    *out = h.release();
  });
}

size_t stemseg_detections_count(const stemseg_detections* d) {
  return d == nullptr ? 0 : d->detections.size();
}

stemseg_status stemseg_detections_get(const stemseg_detections* d, size_t index,
                                      stemseg_detection_info* out) {
  if (d == nullptr || out == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "NULL argument");
  if (index >= d->detections.size()) return fail(STEMSEG_INVALID_ARGUMENT, "index out of range");
  const stemseg::Detection& det = d->detections[index];
  stemseg_detection_info info{};
  for (std::size_t k = 0; k < 4 && k < det.polygon.size(); ++k) {
    info.vertices[2 * k] = det.polygon[k].x;
    info.vertices[2 * k + 1] = det.polygon[k].y;
  }
  info.length_m = det.length_m;
  info.width_m = det.width_m;
  info.angle_deg = det.angle_deg;
  info.region_id = det.region_id;
  info.e_data = det.energy.e_data;
  info.e_shape = det.energy.e_shape;
  info.e_overlap = det.energy.e_overlap;
  info.e_collin = det.energy.e_collin;
  info.total = det.energy.total;
  *out = info;
  return STEMSEG_OK;
}

size_t stemseg_detections_diagnostic_count(const stemseg_detections* d) {
  return d == nullptr ? 0 : d->diagnostics.size();
}

const char* stemseg_detections_diagnostic(const stemseg_detections* d, size_t index) {
  if (d == nullptr || index >= d->diagnostics.size()) return nullptr;
  return d->diagnostics[index].c_str();
}

stemseg_status stemseg_detections_export_geojson(const stemseg_detections* d, const char* path) {
  if (d == nullptr) return fail(STEMSEG_INVALID_ARGUMENT, "detections is NULL");
  return guarded([&] {
    require_path(path, "output");
    try {
      stemseg::export_geojson(d->detections, path);
    } catch (const stemseg::GeoJsonError& e) {
      throw IoError(e.what());
    }
  });
}

void stemseg_detections_free(stemseg_detections* d) { delete d; }

stemseg_status stemseg_train_priors(const char* shapes_csv, const char* pairs_csv,
                                    const char* out_json) {
  return guarded([&] {
    require_readable(shapes_csv, "shapes CSV");
    require_readable(pairs_csv, "pairs CSV");
    require_path(out_json, "output");
    stemseg::Priors p;
    p.shape = stemseg::fit_shape_prior(stemseg::read_shapes_csv(shapes_csv));
    p.collinearity = stemseg::fit_collinearity(stemseg::read_pairs_csv(pairs_csv));
    {
      std::ofstream probe(out_json, std::ios::binary);
      if (!probe) throw IoError(std::string("cannot write '") + out_json + "'");
    }
    stemseg::save_priors(p, out_json);
  });
}

stemseg_status stemseg_evaluate(const char* ref_geojson, const char* det_geojson,
                                const char* mode, const char* report_json) {
  return guarded([&] {
    require_readable(ref_geojson, "reference GeoJSON");
    require_readable(det_geojson, "detection GeoJSON");
    require_path(report_json, "report");
    const std::string m = mode == nullptr ? "" : mode;
    if (m != "poly" && m != "line") throw std::invalid_argument("mode must be 'poly' or 'line'");
    const auto refs = stemseg::load_geojson(ref_geojson);
    const auto dets = stemseg::load_geojson(det_geojson);
    std::vector<stemseg::Ring> ref_rings;
    for (const auto& f : refs) ref_rings.push_back(f.ring);
    std::string text;
    if (m == "poly") {
      std::vector<stemseg::Ring> det_rings;
      for (const auto& f : dets) det_rings.push_back(f.ring);
      text = stemseg::report_json(stemseg::match_polygons(ref_rings, det_rings));
    } else {
      std::vector<stemseg::RectPoly> det_rects;
      for (const auto& f : dets) det_rects.push_back(feature_rect(f));
      text = stemseg::report_json(stemseg::evaluate_lines(ref_rings, det_rects));
    }
    std::ofstream out(report_json, std::ios::binary);
    if (!out) throw IoError(std::string("cannot write '") + report_json + "'");
    out << text;
    if (!out) throw IoError(std::string("failed writing '") + report_json + "'");
  });
}

stemseg_status stemseg_synthesize(const char* spec_json, const char* out_raster,
                                  const char* out_truth_geojson, const char* out_shapes_csv,
                                  const char* out_pairs_csv) {
  return guarded([&] {
    require_readable(spec_json, "synth spec");
    require_path(out_raster, "raster output");
    require_path(out_truth_geojson, "truth output");
    const stemseg::SynthSceneSpec spec = stemseg::load_scene_spec(spec_json);
    const stemseg::SynthScene scene = stemseg::generate_scene(spec);
    stemseg::save_raster(scene.raster, out_raster);
    std::vector<stemseg::PolygonFeature> features;
    for (std::size_t i = 0; i < scene.truth.size(); ++i) {
      const stemseg::RectPoly& t = scene.truth[i];
      features.push_back({stemseg::decode_rect(t),
                          {{"id", static_cast<double>(i)},
                           {"length_m", t.a},
                           {"width_m", t.b},
                           {"angle_deg", t.rho / kDeg}}});
    }
    try {
      stemseg::save_geojson(features, {"id", "length_m", "width_m", "angle_deg"},
                            out_truth_geojson);
    } catch (const stemseg::GeoJsonError& e) {
      throw IoError(e.what());
    }
    if (out_shapes_csv != nullptr || out_pairs_csv != nullptr) {
      const stemseg::TrainingSet ts = stemseg::synth_training_set(spec, 300, 400);
      try {
        if (out_shapes_csv != nullptr) stemseg::write_shapes_csv(ts.shapes, out_shapes_csv);
        if (out_pairs_csv != nullptr) stemseg::write_pairs_csv(ts.pairs, out_pairs_csv);
      } catch (const stemseg::PriorError& e) {
        throw IoError(e.what());
      }
    }
  });
}

}  // extern "C"

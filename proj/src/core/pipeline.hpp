#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anneal.hpp"
#include "energy.hpp"
#include "geojson.hpp"
#include "model.hpp"
#include "priors.hpp"
#include "raster.hpp"
#include "sac.hpp"

namespace stemseg {

/// SAC settings in metric units; converted to px with the raster gsd.
struct SacConfig {
  double d_sac_m = 0.7;
  double l_sac_m = 2.0;
  std::size_t n_sac = 30;
  std::size_t hypotheses_per_round = 500;
  std::size_t max_rounds = 1000;
  double default_width_m = 0.4;
  double w0_m = 1.0;
};

struct PipelineConfig {
  double q = 0.5;
  double eps_d = 1.0;  // px
  SacConfig sac;
  double min_length_m = 2.0;
  double max_length_m = 30.0;
  double max_width_m = 0.7;
  double min_width_m = 0.2;  // only used for the minimum region area
  EnergyConfig energy;
  std::optional<double> merge_threshold;  // overrides the priors file when set
  AnnealConfig anneal;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing keys keep their defaults; unknown keys and out-of-range values
/// raise ConfigError.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
void validate(const PipelineConfig& config);

ShapeBounds shape_bounds(const PipelineConfig& config, double gsd);
SacParams sac_params(const PipelineConfig& config, double gsd);
int default_width_px(const PipelineConfig& config, double gsd);
double w0_px(const PipelineConfig& config, double gsd);

std::uint64_t region_seed(std::uint64_t master, std::size_t region_id);

struct Detection {
  RectPoly rect_px;
  Ring polygon;  // world coordinates
  double length_m = 0.0;
  double width_m = 0.0;
  double angle_deg = 0.0;
  std::size_t region_id = 0;
  std::size_t shape_index = 0;
  EnergyBreakdown energy;
};

struct RegionTraceRow {
  std::size_t region = 0;
  TraceRow row;
};

struct PipelineResult {
  std::vector<Detection> detections;
  std::vector<std::string> diagnostics;
  std::size_t region_count = 0;
  std::vector<RegionTraceRow> trace;
};

Point pixel_to_world(const ProbabilityRaster& raster, Point px);

/// Pixel centers inside the region with value >= q.
std::vector<Point> region_pixels(const ProbabilityRaster& raster, const TargetRegion& region,
                                 double q);

PipelineResult run(const ProbabilityRaster& raster, const Priors& priors,
                   const PipelineConfig& config, bool record_trace = false);

std::vector<PolygonFeature> to_features(const std::vector<Detection>& detections);
const std::vector<std::string>& detection_property_order();
void export_geojson(const std::vector<Detection>& detections, const std::filesystem::path& path);
void write_trace_csv(const std::vector<RegionTraceRow>& trace, std::ostream& out);

}  // namespace stemseg

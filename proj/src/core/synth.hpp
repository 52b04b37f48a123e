#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "priors.hpp"
#include "raster.hpp"

namespace stemseg {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class OverlapMode { Disjoint, CrossingPairs, Clusters };

struct SynthSceneSpec {
  std::uint32_t width = 800;
  std::uint32_t height = 800;
  double gsd = 0.1;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::size_t stems = 20;
  Range length_m{3.0, 15.0};
  Range width_m{0.3, 0.6};
  Range angle_deg{0.0, 180.0};
  OverlapMode mode = OverlapMode::Disjoint;
  double p_in = 0.95;
  double p_out = 0.02;
  double noise_sigma = 0.05;
  double gap_probability = 0.0;  // chance that a stem gets one gap band
  double gap_width_m = 0.5;
  double spacing_m = 1.0;  // minimum clearance between independent groups
  double margin_m = 1.0;   // clearance from the raster border
  std::size_t cluster_size = 3;
  double cluster_radius_m = 1.5;
  std::uint64_t seed = 0;
};

/// Truth rectangles are in world meters: a, b in meters, center in world
/// coordinates, rho the same angle as in the pixel frame.
struct SynthScene {
  ProbabilityRaster raster;
  std::vector<RectPoly> truth;
};

/// Throws std::invalid_argument for inconsistent specs or when the requested
/// stems do not fit.
SynthScene generate_scene(const SynthSceneSpec& spec);

/// Unknown keys are rejected.
SynthSceneSpec parse_scene_spec(const std::string& json_text);
SynthSceneSpec load_scene_spec(const std::filesystem::path& path);

struct TrainingSet {
  std::vector<ShapeSample> shapes;
  std::vector<LabeledPair> pairs;
};

/// Shapes drawn from the spec's length/width ranges. Positive pairs are two
/// fragments of one stem separated by a gap; negative pairs are distinct
/// nearby stems.
TrainingSet synth_training_set(const SynthSceneSpec& spec, std::size_t n_shapes,
                               std::size_t n_pairs);

std::vector<Ring> truth_rings(const std::vector<RectPoly>& truth);

}  // namespace stemseg

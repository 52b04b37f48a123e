#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stemseg/stemseg.h"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInternal = 1;

int report(stemseg_status s, const char* what) {
  if (s == STEMSEG_OK) return 0;
  std::fprintf(stderr, "stemseg %s: %s\n", what, stemseg_last_error());
  return s == STEMSEG_INTERNAL ? kExitInternal : kExitInput;
}

struct SegmentArgs {
  std::string raster, priors, config, out, trace;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> workers;
};

int run_segment(const SegmentArgs& a) {
  stemseg_raster* raster = nullptr;
  stemseg_priors* priors = nullptr;
  stemseg_config* config = nullptr;
  stemseg_detections* dets = nullptr;
  int rc = report(stemseg_raster_load(a.raster.c_str(), &raster), "segment");
  if (rc == 0) rc = report(stemseg_priors_load(a.priors.c_str(), &priors), "segment");
  if (rc == 0) rc = report(stemseg_config_load(a.config.c_str(), &config), "segment");
  if (rc == 0 && a.seed) rc = report(stemseg_config_set_seed(config, *a.seed), "segment");
  if (rc == 0 && a.workers) rc = report(stemseg_config_set_workers(config, *a.workers), "segment");
  if (rc == 0) {
    rc = report(stemseg_segment(raster, priors, config, a.trace.empty() ? nullptr : a.trace.c_str(),
                                &dets),
                "segment");
  }
  if (rc == 0) {
    for (std::size_t i = 0; i < stemseg_detections_diagnostic_count(dets); ++i) {
      std::fprintf(stderr, "warning: %s\n", stemseg_detections_diagnostic(dets, i));
    }
    rc = report(stemseg_detections_export_geojson(dets, a.out.c_str()), "segment");
  }
  if (rc == 0) std::printf("%zu detections written to %s\n", stemseg_detections_count(dets), a.out.c_str());
  stemseg_detections_free(dets);
  stemseg_config_free(config);
  stemseg_priors_free(priors);
  stemseg_raster_free(raster);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fallen stem segmentation from probability rasters"};
  app.set_version_flag("--version", stemseg_version());
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Detect stems in a probability raster");
  segment->add_option("--raster", seg.raster, "PRB1 probability raster")->required();
  segment->add_option("--priors", seg.priors, "Priors JSON")->required();
  segment->add_option("--config", seg.config, "Pipeline config JSON")->required();
  segment->add_option("--out", seg.out, "Output GeoJSON")->required();
  segment->add_option("--seed", seg.seed, "Master seed (overrides config)");
  segment->add_option("--workers", seg.workers, "Worker threads (overrides config)")
      ->check(CLI::PositiveNumber);
  segment->add_option("--trace", seg.trace, "Annealing trace CSV");

  std::string shapes, pairs, priors_out;
  auto* train = app.add_subcommand("train-priors", "Fit the shape and collinearity priors");
  train->add_option("--shapes", shapes, "CSV with length_m,width_m")->required();
  train->add_option("--pairs", pairs, "CSV with d_angle_rad,d_axis_m,label")->required();
  train->add_option("--out", priors_out, "Output priors JSON")->required();

  std::string ref, det, mode, report_path;
  auto* eval = app.add_subcommand("eval", "Score detections against references");
  eval->add_option("--ref", ref, "Reference GeoJSON")->required();
  eval->add_option("--det", det, "Detection GeoJSON")->required();
  eval->add_option("--mode", mode, "poly or line")
      ->required()
      ->check(CLI::IsMember({"poly", "line"}));
  eval->add_option("--report", report_path, "Output report JSON")->required();

  std::string spec, out_raster, out_truth, out_shapes, out_pairs;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  synth->add_option("--spec", spec, "Scene spec JSON")->required();
  synth->add_option("--out-raster", out_raster, "Output PRB1 raster")->required();
  synth->add_option("--out-truth", out_truth, "Output truth GeoJSON")->required();
  synth->add_option("--out-shapes", out_shapes, "Optional training shapes CSV");
  synth->add_option("--out-pairs", out_pairs, "Optional training pairs CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (segment->parsed()) return run_segment(seg);
  if (train->parsed()) {
    return report(stemseg_train_priors(shapes.c_str(), pairs.c_str(), priors_out.c_str()),
                  "train-priors");
  }
  if (eval->parsed()) {
    return report(stemseg_evaluate(ref.c_str(), det.c_str(), mode.c_str(), report_path.c_str()),
                  "eval");
  }
  if (synth->parsed()) {
    return report(stemseg_synthesize(spec.c_str(), out_raster.c_str(), out_truth.c_str(),
                                     out_shapes.empty() ? nullptr : out_shapes.c_str(),
                                     out_pairs.empty() ? nullptr : out_pairs.c_str()),
                  "synth");
  }
  return kExitInput;
}

#pragma once

#include <cstdint>
#include <optional>
#include <numbers>
#include <random>
#include <vector>

#include "energy.hpp"
#include "model.hpp"

namespace stemseg {

enum class MoveKind { LengthWidth, Angle, ShiftAxis, ShiftFree, MergeAbsorb };
inline constexpr std::size_t kMoveKindCount = 5;

const char* move_kind_name(MoveKind kind);

struct Move {
  MoveKind kind = MoveKind::LengthWidth;
  std::size_t target = 0;
  std::size_t partner = 0;  // MergeAbsorb only
  int da = 0;
  int db = 0;
  double drho = 0.0;  // radians
  double dt = 0.0;    // along the current axis, px
  double dx = 0.0;
  double dy = 0.0;
};

/// Maximum perturbation per move, in px and radians.
struct StepBounds {
  int length = 10;
  int width = 2;
  double angle = 5.0 * std::numbers::pi / 180.0;
  double axis = 10.0;
  double x = 3.0;
  double y = 3.0;
};

struct AnnealConfig {
  std::size_t restarts = 16;
  std::size_t iters_per_temp = 15000;
  double cooling = 0.9;
  double t0 = 0.0;  // <= 0 selects calibration
  double t_min_ratio = 1e-4;
  StepBounds steps;
  std::uint64_t seed = 0;
  std::size_t trace_stride = 100;
  std::size_t audit_interval = 1000;
  std::size_t calibration_samples = 100;
  std::size_t max_resample = 10;
  double disabled_target_mass = 0.1;
};

/// Throws std::invalid_argument when restarts == 0 or cooling is outside (0, 1).
void validate(const AnnealConfig& config);

/// Applicable move kinds for the current state, in enum order.
std::vector<MoveKind> applicable_kinds(const ModelState& state, const EnergyCache& cache,
                                       double merge_threshold);

/// Uniform choice among applicable kinds, then parameters uniform within the
/// step bounds. Invalid draws are resampled; nullopt when all tries fail.
std::optional<Move> propose_move(const ModelState& state, const EnergyCache& cache,
                                 double merge_threshold, std::mt19937_64& rng,
                                 const AnnealConfig& config);

/// Merged (u, v) pair: u spans the projections of both rectangles onto its
/// axis, v is disabled. nullopt when the merged length is below a_lo.
std::optional<std::pair<Shape, Shape>> apply_merge(const ModelState& state, std::size_t u,
                                                   std::size_t v);

/// The replacement shapes a move produces, without any validity check.
std::optional<ShapeEdit> move_to_edit(const ModelState& state, const Move& move);

double calibrate_t0(const ModelState& state, const EnergyCache& cache, const EnergyContext& ctx,
                    std::mt19937_64& rng, const AnnealConfig& config);

struct TraceRow {
  std::size_t restart = 0;
  std::size_t iteration = 0;
  double temperature = 0.0;
  double energy = 0.0;
  double best = 0.0;
  bool accepted = false;
};

struct AnnealResult {
  ModelState state;
  EnergyBreakdown energy;
  std::size_t best_restart = 0;
  std::vector<TraceRow> trace;
  std::vector<double> restart_energy;
  std::size_t iterations = 0;
  std::size_t accepted = 0;
  double max_audit = 0.0;
};

AnnealResult anneal(const ModelState& init, const EnergyContext& ctx, const AnnealConfig& config,
                    bool record_trace = false);

}  // namespace stemseg

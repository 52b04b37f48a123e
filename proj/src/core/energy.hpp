#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "model.hpp"
#include "priors.hpp"

namespace stemseg {

/// Energy coefficients. The data-fit and overlap weights are both -log(epsilon)
/// so the two area potentials share one unit.
struct EnergyConfig {
  double gamma_s = 0.3;
  double gamma_c = 0.3;
  double pi_p = 0.5;
  double sigma_o = 10.0 * std::numbers::pi / 180.0;  // radians
  double epsilon = 1e-6;
  double merge_threshold = 0.5;

  double gamma_d() const { return -std::log(epsilon); }
  double gamma_o() const { return gamma_d(); }
};

struct EnergyBreakdown {
  double e_data = 0.0;
  double e_shape = 0.0;
  double e_overlap = 0.0;
  double e_collin = 0.0;
  double total = 0.0;
};

/// Read-only inputs shared by every evaluation for one region.
struct EnergyContext {
  const TargetRegion* region = nullptr;
  const Priors* priors = nullptr;
  EnergyConfig config;
  double gsd = 1.0;
};

/// Cached unary and pairwise terms. Pair tables are dense m x m, symmetric,
/// zero on the diagonal and for any pair involving a disabled shape.
struct EnergyCache {
  std::size_t m = 0;
  double tau_area = 0.0;

  std::vector<double> unary_tau;    // |tau ∩ F_i|
  std::vector<double> rect_area;    // |F_i|
  std::vector<double> shape_nlogp;  // -log P_s(a_i, b_i)
  std::vector<BBox> bbox;

  std::vector<double> pair_rect;  // |F_i ∩ F_j|
  std::vector<double> pair_tau;   // |tau ∩ F_i ∩ F_j|
  std::vector<double> overlap;    // angle-gated |F_i ∩ F_j|
  std::vector<double> collin;     // -log(1 - P_eq(i, j))

  struct Sums {
    double unary_tau = 0.0;
    double rect_area = 0.0;
    double shape = 0.0;
    double pair_rect = 0.0;
    double pair_tau = 0.0;
    double overlap = 0.0;
    double collin = 0.0;
    std::size_t active = 0;
  } sums;

  double pair(const std::vector<double>& table, std::size_t i, std::size_t j) const {
    return table[i * m + j];
  }
};

/// Second-order inclusion-exclusion: (|phi ∩ tau|, |phi|), both lower bounds.
std::pair<double, double> approx_phi_tau(const EnergyCache& cache);

/// Normalized data-fit potential.
double data_fit(const EnergyCache& cache, double pi_p);

/// Angle-gated intersection area, in px^2 (not normalized).
double overlap_term(const RectPoly& s1, const RectPoly& s2, double sigma_o);

EnergyBreakdown breakdown(const EnergyCache& cache, const EnergyConfig& config);

struct Evaluation {
  EnergyBreakdown energy;
  EnergyCache cache;
};

/// Throws std::invalid_argument for a region without positive area.
Evaluation evaluate_full(const ModelState& state, const EnergyContext& ctx);

/// Replacement of one or two shapes (two for merge/absorb).
struct ShapeEdit {
  std::array<std::size_t, 2> index{};
  std::array<Shape, 2> shape{};
  std::size_t count = 0;

  static ShapeEdit single(std::size_t i, const Shape& s) { return {{i, 0}, {s, Shape{}}, 1}; }
  static ShapeEdit pair(std::size_t i, const Shape& si, std::size_t j, const Shape& sj) {
    return {{i, j}, {si, sj}, 2};
  }
};

/// New cache rows for an edit, computed without touching the cache.
struct PendingEdit {
  ShapeEdit edit;
  std::array<double, 2> unary_tau{};
  std::array<double, 2> rect_area{};
  std::array<double, 2> shape_nlogp{};
  std::array<BBox, 2> bbox{};
  std::array<std::vector<double>, 2> pair_rect;
  std::array<std::vector<double>, 2> pair_tau;
  std::array<std::vector<double>, 2> overlap;
  std::array<std::vector<double>, 2> collin;
  EnergyCache::Sums sums;
  EnergyBreakdown energy;
  double delta = 0.0;
};

/// True when the edit keeps integer bounds and the active-center constraint.
bool edit_is_valid(const ModelState& state, const ShapeEdit& edit);

/// Touches only the rows of the edited shapes; bbox-disjoint pairs are skipped.
void prepare_edit(const ModelState& state, const EnergyCache& cache, const EnergyContext& ctx,
                  const ShapeEdit& edit, PendingEdit& out);

void commit_edit(ModelState& state, EnergyCache& cache, const PendingEdit& pending);

/// total(after) - total(before), or nullopt when the edit is invalid.
std::optional<double> evaluate_delta(const ModelState& state, const EnergyCache& cache,
                                     const EnergyContext& ctx, const ShapeEdit& edit);

/// Worst relative discrepancy |cached - fresh| / max(1, |fresh|) over every
/// cached quantity and running sum.
double audit_cache(const ModelState& state, const EnergyContext& ctx, const EnergyCache& cache);

}  // namespace stemseg

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace stemseg {

/// Symmetric 2x2 matrix [[h11, h12], [h12, h22]].
struct Sym2 {
  double h11 = 1.0;
  double h12 = 0.0;
  double h22 = 1.0;

  double det() const { return h11 * h22 - h12 * h12; }
  bool positive_definite() const { return h11 > 0.0 && det() > 0.0; }
};

struct ShapeSample {
  double length_m = 0.0;
  double width_m = 0.0;
};

/// Gaussian kernel density over (length, width) in meters.
struct ShapePrior {
  std::vector<ShapeSample> points;
  Sym2 bandwidth;
};

struct CollinearityModel {
  double bias = 0.0;
  double w_angle = 0.0;  // per radian
  double w_dist = 0.0;   // per meter
};

struct PairFeatures {
  double d_angle = 0.0;  // radians, [0, pi/2]
  double d_axis = 0.0;   // meters
};

struct LabeledPair {
  PairFeatures features;
  bool same_object = false;
};

/// Everything the energy needs beyond geometry; serialized as priors.json.
struct Priors {
  ShapePrior shape;
  CollinearityModel collinearity;
  double merge_threshold = 0.5;
};

class PriorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDensityFloor = 1e-300;

/// log P_s(a, b), floored at log(1e-300).
double shape_log_density(const ShapePrior& prior, double length_m, double width_m);

/// Without an explicit bandwidth, uses the diagonal rule of thumb
/// H_jj = (sigma_j * n^(-1/6))^2.
ShapePrior fit_shape_prior(std::vector<ShapeSample> shapes,
                           std::optional<Sym2> bandwidth = std::nullopt);

PairFeatures pair_features(const RectPoly& s1, const RectPoly& s2, double gsd);

double collinearity_logit(const CollinearityModel& model, const PairFeatures& f);
/// Probability in the open interval (0, 1).
double p_same_object(const CollinearityModel& model, const PairFeatures& f);
/// -log(1 - P_eq), computed stably from the logit.
double collinearity_penalty(const CollinearityModel& model, const PairFeatures& f);

/// L2-penalized (1e-4, weights only) maximum likelihood logistic fit by
/// Newton iterations until the gradient norm is <= 1e-8.
CollinearityModel fit_collinearity(const std::vector<LabeledPair>& pairs);

Priors load_priors(const std::filesystem::path& path);
void save_priors(const Priors& priors, const std::filesystem::path& path);

std::vector<ShapeSample> read_shapes_csv(const std::filesystem::path& path);
std::vector<LabeledPair> read_pairs_csv(const std::filesystem::path& path);
void write_shapes_csv(const std::vector<ShapeSample>& shapes, const std::filesystem::path& path);
void write_pairs_csv(const std::vector<LabeledPair>& pairs, const std::filesystem::path& path);

}  // namespace stemseg

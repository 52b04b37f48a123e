#include "priors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

namespace stemseg {

namespace {

using json = nlohmann::json;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

constexpr double kL2 = 1e-4;
constexpr double kGradTol = 1e-8;
constexpr int kMaxNewton = 1000;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Gaussian elimination with partial pivoting.
Vec3 solve3(Mat3 a, Vec3 b) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    if (a[c][c] == 0.0) throw PriorError("singular Hessian in logistic fit");
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  Vec3 x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

struct LogisticFit {
  const std::vector<LabeledPair>& pairs;

  static Vec3 row(const PairFeatures& f) { return {1.0, f.d_angle, f.d_axis}; }

  double objective(const Vec3& t) const {
    double s = 0.0;
    for (const auto& p : pairs) {
      const Vec3 x = row(p.features);
      const double z = t[0] * x[0] + t[1] * x[1] + t[2] * x[2];
      s += (p.same_object ? z : 0.0) - softplus(z);
    }
    const double n = static_cast<double>(pairs.size());
    return s / n - 0.5 * kL2 * (t[1] * t[1] + t[2] * t[2]);
  }

  void derivatives(const Vec3& t, Vec3& g, Mat3& h) const {
    g = {0.0, 0.0, 0.0};
    h = {};
    for (const auto& p : pairs) {
      const Vec3 x = row(p.features);
      const double z = t[0] * x[0] + t[1] * x[1] + t[2] * x[2];
      const double pr = sigmoid(z);
      const double r = (p.same_object ? 1.0 : 0.0) - pr;
      const double w = pr * (1.0 - pr);
      for (int i = 0; i < 3; ++i) {
        g[i] += r * x[i];
        for (int j = 0; j < 3; ++j) h[i][j] -= w * x[i] * x[j];
      }
    }
    const double n = static_cast<double>(pairs.size());
    for (int i = 0; i < 3; ++i) {
      g[i] /= n;
      for (int j = 0; j < 3; ++j) h[i][j] /= n;
    }
    g[1] -= kL2 * t[1];
    g[2] -= kL2 * t[2];
    h[1][1] -= kL2;
    h[2][2] -= kL2;
  }
};

double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw PriorError("malformed number '" + std::string(s) + "' in " + where);
  }
  return v;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw PriorError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw PriorError("empty CSV '" + path.string() + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected;
  for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
  if (line != expected) {
    throw PriorError("CSV '" + path.string() + "' must start with header '" + expected + "'");
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, where));
    if (row.size() != header.size()) throw PriorError("wrong column count at " + where);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

double shape_log_density(const ShapePrior& prior, double length_m, double width_m) {
  const Sym2& h = prior.bandwidth;
  const double det = h.det();
  const std::size_t n = prior.points.size();
  std::vector<double> logk(n);
  double max_logk = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = length_m - prior.points[k].length_m;
    const double dy = width_m - prior.points[k].width_m;
    const double quad = (h.h22 * dx * dx - 2.0 * h.h12 * dx * dy + h.h11 * dy * dy) / det;
    logk[k] = -0.5 * quad;
    max_logk = std::max(max_logk, logk[k]);
  }
  double sum = 0.0;
  for (double l : logk) sum += std::exp(l - max_logk);
  const double log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
  const double value =
      log_norm + max_logk + std::log(sum) - std::log(static_cast<double>(n));
  return std::max(value, std::log(kDensityFloor));
}

ShapePrior fit_shape_prior(std::vector<ShapeSample> shapes, std::optional<Sym2> bandwidth) {
  if (shapes.empty()) throw PriorError("shape prior needs at least one training shape");
  for (const auto& s : shapes) {
    if (!std::isfinite(s.length_m) || !std::isfinite(s.width_m)) {
      throw PriorError("non-finite training shape");
    }
  }
  if (bandwidth) {
    if (!bandwidth->positive_definite()) throw PriorError("bandwidth must be positive definite");
    return {std::move(shapes), *bandwidth};
  }
  const std::size_t n = shapes.size();
  if (n < 2) throw PriorError("rule-of-thumb bandwidth needs at least two shapes");
  double ml = 0.0, mw = 0.0;
  for (const auto& s : shapes) {
    ml += s.length_m;
    mw += s.width_m;
  }
  ml /= static_cast<double>(n);
  mw /= static_cast<double>(n);
  double vl = 0.0, vw = 0.0;
  for (const auto& s : shapes) {
    vl += (s.length_m - ml) * (s.length_m - ml);
    vw += (s.width_m - mw) * (s.width_m - mw);
  }
  vl /= static_cast<double>(n - 1);
  vw /= static_cast<double>(n - 1);
  if (!(vl > 0.0) || !(vw > 0.0)) {
    throw PriorError("zero variance in a shape coordinate; supply an explicit bandwidth");
  }
  const double f = std::pow(static_cast<double>(n), -1.0 / 3.0);  // (n^(-1/6))^2
  return {std::move(shapes), Sym2{vl * f, 0.0, vw * f}};
}

PairFeatures pair_features(const RectPoly& s1, const RectPoly& s2, double gsd) {
  const Point u1 = direction(s1.rho);
  const Point u2 = direction(s2.rho);
  auto mean_dist = [](const RectPoly& from, Point uf, const RectPoly& to, Point ut) {
    const Point e0 = from.center + (0.5 * from.a) * uf;
    const Point e1 = from.center - (0.5 * from.a) * uf;
    return 0.5 * (point_line_distance(e0, to.center, ut) + point_line_distance(e1, to.center, ut));
  };
  const double d = 0.5 * (mean_dist(s1, u1, s2, u2) + mean_dist(s2, u2, s1, u1));
  return {angle_deviation(s1.rho, s2.rho), d * gsd};
}

double collinearity_logit(const CollinearityModel& m, const PairFeatures& f) {
  return m.bias + m.w_angle * f.d_angle + m.w_dist * f.d_axis;
}

double p_same_object(const CollinearityModel& m, const PairFeatures& f) {
  const double p = sigmoid(collinearity_logit(m, f));
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

double collinearity_penalty(const CollinearityModel& m, const PairFeatures& f) {
  return softplus(collinearity_logit(m, f));
}

CollinearityModel fit_collinearity(const std::vector<LabeledPair>& pairs) {
  std::set<std::pair<double, double>> distinct;
  bool has_pos = false, has_neg = false;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.features.d_angle) || !std::isfinite(p.features.d_axis)) {
      throw PriorError("non-finite pair features");
    }
    distinct.emplace(p.features.d_angle, p.features.d_axis);
    (p.same_object ? has_pos : has_neg) = true;
  }
  if (distinct.size() < 2) throw PriorError("need at least two distinct feature vectors");
  if (!has_pos || !has_neg) throw PriorError("both labels must be present");

  const LogisticFit fit{pairs};
  Vec3 theta{0.0, 0.0, 0.0};
  double obj = fit.objective(theta);
  for (int it = 0; it < kMaxNewton; ++it) {
    Vec3 g;
    Mat3 h;
    fit.derivatives(theta, g, h);
    const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (gnorm <= kGradTol) return {theta[0], theta[1], theta[2]};
    Mat3 neg_h;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) neg_h[i][j] = -h[i][j];
    }
    const Vec3 step = solve3(neg_h, g);
    double alpha = 1.0;
    Vec3 cand{};
    double cand_obj = obj;
    for (int ls = 0; ls < 60; ++ls) {
      for (int i = 0; i < 3; ++i) cand[i] = theta[i] + alpha * step[i];
      cand_obj = fit.objective(cand);
      if (cand_obj >= obj) break;
      alpha *= 0.5;
    }
    if (cand_obj < obj) break;  // no ascent possible at machine precision
    theta = cand;
    obj = cand_obj;
  }
  Vec3 g;
  Mat3 h;
  fit.derivatives(theta, g, h);
  if (std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) > 1e-6) {
    throw PriorError("logistic fit did not converge");
  }
  return {theta[0], theta[1], theta[2]};
}

Priors load_priors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PriorError("cannot open priors '" + path.string() + "'");
  Priors p;
  try {
    const json j = json::parse(in);
    const json& sp = j.at("shape_prior");
    for (const auto& pt : sp.at("points")) {
      if (pt.size() != 2) throw PriorError("shape prior points must be [length_m, width_m]");
      p.shape.points.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    }
    const json& h = sp.at("bandwidth");
    p.shape.bandwidth = {h.at(0).at(0).get<double>(), h.at(0).at(1).get<double>(),
                         h.at(1).at(1).get<double>()};
    if (h.at(1).at(0).get<double>() != p.shape.bandwidth.h12) {
      throw PriorError("bandwidth matrix must be symmetric");
    }
    const json& c = j.at("collinearity");
    p.collinearity = {c.at("bias").get<double>(), c.at("w_angle").get<double>(),
                      c.at("w_dist").get<double>()};
    p.merge_threshold = j.value("merge_threshold", 0.5);
  } catch (const json::exception& e) {
    throw PriorError("malformed priors '" + path.string() + "': " + e.what());
  }
  if (p.shape.points.empty()) throw PriorError("shape prior has no training points");
  if (!p.shape.bandwidth.positive_definite()) throw PriorError("bandwidth must be positive definite");
  if (!std::isfinite(p.collinearity.bias) || !std::isfinite(p.collinearity.w_angle) ||
      !std::isfinite(p.collinearity.w_dist)) {
    throw PriorError("collinearity weights must be finite");
  }
  if (!(p.merge_threshold > 0.0 && p.merge_threshold < 1.0)) {
    throw PriorError("merge_threshold must lie in (0, 1)");
  }
  return p;
}

void save_priors(const Priors& p, const std::filesystem::path& path) {
  json pts = json::array();
  for (const auto& s : p.shape.points) pts.push_back({s.length_m, s.width_m});
  const Sym2& h = p.shape.bandwidth;
  const json j = {
      {"shape_prior", {{"points", pts}, {"bandwidth", {{h.h11, h.h12}, {h.h12, h.h22}}}}},
      {"collinearity",
       {{"bias", p.collinearity.bias},
        {"w_angle", p.collinearity.w_angle},
        {"w_dist", p.collinearity.w_dist}}},
      {"merge_threshold", p.merge_threshold}};
  std::ofstream out(path);
  if (!out) throw PriorError("cannot write priors '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::vector<ShapeSample> read_shapes_csv(const std::filesystem::path& path) {
  std::vector<ShapeSample> out;
  for (const auto& row : read_csv(path, {"length_m", "width_m"})) out.push_back({row[0], row[1]});
  return out;
}

std::vector<LabeledPair> read_pairs_csv(const std::filesystem::path& path) {
  std::vector<LabeledPair> out;
  for (const auto& row : read_csv(path, {"d_angle_rad", "d_axis_m", "label"})) {
    if (row[2] != 0.0 && row[2] != 1.0) throw PriorError("pair label must be 0 or 1");
    out.push_back({{row[0], row[1]}, row[2] == 1.0});
  }
  return out;
}

void write_shapes_csv(const std::vector<ShapeSample>& shapes, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw PriorError("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "length_m,width_m\n";
  for (const auto& s : shapes) out << s.length_m << ',' << s.width_m << '\n';
}

void write_pairs_csv(const std::vector<LabeledPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw PriorError("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "d_angle_rad,d_axis_m,label\n";
  for (const auto& p : pairs) {
    out << p.features.d_angle << ',' << p.features.d_axis << ',' << (p.same_object ? 1 : 0)
        << '\n';
  }
}

}  // namespace stemseg

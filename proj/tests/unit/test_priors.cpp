#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "priors.hpp"

using namespace stemseg;

namespace {
constexpr double kPi = std::numbers::pi;
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

TEST_SUITE("priors") {
  TEST_CASE("single kernel density at its center") {
    const ShapePrior p = fit_shape_prior({{10, 0.4}}, Sym2{1, 0, 0.01});
    CHECK(shape_log_density(p, 10, 0.4) == doctest::Approx(std::log(10 / (2 * kPi))));
    CHECK(shape_log_density(p, 13, 0.7) < shape_log_density(p, 10, 0.4));
  }

  TEST_CASE("density floor for far-away queries") {
    const ShapePrior p = fit_shape_prior({{10, 0.4}}, Sym2{1, 0, 0.01});
    CHECK(shape_log_density(p, 1000, 50) == doctest::Approx(std::log(kDensityFloor)));
  }

  TEST_CASE("matches the direct KDE formula and is order invariant") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> L(2, 20), W(0.2, 0.7);
    std::vector<ShapeSample> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({L(rng), W(rng)});
    const ShapePrior p = fit_shape_prior(pts, Sym2{1.2, 0.05, 0.02});
    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const ShapePrior q = fit_shape_prior(shuffled, Sym2{1.2, 0.05, 0.02});
    for (int i = 0; i < 50; ++i) {
      const double l = L(rng), w = W(rng);
      CHECK(shape_log_density(p, l, w) == doctest::Approx(std::log(oracle::kde_density(p, l, w))).epsilon(1e-9));
      CHECK(shape_log_density(p, l, w) == doctest::Approx(shape_log_density(q, l, w)).epsilon(1e-12));
    }
  }

  TEST_CASE("rule-of-thumb bandwidth") {
    const ShapePrior p = fit_shape_prior({{8, 0.3}, {12, 0.5}});
    CHECK(p.bandwidth.h12 == 0.0);
    CHECK(p.bandwidth.h11 > p.bandwidth.h22);
    const Sym2 h{0.3, 0.01, 0.02};
    const ShapePrior e = fit_shape_prior({{8, 0.3}, {12, 0.5}}, h);
    CHECK(e.bandwidth.h11 == h.h11);
    CHECK(e.bandwidth.h12 == h.h12);
    CHECK(e.bandwidth.h22 == h.h22);
  }

  TEST_CASE("identical points with identity bandwidth") {
    const ShapePrior p = fit_shape_prior(std::vector<ShapeSample>(7, {5, 0.5}), Sym2{1, 0, 1});
    CHECK(std::exp(shape_log_density(p, 5, 0.5)) == doctest::Approx(1 / (2 * kPi)));
  }

  TEST_CASE("invalid priors are rejected") {
    CHECK_THROWS_AS(fit_shape_prior({}), PriorError);
    CHECK_THROWS_AS(fit_shape_prior({{1, 1}}), PriorError);
    CHECK_THROWS_AS(fit_shape_prior({{1, 1}, {2, 2}}, Sym2{1, 2, 1}), PriorError);
  }

  TEST_CASE("KDE integrates to one") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> L(2, 20), W(0.2, 0.7);
    std::vector<ShapeSample> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({L(rng), W(rng)});
    const ShapePrior p = fit_shape_prior(pts);
    const double sl = std::sqrt(p.bandwidth.h11), sw = std::sqrt(p.bandwidth.h22);
    double l0 = 1e300, l1 = -1e300, w0 = 1e300, w1 = -1e300;
    for (const auto& s : pts) {
      l0 = std::min(l0, s.length_m); l1 = std::max(l1, s.length_m);
      w0 = std::min(w0, s.width_m); w1 = std::max(w1, s.width_m);
    }
    l0 -= 6 * sl; l1 += 6 * sl; w0 -= 6 * sw; w1 += 6 * sw;
    const int n = 600;
    const double dl = (l1 - l0) / n, dw = (w1 - w0) / n;
    double sum = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sum += std::exp(shape_log_density(p, l0 + (i + 0.5) * dl, w0 + (j + 0.5) * dw));
    CHECK(std::abs(sum * dl * dw - 1.0) < 0.01);
  }

  TEST_CASE("pair features") {
    const RectPoly s{20, 4, {10, 10}, 0.3};
    const PairFeatures same = pair_features(s, s, 0.1);
    CHECK(same.d_angle == doctest::Approx(0.0));
    CHECK(same.d_axis == doctest::Approx(0.0));
    const Point off = 10.0 * direction(0.3 + kPi / 2);  // 1 m at gsd 0.1
    const PairFeatures par = pair_features(s, {20, 4, s.center + off, 0.3}, 0.1);
    CHECK(par.d_angle == doctest::Approx(0.0));
    CHECK(par.d_axis == doctest::Approx(1.0));
    const RectPoly perp{20, 4, {10, 10}, 0.3 + kPi / 2};
    CHECK(pair_features(s, perp, 0.1).d_angle == doctest::Approx(kPi / 2));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
      const RectPoly a = oracle::random_rect(rng, {0, 0}, 20, 5, 40, 1, 5);
      const RectPoly b = oracle::random_rect(rng, {0, 0}, 20, 5, 40, 1, 5);
      const PairFeatures f = pair_features(a, b, 0.1), g = pair_features(b, a, 0.1);
      CHECK(f.d_angle == doctest::Approx(g.d_angle));
      CHECK(f.d_axis == doctest::Approx(g.d_axis));
    }
  }

  TEST_CASE("logistic probability") {
    const CollinearityModel m{2, -8, -4};
    CHECK(p_same_object(m, {0, 0}) == doctest::Approx(sigmoid(2)));
    const double z = 2 - 8 * kPi / 2 - 20;
    CHECK(p_same_object(m, {kPi / 2, 5}) == doctest::Approx(sigmoid(z)).epsilon(1e-6));
    double prev = 1.0;
    for (double d = 0; d < 10; d += 0.5) {
      const double p = p_same_object(m, {0.1, d});
      CHECK(p < prev);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      prev = p;
    }
    CHECK(p_same_object({500, 0, 0}, {0, 0}) < 1.0);
    CHECK(p_same_object({-500, 0, 0}, {0, 0}) > 0.0);
    CHECK(collinearity_penalty(m, {0.2, 1.0}) ==
          doctest::Approx(-std::log(1 - p_same_object(m, {0.2, 1.0}))));
  }

  TEST_CASE("logistic fit") {
    std::vector<LabeledPair> pairs;
    for (int i = 0; i < 20; ++i) {
      pairs.push_back({{0, 0}, true});
      pairs.push_back({{kPi / 2, 5}, false});
    }
    const CollinearityModel m = fit_collinearity(pairs);
    for (const auto& p : pairs) CHECK((p_same_object(m, p.features) > 0.5) == p.same_object);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<LabeledPair> noisy;
    for (int i = 0; i < 200; ++i) {
      const double a = u(rng) * kPi / 2, d = u(rng) * 3;
      noisy.push_back({{a, d}, u(rng) < sigmoid(1 - 3 * a - 2 * d)});
    }
    const CollinearityModel f1 = fit_collinearity(noisy);
    std::shuffle(noisy.begin(), noisy.end(), rng);
    const CollinearityModel f2 = fit_collinearity(noisy);
    CHECK(f1.bias == doctest::Approx(f2.bias).epsilon(1e-6));
    CHECK(f1.w_angle == doctest::Approx(f2.w_angle).epsilon(1e-6));
    CHECK(f1.w_dist == doctest::Approx(f2.w_dist).epsilon(1e-6));

    std::vector<LabeledPair> one_label(10, {{0.1, 0.2}, true});
    one_label.push_back({{0.3, 0.1}, true});
    CHECK_THROWS_AS(fit_collinearity(one_label), PriorError);
  }

  TEST_CASE("priors and CSV round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "stemseg_priors_test";
    std::filesystem::create_directories(dir);
    Priors p = oracle::test_priors();
    p.merge_threshold = 0.7;
    save_priors(p, dir / "p.json");
    const Priors q = load_priors(dir / "p.json");
    CHECK(q.shape.points.size() == p.shape.points.size());
    CHECK(q.shape.bandwidth.h11 == p.shape.bandwidth.h11);
    CHECK(q.collinearity.w_dist == p.collinearity.w_dist);
    CHECK(q.merge_threshold == 0.7);

    write_shapes_csv({{3.5, 0.25}, {7, 0.5}}, dir / "s.csv");
    const auto shapes = read_shapes_csv(dir / "s.csv");
    REQUIRE(shapes.size() == 2);
    CHECK(shapes[0].length_m == 3.5);
    write_pairs_csv({{{0.1, 0.2}, true}, {{1.0, 3.0}, false}}, dir / "pp.csv");
    const auto pairs = read_pairs_csv(dir / "pp.csv");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].same_object);
    CHECK_FALSE(pairs[1].same_object);
    CHECK_THROWS_AS(load_priors(dir / "missing.json"), PriorError);
    std::filesystem::remove_all(dir);
  }
}

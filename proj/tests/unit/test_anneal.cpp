#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "anneal.hpp"
#include "oracles.hpp"

using namespace stemseg;

namespace {

TargetRegion rect_region(double x0, double y0, double w, double h) {
  TargetRegion r;
  r.outer = {{x0, y0}, {x0 + w, y0}, {x0 + w, y0 + h}, {x0, y0 + h}};
  r.area = w * h;
  r.bbox = {x0, y0, x0 + w, y0 + h};
  return r;
}

ModelState state_of(std::vector<Shape> shapes, ShapeBounds b = {2, 60, 0, 8}) {
  ModelState st;
  st.bounds = b;
  for (const auto& s : shapes) {
    st.shapes.push_back(s);
    st.boxes.push_back({s.center, s.rho, 40, 40});
  }
  return st;
}

AnnealConfig small_config(std::uint64_t seed) {
  AnnealConfig c;
  c.restarts = 2;
  c.iters_per_temp = 300;
  c.seed = seed;
  return c;
}

double polygon_iou_rect(const RectPoly& r, const Ring& ring) {
  const double inter = intersection_area(decode_rect(r), ring);
  return inter / (r.a * r.b + polygon_area(ring) - inter);
}

}  // namespace

TEST_SUITE("anneal") {
  TEST_CASE("config validation") {
    AnnealConfig c;
    CHECK_NOTHROW(validate(c));
    c.restarts = 0;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c = {};
    c.cooling = 1.0;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c.cooling = 0.0;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
  }

  TEST_CASE("applicable kinds") {
    const TargetRegion region = rect_region(0, 0, 60, 20);
    const Priors priors = oracle::test_priors();
    EnergyContext ctx{&region, &priors, {}, 0.1};
    SUBCASE("empty") {
      const ModelState st = state_of({});
      CHECK(applicable_kinds(st, evaluate_full(st, ctx).cache, 0.5).empty());
    }
    SUBCASE("all disabled") {
      const ModelState st = state_of({{20, 0, {10, 10}, 0}});
      const auto k = applicable_kinds(st, evaluate_full(st, ctx).cache, 0.5);
      REQUIRE(k.size() == 1);
      CHECK(k[0] == MoveKind::LengthWidth);
    }
    SUBCASE("collinear neighbours allow merging") {
      const ModelState st = state_of({{20, 4, {15, 10}, 0}, {20, 4, {40, 10}, 0}});
      const auto k = applicable_kinds(st, evaluate_full(st, ctx).cache, 0.5);
      CHECK(k.size() == 5);
      CHECK(k.back() == MoveKind::MergeAbsorb);
    }
    SUBCASE("perpendicular pair does not") {
      const ModelState st = state_of({{20, 4, {15, 10}, 0}, {20, 4, {40, 10}, std::numbers::pi / 2}});
      CHECK(applicable_kinds(st, evaluate_full(st, ctx).cache, 0.5).size() == 4);
    }
  }

  TEST_CASE("merge spans both projections") {
    const ModelState st = state_of({{20, 4, {10, 10}, 0}, {10, 4, {40, 10}, 0}});
    const auto m = apply_merge(st, 0, 1);
    REQUIRE(m.has_value());
    CHECK(m->first.a == 45);
    CHECK(m->first.center.x == doctest::Approx(22.5));
    CHECK(m->first.center.y == doctest::Approx(10));
    CHECK(m->first.b == 4);
    CHECK(m->second.b == 0);
    CHECK_FALSE(apply_merge(st, 0, 0).has_value());
    ModelState capped = st;
    capped.bounds.a_hi = 30;
    CHECK(apply_merge(capped, 0, 1)->first.a == 30);
    ModelState off = st;
    off.shapes[1].b = 0;
    CHECK_FALSE(apply_merge(off, 0, 1).has_value());
  }

  TEST_CASE("proposals keep the invariants") {
    std::mt19937_64 rng(21);
    const Priors priors = oracle::test_priors();
    const TargetRegion region = oracle::random_region(rng, {40, 40}, 30, false);
    ModelState st = oracle::random_state(rng, region, 5);
    st.shapes[2].b = 0;
    EnergyContext ctx{&region, &priors, {}, 0.1};
    Evaluation ev = evaluate_full(st, ctx);
    const AnnealConfig cfg;
    for (int i = 0; i < 2000; ++i) {
      const auto m = propose_move(st, ev.cache, 0.5, rng, cfg);
      if (!m) continue;
      const auto edit = move_to_edit(st, *m);
      REQUIRE(edit.has_value());
      REQUIRE(edit_is_valid(st, *edit));
      if (m->kind == MoveKind::LengthWidth) {
        CHECK(std::abs(m->da) <= cfg.steps.length);
        CHECK(std::abs(m->db) <= cfg.steps.width);
        if (!st.shapes[m->target].active()) CHECK(m->db >= 1);
      }
      if (m->kind == MoveKind::Angle) CHECK(std::abs(m->drho) <= cfg.steps.angle);
      if (m->kind != MoveKind::LengthWidth) CHECK(st.shapes[m->target].active());
      PendingEdit p;
      prepare_edit(st, ev.cache, ctx, *edit, p);
      commit_edit(st, ev.cache, p);
      REQUIRE(satisfies_invariants(st));
    }
    CHECK(audit_cache(st, ctx, ev.cache) <= 1e-6);
  }

  TEST_CASE("calibrated temperature is positive") {
    std::mt19937_64 rng(2);
    const Priors priors = oracle::test_priors();
    const TargetRegion region = oracle::random_region(rng, {40, 40}, 30, false);
    const ModelState st = oracle::random_state(rng, region, 4);
    EnergyContext ctx{&region, &priors, {}, 0.1};
    const auto ev = evaluate_full(st, ctx);
    const double t0 = calibrate_t0(st, ev.cache, ctx, rng, AnnealConfig{});
    CHECK(t0 > 0);
    CHECK(std::isfinite(t0));
  }

  TEST_CASE("annealing never returns worse than the start and is reproducible") {
    std::mt19937_64 rng(31);
    const Priors priors = oracle::test_priors();
    const TargetRegion region = rect_region(10, 10, 30, 4);
    const ModelState init = state_of({{15, 2, {20, 12}, 0.2}, {10, 3, {32, 12}, 0.1}});
    EnergyContext ctx{&region, &priors, {}, 0.1};
    const double e0 = evaluate_full(init, ctx).energy.total;
    const AnnealResult a = anneal(init, ctx, small_config(7), true);
    const AnnealResult b = anneal(init, ctx, small_config(7), true);
    CHECK(a.energy.total <= e0 + 1e-12);
    CHECK(a.energy.total == b.energy.total);
    CHECK(a.state.shapes == b.state.shapes);
    CHECK(a.trace.size() == b.trace.size());
    CHECK(a.restart_energy.size() == 2);
    CHECK(a.energy.total == doctest::Approx(evaluate_full(a.state, ctx).energy.total).epsilon(1e-9));
    CHECK(a.max_audit <= 1e-6);
    CHECK(satisfies_invariants(a.state));
    for (const auto& row : a.trace) CHECK(row.best <= row.energy + 1e-12);
    // The fit should be close to the 30 x 4 strip.
    CHECK(a.energy.e_data < 0.3);
  }

  TEST_CASE("best restart has the lowest energy, ties to the first") {
    const Priors priors = oracle::test_priors();
    const TargetRegion region = rect_region(0, 0, 40, 5);
    const ModelState init = state_of({{20, 3, {15, 2.5}, 0}});
    EnergyContext ctx{&region, &priors, {}, 0.1};
    AnnealConfig cfg = small_config(3);
    cfg.restarts = 3;
    const AnnealResult r = anneal(init, ctx, cfg);
    REQUIRE(r.restart_energy.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r.restart_energy[r.best_restart] <= r.restart_energy[i]);
      if (i < r.best_restart) CHECK(r.restart_energy[i] > r.restart_energy[r.best_restart]);
    }
  }

  TEST_CASE("empty initial state") {
    const Priors priors = oracle::test_priors();
    const TargetRegion region = rect_region(0, 0, 10, 10);
    EnergyContext ctx{&region, &priors, {}, 0.1};
    const AnnealResult r = anneal(state_of({}), ctx, small_config(1));
    CHECK(r.state.size() == 0);
    CHECK(r.energy.e_data == doctest::Approx(1.0));
  }

  TEST_CASE("invalid initial state is rejected") {
    const Priors priors = oracle::test_priors();
    const TargetRegion region = rect_region(0, 0, 10, 10);
    EnergyContext ctx{&region, &priors, {}, 0.1};
    CHECK_THROWS_AS(anneal(state_of({{100, 2, {5, 5}, 0}}), ctx, small_config(1)), std::invalid_argument);
  }

  TEST_CASE("data fit alone recovers a rectangular region") {
    const Priors priors = oracle::test_priors();
    const TargetRegion region = rect_region(10, 10, 40, 5);
    ModelState init = state_of({{36, 3, {29, 12.3}, 0.05}});
    EnergyContext ctx{&region, &priors, {}, 0.1};
    ctx.config.gamma_s = 0;
    ctx.config.gamma_c = 0;
    AnnealConfig cfg = small_config(5);
    cfg.iters_per_temp = 500;
    const AnnealResult r = anneal(init, ctx, cfg);
    REQUIRE(r.state.size() == 1);
    const double iou = polygon_iou_rect(r.state.shapes[0].rect(), region.outer);
    CHECK(iou >= 0.9);
  }

  TEST_CASE("tiny start temperature gives greedy descent") {
    std::mt19937_64 rng(14);
    const Priors priors = oracle::test_priors();
    const TargetRegion region = oracle::random_region(rng, {40, 40}, 25, false);
    const ModelState init = oracle::random_state(rng, region, 3);
    EnergyContext ctx{&region, &priors, {}, 0.1};
    AnnealConfig cfg = small_config(2);
    cfg.t0 = 1e-300;
    cfg.trace_stride = 1;
    const AnnealResult r = anneal(init, ctx, cfg, true);
    REQUIRE(r.trace.size() > 1);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      if (r.trace[i].restart != r.trace[i - 1].restart) continue;
      CHECK(r.trace[i].energy <= r.trace[i - 1].energy);
    }
  }

  TEST_CASE("calibration is deterministic and falls back to one") {
    std::mt19937_64 rng(2);
    const Priors priors = oracle::test_priors();
    const TargetRegion region = oracle::random_region(rng, {40, 40}, 30, false);
    const ModelState st = oracle::random_state(rng, region, 4);
    EnergyContext ctx{&region, &priors, {}, 0.1};
    const auto ev = evaluate_full(st, ctx);
    std::mt19937_64 r1(77), r2(77);
    CHECK(calibrate_t0(st, ev.cache, ctx, r1, AnnealConfig{}) ==
          calibrate_t0(st, ev.cache, ctx, r2, AnnealConfig{}));
    const ModelState empty = state_of({});
    const auto ee = evaluate_full(empty, ctx);
    CHECK(calibrate_t0(empty, ee.cache, ctx, r1, AnnealConfig{}) == 1.0);
  }
}

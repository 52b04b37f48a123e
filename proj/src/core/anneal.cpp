#include "anneal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stemseg {

namespace {

double merge_cutoff(double merge_threshold) {
  if (merge_threshold >= 1.0) return std::numeric_limits<double>::infinity();
  if (merge_threshold <= 0.0) return 0.0;
  return -std::log1p(-merge_threshold);
}

std::vector<std::pair<std::size_t, std::size_t>> merge_candidates(const ModelState& state,
                                                                  const EnergyCache& cache,
                                                                  double merge_threshold) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const double cutoff = merge_cutoff(merge_threshold);
  const std::size_t m = state.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (!state.shapes[i].active()) continue;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (state.shapes[j].active() && cache.pair(cache.collin, i, j) > cutoff) {
        out.emplace_back(i, j);
      }
    }
  }
  return out;
}

template <class T>
T uniform_int(std::mt19937_64& rng, T lo, T hi) {
  return std::uniform_int_distribution<T>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const char* move_kind_name(MoveKind kind) {
  switch (kind) {
    case MoveKind::LengthWidth: return "LengthWidth";
    case MoveKind::Angle: return "Angle";
    case MoveKind::ShiftAxis: return "ShiftAxis";
    case MoveKind::ShiftFree: return "ShiftFree";
    case MoveKind::MergeAbsorb: return "MergeAbsorb";
  }
  return "?";
}

void validate(const AnnealConfig& c) {
  if (c.restarts == 0) throw std::invalid_argument("anneal: restarts must be >= 1");
  if (!(c.cooling > 0.0 && c.cooling < 1.0)) {
    throw std::invalid_argument("anneal: cooling must lie in (0, 1)");
  }
  if (c.iters_per_temp == 0) throw std::invalid_argument("anneal: iters_per_temp must be >= 1");
  if (!(c.t_min_ratio > 0.0 && c.t_min_ratio < 1.0)) {
    throw std::invalid_argument("anneal: t_min_ratio must lie in (0, 1)");
  }
  const StepBounds& s = c.steps;
  if (s.length < 0 || s.width < 1 || s.angle < 0.0 || s.axis < 0.0 || s.x < 0.0 || s.y < 0.0) {
    throw std::invalid_argument("anneal: invalid step bounds");
  }
}

std::vector<MoveKind> applicable_kinds(const ModelState& state, const EnergyCache& cache,
                                       double merge_threshold) {
  if (state.size() == 0) return {};
  if (state.active_count() == 0) return {MoveKind::LengthWidth};
  std::vector<MoveKind> kinds{MoveKind::LengthWidth, MoveKind::Angle, MoveKind::ShiftAxis,
                              MoveKind::ShiftFree};
  if (!merge_candidates(state, cache, merge_threshold).empty()) {
    kinds.push_back(MoveKind::MergeAbsorb);
  }
  return kinds;
}

std::optional<std::pair<Shape, Shape>> apply_merge(const ModelState& state, std::size_t u,
                                                   std::size_t v) {
  const Shape& su = state.shapes[u];
  const Shape& sv = state.shapes[v];
  if (!su.active() || !sv.active() || u == v) return std::nullopt;
  const Point dir = direction(su.rho);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Shape* s : {&su, &sv}) {
    for (const Point& p : decode_rect(s->rect())) {
      const double t = dot(p - su.center, dir);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  int a = static_cast<int>(std::ceil(hi - lo - kGeomEps));
  a = std::min(a, state.bounds.a_hi);
  if (a < state.bounds.a_lo) return std::nullopt;
  Shape merged = su;
  merged.a = a;
  merged.center = su.center + (0.5 * (lo + hi)) * dir;
  Shape absorbed = sv;
  absorbed.b = 0;
  return std::pair{merged, absorbed};
}

std::optional<ShapeEdit> move_to_edit(const ModelState& state, const Move& m) {
  if (m.target >= state.size()) return std::nullopt;
  Shape s = state.shapes[m.target];
  switch (m.kind) {
    case MoveKind::LengthWidth:
      s.a += m.da;
      s.b += m.db;
      break;
    case MoveKind::Angle:
      s.rho = canonical_angle(s.rho + m.drho);
      break;
    case MoveKind::ShiftAxis:
      s.center = s.center + m.dt * direction(s.rho);
      break;
    case MoveKind::ShiftFree:
      s.center = s.center + Point{m.dx, m.dy};
      break;
    case MoveKind::MergeAbsorb: {
      if (m.partner >= state.size()) return std::nullopt;
      const auto merged = apply_merge(state, m.target, m.partner);
      if (!merged) return std::nullopt;
      return ShapeEdit::pair(m.target, merged->first, m.partner, merged->second);
    }
  }
  return ShapeEdit::single(m.target, s);
}

std::optional<Move> propose_move(const ModelState& state, const EnergyCache& cache,
                                 double merge_threshold, std::mt19937_64& rng,
                                 const AnnealConfig& config) {
  const std::vector<MoveKind> kinds = applicable_kinds(state, cache, merge_threshold);
  if (kinds.empty()) return std::nullopt;
  const MoveKind kind = kinds[uniform_int<std::size_t>(rng, 0, kinds.size() - 1)];

  std::vector<std::size_t> active;
  std::vector<std::size_t> disabled;
  for (std::size_t i = 0; i < state.size(); ++i) {
    (state.shapes[i].active() ? active : disabled).push_back(i);
  }
  const auto pairs = kind == MoveKind::MergeAbsorb
                         ? merge_candidates(state, cache, merge_threshold)
                         : std::vector<std::pair<std::size_t, std::size_t>>{};
  const StepBounds& st = config.steps;

  for (std::size_t attempt = 0; attempt < config.max_resample; ++attempt) {
    Move m;
    m.kind = kind;
    switch (kind) {
      case MoveKind::LengthWidth: {
        const bool pick_disabled =
            !disabled.empty() &&
            (active.empty() || uniform_real(rng, 0.0, 1.0) < config.disabled_target_mass);
        if (pick_disabled) {
          m.target = disabled[uniform_int<std::size_t>(rng, 0, disabled.size() - 1)];
          m.da = uniform_int(rng, -st.length, st.length);
          m.db = uniform_int(rng, 1, st.width);
        } else {
          m.target = active[uniform_int<std::size_t>(rng, 0, active.size() - 1)];
          do {
            m.da = uniform_int(rng, -st.length, st.length);
            m.db = uniform_int(rng, -st.width, st.width);
          } while (m.da == 0 && m.db == 0);
        }
        break;
      }
      case MoveKind::Angle:
        m.target = active[uniform_int<std::size_t>(rng, 0, active.size() - 1)];
        m.drho = uniform_real(rng, -st.angle, st.angle);
        break;
      case MoveKind::ShiftAxis:
        m.target = active[uniform_int<std::size_t>(rng, 0, active.size() - 1)];
        m.dt = uniform_real(rng, -st.axis, st.axis);
        break;
      case MoveKind::ShiftFree:
        m.target = active[uniform_int<std::size_t>(rng, 0, active.size() - 1)];
        m.dx = uniform_real(rng, -st.x, st.x);
        m.dy = uniform_real(rng, -st.y, st.y);
        break;
      case MoveKind::MergeAbsorb: {
        const auto [i, j] = pairs[uniform_int<std::size_t>(rng, 0, pairs.size() - 1)];
        const bool flip = uniform_int(rng, 0, 1) == 1;
        m.target = flip ? j : i;
        m.partner = flip ? i : j;
        break;
      }
    }
    const auto edit = move_to_edit(state, m);
    if (edit && edit_is_valid(state, *edit)) return m;
  }
  return std::nullopt;
}

double calibrate_t0(const ModelState& state, const EnergyCache& cache, const EnergyContext& ctx,
                    std::mt19937_64& rng, const AnnealConfig& config) {
  std::vector<double> uphill;
  PendingEdit pending;
  for (std::size_t k = 0; k < config.calibration_samples; ++k) {
    const auto m = propose_move(state, cache, ctx.config.merge_threshold, rng, config);
    if (!m) continue;
    const auto edit = move_to_edit(state, *m);
    if (!edit) continue;
    prepare_edit(state, cache, ctx, *edit, pending);
    if (pending.delta > 0.0) uphill.push_back(pending.delta);
  }
  if (uphill.empty()) return 1.0;
  const double t0 = median(std::move(uphill)) / std::log(1.25);
  return std::isfinite(t0) && t0 > 0.0 ? t0 : 1.0;
}

AnnealResult anneal(const ModelState& init, const EnergyContext& ctx, const AnnealConfig& config,
                    bool record_trace) {
  validate(config);
  if (!satisfies_invariants(init)) {
    throw std::invalid_argument("anneal: initial state violates bounds or constraint boxes");
  }
  AnnealResult result;
  result.state = init;
  double overall_best = std::numeric_limits<double>::infinity();
  const std::size_t stride = std::max<std::size_t>(1, config.trace_stride);
  const std::size_t audit_every = std::max<std::size_t>(1, config.audit_interval);

  for (std::size_t r = 0; r < config.restarts; ++r) {
    std::mt19937_64 rng(config.seed + r);
    ModelState state = init;
    Evaluation ev = evaluate_full(state, ctx);
    EnergyCache cache = std::move(ev.cache);
    double current = ev.energy.total;
    double best = current;
    ModelState best_state = state;

    const double t0 = config.t0 > 0.0 ? config.t0 : calibrate_t0(state, cache, ctx, rng, config);
    const double t_stop = t0 * config.t_min_ratio;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    PendingEdit pending;
    std::size_t iteration = 0;
    std::size_t accepted_total = 0;

    for (double temp = t0; temp >= t_stop; temp *= config.cooling) {
      std::size_t accepted_level = 0;
      for (std::size_t it = 0; it < config.iters_per_temp; ++it, ++iteration) {
        bool accepted = false;
        if (const auto m = propose_move(state, cache, ctx.config.merge_threshold, rng, config)) {
          if (const auto edit = move_to_edit(state, *m)) {
            prepare_edit(state, cache, ctx, *edit, pending);
            const double d = pending.delta;
            accepted = d <= 0.0 || u01(rng) < std::exp(-d / temp);
            if (accepted) {
              commit_edit(state, cache, pending);
              current = pending.energy.total;
              ++accepted_level;
              ++accepted_total;
              if (accepted_total % audit_every == 0) {
                const double gap = audit_cache(state, ctx, cache);
                result.max_audit = std::max(result.max_audit, gap);
                if (gap > 1e-6) {
                  Evaluation fresh = evaluate_full(state, ctx);
                  cache = std::move(fresh.cache);
                  current = fresh.energy.total;
                }
              }
              if (current < best) {
                best = current;
                best_state = state;
              }
            }
          }
        }
        if (record_trace && iteration % stride == 0) {
          result.trace.push_back({r, iteration, temp, current, best, accepted});
        }
      }
      if (accepted_level == 0) break;
    }

    result.iterations += iteration;
    result.accepted += accepted_total;
    result.restart_energy.push_back(best);
    if (best < overall_best) {
      overall_best = best;
      result.best_restart = r;
      result.state = std::move(best_state);
    }
  }
  result.energy = evaluate_full(result.state, ctx).energy;
  return result;
}

}  // namespace stemseg

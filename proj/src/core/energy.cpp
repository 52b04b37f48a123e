#include "energy.hpp"

#include <algorithm>
#include <stdexcept>

namespace stemseg {

namespace {

struct UnaryTerms {
  double unary_tau = 0.0;
  double rect_area = 0.0;
  double shape_nlogp = 0.0;
  BBox bbox;
};

struct PairTerms {
  double rect = 0.0;
  double tau = 0.0;
  double overlap = 0.0;
  double collin = 0.0;
};

UnaryTerms unary_terms(const Shape& s, const EnergyContext& ctx) {
  if (!s.active()) return {};
  const RectPoly r = s.rect();
  UnaryTerms u;
  u.bbox = rect_bbox(r);
  u.unary_tau = clip_area_rect(*ctx.region, r);
  u.rect_area = r.a * r.b;
  u.shape_nlogp = -shape_log_density(ctx.priors->shape, r.a * ctx.gsd, r.b * ctx.gsd);
  return u;
}

PairTerms pair_terms(const Shape& si, const BBox& bi, const Shape& sj, const BBox& bj,
                     const EnergyContext& ctx) {
  if (!si.active() || !sj.active()) return {};
  const RectPoly ri = si.rect();
  const RectPoly rj = sj.rect();
  PairTerms p;
  p.collin = collinearity_penalty(ctx.priors->collinearity, pair_features(ri, rj, ctx.gsd));
  if (!bi.intersects(bj)) return p;
  p.rect = rect_rect_area(ri, rj);
  if (p.rect <= 0.0) return p;
  p.tau = triple_area(*ctx.region, ri, rj);
  const double dr = angle_deviation(ri.rho, rj.rho);
  const double so = ctx.config.sigma_o;
  p.overlap = std::exp(-dr * dr / (2.0 * so * so)) * p.rect;
  return p;
}

EnergyBreakdown breakdown_of(const EnergyCache::Sums& s, double tau_area, const EnergyConfig& cfg) {
  EnergyBreakdown e;
  const double phi_tau = s.unary_tau - s.pair_tau;
  const double phi = s.rect_area - s.pair_rect;
  const double tau_minus_phi = tau_area - phi_tau;
  const double phi_minus_tau = std::max(0.0, phi - phi_tau);
  e.e_data = 2.0 * ((1.0 - cfg.pi_p) * tau_minus_phi + cfg.pi_p * phi_minus_tau) / tau_area;
  e.e_shape = s.active > 0 ? s.shape / static_cast<double>(s.active) : 0.0;
  e.e_overlap = s.overlap / tau_area;
  if (s.active >= 2) {
    const double pairs = 0.5 * static_cast<double>(s.active) * static_cast<double>(s.active - 1);
    e.e_collin = s.collin / pairs;
  }
  e.total = cfg.gamma_d() * e.e_data + cfg.gamma_s * e.e_shape + cfg.gamma_o() * e.e_overlap +
            cfg.gamma_c * e.e_collin;
  return e;
}

double rel_diff(double cached, double fresh) {
  return std::abs(cached - fresh) / std::max(1.0, std::abs(fresh));
}

}  // namespace

std::pair<double, double> approx_phi_tau(const EnergyCache& c) {
  return {c.sums.unary_tau - c.sums.pair_tau, c.sums.rect_area - c.sums.pair_rect};
}

double data_fit(const EnergyCache& c, double pi_p) {
  const auto [phi_tau, phi] = approx_phi_tau(c);
  const double tau_minus_phi = c.tau_area - phi_tau;
  const double phi_minus_tau = std::max(0.0, phi - phi_tau);
  return 2.0 * ((1.0 - pi_p) * tau_minus_phi + pi_p * phi_minus_tau) / c.tau_area;
}

double overlap_term(const RectPoly& s1, const RectPoly& s2, double sigma_o) {
  const double area = rect_rect_area(s1, s2);
  if (area <= 0.0) return 0.0;
  const double dr = angle_deviation(s1.rho, s2.rho);
  return std::exp(-dr * dr / (2.0 * sigma_o * sigma_o)) * area;
}

EnergyBreakdown breakdown(const EnergyCache& cache, const EnergyConfig& config) {
  return breakdown_of(cache.sums, cache.tau_area, config);
}

Evaluation evaluate_full(const ModelState& state, const EnergyContext& ctx) {
  if (ctx.region == nullptr || ctx.priors == nullptr) {
    throw std::invalid_argument("energy context is incomplete");
  }
  if (!(ctx.region->area > 0.0)) throw std::invalid_argument("target region has zero area");

  const std::size_t m = state.shapes.size();
  EnergyCache c;
  c.m = m;
  c.tau_area = ctx.region->area;
  c.unary_tau.assign(m, 0.0);
  c.rect_area.assign(m, 0.0);
  c.shape_nlogp.assign(m, 0.0);
  c.bbox.assign(m, BBox{});
  c.pair_rect.assign(m * m, 0.0);
  c.pair_tau.assign(m * m, 0.0);
  c.overlap.assign(m * m, 0.0);
  c.collin.assign(m * m, 0.0);

  for (std::size_t i = 0; i < m; ++i) {
    const Shape& s = state.shapes[i];
    const UnaryTerms u = unary_terms(s, ctx);
    c.unary_tau[i] = u.unary_tau;
    c.rect_area[i] = u.rect_area;
    c.shape_nlogp[i] = u.shape_nlogp;
    c.bbox[i] = u.bbox;
    c.sums.unary_tau += u.unary_tau;
    c.sums.rect_area += u.rect_area;
    c.sums.shape += u.shape_nlogp;
    if (s.active()) ++c.sums.active;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const PairTerms p = pair_terms(state.shapes[i], c.bbox[i], state.shapes[j], c.bbox[j], ctx);
      c.pair_rect[i * m + j] = c.pair_rect[j * m + i] = p.rect;
      c.pair_tau[i * m + j] = c.pair_tau[j * m + i] = p.tau;
      c.overlap[i * m + j] = c.overlap[j * m + i] = p.overlap;
      c.collin[i * m + j] = c.collin[j * m + i] = p.collin;
      c.sums.pair_rect += p.rect;
      c.sums.pair_tau += p.tau;
      c.sums.overlap += p.overlap;
      c.sums.collin += p.collin;
    }
  }
  return {breakdown(c, ctx.config), std::move(c)};
}

bool edit_is_valid(const ModelState& state, const ShapeEdit& edit) {
  if (edit.count == 0 || edit.count > 2) return false;
  if (edit.count == 2 && edit.index[0] == edit.index[1]) return false;
  for (std::size_t k = 0; k < edit.count; ++k) {
    const std::size_t i = edit.index[k];
    if (i >= state.shapes.size()) return false;
    const Shape& s = edit.shape[k];
    if (!state.bounds.contains(s.a, s.b)) return false;
    if (s.active() && !state.boxes[i].contains(s.center)) return false;
  }
  return true;
}

void prepare_edit(const ModelState& state, const EnergyCache& cache, const EnergyContext& ctx,
                  const ShapeEdit& edit, PendingEdit& out) {
  const std::size_t m = cache.m;
  const std::size_t n = edit.count;
  out.edit = edit;
  auto slot_of = [&](std::size_t j) -> int {
    for (std::size_t k = 0; k < n; ++k) {
      if (edit.index[k] == j) return static_cast<int>(k);
    }
    return -1;
  };

  EnergyCache::Sums s = cache.sums;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = edit.index[k];
    const Shape& before = state.shapes[c];
    const UnaryTerms u = unary_terms(edit.shape[k], ctx);
    out.unary_tau[k] = u.unary_tau;
    out.rect_area[k] = u.rect_area;
    out.shape_nlogp[k] = u.shape_nlogp;
    out.bbox[k] = u.bbox;
    s.unary_tau += u.unary_tau - cache.unary_tau[c];
    s.rect_area += u.rect_area - cache.rect_area[c];
    s.shape += u.shape_nlogp - cache.shape_nlogp[c];
    s.active = s.active + (edit.shape[k].active() ? 1 : 0) - (before.active() ? 1 : 0);
  }

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = edit.index[k];
    auto& row_rect = out.pair_rect[k];
    auto& row_tau = out.pair_tau[k];
    auto& row_ov = out.overlap[k];
    auto& row_co = out.collin[k];
    row_rect.assign(m, 0.0);
    row_tau.assign(m, 0.0);
    row_ov.assign(m, 0.0);
    row_co.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == c) continue;
      const int slot = slot_of(j);
      if (slot >= 0 && static_cast<std::size_t>(slot) < k) {
        // Pair between two edited shapes, already computed from the other side.
        row_rect[j] = out.pair_rect[slot][c];
        row_tau[j] = out.pair_tau[slot][c];
        row_ov[j] = out.overlap[slot][c];
        row_co[j] = out.collin[slot][c];
        continue;
      }
      const Shape& other = slot >= 0 ? edit.shape[slot] : state.shapes[j];
      const BBox& other_box = slot >= 0 ? out.bbox[slot] : cache.bbox[j];
      const PairTerms p = pair_terms(edit.shape[k], out.bbox[k], other, other_box, ctx);
      row_rect[j] = p.rect;
      row_tau[j] = p.tau;
      row_ov[j] = p.overlap;
      row_co[j] = p.collin;
      s.pair_rect += p.rect - cache.pair(cache.pair_rect, c, j);
      s.pair_tau += p.tau - cache.pair(cache.pair_tau, c, j);
      s.overlap += p.overlap - cache.pair(cache.overlap, c, j);
      s.collin += p.collin - cache.pair(cache.collin, c, j);
    }
  }

  out.sums = s;
  out.energy = breakdown_of(s, cache.tau_area, ctx.config);
  out.delta = out.energy.total - breakdown(cache, ctx.config).total;
}

void commit_edit(ModelState& state, EnergyCache& cache, const PendingEdit& p) {
  const std::size_t m = cache.m;
  for (std::size_t k = 0; k < p.edit.count; ++k) {
    const std::size_t c = p.edit.index[k];
    state.shapes[c] = p.edit.shape[k];
    cache.unary_tau[c] = p.unary_tau[k];
    cache.rect_area[c] = p.rect_area[k];
    cache.shape_nlogp[c] = p.shape_nlogp[k];
    cache.bbox[c] = p.bbox[k];
    for (std::size_t j = 0; j < m; ++j) {
      cache.pair_rect[c * m + j] = cache.pair_rect[j * m + c] = p.pair_rect[k][j];
      cache.pair_tau[c * m + j] = cache.pair_tau[j * m + c] = p.pair_tau[k][j];
      cache.overlap[c * m + j] = cache.overlap[j * m + c] = p.overlap[k][j];
      cache.collin[c * m + j] = cache.collin[j * m + c] = p.collin[k][j];
    }
  }
  cache.sums = p.sums;
}

std::optional<double> evaluate_delta(const ModelState& state, const EnergyCache& cache,
                                     const EnergyContext& ctx, const ShapeEdit& edit) {
  if (!edit_is_valid(state, edit)) return std::nullopt;
  PendingEdit p;
  prepare_edit(state, cache, ctx, edit, p);
  return p.delta;
}

double audit_cache(const ModelState& state, const EnergyContext& ctx, const EnergyCache& cache) {
  const EnergyCache fresh = evaluate_full(state, ctx).cache;
  if (fresh.m != cache.m) return std::numeric_limits<double>::infinity();
  double worst = rel_diff(cache.tau_area, fresh.tau_area);
  auto scan = [&](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
      worst = std::numeric_limits<double>::infinity();
      return;
    }
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_diff(a[i], b[i]));
  };
  scan(cache.unary_tau, fresh.unary_tau);
  scan(cache.rect_area, fresh.rect_area);
  scan(cache.shape_nlogp, fresh.shape_nlogp);
  scan(cache.pair_rect, fresh.pair_rect);
  scan(cache.pair_tau, fresh.pair_tau);
  scan(cache.overlap, fresh.overlap);
  scan(cache.collin, fresh.collin);
  const auto& a = cache.sums;
  const auto& b = fresh.sums;
  for (auto [x, y] : {std::pair{a.unary_tau, b.unary_tau}, std::pair{a.rect_area, b.rect_area},
                      std::pair{a.shape, b.shape}, std::pair{a.pair_rect, b.pair_rect},
                      std::pair{a.pair_tau, b.pair_tau}, std::pair{a.overlap, b.overlap},
                      std::pair{a.collin, b.collin}}) {
    worst = std::max(worst, rel_diff(x, y));
  }
  if (a.active != b.active) worst = std::numeric_limits<double>::infinity();
  return worst;
}

}  // namespace stemseg

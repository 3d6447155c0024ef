#pragma once

// Hausdorff contents from dyadic covers, the rectangle content exponent g_tau,
// closed-form dimension predictions and critical exponents of natural covers.

#include "limsup/covering.hpp"
#include "limsup/geometry.hpp"
#include "limsup/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace limsup {

struct ContentEstimate {
  double s = 0.0;
  double t = INFINITY;
  double value_upper = 0.0;
  double value_lower = NAN;  // not computed
  std::vector<DyadicCube> cover;
  std::size_t nodes = 0;
  std::vector<std::string> flags;
};

struct ContentOptions {
  int depth = 12;                  // finest generation used
  std::size_t budget = 10'000'000;  // cube visits
  bool keep_cover = false;
};

namespace detail {

inline Box box_cap(const Box& a, const Box& b) {
  Box x{point(a.dim()), point(a.dim()), a.open || b.open};
  for (std::size_t i = 0; i < a.dim(); ++i) {
    x.lo[i] = std::max(a.lo[i], b.lo[i]);
    x.hi[i] = std::min(a.hi[i], b.hi[i]);
  }
  return x;
}

inline bool degenerate(const Box& b) {
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (!(b.lo[i] < b.hi[i])) return true;
  return false;
}

// a closed box with nonempty interior is the closure of that interior, so
// covering the interior with closed cubes covers the box
inline bool cube_meets(const Box& q, const Box& b) {
  const bool strict = b.open || !degenerate(b);
  for (std::size_t i = 0; i < q.dim(); ++i) {
    if (strict ? !(q.lo[i] < b.hi[i] && b.lo[i] < q.hi[i])
               : !(q.lo[i] <= b.hi[i] && b.lo[i] <= q.hi[i]))
      return false;
  }
  return true;
}

inline bool cube_inside(const Box& q, const Box& b) {
  for (std::size_t i = 0; i < q.dim(); ++i)
    if (!(b.lo[i] <= q.lo[i] && q.hi[i] <= b.hi[i])) return false;
  return true;
}

struct ContentSearch {
  const std::vector<Box>& set;
  double s, t;
  ContentOptions opt;
  std::size_t d;
  std::size_t nodes = 0;
  bool budget_hit = false, too_coarse = false;

  // returns the optimal cost of covering set within cube; appends the cover
  double solve(const DyadicCube& c, std::vector<DyadicCube>* out) {
    ++nodes;
    const Box q = c.box();
    bool meets = false, inside = false;
    for (const auto& b : set) {
      if (cube_meets(q, b)) meets = true;
      if (cube_inside(q, b)) inside = true;
    }
    if (!meets) return 0.0;
    const double side = c.side();
    const double whole = std::pow(side, s);
    const bool whole_ok = side <= t;
    auto take_whole = [&] {
      if (out) out->push_back(c);
      return whole;
    };
    // a full cube is its own best dyadic cover when s <= d
    if (inside && whole_ok && s <= static_cast<double>(d)) return take_whole();
    if (c.generation >= opt.depth || nodes >= opt.budget) {
      if (nodes >= opt.budget) budget_hit = true;
      if (!whole_ok) too_coarse = true;
      return take_whole();
    }
    std::vector<DyadicCube> kids_cover;
    double split = 0.0;
    const std::size_t nk = std::size_t{1} << d;
    for (std::size_t m = 0; m < nk; ++m) {
      DyadicCube ch{c.generation + 1, c.corner};
      for (std::size_t i = 0; i < d; ++i) ch.corner[i] = 2 * c.corner[i] + ((m >> i) & 1U);
      split += solve(ch, out ? &kids_cover : nullptr);
      if (whole_ok && split >= whole && !out) break;
    }
    if (whole_ok && whole <= split) return take_whole();
    if (out) out->insert(out->end(), kids_cover.begin(), kids_cover.end());
    return split;
  }
};

}  // namespace detail

// Upper bound on H^s_t of a finite box union from the cheapest dyadic cover
// with generations <= depth.
inline ContentEstimate hausdorff_content_upper(const std::vector<Box>& set, double s,
                                               double t = INFINITY, ContentOptions opt = {}) {
  if (set.empty()) throw std::invalid_argument("empty set");
  if (!(s >= 0.0)) throw std::invalid_argument("s must be >= 0");
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  const std::size_t d = set[0].dim();
  Box bb = set[0];
  for (const auto& b : set) {
    if (b.dim() != d) throw std::invalid_argument("mixed dimensions");
    if (!std::isfinite(b.volume())) throw std::invalid_argument("set must be bounded");
    for (std::size_t i = 0; i < d; ++i) {
      bb.lo[i] = std::min(bb.lo[i], b.lo[i]);
      bb.hi[i] = std::max(bb.hi[i], b.hi[i]);
    }
  }
  const double extent = std::max(bb.max_side(), std::ldexp(1.0, -opt.depth));
  auto roots_at = [&](int g) {
    const double side = std::ldexp(1.0, -g);
    std::vector<std::int64_t> lo(d), hi(d);
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = static_cast<std::int64_t>(std::floor(bb.lo[i] / side));
      hi[i] = static_cast<std::int64_t>(std::floor(bb.hi[i] / side));
    }
    std::vector<DyadicCube> roots;
    std::vector<std::int64_t> cur = lo;
    while (true) {
      roots.push_back(DyadicCube{g, cur});
      std::size_t i = 0;
      for (; i < d; ++i) {
        if (cur[i] < hi[i]) {
          ++cur[i];
          break;
        }
        cur[i] = lo[i];
      }
      if (i == d) break;
    }
    return roots;
  };
  // start where cubes are at least as wide as the set; coarser roots only add
  // single cubes of cost side^s, so climb while that could still win
  int e = 0;
  std::frexp(extent, &e);  // extent <= 2^e
  int g = -e;
  ContentEstimate est;
  est.s = s;
  est.t = t;
  est.value_upper = INFINITY;
  detail::ContentSearch search{set, s, t, opt, d};
  while (true) {
    const auto roots = roots_at(g);
    std::vector<DyadicCube> cover;
    double v = 0.0;
    for (const auto& r : roots) v += search.solve(r, opt.keep_cover ? &cover : nullptr);
    if (v < est.value_upper) {
      est.value_upper = v;
      est.cover = std::move(cover);
    }
    --g;
    const double side = std::ldexp(1.0, -g);
    if (roots.size() == 1 || side > t || std::pow(side, s) >= est.value_upper) break;
  }
  est.nodes = search.nodes;
  if (search.budget_hit) est.flags.push_back("cube budget exhausted; coarser cover used");
  if (search.too_coarse) est.flags.push_back("depth too small for scale bound t");
  return est;
}

inline double g_tau(double s, const std::vector<double>& tau) {
  check_tau(tau);
  double g = -INFINITY, partial = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    partial += tau[k];
    // s tau_k - sum_{i<=k} (tau_k - tau_i)
    const double v = s * tau[k] - (static_cast<double>(k + 1) * tau[k] - partial);
    g = std::max(g, v);
  }
  return g;
}

// H^s_infty of a rectangle with base radius r, up to the diameter convention
inline double essential_rect_content(const std::vector<double>& tau, double r, double s) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("r must lie in (0,1)");
  return std::pow(r, g_tau(s, tau));
}

// smallest s with g_tau(s) >= target, by walking the upper envelope of the
// affine pieces from s = 0
inline double s0_solver(const std::vector<double>& tau, double target) {
  check_tau(tau);
  if (!(target > 0.0 && target <= static_cast<double>(tau.size())))
    throw std::invalid_argument("target must lie in (0, d]");
  struct Piece {
    double a, b;  // a s - b
  };
  std::vector<Piece> pieces;
  double partial = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    partial += tau[k];
    pieces.push_back({tau[k], static_cast<double>(k + 1) * tau[k] - partial});
  }
  // active piece at s = 0: largest value, ties to the steeper one
  std::size_t act = 0;
  for (std::size_t k = 1; k < pieces.size(); ++k)
    if (-pieces[k].b > -pieces[act].b ||
        (pieces[k].b == pieces[act].b && pieces[k].a > pieces[act].a))
      act = k;
  double s = 0.0;
  while (true) {
    const double hit = (target + pieces[act].b) / pieces[act].a;
    // next breakpoint, where a steeper piece overtakes
    double next = INFINITY;
    std::size_t nxt = act;
    for (std::size_t k = 0; k < pieces.size(); ++k)
      if (pieces[k].a > pieces[act].a) {
        const double x = (pieces[k].b - pieces[act].b) / (pieces[k].a - pieces[act].a);
        if (x >= s && (x < next || (x == next && pieces[k].a > pieces[nxt].a))) {
          next = x;
          nxt = k;
        }
      }
    if (hit <= next) return std::max(hit, s);
    s = next;
    act = nxt;
  }
}

inline double predict_shrunk_ball_dim(double dim_mu, double delta) {
  if (!(delta >= 1.0)) throw std::invalid_argument("delta must be >= 1");
  if (!(dim_mu > 0.0)) throw std::invalid_argument("dim_mu must be positive");
  return dim_mu / delta;
}

inline double predict_rect_dim(double dim_mu, const std::vector<double>& tau) {
  check_tau(tau);
  if (!(dim_mu > 0.0 && dim_mu <= static_cast<double>(tau.size())))
    throw std::invalid_argument("dim_mu must lie in (0, d]");
  double best = INFINITY, partial = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    partial += tau[i];
    const double spread = static_cast<double>(i + 1) * tau[i] - partial;
    best = std::min(best, (dim_mu + spread) / tau[i]);
  }
  return best;
}

// ---- critical exponent of a natural cover -----------------------------------

// U_n with its cover cost: balls cost size^s, rectangles cost size^g_tau(s).
// Consecutive sets with equal bucket and size are stored once with a weight.
struct NaturalCover {
  enum class Kind { balls, rectangles };
  Kind kind = Kind::balls;
  std::vector<double> tau;
  std::size_t dim = 1;
  std::size_t count = 0;         // number of sets (Q)
  std::vector<int> bucket;       // scale index of the original ball
  std::vector<double> size;      // |U_n| (balls) or |B_n| (rectangles)
  std::vector<double> weight;    // multiplicity
  std::vector<std::size_t> first;  // index of the first set of each run
  double mass_sum = 0.0;         // sum of mu(B_n) midpoints
  std::string provenance;

  // `copies` consecutive sets starting at sequence index `index`
  void add(int k, double sz, std::size_t index, std::size_t copies = 1) {
    if (index != count) throw std::invalid_argument("sets must be added in sequence order");
    const double w = static_cast<double>(copies);
    if (!size.empty() && bucket.back() == k && size.back() == sz) {
      weight.back() += w;
    } else {
      bucket.push_back(k);
      size.push_back(sz);
      weight.push_back(w);
      first.push_back(index);
    }
    count += copies;
  }

  double exponent(double s) const {
    return kind == Kind::balls ? s : g_tau(s, tau);
  }
};

// U_n = B(x_n, r_n^delta)
inline NaturalCover contracted_cover(const BallSequence& seq, double delta,
                                     const SelfSimilarMeasure* mu = nullptr,
                                     double tol = 1e-9) {
  if (!(delta >= 1.0)) throw std::invalid_argument("delta must be >= 1");
  NaturalCover nc;
  nc.dim = seq.dim();
  nc.provenance = seq.provenance() + " delta=" + std::to_string(delta);
  for (std::size_t n = 0; n < seq.size(); ++n) {
    const double r = seq.radius(n);
    nc.add(scale_index(r).k, 2.0 * std::pow(r, delta), n);
    if (mu) nc.mass_sum += eval_measure(*mu, seq.ball(n), tol).mid();
  }
  return nc;
}

// U_n = R_tau(x_n, r_n), costed through |B_n|^g_tau(s)
inline NaturalCover rectangle_cover(const BallSequence& seq, const std::vector<double>& tau,
                                    const SelfSimilarMeasure* mu = nullptr,
                                    double tol = 1e-9) {
  check_tau(tau);
  if (tau.size() != seq.dim()) throw std::invalid_argument("tau length must equal d");
  NaturalCover nc;
  nc.kind = NaturalCover::Kind::rectangles;
  nc.tau = tau;
  nc.dim = seq.dim();
  nc.provenance = seq.provenance() + " rectangles";
  for (std::size_t n = 0; n < seq.size(); ++n) {
    const double r = seq.radius(n);
    nc.add(scale_index(r).k, 2.0 * r, n);
    if (mu) nc.mass_sum += eval_measure(*mu, seq.ball(n), tol).mid();
  }
  return nc;
}

struct GridRow {
  double s = 0.0;
  double tail_sum = 0.0;
  double block_log_ratio = 0.0;  // log(last block / previous block)
};

struct DimensionReport {
  double prediction = NAN;
  std::string prediction_formula;
  double estimate = NAN;      // block-equality exponent
  double tail_estimate = NAN;  // where the raw tail sum crosses 1
  double tolerance = 0.05;
  std::size_t Q = 0;
  std::size_t tail_start = 0;
  int bucket_last = 0, bucket_prev = 0;
  std::vector<GridRow> grid;
  std::vector<std::string> flags;
};

namespace detail {

inline double block_sum(const NaturalCover& nc, int k, double s) {
  const double e = nc.exponent(s);
  double sum = 0.0;
  for (std::size_t j = 0; j < nc.size.size(); ++j)
    if (nc.bucket[j] == k) sum += nc.weight[j] * std::pow(nc.size[j], e);
  return sum;
}

inline double tail_sum(const NaturalCover& nc, std::size_t n0, double s) {
  const double e = nc.exponent(s);
  double sum = 0.0;
  for (std::size_t j = 0; j < nc.size.size(); ++j) {
    const std::size_t begin = nc.first[j];
    const std::size_t end = begin + static_cast<std::size_t>(nc.weight[j]);
    if (end <= n0) continue;
    const double w = static_cast<double>(end - std::max(begin, n0));
    sum += w * std::pow(nc.size[j], e);
  }
  return sum;
}

// first sign change of f on the grid, refined by bisection to tol
template <class F>
double grid_root(F f, const std::vector<double>& grid, const std::vector<double>& vals,
                 double tol, std::vector<std::string>& flags, const std::string& what) {
  std::vector<std::size_t> changes;
  for (std::size_t i = 1; i < vals.size(); ++i)
    if ((vals[i - 1] > 0.0) != (vals[i] > 0.0)) changes.push_back(i);
  if (changes.empty()) {
    flags.push_back(what + ": no sign change on the grid");
    return vals.front() <= 0.0 ? grid.front() : grid.back();
  }
  double lo = grid[changes.front() - 1], hi = grid[changes.back()];
  if (changes.size() > 1) flags.push_back(what + ": non-monotone on the grid; bracket widened");
  const bool pos_lo = f(lo) > 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0.0) == pos_lo)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Estimate of the critical exponent s at which sum_n cost_n(s) switches from
// divergent to convergent. The block sums over the last two complete scale
// buckets are equal exactly at that exponent for power-law families; the raw
// tail crossing sum_{n >= Q/2} cost_n(s) = 1 is reported as well.
inline DimensionReport natural_cover_critical_exponent(const NaturalCover& nc,
                                                       std::vector<double> s_grid = {},
                                                       double prediction = NAN,
                                                       double tolerance = 0.05) {
  DimensionReport rep;
  rep.prediction = prediction;
  rep.tolerance = tolerance;
  rep.Q = nc.count;
  rep.tail_start = nc.count / 2;
  const double d = static_cast<double>(nc.dim);
  if (s_grid.empty())
    for (int i = 0; i <= 100; ++i) s_grid.push_back(d * i / 100.0);
  if (nc.count == 0) {
    rep.flags.push_back("empty cover");
    return rep;
  }
  std::vector<int> buckets;
  for (auto k : nc.bucket)
    if (buckets.empty() || buckets.back() != k) buckets.push_back(k);
  std::sort(buckets.begin(), buckets.end());
  buckets.erase(std::unique(buckets.begin(), buckets.end()), buckets.end());
  // the bucket of the last set may be incomplete
  const int last_seen = nc.bucket.back();
  std::vector<int> complete;
  for (auto k : buckets)
    if (k < last_seen) complete.push_back(k);

  auto tail_f = [&](double s) { return std::log(detail::tail_sum(nc, rep.tail_start, s)); };
  std::vector<double> tail_vals;
  for (double s : s_grid) {
    GridRow row;
    row.s = s;
    row.tail_sum = detail::tail_sum(nc, rep.tail_start, s);
    tail_vals.push_back(std::log(row.tail_sum));
    rep.grid.push_back(row);
  }
  std::vector<std::string> tail_flags;
  rep.tail_estimate = detail::grid_root(tail_f, s_grid, tail_vals, 1e-3, tail_flags, "tail sum");
  for (auto& f : tail_flags) rep.flags.push_back(f);

  if (complete.size() < 2) {
    rep.flags.push_back("fewer than two complete scale buckets; degenerate cover");
    return rep;
  }
  rep.bucket_last = complete.back();
  rep.bucket_prev = complete[complete.size() - 2];
  auto block_f = [&](double s) {
    return std::log(detail::block_sum(nc, rep.bucket_last, s)) -
           std::log(detail::block_sum(nc, rep.bucket_prev, s));
  };
  std::vector<double> block_vals;
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    rep.grid[i].block_log_ratio = block_f(s_grid[i]);
    block_vals.push_back(rep.grid[i].block_log_ratio);
  }
  rep.estimate = detail::grid_root(block_f, s_grid, block_vals, 1e-3, rep.flags, "block ratio");
  return rep;
}

inline void write_dimension_csv(std::ostream& os, const DimensionReport& r) {
  os << "s_grid,tail_sum,prediction,estimate,tolerance\n";
  char buf[160];
  for (const auto& row : r.grid) {
    std::snprintf(buf, sizeof buf, "%.6g,%.17g,%.17g,%.17g,%.6g\n", row.s, row.tail_sum,
                  r.prediction, r.estimate, r.tolerance);
    os << buf;
  }
}

// ---- content equivalence --------------------------------------------------

struct ContentRow {
  int depth = 0;
  double value = 0.0;
  double ratio = 0.0;  // value / |B|^s
  double log_ratio = NAN;  // log value / log mu(region), diagnostic only
};

struct ContentCheck {
  std::vector<ContentRow> rows;
  double mass = 0.0;  // mu(region) midpoint
  double band_lo = 0.0, band_hi = 0.0;
  bool stable = false;  // band_hi / band_lo <= 2^s
  std::vector<std::string> flags;
};

// H^s_infty upper bounds of region intersected with depth-k cylinder covers of K
inline ContentCheck content_equivalence_check(const SelfSimilarMeasure& mu, const Ball& region,
                                              double s, const std::vector<int>& depths,
                                              int extra_depth = 6) {
  if (region.dim() != mu.d) throw std::invalid_argument("dimension mismatch");
  if (depths.empty()) throw std::invalid_argument("no depths");
  ContentCheck out;
  const Box rb = ball_box(region);
  const double base = std::pow(region.diameter(), s);
  out.mass = eval_measure(mu, region).mid();
  for (int k : depths) {
    std::vector<Box> pieces;
    int finest = k;
    if (mu.lebesgue) {
      Box unit = unit_box(mu.d);
      Box cap = detail::box_cap(rb, unit);
      if (!cap.empty()) pieces.push_back(cap);
    } else {
      for (const auto& c : attractor_cylinders(mu, k)) {
        Box cap = detail::box_cap(c.box, rb);
        if (!cap.empty()) pieces.push_back(cap);
      }
      double cmin = 1.0;
      for (const auto& f : mu.maps) cmin = std::min(cmin, f.ratio);
      finest = static_cast<int>(std::ceil(k * -std::log2(cmin)));
    }
    ContentRow row;
    row.depth = k;
    if (!pieces.empty()) {
      ContentOptions opt;
      opt.depth = finest + extra_depth;
      auto est = hausdorff_content_upper(pieces, s, INFINITY, opt);
      row.value = est.value_upper;
      for (auto& f : est.flags) out.flags.push_back("depth " + std::to_string(k) + ": " + f);
    }
    row.ratio = row.value / base;
    if (out.mass > 0.0 && out.mass < 1.0 && row.value > 0.0)
      row.log_ratio = std::log(row.value) / std::log(out.mass);
    out.rows.push_back(row);
  }
  out.band_lo = out.band_hi = out.rows[0].ratio;
  for (const auto& r : out.rows) {
    out.band_lo = std::min(out.band_lo, r.ratio);
    out.band_hi = std::max(out.band_hi, r.ratio);
  }
  out.stable = out.band_lo > 0.0 && out.band_hi / out.band_lo <= std::pow(2.0, s);
  return out;
}

}  // namespace limsup

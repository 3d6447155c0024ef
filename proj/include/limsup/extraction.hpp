#pragma once

// Subsequence extraction: weakly redundant covers, measure-conditioned
// filters, the diagonal construction and relevance classes.

#include "limsup/covering.hpp"
#include "limsup/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace limsup {

struct BallRecord {
  std::size_t index = 0;
  double radius = 0.0;
  double mass_lo = 0.0, mass_hi = 0.0;
  double ratio = 0.0;  // log mu(B) / log |B|
  std::string kept_by;
};

struct ScaleCertificate {
  int k = 0;
  std::size_t count = 0;     // |T_k| of the result
  std::size_t families = 0;  // origin families met by T_k
  bool disjoint = true;      // every origin family checked pairwise disjoint
};

struct ExtractionResult {
  std::string parent;
  std::vector<std::size_t> selected;  // parent indices, increasing
  std::vector<BallRecord> records;    // one per selected index
  std::vector<double> eps_schedule;
  std::vector<double> tolerance;      // per selected ball: the eps it was certified at
  std::size_t cut_index = 0;          // position in selected
  double cut_eps = 0.0;
  std::vector<ScaleCertificate> certificate;
  std::vector<std::pair<int, double>> scale_fractions;
  RedundancyReport redundancy;
  AcTable ac;
  double v = 0.0, v_prime = 0.0;
  std::vector<std::string> flags;
};

struct ExtractOptions {
  double tol = 1e-9;
  bool ac_table = true;
  std::vector<std::size_t> pool;  // restrict to these parent indices; empty = all
};

namespace detail {

inline std::vector<char> pool_mask(const BallSequence& seq, const std::vector<std::size_t>& pool) {
  std::vector<char> m(seq.size(), pool.empty() ? 1 : 0);
  for (auto i : pool) {
    if (i >= seq.size()) throw std::invalid_argument("pool index out of range");
    m[i] = 1;
  }
  return m;
}

// open box around the balls and the unit cube
inline OpenSet working_domain(const BallSequence& seq, const std::vector<char>& mask) {
  const std::size_t d = seq.dim();
  point lo(d, 0.0), hi(d, 1.0);
  for (std::size_t n = 0; n < seq.size(); ++n) {
    if (!mask[n]) continue;
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], seq.center(n, i) - seq.radius(n));
      hi[i] = std::max(hi[i], seq.center(n, i) + seq.radius(n));
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] -= 0.25;
    hi[i] += 0.25;
  }
  return open_box(lo, hi);
}

// first index after which every allowed radius is <= 2^-k
inline std::vector<std::size_t> tail_starts(const BallSequence& seq, const std::vector<char>& mask,
                                            int k_max) {
  std::vector<double> suffix_max(seq.size() + 1, 0.0);
  for (std::size_t n = seq.size(); n-- > 0;)
    suffix_max[n] = std::max(suffix_max[n + 1], mask[n] ? seq.radius(n) : 0.0);
  std::vector<std::size_t> g(static_cast<std::size_t>(k_max) + 1, seq.size());
  std::size_t n = 0;
  for (int k = 0; k <= k_max; ++k) {
    const double bound = std::ldexp(1.0, -k);
    while (n < seq.size() && suffix_max[n] > bound) ++n;
    g[static_cast<std::size_t>(k)] = n;
  }
  return g;
}

inline BallRecord make_record(const BallSequence& seq, const SelfSimilarMeasure& mu,
                              std::size_t n, double tol, std::string tag,
                              std::vector<std::string>* flags) {
  BallRecord r;
  r.index = n;
  r.radius = seq.radius(n);
  auto m = eval_measure(mu, seq.ball(n), tol);
  r.mass_lo = m.lo;
  r.mass_hi = m.hi;
  r.ratio = std::log(m.mid()) / std::log(2.0 * r.radius);
  r.kept_by = std::move(tag);
  if (flags && m.width() > tol)
    flags->push_back("mass interval wider than tol at index " + std::to_string(n));
  return r;
}

inline void attach_certificates(const BallSequence& seq, const SelfSimilarMeasure& mu,
                                ExtractionResult& res, int k_max, const ExtractOptions& opt) {
  auto sub = seq.subsequence(res.selected);
  res.redundancy = weak_redundancy_report(sub, std::max(k_max, 0));
  if (!opt.ac_table || sub.empty()) return;
  const std::vector<char> all(sub.size(), 1);
  const OpenSet dom = working_domain(sub, all);
  const Box bb = dom.bounding_box();
  point mid(sub.dim());
  for (std::size_t i = 0; i < sub.dim(); ++i) mid[i] = 0.5 * (bb.lo[i] + bb.hi[i]);
  point left_hi = bb.hi, right_lo = bb.lo;
  left_hi[0] = mid[0];
  right_lo[0] = mid[0];
  std::vector<OpenSet> oms{dom, open_box(bb.lo, left_hi), open_box(right_lo, bb.hi)};
  const std::size_t n = sub.size();
  res.ac = ac_empirical_check(sub, mu, oms, {0, n / 4, n / 2}, opt.tol);
}

}  // namespace detail

// Union over k <= k_max of greedy disjoint families from the tails of radius
// <= 2^-k. T_k of the result is covered by the families F_0..F_k.
inline ExtractionResult extract_weakly_redundant(const BallSequence& seq,
                                                 const SelfSimilarMeasure& mu, int k_max,
                                                 double target = 0.75, ExtractOptions opt = {}) {
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  ExtractionResult res;
  res.parent = seq.provenance();
  const auto mask = detail::pool_mask(seq, opt.pool);
  const OpenSet dom = detail::working_domain(seq, mask);
  const auto g = detail::tail_starts(seq, mask, k_max);
  std::vector<int> origin(seq.size(), -1);
  for (int k = 0; k <= k_max; ++k) {
    const std::size_t gk = g[static_cast<std::size_t>(k)];
    if (gk >= seq.size()) {
      res.flags.push_back("no tail with radii <= 2^-" + std::to_string(k) + "; truncated");
      break;
    }
    CoverOptions co;
    co.target = target;
    co.rounds = 1;
    co.tol = opt.tol;
    co.allowed = &mask;
    auto fam = greedy_disjoint_cover(seq, mu, dom, gk, co);
    res.scale_fractions.emplace_back(k, fam.covered_fraction);
    if (fam.covered_fraction < target)
      res.flags.push_back("scale " + std::to_string(k) + " covered " +
                          std::to_string(fam.covered_fraction) + " < target");
    for (auto n : fam.indices)
      if (origin[n] < 0) origin[n] = k;
  }
  for (std::size_t n = 0; n < seq.size(); ++n)
    if (origin[n] >= 0) {
      res.selected.push_back(n);
      res.records.push_back(detail::make_record(seq, mu, n, opt.tol,
                                                "wr:k" + std::to_string(origin[n]), nullptr));
    }
  if (res.selected.empty()) res.flags.push_back("empty result");

  // certificate: split each scale bucket by origin family and check each part
  std::map<int, std::map<int, std::vector<std::size_t>>> parts;
  for (auto n : res.selected) parts[scale_index(seq.radius(n)).k][origin[n]].push_back(n);
  for (const auto& [k, by_origin] : parts) {
    ScaleCertificate c;
    c.k = k;
    c.families = by_origin.size();
    for (const auto& [o, idx] : by_origin) {
      c.count += idx.size();
      DisjointIndex di(seq.dim());
      for (auto n : idx) {
        Ball b = seq.ball(n);
        if (di.meets(b)) c.disjoint = false;
        di.insert(b, n);
      }
    }
    res.certificate.push_back(c);
  }
  detail::attach_certificates(seq, mu, res, k_max, opt);
  return res;
}

enum class Verdict { holds, fails, undetermined };

struct PointDimResult {
  Verdict in_E = Verdict::undetermined;
  Verdict in_F = Verdict::undetermined;
};

// grid check of mu(B(x,r)) <= r^(alpha-eps) (E) and mu(B(x,r)) >= r^(gamma+eps) (F)
inline PointDimResult point_dim_predicate(const SelfSimilarMeasure& mu, const point& x,
                                          double alpha, double gamma, double rho, double eps,
                                          const std::vector<double>& r_grid,
                                          double tol = default_tol) {
  if (!(alpha <= gamma)) throw std::invalid_argument("need alpha <= gamma");
  if (r_grid.empty()) throw std::invalid_argument("empty radius grid");
  PointDimResult out{Verdict::holds, Verdict::holds};
  for (double r : r_grid) {
    if (!(r > 0.0 && r <= rho)) throw std::invalid_argument("grid radius outside (0, rho]");
    auto m = eval_measure(mu, Ball(x, r), tol);
    const double e = std::pow(r, alpha - eps), f = std::pow(r, gamma + eps);
    if (m.lo > e)
      out.in_E = Verdict::fails;
    else if (m.hi > e && out.in_E == Verdict::holds)
      out.in_E = Verdict::undetermined;
    if (m.hi < f)
      out.in_F = Verdict::fails;
    else if (m.lo < f && out.in_F == Verdict::holds)
      out.in_F = Verdict::undetermined;
  }
  return out;
}

inline double require_exact_dimension(const SelfSimilarMeasure& mu) {
  if (!mu.lebesgue && !mu.osc_asserted)
    throw std::invalid_argument(
        "measure is not known to be exact-dimensional (open set condition not asserted)");
  return measure_dimension(mu);
}

// hi(mu(B)) <= |B|^(dim - eps)
inline bool passes_lower(const MeasureInterval& m, double diam, double dim, double eps) {
  return m.hi <= std::pow(diam, dim - eps);
}
// lo(mu(B)) >= |B|^(dim + eps)
inline bool passes_upper(const MeasureInterval& m, double diam, double dim, double eps) {
  return m.lo >= std::pow(diam, dim + eps);
}

namespace detail {

template <class Pred>
ExtractionResult filter_sequence(const BallSequence& seq, const SelfSimilarMeasure& mu,
                                 const ExtractOptions& opt, const std::string& tag, Pred keep) {
  ExtractionResult res;
  res.parent = seq.provenance();
  const auto mask = pool_mask(seq, opt.pool);
  for (std::size_t n = 0; n < seq.size(); ++n) {
    if (!mask[n]) continue;
    auto m = eval_measure(mu, seq.ball(n), opt.tol);
    if (!keep(m, 2.0 * seq.radius(n))) continue;
    res.selected.push_back(n);
    res.records.push_back(make_record(seq, mu, n, opt.tol, tag, &res.flags));
  }
  if (res.selected.empty()) res.flags.push_back("empty result");
  return res;
}

}  // namespace detail

inline ExtractionResult extract_lower_conditioned(const BallSequence& seq,
                                                  const SelfSimilarMeasure& mu, double eps,
                                                  ExtractOptions opt = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const double dim = require_exact_dimension(mu);
  auto res = detail::filter_sequence(seq, mu, opt, "lower",
                                     [&](const MeasureInterval& m, double diam) {
                                       return passes_lower(m, diam, dim, eps);
                                     });
  res.eps_schedule = {eps};
  detail::attach_certificates(seq, mu, res, 0, opt);
  return res;
}

inline ExtractionResult extract_upper_conditioned(const BallSequence& seq,
                                                  const SelfSimilarMeasure& mu, double eps,
                                                  double v, double v_prime = -1.0,
                                                  ExtractOptions opt = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (v_prime < 0.0) v_prime = (v + 1.0) / 2.0;
  if (!(0.0 < v && v < v_prime && v_prime < 1.0))
    throw std::invalid_argument("need 0 < v < v' < 1");
  const double dim = require_exact_dimension(mu);
  auto res = detail::filter_sequence(seq, mu, opt, "upper",
                                     [&](const MeasureInterval& m, double diam) {
                                       return passes_upper(m, diam, dim, eps);
                                     });
  res.eps_schedule = {eps};
  res.v = v;
  res.v_prime = v_prime;
  detail::attach_certificates(seq, mu, res, 0, opt);
  return res;
}

inline std::vector<double> default_schedule(std::size_t n) {
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = 1.0 / static_cast<double>(i + 2);
  return e;
}

struct ConditionedOptions {
  double sub_target = 0.5;   // share of the residual mass each sub-step must cover
  double step_target = 0.9;  // share of the domain a step must cover
  double cut_eps = 0.1;
  double tol = 1e-9;
  bool ac_table = true;
  std::vector<std::size_t> pool;
};

// Diagonal construction. Step k covers the domain with disjoint balls of index
// >= g_k (radius <= 2^-k); its sub-step i keeps only balls passing both
// filters at eps_{i+k-1} and stops once it has covered sub_target of what the
// earlier sub-steps left.
inline ExtractionResult extract_conditioned(const BallSequence& seq,
                                            const SelfSimilarMeasure& mu,
                                            std::vector<double> schedule, int k_max,
                                            ConditionedOptions opt = {}) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  if (schedule.empty()) schedule = default_schedule(static_cast<std::size_t>(k_max) + 16);
  for (std::size_t i = 0; i < schedule.size(); ++i)
    if (!(schedule[i] > 0.0) || (i > 0 && schedule[i] > schedule[i - 1]))
      throw std::invalid_argument("schedule must be positive and non-increasing");
  const double dim = require_exact_dimension(mu);

  ExtractionResult res;
  res.parent = seq.provenance();
  res.eps_schedule = schedule;
  res.cut_eps = opt.cut_eps;
  const auto mask = detail::pool_mask(seq, opt.pool);
  const OpenSet dom = detail::working_domain(seq, mask);
  const double mass_dom = eval_measure_open(mu, dom, opt.tol).mid();
  const auto g = detail::tail_starts(seq, mask, k_max);

  struct Cand {
    std::size_t idx;
    MeasureInterval m;
    double diam;
  };
  std::vector<double> best_eps(seq.size(), INFINITY);
  std::vector<int> step_of(seq.size(), 0);
  for (int k = 1; k <= k_max; ++k) {
    const std::size_t gk = g[static_cast<std::size_t>(k)];
    if (gk >= seq.size()) {
      res.flags.push_back("no tail with radii <= 2^-" + std::to_string(k) + "; truncated");
      break;
    }
    std::vector<Cand> cand;
    for (std::size_t n = gk; n < seq.size(); ++n) {
      if (!mask[n]) continue;
      Ball b = seq.ball(n);
      const double diam = 2.0 * b.radius;
      if (diam >= 1.0 || !dom.contains(b)) continue;
      cand.push_back({n, eval_measure(mu, b, opt.tol), diam});
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const Cand& a, const Cand& b) { return a.m.mid() > b.m.mid(); });
    DisjointIndex sel(seq.dim());
    std::vector<char> taken(cand.size(), 0);
    double covered = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k) - 1; i < schedule.size(); ++i) {
      const double eps = schedule[i];
      const double goal = covered + opt.sub_target * (mass_dom - covered);
      for (std::size_t c = 0; c < cand.size() && covered < goal; ++c) {
        if (taken[c]) continue;
        if (!passes_lower(cand[c].m, cand[c].diam, dim, eps) ||
            !passes_upper(cand[c].m, cand[c].diam, dim, eps))
          continue;
        Ball b = seq.ball(cand[c].idx);
        if (sel.meets(b)) continue;
        sel.insert(b, cand[c].idx);
        taken[c] = 1;
        covered += cand[c].m.mid();
        const std::size_t n = cand[c].idx;
        if (eps < best_eps[n]) {
          best_eps[n] = eps;
          step_of[n] = k;
        }
      }
      if (covered >= opt.step_target * mass_dom) break;
    }
    const double frac = mass_dom > 0.0 ? covered / mass_dom : 0.0;
    res.scale_fractions.emplace_back(k, frac);
    if (frac < opt.step_target)
      res.flags.push_back("step " + std::to_string(k) + " covered " + std::to_string(frac) +
                          " < step target; truncated");
  }
  for (std::size_t n = 0; n < seq.size(); ++n) {
    if (!std::isfinite(best_eps[n])) continue;
    char tag[64];
    std::snprintf(tag, sizeof tag, "cond:s%d:e%.6g", step_of[n], best_eps[n]);
    res.selected.push_back(n);
    res.tolerance.push_back(best_eps[n]);
    res.records.push_back(detail::make_record(seq, mu, n, opt.tol, tag, &res.flags));
  }
  if (res.selected.empty()) res.flags.push_back("empty result");
  // beyond the cut every ball was certified at eps <= cut_eps
  res.cut_index = 0;
  for (std::size_t p = 0; p < res.selected.size(); ++p)
    if (res.tolerance[p] > opt.cut_eps) res.cut_index = p + 1;
  ExtractOptions eo;
  eo.tol = opt.tol;
  eo.ac_table = opt.ac_table;
  detail::attach_certificates(seq, mu, res, k_max, eo);
  return res;
}

struct RelevanceWindow {
  std::size_t g = 0;
  double mass_gt = 0.0;  // mu of the union of v B over B_gt with index >= g
  double mass_lt = 0.0;  // mu of the union of B over B_lt with index >= g
  bool upper_bound = false;  // d >= 2: sums instead of unions
};

struct RelevanceReport {
  std::vector<std::size_t> B_gt, B_lt;
  std::vector<RelevanceWindow> windows;
};

namespace detail {

// mu of a union of balls: exact merge in d = 1, subadditive sum otherwise
inline double union_mass(const SelfSimilarMeasure& mu, std::vector<Ball> balls, double tol,
                         bool& upper) {
  if (balls.empty()) return 0.0;
  if (balls[0].dim() != 1) {
    upper = true;
    double s = 0.0;
    for (const auto& b : balls) s += eval_measure(mu, b, tol).mid();
    return std::min(s, 1.0);
  }
  std::sort(balls.begin(), balls.end(), [](const Ball& a, const Ball& b) {
    return a.center[0] - a.radius < b.center[0] - b.radius;
  });
  double s = 0.0;
  double lo = balls[0].center[0] - balls[0].radius, hi = balls[0].center[0] + balls[0].radius;
  auto flush = [&] { s += eval_measure_box(mu, Box{{lo}, {hi}, false}, tol).mid(); };
  for (std::size_t i = 1; i < balls.size(); ++i) {
    const double a = balls[i].center[0] - balls[i].radius, b = balls[i].center[0] + balls[i].radius;
    if (a <= hi) {
      hi = std::max(hi, b);
    } else {
      flush();
      lo = a;
      hi = b;
    }
  }
  flush();
  return std::min(s, 1.0);
}

}  // namespace detail

// B_gt: mu(B) <= |B|^(dim+eps); B_lt: mu(B) >= |B|^(dim-eps)
inline RelevanceReport classify_relevance(const BallSequence& seq, const SelfSimilarMeasure& mu,
                                          double eps, double v, int windows = 6,
                                          double tol = default_tol) {
  if (!(0.0 < v && v < 1.0)) throw std::invalid_argument("v must lie in (0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const double dim = require_exact_dimension(mu);
  RelevanceReport rep;
  for (std::size_t n = 0; n < seq.size(); ++n) {
    auto m = eval_measure(mu, seq.ball(n), tol);
    const double diam = 2.0 * seq.radius(n);
    if (m.mid() <= std::pow(diam, dim + eps)) rep.B_gt.push_back(n);
    if (m.mid() >= std::pow(diam, dim - eps)) rep.B_lt.push_back(n);
  }
  const std::size_t N = seq.size();
  for (int j = 0; j < windows; ++j) {
    RelevanceWindow w;
    w.g = N - (N >> j);
    std::vector<Ball> gt, lt;
    for (auto n : rep.B_gt)
      if (n >= w.g) gt.push_back(scale_ball(seq.ball(n), v));
    for (auto n : rep.B_lt)
      if (n >= w.g) lt.push_back(seq.ball(n));
    w.mass_gt = detail::union_mass(mu, std::move(gt), tol, w.upper_bound);
    w.mass_lt = detail::union_mass(mu, std::move(lt), tol, w.upper_bound);
    rep.windows.push_back(w);
  }
  return rep;
}

inline void write_extraction_csv(std::ostream& os, const ExtractionResult& r) {
  os << "index,radius,mass_lo,mass_hi,ratio,kept_by\n";
  char buf[160];
  for (const auto& x : r.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,", x.index, x.radius, x.mass_lo,
                  x.mass_hi, x.ratio);
    os << buf << x.kept_by << '\n';
  }
}

}  // namespace limsup

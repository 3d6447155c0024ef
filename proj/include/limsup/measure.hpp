#pragma once

// Self-similar measures built from homotheties x -> c x + t, evaluated on
// balls and boxes by breadth-first cylinder refinement.

#include "limsup/geometry.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace limsup {

struct SimilarityMap {
  double ratio = 0.5;
  point translation;

  point apply(const point& x) const {
    point y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = ratio * x[i] + translation[i];
    return y;
  }
};

struct SelfSimilarMeasure {
  std::vector<SimilarityMap> maps;
  std::vector<double> probs;
  bool osc_asserted = false;
  bool lebesgue = false;
  std::size_t d = 1;

  std::size_t size() const { return maps.size(); }
};

inline void validate(const SelfSimilarMeasure& mu) {
  if (mu.maps.size() < 2) throw std::invalid_argument("need at least 2 maps");
  if (mu.probs.size() != mu.maps.size())
    throw std::invalid_argument("one probability per map");
  double s = 0.0;
  for (double p : mu.probs) {
    if (!(p > 0.0)) throw std::invalid_argument("probabilities must be positive");
    s += p;
  }
  if (std::fabs(s - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
  for (const auto& f : mu.maps) {
    if (!(f.ratio > 0.0 && f.ratio < 1.0))
      throw std::invalid_argument("ratio must lie in (0,1)");
    if (f.translation.size() != mu.d) throw std::invalid_argument("translation has wrong d");
    for (double t : f.translation)
      if (t < -1e-12 || t + f.ratio > 1.0 + 1e-12)
        throw std::invalid_argument("map does not send [0,1]^d into itself");
  }
}

inline SelfSimilarMeasure make_measure(std::vector<SimilarityMap> maps,
                                       std::vector<double> probs, bool osc) {
  SelfSimilarMeasure mu;
  mu.d = maps.empty() ? 1 : maps[0].translation.size();
  mu.maps = std::move(maps);
  mu.probs = std::move(probs);
  mu.osc_asserted = osc;
  validate(mu);
  return mu;
}

// Lebesgue on [0,1]^d as the 2^d-map dyadic IFS
inline SelfSimilarMeasure lebesgue(std::size_t d) {
  if (d == 0) throw std::invalid_argument("d >= 1");
  SelfSimilarMeasure mu;
  mu.d = d;
  mu.lebesgue = true;
  mu.osc_asserted = true;
  const std::size_t m = std::size_t{1} << d;
  for (std::size_t w = 0; w < m; ++w) {
    point t(d);
    for (std::size_t i = 0; i < d; ++i) t[i] = ((w >> i) & 1U) ? 0.5 : 0.0;
    mu.maps.push_back({0.5, t});
    mu.probs.push_back(1.0 / static_cast<double>(m));
  }
  return mu;
}

// middle-third Cantor measure with weights (p, 1-p)
inline SelfSimilarMeasure cantor(double p = 0.5) {
  return make_measure({{1.0 / 3.0, {0.0}}, {1.0 / 3.0, {2.0 / 3.0}}}, {p, 1.0 - p}, true);
}

struct MeasureInterval {
  double lo = 0.0, hi = 0.0;
  bool budget_exceeded = false;
  bool precision_limited = false;  // straddlers below double resolution
  std::size_t nodes = 0;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

inline constexpr double default_tol = 1e-9;
inline constexpr std::size_t default_budget = 10'000'000;

namespace detail {

// Cylinder t + c [0,1]^d.  The *_err fields bound the distance between the
// stored doubles and the exact products of the map parameters; they stay 0
// whenever the arithmetic was exact (dyadic data).
struct Cyl {
  double scale;
  double scale_err;
  point shift;
  std::vector<double> shift_err;
  double weight;
};

inline double two_sum_err(double a, double b, double s) {
  double bb = s - a;
  return std::fabs((a - (s - bb)) + (b - bb));
}

inline double pad(double x, double e) {
  return e == 0.0 ? 0.0 : 2.0 * e + 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(x) +
                              std::numeric_limits<double>::denorm_min();
}

inline Cyl child(const Cyl& c, const SimilarityMap& f, double p) {
  Cyl ch;
  ch.scale = c.scale * f.ratio;
  ch.scale_err = std::fabs(std::fma(c.scale, f.ratio, -ch.scale)) + c.scale_err * f.ratio;
  ch.shift.resize(c.shift.size());
  ch.shift_err.resize(c.shift.size());
  for (std::size_t i = 0; i < c.shift.size(); ++i) {
    const double t = f.translation[i];
    const double prod = c.scale * t;
    const double e1 = std::fabs(std::fma(c.scale, t, -prod)) + c.scale_err * std::fabs(t);
    ch.shift[i] = c.shift[i] + prod;
    ch.shift_err[i] = c.shift_err[i] + e1 + two_sum_err(c.shift[i], prod, ch.shift[i]);
  }
  ch.weight = c.weight * p;
  return ch;
}

// below this size rounding noise swamps the cylinder and refining is useless
inline bool resolvable(const Cyl& c) {
  double e = c.scale_err;
  for (std::size_t i = 0; i < c.shift.size(); ++i)
    e = std::max(e, c.shift_err[i] + 4.0 * std::numeric_limits<double>::epsilon() *
                                         (std::fabs(c.shift[i]) + c.scale));
  return c.scale > 64.0 * e;
}

enum class Where { inside, outside, straddle };

inline Where classify(const Cyl& c, const Box& region) {
  bool inside = true;
  for (std::size_t i = 0; i < region.dim(); ++i) {
    const double lo = c.shift[i];
    const double hi = lo + c.scale;
    const double elo = pad(lo, c.shift_err[i]);
    const double ehi = pad(hi, c.shift_err[i] + c.scale_err + two_sum_err(lo, c.scale, hi));
    const double a = region.lo[i], b = region.hi[i];
    // certain bounds on the true endpoints
    const double lo_min = lo - elo, hi_max = hi + ehi;
    if (region.open) {
      if (hi_max <= a || lo_min >= b) return Where::outside;
      if (!(lo_min > a && hi_max < b)) inside = false;
    } else {
      if (hi_max < a || lo_min > b) return Where::outside;
      if (!(lo_min >= a && hi_max <= b)) inside = false;
    }
  }
  return inside ? Where::inside : Where::straddle;
}

inline MeasureInterval lebesgue_box(const Box& x) {
  double v = 1.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    double a = std::max(0.0, x.lo[i]), b = std::min(1.0, x.hi[i]);
    v *= std::max(0.0, b - a);
  }
  MeasureInterval r;
  r.lo = r.hi = v;
  return r;
}

}  // namespace detail

inline MeasureInterval eval_measure_box(const SelfSimilarMeasure& mu, const Box& region,
                                        double tol = default_tol,
                                        std::size_t budget = default_budget) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (region.dim() != mu.d) throw std::invalid_argument("region dimension mismatch");
  if (mu.lebesgue) return detail::lebesgue_box(region);
  using detail::Cyl;
  using detail::Where;
  MeasureInterval out;
  std::vector<Cyl> level{{1.0, 0.0, point(mu.d, 0.0), std::vector<double>(mu.d, 0.0), 1.0}};
  std::vector<Cyl> next;
  double inside = 0.0, stuck = 0.0;
  std::size_t nodes = 1;
  while (true) {
    double straddle = 0.0;
    next.clear();
    for (auto& c : level) {
      switch (detail::classify(c, region)) {
        case Where::inside: inside += c.weight; break;
        case Where::outside: break;
        case Where::straddle:
          if (detail::resolvable(c)) {
            straddle += c.weight;
            next.push_back(std::move(c));
          } else {
            stuck += c.weight;
          }
          break;
      }
    }
    out.lo = inside;
    out.hi = std::min(1.0, inside + straddle + stuck);
    out.nodes = nodes;
    if (straddle + stuck < tol) return out;
    if (next.empty()) {
      out.precision_limited = true;
      return out;
    }
    if (nodes + next.size() * mu.size() > budget) {
      out.budget_exceeded = true;
      return out;
    }
    level.clear();
    for (const auto& c : next)
      for (std::size_t j = 0; j < mu.size(); ++j)
        level.push_back(detail::child(c, mu.maps[j], mu.probs[j]));
    nodes += level.size();
  }
}

inline MeasureInterval eval_measure(const SelfSimilarMeasure& mu, const Ball& b,
                                    double tol = default_tol,
                                    std::size_t budget = default_budget) {
  if (b.dim() != mu.d) throw std::invalid_argument("ball dimension mismatch");
  return eval_measure_box(mu, ball_box(b), tol, budget);
}

struct LocalDimSample {
  double r = 0.0;
  double ratio = 0.0;
  bool defined = true;
};

struct LocalDimProfile {
  point x;
  std::vector<LocalDimSample> samples;
  double liminf_est = NAN, limsup_est = NAN;
};

inline LocalDimProfile local_dimension(const SelfSimilarMeasure& mu, const point& x,
                                       const std::vector<double>& r_grid,
                                       double tol = default_tol) {
  if (r_grid.size() < 3) throw std::invalid_argument("need at least 3 radii");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0 && r_grid[i] < 1.0))
      throw std::invalid_argument("radii must lie in (0,1)");
    if (i > 0 && !(r_grid[i] < r_grid[i - 1]))
      throw std::invalid_argument("radii must be decreasing");
  }
  LocalDimProfile p;
  p.x = x;
  for (double r : r_grid) {
    auto m = eval_measure(mu, Ball(x, r), tol);
    LocalDimSample s{r, NAN, m.lo > 0.0};
    if (s.defined) s.ratio = std::log(m.mid()) / std::log(r);
    p.samples.push_back(s);
  }
  const std::size_t start = p.samples.size() / 2;
  for (std::size_t i = start; i < p.samples.size(); ++i) {
    if (!p.samples[i].defined) continue;
    double v = p.samples[i].ratio;
    if (std::isnan(p.liminf_est) || v < p.liminf_est) p.liminf_est = v;
    if (std::isnan(p.limsup_est) || v > p.limsup_est) p.limsup_est = v;
  }
  return p;
}

// entropy over Lyapunov exponent; needs the open set condition
inline double measure_dimension(const SelfSimilarMeasure& mu) {
  if (mu.lebesgue) return static_cast<double>(mu.d);
  if (!mu.osc_asserted)
    throw std::invalid_argument(
        "measure dimension needs the open set condition; set osc 1 if it holds");
  double h = 0.0, l = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    h += mu.probs[i] * std::log(mu.probs[i]);
    l += mu.probs[i] * std::log(mu.maps[i].ratio);
  }
  return h / l;
}

struct Cylinder {
  Box box;
  double weight = 1.0;
  std::vector<int> word;
};

inline std::vector<Cylinder> attractor_cylinders(const SelfSimilarMeasure& mu, int depth,
                                                 std::size_t budget = default_budget) {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  const double m = static_cast<double>(mu.size());
  if (std::pow(m, depth) > static_cast<double>(budget)) {
    int ok = static_cast<int>(std::floor(std::log(static_cast<double>(budget)) / std::log(m)));
    throw std::invalid_argument("too many cylinders at depth " + std::to_string(depth) +
                                "; try depth " + std::to_string(ok));
  }
  std::vector<Cylinder> cur{{unit_box(mu.d), 1.0, {}}}, next;
  for (int k = 0; k < depth; ++k) {
    next.clear();
    for (const auto& c : cur) {
      const double s = c.box.hi[0] - c.box.lo[0];
      for (std::size_t j = 0; j < mu.size(); ++j) {
        Cylinder ch;
        ch.box = Box{point(mu.d), point(mu.d), false};
        for (std::size_t i = 0; i < mu.d; ++i) {
          ch.box.lo[i] = c.box.lo[i] + s * mu.maps[j].translation[i];
          ch.box.hi[i] = ch.box.lo[i] + s * mu.maps[j].ratio;
        }
        ch.weight = c.weight * mu.probs[j];
        ch.word = c.word;
        ch.word.push_back(static_cast<int>(j));
        next.push_back(std::move(ch));
      }
    }
    cur.swap(next);
  }
  return cur;
}

// "m d" / m lines "ratio t1..td prob" / "osc 0|1", or "lebesgue d"
inline SelfSimilarMeasure parse_measure(std::istream& in) {
  std::string first;
  while (std::getline(in, first) && (first.empty() || first[0] == '#')) {}
  std::istringstream hs(first);
  std::string tok;
  hs >> tok;
  if (tok == "lebesgue") {
    std::size_t d = 1;
    hs >> d;
    return lebesgue(d);
  }
  std::size_t m = std::stoul(tok), d = 0;
  if (!(hs >> d) || d == 0) throw std::invalid_argument("measure header must be 'm d'");
  std::vector<SimilarityMap> maps;
  std::vector<double> probs;
  std::string line;
  while (maps.size() < m && std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SimilarityMap f;
    f.translation.resize(d);
    double p = 0;
    if (!(ls >> f.ratio)) throw std::invalid_argument("bad map line: " + line);
    for (auto& t : f.translation)
      if (!(ls >> t)) throw std::invalid_argument("bad map line: " + line);
    if (!(ls >> p)) throw std::invalid_argument("bad map line: " + line);
    maps.push_back(f);
    probs.push_back(p);
  }
  if (maps.size() != m) throw std::invalid_argument("expected " + std::to_string(m) + " maps");
  bool osc = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    int v = 0;
    if (ls >> key && key == "osc" && ls >> v) {
      osc = v != 0;
      break;
    }
  }
  return make_measure(std::move(maps), std::move(probs), osc);
}

inline SelfSimilarMeasure parse_measure_spec(const std::string& spec) {
  std::istringstream is(spec);
  return parse_measure(is);
}

inline SelfSimilarMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open measure file " + path);
  return parse_measure(in);
}

inline std::string format_measure(const SelfSimilarMeasure& mu) {
  if (mu.lebesgue) return "lebesgue " + std::to_string(mu.d) + "\n";
  std::ostringstream os;
  os.precision(17);
  os << mu.size() << ' ' << mu.d << '\n';
  for (std::size_t j = 0; j < mu.size(); ++j) {
    os << mu.maps[j].ratio;
    for (double t : mu.maps[j].translation) os << ' ' << t;
    os << ' ' << mu.probs[j] << '\n';
  }
  os << "osc " << (mu.osc_asserted ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace limsup

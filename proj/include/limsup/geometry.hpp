#pragma once

// Sup-norm balls, anisotropic rectangles and dyadic cubes.
//
// Coordinates are 64-bit doubles.  A double is a dyadic rational, and every
// order test below (disjointness, containment) is decided exactly through
// exact::sign_of_sum, so results never depend on rounding.

#include "limsup/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace limsup {

using point = std::vector<double>;

// closed ball {y : |y - center|_inf <= radius}
struct Ball {
  point center;
  double radius = 1.0;

  Ball() = default;
  Ball(point c, double r) : center(std::move(c)), radius(r) {
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("ball radius must be positive and finite");
    if (center.empty()) throw std::invalid_argument("ball needs d >= 1");
  }

  std::size_t dim() const { return center.size(); }
  double diameter() const { return 2.0 * radius; }
};

// axis-aligned box; `open` selects (lo,hi) versus [lo,hi]
struct Box {
  point lo, hi;
  bool open = false;

  std::size_t dim() const { return lo.size(); }
  bool empty() const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (open ? !(lo[i] < hi[i]) : !(lo[i] <= hi[i])) return true;
    }
    return false;
  }
  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
  }
  double max_side() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) s = std::max(s, hi[i] - lo[i]);
    return s;
  }
};

inline Box unit_box(std::size_t d, bool open = false) {
  return Box{point(d, 0.0), point(d, 1.0), open};
}

inline Box ball_box(const Ball& b) {
  Box x{point(b.dim()), point(b.dim()), false};
  for (std::size_t i = 0; i < b.dim(); ++i) {
    x.lo[i] = b.center[i] - b.radius;
    x.hi[i] = b.center[i] + b.radius;
  }
  return x;
}

// open rectangle x + prod (-r^{tau_i}/2, r^{tau_i}/2)
struct Rectangle {
  point center;
  double base_radius = 1.0;
  std::vector<double> tau;

  std::vector<double> sides() const {
    std::vector<double> s(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) s[i] = std::pow(base_radius, tau[i]);
    return s;
  }
  Box box() const {
    auto s = sides();
    Box x{point(center.size()), point(center.size()), true};
    for (std::size_t i = 0; i < center.size(); ++i) {
      x.lo[i] = center[i] - s[i] / 2.0;
      x.hi[i] = center[i] + s[i] / 2.0;
    }
    return x;
  }
};

// [k_i 2^-g, (k_i+1) 2^-g) per axis
struct DyadicCube {
  int generation = 0;
  std::vector<std::int64_t> corner;

  double side() const { return std::ldexp(1.0, -generation); }
  Box box() const {
    Box x{point(corner.size()), point(corner.size()), false};
    for (std::size_t i = 0; i < corner.size(); ++i) {
      x.lo[i] = std::ldexp(static_cast<double>(corner[i]), -generation);
      x.hi[i] = std::ldexp(static_cast<double>(corner[i] + 1), -generation);
    }
    return x;
  }
  bool operator==(const DyadicCube&) const = default;
};

inline void require_same_dim(const Ball& a, const Ball& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
}

inline Ball scale_ball(const Ball& b, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("scale factor must be > 0");
  return Ball(b.center, t * b.radius);
}

struct Contracted {
  Ball ball;
  bool expansion = false;  // delta < 1
};

inline Contracted contract_ball(const Ball& b, double delta) {
  return Contracted{Ball(b.center, std::pow(b.radius, delta)), delta < 1.0};
}

inline void check_tau(const std::vector<double>& tau) {
  if (tau.empty()) throw std::invalid_argument("tau is empty");
  if (tau[0] < 1.0) throw std::invalid_argument("tau_1 must be >= 1");
  for (std::size_t i = 1; i < tau.size(); ++i)
    if (tau[i] < tau[i - 1]) throw std::invalid_argument("tau must be non-decreasing");
}

inline Rectangle rectangle_from_ball(const Ball& b, const std::vector<double>& tau) {
  check_tau(tau);
  if (tau.size() != b.dim()) throw std::invalid_argument("tau length must equal d");
  return Rectangle{b.center, b.radius, tau};
}

struct ScaleIndex {
  int k = 0;
  bool flagged = false;  // radius > 1
};

// unique k with 2^{-k-1} < r <= 2^{-k}
inline ScaleIndex scale_index(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
  if (r > 1.0) return {-1, true};
  int e = 0;
  double m = std::frexp(r, &e);
  return {m == 0.5 ? 1 - e : -e, false};
}
inline ScaleIndex scale_index(const Ball& b) { return scale_index(b.radius); }

// minimal generation-k cover of a closed box
inline std::vector<DyadicCube> dyadic_cover(const Box& region, int k) {
  const std::size_t d = region.dim();
  std::vector<std::int64_t> first(d), last(d);
  for (std::size_t i = 0; i < d; ++i) {
    first[i] = static_cast<std::int64_t>(std::floor(std::ldexp(region.lo[i], k)));
    last[i] = static_cast<std::int64_t>(std::floor(std::ldexp(region.hi[i], k)));
    if (last[i] < first[i]) return {};
  }
  std::vector<DyadicCube> out;
  std::vector<std::int64_t> cur = first;
  while (true) {
    out.push_back(DyadicCube{k, cur});
    std::size_t i = 0;
    for (; i < d; ++i) {
      if (cur[i] < last[i]) {
        ++cur[i];
        break;
      }
      cur[i] = first[i];
    }
    if (i == d) break;
  }
  return out;
}

// closed balls: disjoint iff some axis gap exceeds ra + rb
inline bool balls_disjoint(const Ball& a, const Ball& b) {
  require_same_dim(a, b);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (exact::sign_of_sum({a.center[i], -b.center[i], -a.radius, -b.radius}) > 0) return true;
    if (exact::sign_of_sum({b.center[i], -a.center[i], -a.radius, -b.radius}) > 0) return true;
  }
  return false;
}

inline bool balls_intersect_after_scaling(const Ball& a, const Ball& b, double factor) {
  return !balls_disjoint(scale_ball(a, factor), scale_ball(b, factor));
}

// closed ball a inside closed ball b
inline bool ball_in_ball(const Ball& a, const Ball& b) {
  require_same_dim(a, b);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (exact::sign_of_sum({a.center[i], a.radius, -b.center[i], -b.radius}) > 0) return false;
    if (exact::sign_of_sum({b.center[i], -b.radius, -a.center[i], a.radius}) > 0) return false;
  }
  return true;
}

// closed ball inside a box (strict on open faces)
inline bool ball_in_box(const Ball& b, const Box& x) {
  for (std::size_t i = 0; i < b.dim(); ++i) {
    int lo = exact::sign_of_sum({x.lo[i], -b.center[i], b.radius});  // lo - (c - r)
    int hi = exact::sign_of_sum({b.center[i], b.radius, -x.hi[i]});  // (c + r) - hi
    if (x.open ? (lo >= 0 || hi >= 0) : (lo > 0 || hi > 0)) return false;
  }
  return true;
}

// closed box [a,b] inside a union of open boxes; exact
inline bool closed_box_in_open_union(const Box& c, const std::vector<Box>& opens,
                                     std::size_t from = 0) {
  if (c.empty()) return true;
  if (from == opens.size()) return false;
  const Box& o = opens[from];
  const std::size_t d = c.dim();
  // no overlap with this box: pass through unchanged
  bool meets = true;
  for (std::size_t i = 0; i < d; ++i)
    if (!(exact::less(c.lo[i], o.hi[i]) && exact::less(o.lo[i], c.hi[i]))) meets = false;
  if (!meets) return closed_box_in_open_union(c, opens, from + 1);
  // c \ o is covered by closed slabs {x_i <= o.lo_i} and {x_i >= o.hi_i}
  for (std::size_t i = 0; i < d; ++i) {
    if (exact::less_equal(c.lo[i], o.lo[i])) {
      Box p = c;
      p.hi[i] = o.lo[i];
      if (!closed_box_in_open_union(p, opens, from + 1)) return false;
    }
    if (exact::less_equal(o.hi[i], c.hi[i])) {
      Box p = c;
      p.lo[i] = o.hi[i];
      if (!closed_box_in_open_union(p, opens, from + 1)) return false;
    }
  }
  return true;
}

inline bool ball_in_open_union(const Ball& b, const std::vector<Box>& opens) {
  for (const auto& o : opens)
    if (ball_in_box(b, o)) return true;
  return closed_box_in_open_union(ball_box(b), opens);
}

// closed intersection of two closed balls, empty box when disjoint
inline Box intersection_box(const Ball& a, const Ball& b) {
  require_same_dim(a, b);
  Box x{point(a.dim()), point(a.dim()), false};
  for (std::size_t i = 0; i < a.dim(); ++i) {
    x.lo[i] = std::max(a.center[i] - a.radius, b.center[i] - b.radius);
    x.hi[i] = std::min(a.center[i] + a.radius, b.center[i] + b.radius);
  }
  return x;
}

// "d c1 .. cd r"
inline std::string format_ball(const Ball& b) {
  std::ostringstream os;
  os.precision(17);
  os << b.dim();
  for (double c : b.center) os << ' ' << c;
  os << ' ' << b.radius;
  return os.str();
}

inline Ball parse_ball(const std::string& line) {
  std::istringstream is(line);
  std::size_t d = 0;
  if (!(is >> d) || d == 0) throw std::invalid_argument("bad ball line: " + line);
  point c(d);
  for (auto& x : c)
    if (!(is >> x)) throw std::invalid_argument("bad ball line: " + line);
  double r = 0;
  if (!(is >> r)) throw std::invalid_argument("bad ball line: " + line);
  return Ball(std::move(c), r);
}

}  // namespace limsup

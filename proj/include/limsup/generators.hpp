#pragma once

// Ball-sequence generators: Farey balls, random (Shepp) balls, IFS orbits,
// dyadic inballs.
//
// Random numbers: std::mt19937_64 (its output sequence is fixed by the C++
// standard) with u = (x >> 11) * 2^-53, so runs are bit-reproducible across
// compilers.  Distributions from <random> are avoided on purpose.

#include "limsup/covering.hpp"
#include "limsup/measure.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace limsup {

inline constexpr const char* prng_name = "mt19937_64/u53";

class Uniform01 {
 public:
  explicit Uniform01(std::uint64_t seed) : g_(seed) {}
  double operator()() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 g_;
};

// B(p/q, 1/q^2), 0 <= p <= q <= q_max, gcd(p,q) = 1, by q then p
inline BallSequence gen_farey(std::int64_t q_max) {
  if (q_max < 1) throw std::invalid_argument("q_max must be >= 1");
  BallSequence s(1, "farey q_max=" + std::to_string(q_max));
  // 1 + sum phi(q) ~ 3 q^2 / pi^2
  s.reserve(static_cast<std::size_t>(0.31 * static_cast<double>(q_max) *
                                     static_cast<double>(q_max)) + 16);
  for (std::int64_t q = 1; q <= q_max; ++q) {
    const double qq = static_cast<double>(q);
    const double r = 1.0 / (qq * qq);
    for (std::int64_t p = 0; p <= q; ++p)
      if (std::gcd(p, q) == 1) s.push(static_cast<double>(p) / qq, r);
  }
  return s;
}

struct SheppDiagnostic {
  std::vector<double> partial;  // sum_{n<=N} n^-2 exp(l_1 + ... + l_n), N = 1..n
  double block_ratio = 0.0;     // last doubling block over the previous one
  bool divergent = false;
};

inline SheppDiagnostic shepp_diagnostic(const std::vector<double>& lengths) {
  SheppDiagnostic d;
  double cum = 0.0, s = 0.0;
  for (std::size_t n = 1; n <= lengths.size(); ++n) {
    cum += lengths[n - 1];
    s += std::exp(cum - 2.0 * std::log(static_cast<double>(n)));
    d.partial.push_back(s);
  }
  const std::size_t N = d.partial.size();
  if (N >= 8) {
    const double last = d.partial[N - 1] - d.partial[N / 2 - 1];
    const double prev = d.partial[N / 2 - 1] - d.partial[N / 4 - 1];
    d.block_ratio = prev > 0.0 ? last / prev : 0.0;
    d.divergent = d.block_ratio >= 0.99;
  }
  return d;
}

struct RandomBalls {
  BallSequence seq;
  SheppDiagnostic shepp;
};

// centres uniform in [0,1]^d, |B_n| = l_n
inline RandomBalls gen_random(std::size_t n, const std::vector<double>& lengths,
                              std::uint64_t seed, std::size_t d = 1) {
  if (lengths.size() < n) throw std::invalid_argument("need one length per ball");
  RandomBalls out{BallSequence(d, "random seed=" + std::to_string(seed)), {}};
  out.seq.reserve(n);
  Uniform01 u(seed);
  std::vector<double> used(lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    point c(d);
    for (auto& x : c) x = u();
    out.seq.push(Ball(std::move(c), used[i] / 2.0));
  }
  out.shepp = shepp_diagnostic(used);
  return out;
}

inline std::vector<double> harmonic_lengths(std::size_t n, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = a / static_cast<double>(i + 1);
  return l;
}

inline RandomBalls gen_random(std::size_t n, double a, std::uint64_t seed, std::size_t d = 1) {
  return gen_random(n, harmonic_lengths(n, a), seed, d);
}

// sup-norm diameter of the attractor (hull from the extreme fixed points)
inline double attractor_diameter(const SelfSimilarMeasure& mu) {
  double diam = 0.0;
  for (std::size_t i = 0; i < mu.d; ++i) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& f : mu.maps) {
      const double fp = f.translation[i] / (1.0 - f.ratio);
      lo = std::min(lo, fp);
      hi = std::max(hi, fp);
    }
    diam = std::max(diam, hi - lo);
  }
  return diam;
}

namespace detail {

inline bool in_cylinders(const SelfSimilarMeasure& mu, const point& x, double scale,
                         const point& shift, int depth) {
  const double slack = 1e-12;
  for (std::size_t i = 0; i < mu.d; ++i)
    if (x[i] < shift[i] - slack || x[i] > shift[i] + scale + slack) return false;
  if (depth == 0) return true;
  for (const auto& f : mu.maps) {
    point s(mu.d);
    for (std::size_t i = 0; i < mu.d; ++i) s[i] = shift[i] + scale * f.translation[i];
    if (in_cylinders(mu, x, scale * f.ratio, s, depth - 1)) return true;
  }
  return false;
}

}  // namespace detail

// B(f_w(x), factor |K| c_w) for all words |w| <= depth, by length then lexicographic
inline BallSequence gen_ifs_orbit(const SelfSimilarMeasure& mu, const point& x, int depth,
                                  double factor = 3.0) {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  if (x.size() != mu.d) throw std::invalid_argument("point dimension mismatch");
  if (!detail::in_cylinders(mu, x, 1.0, point(mu.d, 0.0), 8))
    throw std::invalid_argument("point is not in any depth-8 cylinder of the attractor");
  const double diam = attractor_diameter(mu);
  BallSequence s(mu.d, "ifs depth=" + std::to_string(depth));
  // f_w = f_{i_1} o ... o f_{i_k} kept as the homothety (c_w, t_w);
  // appending i on the right gives (c_w c_i, t_w + c_w t_i)
  struct Node {
    double c;
    point t;
  };
  std::vector<Node> level{{1.0, point(mu.d, 0.0)}}, next;
  for (int len = 0; len <= depth; ++len) {
    for (const auto& nd : level) {
      point img(mu.d);
      for (std::size_t i = 0; i < mu.d; ++i) img[i] = nd.c * x[i] + nd.t[i];
      s.push(Ball(std::move(img), factor * diam * nd.c));
    }
    if (len == depth) break;
    next.clear();
    next.reserve(level.size() * mu.size());
    for (const auto& nd : level)
      for (const auto& f : mu.maps) {
        Node ch{nd.c * f.ratio, point(mu.d)};
        for (std::size_t i = 0; i < mu.d; ++i) ch.t[i] = nd.t[i] + nd.c * f.translation[i];
        next.push_back(std::move(ch));
      }
    level.swap(next);
  }
  return s;
}

// inballs of all generation-k dyadic cubes of [0,1]^d, k = 0..k_max
inline BallSequence gen_dyadic_inballs(int k_max, std::size_t d = 1) {
  BallSequence s(d, "dyadic k_max=" + std::to_string(k_max));
  for (int k = 0; k <= k_max; ++k) {
    const std::int64_t n = std::int64_t{1} << k;
    std::vector<std::int64_t> j(d, 0);
    const double r = std::ldexp(1.0, -k - 1);
    while (true) {
      point c(d);
      for (std::size_t i = 0; i < d; ++i)
        c[i] = std::ldexp(2.0 * static_cast<double>(j[i]) + 1.0, -k - 1);
      s.push(Ball(std::move(c), r));
      std::size_t i = d;
      while (i-- > 0) {
        if (++j[i] < n) break;
        j[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
  }
  return s;
}

}  // namespace limsup

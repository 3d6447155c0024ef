#pragma once

// Ball sequences, greedy disjoint covers of open box-unions, Besicovitch-type
// partitions, weak-redundancy profiles and Borel-Cantelli sums.

#include "limsup/geometry.hpp"
#include "limsup/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace limsup {

class BallSequence {
 public:
  explicit BallSequence(std::size_t d = 1, std::string provenance = {})
      : d_(d), provenance_(std::move(provenance)) {}

  std::size_t dim() const { return d_; }
  std::size_t size() const { return radii_.size(); }
  bool empty() const { return radii_.empty(); }
  const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  void reserve(std::size_t n) {
    radii_.reserve(n);
    centers_.reserve(n * d_);
  }
  void push(const Ball& b) {
    if (b.dim() != d_) throw std::invalid_argument("ball dimension differs from sequence");
    centers_.insert(centers_.end(), b.center.begin(), b.center.end());
    radii_.push_back(b.radius);
  }
  // 1-d fast path
  void push(double c, double r) {
    if (d_ != 1) throw std::invalid_argument("scalar push needs d = 1");
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    centers_.push_back(c);
    radii_.push_back(r);
  }

  double radius(std::size_t i) const { return radii_[i]; }
  double center(std::size_t i, std::size_t j) const { return centers_[i * d_ + j]; }
  Ball ball(std::size_t i) const {
    return Ball(point(centers_.begin() + static_cast<std::ptrdiff_t>(i * d_),
                      centers_.begin() + static_cast<std::ptrdiff_t>((i + 1) * d_)),
                radii_[i]);
  }
  const std::vector<double>& radii() const { return radii_; }

  // T_k: indices with 2^{-k-1} < r <= 2^{-k}; k = -1 collects radii > 1
  std::map<int, std::vector<std::size_t>> scale_buckets() const {
    std::map<int, std::vector<std::size_t>> t;
    for (std::size_t i = 0; i < size(); ++i) t[scale_index(radii_[i]).k].push_back(i);
    return t;
  }

  BallSequence subsequence(const std::vector<std::size_t>& idx) const {
    BallSequence s(d_, provenance_);
    s.reserve(idx.size());
    for (auto i : idx) s.push(ball(i));
    return s;
  }

 private:
  std::size_t d_;
  std::vector<double> centers_;
  std::vector<double> radii_;
  std::string provenance_;
};

inline void write_sequence(std::ostream& os, const BallSequence& s) {
  for (std::size_t i = 0; i < s.size(); ++i) os << format_ball(s.ball(i)) << '\n';
}

inline BallSequence read_sequence(std::istream& in) {
  std::string line;
  std::size_t d = 0;
  BallSequence s;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    Ball b = parse_ball(line);
    if (d == 0) {
      d = b.dim();
      s = BallSequence(d, "file");
    }
    s.push(b);
  }
  return s;
}

inline BallSequence load_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open sequence file " + path);
  return read_sequence(in);
}

// finite union of open boxes
struct OpenSet {
  std::vector<Box> boxes;

  std::size_t dim() const { return boxes.empty() ? 0 : boxes[0].dim(); }
  bool contains(const Ball& b) const { return ball_in_open_union(b, boxes); }
  Box bounding_box() const {
    Box bb = boxes.at(0);
    for (const auto& x : boxes)
      for (std::size_t i = 0; i < x.dim(); ++i) {
        bb.lo[i] = std::min(bb.lo[i], x.lo[i]);
        bb.hi[i] = std::max(bb.hi[i], x.hi[i]);
      }
    return bb;
  }
};

inline OpenSet open_box(point lo, point hi) {
  return OpenSet{{Box{std::move(lo), std::move(hi), true}}};
}

// "box lo_1 .. lo_d hi_1 .. hi_d" per line
inline OpenSet parse_open_set(std::istream& in) {
  OpenSet o;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key != "box") throw std::invalid_argument("expected 'box': " + line);
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (v.empty() || v.size() % 2) throw std::invalid_argument("box needs 2d numbers: " + line);
    const std::size_t d = v.size() / 2;
    Box b{point(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d)),
          point(v.begin() + static_cast<std::ptrdiff_t>(d), v.end()), true};
    if (!o.boxes.empty() && d != o.dim()) throw std::invalid_argument("mixed box dimensions");
    if (b.empty()) throw std::invalid_argument("empty box: " + line);
    o.boxes.push_back(b);
  }
  if (o.boxes.empty()) throw std::invalid_argument("open set has no boxes");
  return o;
}

inline OpenSet parse_open_set_spec(const std::string& s) {
  std::istringstream is(s);
  return parse_open_set(is);
}

// mu of a box-union by coordinate compression; box faces are treated as null
inline MeasureInterval eval_measure_open(const SelfSimilarMeasure& mu, const OpenSet& o,
                                         double tol = default_tol) {
  if (o.boxes.size() == 1) return eval_measure_box(mu, o.boxes[0], tol);
  const std::size_t d = o.dim();
  std::vector<std::vector<double>> cuts(d);
  for (const auto& b : o.boxes)
    for (std::size_t i = 0; i < d; ++i) {
      cuts[i].push_back(b.lo[i]);
      cuts[i].push_back(b.hi[i]);
    }
  std::size_t cells = 1;
  for (auto& c : cuts) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    cells *= c.size() - 1;
  }
  MeasureInterval out;
  std::vector<std::size_t> at(d, 0);
  for (std::size_t n = 0; n < cells; ++n) {
    std::size_t r = n;
    Box cell{point(d), point(d), true};
    for (std::size_t i = 0; i < d; ++i) {
      at[i] = r % (cuts[i].size() - 1);
      r /= cuts[i].size() - 1;
      cell.lo[i] = cuts[i][at[i]];
      cell.hi[i] = cuts[i][at[i] + 1];
    }
    bool in = false;
    for (const auto& b : o.boxes) {
      bool inside = true;
      for (std::size_t i = 0; i < d; ++i)
        inside = inside && b.lo[i] <= cell.lo[i] && cell.hi[i] <= b.hi[i];
      in = in || inside;
    }
    if (!in) continue;
    auto m = eval_measure_box(mu, cell, tol / static_cast<double>(cells));
    out.lo += m.lo;
    out.hi += m.hi;
    out.budget_exceeded = out.budget_exceeded || m.budget_exceeded;
    out.precision_limited = out.precision_limited || m.precision_limited;
  }
  out.hi = std::min(out.hi, 1.0);
  return out;
}

// Index of closed balls answering "does b meet any stored ball" exactly.
// Balls are hashed per radius octave on a grid of that octave's size; hash
// collisions only cost extra exact checks.
class DisjointIndex {
 public:
  explicit DisjointIndex(std::size_t d) : d_(d), lo_(d), hi_(d), cur_(d) {}

  void insert(const Ball& b, std::size_t id) {
    if (b.dim() != d_) throw std::invalid_argument("ball dimension differs from index");
    if (line_mode_) {
      // stays valid while the stored intervals are pairwise disjoint
      if (line_meeting(b) != npos) {
        line_mode_ = false;
        for (std::size_t m = 0; m < balls_.size(); ++m) grid_insert(m);
      } else {
        line_.emplace(b.center[0], balls_.size());
      }
    }
    balls_.push_back(b);
    ids_.push_back(id);
    if (!line_mode_) grid_insert(balls_.size() - 1);
  }

  std::size_t size() const { return balls_.size(); }

  // first stored id meeting b, or npos
  std::size_t first_meeting(const Ball& b) const {
    if (line_mode_) {
      auto m = line_meeting(b);
      return m == npos ? npos : ids_[m];
    }
    for (const auto& [k, lvl] : levels_) {
      const double cs = cell_size(k);
      double cells = 1.0;
      for (std::size_t i = 0; i < d_; ++i) {
        // stored radii are <= cs; widen for rounding in the cell arithmetic
        const double reach = (b.radius + cs) * (1.0 + 1e-12) + 1e-300;
        const double slack = 1e-12 * std::fabs(b.center[i]);
        lo_[i] = cell_of(b.center[i] - reach - slack, cs);
        hi_[i] = cell_of(b.center[i] + reach + slack, cs);
        cells *= static_cast<double>(hi_[i] - lo_[i] + 1);
      }
      if (cells > static_cast<double>(lvl.members.size())) {
        for (auto m : lvl.members)
          if (!balls_disjoint(balls_[m], b)) return ids_[m];
        continue;
      }
      cur_ = lo_;
      while (true) {
        auto it = lvl.cells.find(key(cur_));
        if (it != lvl.cells.end())
          for (auto m : it->second)
            if (!balls_disjoint(balls_[m], b)) return ids_[m];
        std::size_t i = 0;
        for (; i < d_; ++i) {
          if (cur_[i] < hi_[i]) {
            ++cur_[i];
            break;
          }
          cur_[i] = lo_[i];
        }
        if (i == d_) break;
      }
    }
    return npos;
  }

  bool meets(const Ball& b) const { return first_meeting(b) != npos; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Level {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
    std::vector<std::size_t> members;
  };

  // disjoint stored intervals: if any meets b, one of the two whose centres
  // flank b's centre does
  std::size_t line_meeting(const Ball& b) const {
    auto it = line_.lower_bound(b.center[0]);
    if (it != line_.end() && !balls_disjoint(balls_[it->second], b)) return it->second;
    if (it != line_.begin() && !balls_disjoint(balls_[std::prev(it)->second], b))
      return std::prev(it)->second;
    return npos;
  }

  void grid_insert(std::size_t m) {
    const Ball& b = balls_[m];
    const int k = bucket_of(b.radius);
    auto& lvl = levels_[k];
    const double cs = cell_size(k);
    for (std::size_t i = 0; i < d_; ++i) cur_[i] = cell_of(b.center[i], cs);
    lvl.cells[key(cur_)].push_back(m);
    lvl.members.push_back(m);
  }

  static int bucket_of(double r) {
    int e = 0;
    std::frexp(r, &e);
    return e;  // r <= 2^e
  }
  static double cell_size(int k) { return std::ldexp(1.0, k); }
  static std::int64_t cell_of(double x, double cs) {
    return static_cast<std::int64_t>(std::floor(x / cs));
  }
  static std::uint64_t key(const std::vector<std::int64_t>& v) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto x : v) {
      std::uint64_t z = static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + h;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      h = z ^ (z >> 31);
    }
    return h;
  }

  std::size_t d_;
  bool line_mode_ = d_ == 1;
  std::map<double, std::size_t> line_;
  std::map<int, Level> levels_;
  std::vector<Ball> balls_;
  std::vector<std::size_t> ids_;
  mutable std::vector<std::int64_t> lo_, hi_, cur_;
};

struct CoverFamily {
  std::vector<std::size_t> indices;  // selection order
  OpenSet omega;
  double covered_fraction = 0.0;
  std::size_t min_index = 0;
  std::vector<double> round_fractions;
  std::vector<std::string> flags;
};

struct CoverOptions {
  double target = 0.75;
  int rounds = 1;
  double tol = 1e-9;
  const std::vector<char>* allowed = nullptr;  // optional mask over sequence indices
};

// Greedy disjoint cover of omega by balls of index >= g.
// A round scans the candidates inside the residual by decreasing mass
// (ties to lower index) and keeps every ball missing the selection so far.
inline CoverFamily greedy_disjoint_cover(const BallSequence& seq, const SelfSimilarMeasure& mu,
                                         const OpenSet& omega, std::size_t g,
                                         CoverOptions opt = {}) {
  if (!(opt.target > 0.0 && opt.target < 1.0))
    throw std::invalid_argument("target must lie in (0,1)");
  if (omega.dim() != seq.dim() || seq.dim() != mu.d)
    throw std::invalid_argument("dimension mismatch between sequence, measure and omega");
  CoverFamily out;
  out.omega = omega;
  out.min_index = g;
  const auto om = eval_measure_open(mu, omega, opt.tol);
  const double mass_omega = om.mid();

  struct Cand {
    std::size_t idx;
    double mass;
  };
  std::vector<Cand> cand;
  const Box bb = omega.bounding_box();
  for (std::size_t n = g; n < seq.size(); ++n) {
    if (opt.allowed && !(*opt.allowed)[n]) continue;
    bool quick = true;
    for (std::size_t i = 0; i < seq.dim() && quick; ++i)
      quick = seq.center(n, i) - seq.radius(n) >= bb.lo[i] &&
              seq.center(n, i) + seq.radius(n) <= bb.hi[i];
    if (!quick) continue;
    Ball b = seq.ball(n);
    if (!omega.contains(b)) continue;
    cand.push_back({n, eval_measure(mu, b, opt.tol).mid()});
  }
  if (cand.empty()) {
    out.flags.push_back("no ball of index >= g fits inside omega");
    return out;
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Cand& a, const Cand& b) { return a.mass > b.mass; });

  DisjointIndex sel(seq.dim());
  std::vector<char> taken(cand.size(), 0);
  double covered = 0.0;
  for (int round = 0; round < std::max(1, opt.rounds); ++round) {
    std::size_t added = 0;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      if (taken[c]) continue;
      Ball b = seq.ball(cand[c].idx);
      if (sel.meets(b)) continue;
      sel.insert(b, cand[c].idx);
      taken[c] = 1;
      out.indices.push_back(cand[c].idx);
      covered += cand[c].mass;
      ++added;
    }
    out.covered_fraction = mass_omega > 0.0 ? std::min(1.0, covered / mass_omega) : 0.0;
    out.round_fractions.push_back(out.covered_fraction);
    if (out.covered_fraction >= opt.target || added == 0) break;
  }
  if (mass_omega <= 0.0) out.flags.push_back("omega has zero mass");
  if (out.covered_fraction < opt.target) out.flags.push_back("target fraction not reached");
  return out;
}

struct AuditResult {
  bool disjoint = true;
  bool contained = true;
  std::string detail;
};

// exact post-hoc check of a CoverFamily
inline AuditResult audit_cover(const BallSequence& seq, const CoverFamily& f) {
  AuditResult a;
  DisjointIndex idx(seq.dim());
  for (auto n : f.indices) {
    Ball b = seq.ball(n);
    if (!f.omega.contains(b)) {
      a.contained = false;
      a.detail = "ball " + std::to_string(n) + " leaves omega";
    }
    auto hit = idx.first_meeting(b);
    if (hit != DisjointIndex::npos) {
      a.disjoint = false;
      a.detail = "balls " + std::to_string(hit) + " and " + std::to_string(n) + " meet";
    }
    idx.insert(b, n);
  }
  return a;
}

// ---- Besicovitch-type partitions -------------------------------------------

using Families = std::vector<std::vector<std::size_t>>;

struct SortResult {
  Families families;
  std::size_t bound = 0;  // 1 + max earlier meets
};

inline std::vector<std::size_t> scale_order(const std::vector<Ball>& balls) {
  std::vector<std::size_t> order(balls.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scale_index(balls[a].radius).k < scale_index(balls[b].radius).k;
  });
  return order;
}

// balls with v-scaled copies pairwise disjoint -> families of disjoint balls
inline SortResult sort_disjoint_families(const std::vector<Ball>& balls, double v) {
  if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("v must lie in (0,1]");
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j)
      if (!balls_disjoint(scale_ball(balls[i], v), scale_ball(balls[j], v)))
        throw std::invalid_argument("v-scaled balls " + std::to_string(i) + " and " +
                                    std::to_string(j) + " intersect");
  SortResult out;
  auto order = scale_order(balls);
  std::vector<DisjointIndex> fam_idx;
  std::size_t worst = 0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Ball& b = balls[order[pos]];
    std::size_t meets = 0;
    for (std::size_t q = 0; q < pos; ++q)
      if (!balls_disjoint(balls[order[q]], b)) ++meets;
    worst = std::max(worst, meets);
    std::size_t f = 0;
    for (; f < fam_idx.size(); ++f)
      if (!fam_idx[f].meets(b)) break;
    if (f == fam_idx.size()) {
      fam_idx.emplace_back(b.dim());
      out.families.emplace_back();
    }
    fam_idx[f].insert(b, order[pos]);
    out.families[f].push_back(order[pos]);
  }
  out.bound = worst + 1;
  return out;
}

struct PartitionResult {
  std::vector<std::size_t> selected;  // Besicovitch subfamily
  Families families;
};

// minimal interval colouring (d = 1): sort by left end, reuse a family whose
// last interval ends strictly before
inline Families interval_coloring(const std::vector<Ball>& balls,
                                  const std::vector<std::size_t>& which) {
  std::vector<std::size_t> order = which;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return exact::less(balls[a].center[0] - balls[a].radius,
                       balls[b].center[0] - balls[b].radius) ||
           (!exact::less(balls[b].center[0] - balls[b].radius,
                         balls[a].center[0] - balls[a].radius) &&
            a < b);
  });
  Families fams;
  std::vector<std::size_t> last;
  // (right end of last member, family) ordered by right end
  std::multimap<double, std::size_t> open;
  for (auto i : order) {
    const Ball& b = balls[i];
    std::size_t f = fams.size();
    auto it = open.begin();
    if (it != open.end() && balls_disjoint(balls[last[it->second]], b)) {
      f = it->second;
      open.erase(it);
    }
    if (f == fams.size()) {
      fams.emplace_back();
      last.push_back(i);
    }
    fams[f].push_back(i);
    last[f] = i;
    open.emplace(b.center[0] + b.radius, f);
  }
  return fams;
}

inline constexpr std::size_t besicovitch_exact_limit = 16;

inline PartitionResult besicovitch_partition(const std::vector<Ball>& balls, double v) {
  if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("v must lie in (0,1]");
  PartitionResult out;
  if (balls.empty()) return out;
  for (const auto& b : balls)
    if (!std::isfinite(b.radius)) throw std::invalid_argument("unbounded family");
  // greedy selection by decreasing radius: keep a ball when its centre is not
  // yet covered
  std::vector<std::size_t> order(balls.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return balls[a].radius > balls[b].radius; });
  for (auto i : order) {
    bool covered = false;
    for (auto s : out.selected) {
      bool in = true;
      for (std::size_t j = 0; j < balls[i].dim() && in; ++j)
        in = exact::sign_of_sum({balls[i].center[j], -balls[s].center[j], -balls[s].radius}) <= 0 &&
             exact::sign_of_sum({balls[s].center[j], -balls[i].center[j], -balls[s].radius}) <= 0;
      if (in) {
        covered = true;
        break;
      }
    }
    if (!covered) out.selected.push_back(i);
  }
  std::vector<Ball> dilated;
  dilated.reserve(balls.size());
  for (const auto& b : balls) dilated.push_back(scale_ball(b, 1.0 / v));
  if (balls[0].dim() == 1) {
    out.families = interval_coloring(dilated, out.selected);
    if (balls.size() > besicovitch_exact_limit) return out;
    // small d = 1 input: search all centre-covering subfamilies for fewer families
    const std::size_t n = balls.size();
    std::vector<std::uint32_t> cov(n, 0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < n; ++c)
        if (exact::sign_of_sum({balls[c].center[0], -balls[s].center[0], -balls[s].radius}) <= 0 &&
            exact::sign_of_sum({balls[s].center[0], -balls[c].center[0], -balls[s].radius}) <= 0)
          cov[s] |= std::uint32_t{1} << c;
    const std::uint32_t all = (std::uint32_t{1} << n) - 1;
    for (std::uint32_t mask = 1; mask <= all; ++mask) {
      std::uint32_t u = 0;
      std::vector<std::size_t> sub;
      for (std::size_t s = 0; s < n; ++s)
        if ((mask >> s) & 1U) {
          u |= cov[s];
          sub.push_back(s);
        }
      if (u != all) continue;
      Families f = interval_coloring(dilated, sub);
      if (f.size() < out.families.size()) {
        out.families = std::move(f);
        out.selected = std::move(sub);
      }
    }
    return out;
  }
  // scale-ordered first fit on the dilated balls
  std::vector<Ball> sel;
  for (auto i : out.selected) sel.push_back(balls[i]);
  auto ord = scale_order(sel);
  std::vector<DisjointIndex> fam_idx;
  for (auto p : ord) {
    const Ball& b = dilated[out.selected[p]];
    std::size_t f = 0;
    for (; f < fam_idx.size(); ++f)
      if (!fam_idx[f].meets(b)) break;
    if (f == fam_idx.size()) {
      fam_idx.emplace_back(b.dim());
      out.families.emplace_back();
    }
    fam_idx[f].insert(b, out.selected[p]);
    out.families[f].push_back(out.selected[p]);
  }
  return out;
}

struct OverlapResult {
  std::size_t count = 0;
  bool precondition_ok = true;
};

inline OverlapResult overlap_count(const std::vector<Ball>& family, const Ball& probe, double v) {
  OverlapResult out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family[i].radius < probe.radius) out.precondition_ok = false;
    for (std::size_t j = i + 1; j < family.size(); ++j)
      if (!balls_disjoint(scale_ball(family[i], v), scale_ball(family[j], v)))
        out.precondition_ok = false;
    if (!balls_disjoint(family[i], probe)) ++out.count;
  }
  return out;
}

// ---- weak redundancy ---------------------------------------------------------

struct ScaleRow {
  int k = 0;
  std::size_t count = 0;
  std::size_t J = 0;
};

struct RedundancyReport {
  std::vector<ScaleRow> rows;
  double slope_tail = 0.0;
  int k_min = 1;
  bool minimal = true;  // exact colouring (d = 1) or an upper bound
  std::map<int, Families> families;
};

inline Families color_bucket(const BallSequence& seq, const std::vector<std::size_t>& idx) {
  if (seq.dim() == 1) {
    std::vector<Ball> bs;
    bs.reserve(idx.size());
    for (auto i : idx) bs.push_back(seq.ball(i));
    std::vector<std::size_t> all(bs.size());
    std::iota(all.begin(), all.end(), 0);
    Families local = interval_coloring(bs, all);
    for (auto& f : local)
      for (auto& x : f) x = idx[x];
    return local;
  }
  Families fams;
  std::vector<DisjointIndex> fi;
  for (auto i : idx) {
    Ball b = seq.ball(i);
    std::size_t f = 0;
    for (; f < fi.size(); ++f)
      if (!fi[f].meets(b)) break;
    if (f == fi.size()) {
      fi.emplace_back(seq.dim());
      fams.emplace_back();
    }
    fi[f].insert(b, i);
    fams[f].push_back(i);
  }
  return fams;
}

inline double tail_slope(const std::vector<ScaleRow>& rows, int k_min) {
  double s = 0.0;
  for (const auto& r : rows)
    if (r.k >= k_min && r.k >= 1 && r.J > 0)
      s = std::max(s, std::log2(static_cast<double>(r.J)) / r.k);
  return s;
}

inline RedundancyReport weak_redundancy_report(const BallSequence& seq, int k_max,
                                               int k_min = -1, bool keep_families = false) {
  RedundancyReport rep;
  rep.k_min = k_min >= 0 ? k_min : std::max(1, (k_max + 1) / 2);
  rep.minimal = seq.dim() == 1;
  for (const auto& [k, idx] : seq.scale_buckets()) {
    if (k < 0 || k > k_max) continue;
    Families f = color_bucket(seq, idx);
    rep.rows.push_back({k, idx.size(), f.size()});
    if (keep_families) rep.families[k] = std::move(f);
  }
  rep.slope_tail = tail_slope(rep.rows, rep.k_min);
  return rep;
}

inline void write_redundancy_csv(std::ostream& os, const RedundancyReport& r) {
  os << "k,count,J_k,slope\n";
  char buf[64];
  for (const auto& row : r.rows) {
    double s = row.k > 0 ? std::log2(static_cast<double>(row.J)) / row.k : 0.0;
    std::snprintf(buf, sizeof buf, "%.10g", s);
    os << row.k << ',' << row.count << ',' << row.J << ',' << buf << '\n';
  }
}

// ---- mu-a.c. evidence ------------------------------------------------------

struct AcRow {
  std::size_t omega = 0;
  std::size_t g = 0;
  double fraction = 0.0;
};

struct AcTable {
  std::vector<AcRow> rows;
  double c_empirical = 0.0;
  std::size_t tested_depth = 0;  // largest g tried
};

inline AcTable ac_empirical_check(const BallSequence& seq, const SelfSimilarMeasure& mu,
                                  const std::vector<OpenSet>& omegas,
                                  const std::vector<std::size_t>& gs, double tol = 1e-9) {
  AcTable t;
  t.c_empirical = 1.0;
  for (std::size_t o = 0; o < omegas.size(); ++o)
    for (auto g : gs) {
      CoverOptions opt;
      opt.target = 1.0 - 1e-12;
      opt.rounds = 1;
      opt.tol = tol;
      auto f = greedy_disjoint_cover(seq, mu, omegas[o], g, opt);
      t.rows.push_back({o, g, f.covered_fraction});
      t.c_empirical = std::min(t.c_empirical, f.covered_fraction);
      t.tested_depth = std::max(t.tested_depth, g);
    }
  if (t.rows.empty()) t.c_empirical = 0.0;
  return t;
}

// ---- Borel-Cantelli sums ---------------------------------------------------

struct BCReport {
  Ball B;
  double mass_B = 0.0;
  std::vector<std::size_t> selected;
  std::vector<double> S, P, ratio;  // entry q-1 holds the value at Q = q
  bool quasi_independent = false;   // ratio <= C at some Q
  std::vector<std::string> flags;
};

inline BCReport borel_cantelli_check(const BallSequence& seq, const SelfSimilarMeasure& mu,
                                     const Ball& B, std::size_t Q_max, double C,
                                     std::vector<std::size_t> strategy = {},
                                     double tol = 1e-12) {
  BCReport rep;
  rep.B = B;
  rep.mass_B = eval_measure(mu, B, tol).mid();
  if (strategy.empty()) {
    for (std::size_t n = 0; n < seq.size() && strategy.size() < Q_max; ++n)
      if (ball_in_ball(seq.ball(n), B)) strategy.push_back(n);
  } else {
    for (auto n : strategy)
      if (!ball_in_ball(seq.ball(n), B))
        throw std::invalid_argument("strategy ball " + std::to_string(n) + " is not inside B");
    if (strategy.size() > Q_max) strategy.resize(Q_max);
  }
  rep.selected = strategy;
  if (strategy.size() < 2) rep.flags.push_back("fewer than 2 balls selected");
  std::vector<Ball> L;
  L.reserve(strategy.size());
  for (auto n : strategy) L.push_back(seq.ball(n));
  double S = 0.0, P = 0.0;
  for (std::size_t q = 0; q < L.size(); ++q) {
    const double m = eval_measure(mu, L[q], tol).mid();
    S += m;
    P += m;
    double cross = 0.0;
    for (std::size_t s = 0; s < q; ++s) {
      if (balls_disjoint(L[s], L[q])) continue;
      cross += eval_measure_box(mu, intersection_box(L[s], L[q]), tol).mid();
    }
    P += 2.0 * cross;
    rep.S.push_back(S);
    rep.P.push_back(P);
    const double r = S > 0.0 ? P * rep.mass_B / (S * S) : INFINITY;
    rep.ratio.push_back(r);
    if (r <= C) rep.quasi_independent = true;
  }
  if (!rep.quasi_independent) rep.flags.push_back("ratio exceeds C at every Q");
  return rep;
}

}  // namespace limsup

#include "limsup/covering.hpp"
#include "limsup/generators.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace limsup;

namespace {

std::size_t first_index_with_radius_below(const BallSequence& s, double r) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.radius(i) < r) return i;
  return s.size();
}

void expect_audit(const BallSequence& s, const CoverFamily& f) {
  auto a = audit_cover(s, f);
  EXPECT_TRUE(a.disjoint) << a.detail;
  EXPECT_TRUE(a.contained) << a.detail;
}

bool colourable(const std::vector<std::vector<bool>>& adj, std::vector<std::size_t>& col,
                std::size_t i, std::size_t k) {
  if (i == adj.size()) return true;
  for (std::size_t c = 0; c < k; ++c) {
    bool ok = true;
    for (std::size_t j = 0; j < i && ok; ++j) ok = !(adj[i][j] && col[j] == c);
    if (!ok) continue;
    col[i] = c;
    if (colourable(adj, col, i + 1, k)) return true;
  }
  return false;
}

// chromatic number of a small graph by backtracking
std::size_t brute_chromatic(const std::vector<std::vector<bool>>& adj) {
  std::vector<std::size_t> col(adj.size(), 0);
  for (std::size_t k = 1; k <= adj.size(); ++k)
    if (colourable(adj, col, 0, k)) return k;
  return 0;
}

// min over centre-covering subfamilies of the number of families with
// pairwise disjoint (1/v)-dilations
std::size_t brute_partition_min(const std::vector<Ball>& balls, double v) {
  const std::size_t n = balls.size();
  std::size_t best = n;
  for (std::uint32_t mask = 1; mask < (1U << n); ++mask) {
    bool covers = true;
    for (std::size_t c = 0; c < n && covers; ++c) {
      bool hit = false;
      for (std::size_t s = 0; s < n && !hit; ++s)
        if ((mask >> s) & 1U)
          hit = std::fabs(balls[c].center[0] - balls[s].center[0]) <= balls[s].radius;
      covers = hit;
    }
    if (!covers) continue;
    std::vector<std::size_t> idx;
    for (std::size_t s = 0; s < n; ++s)
      if ((mask >> s) & 1U) idx.push_back(s);
    std::vector<std::vector<bool>> adj(idx.size(), std::vector<bool>(idx.size(), false));
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j)
        if (i != j)
          adj[i][j] = !balls_disjoint(scale_ball(balls[idx[i]], 1 / v), scale_ball(balls[idx[j]], 1 / v));
    best = std::min(best, brute_chromatic(adj));
  }
  return best;
}

}  // namespace

TEST(BallSequence, BucketsMatchScaleIndex) {
  auto s = gen_farey(30);
  std::size_t total = 0;
  for (const auto& [k, idx] : s.scale_buckets()) {
    total += idx.size();
    for (auto i : idx) EXPECT_EQ(scale_index(s.radius(i)).k, k);
  }
  EXPECT_EQ(total, s.size());
}

TEST(GreedyCover, DyadicInballsReachNinety) {
  auto s = gen_dyadic_inballs(14);
  CoverOptions opt;
  opt.target = 0.9;
  opt.rounds = 4;
  auto f = greedy_disjoint_cover(s, lebesgue(1), open_box({0.0}, {1.0}), 0, opt);
  EXPECT_GE(f.covered_fraction, 0.9);
  expect_audit(s, f);
}

TEST(GreedyCover, FareyLateIndices) {
  auto s = gen_farey(1000);
  std::size_t g = first_index_with_radius_below(s, 1.0 / (100.0 * 100.0));
  CoverOptions opt;
  opt.target = 0.75;
  opt.rounds = 3;
  auto f = greedy_disjoint_cover(s, lebesgue(1), open_box({0.0}, {1.0}), g, opt);
  EXPECT_GE(f.covered_fraction, 0.75);
  for (auto i : f.indices) EXPECT_GE(i, g);
  expect_audit(s, f);
}

TEST(GreedyCover, NothingFits) {
  BallSequence s(1);
  s.push(0.25, 0.1);
  s.push(0.3, 0.05);
  auto f = greedy_disjoint_cover(s, lebesgue(1), open_box({0.6}, {0.9}), 0);
  EXPECT_TRUE(f.indices.empty());
  EXPECT_EQ(f.covered_fraction, 0.0);
  ASSERT_FALSE(f.flags.empty());
}

TEST(GreedyCover, TwoDimensionalUnion) {
  auto s = gen_dyadic_inballs(6, 2);
  OpenSet om = parse_open_set_spec("box 0 0 0.5 1\nbox 0.25 0.25 1 0.75\n");
  CoverOptions opt;
  opt.target = 0.5;
  auto f = greedy_disjoint_cover(s, lebesgue(2), om, 0, opt);
  expect_audit(s, f);
  EXPECT_GT(f.covered_fraction, 0.0);
  EXPECT_NEAR(eval_measure_open(lebesgue(2), om).mid(), 0.5 + 0.25, 1e-12);
}

TEST(GreedyCover, MassOrderedOnCantor) {
  auto mu = cantor(0.7);
  auto s = gen_ifs_orbit(mu, {0.0}, 8, 0.5);
  auto f = greedy_disjoint_cover(s, mu, open_box({-0.1}, {1.1}), 0);
  expect_audit(s, f);
  EXPECT_GE(f.covered_fraction, 0.75);
}

TEST(GreedyCover, DyadicRoundsGeometric) {
  // neighbouring closed inballs touch, so the uncovered part decays like 0.81^k
  auto s = gen_dyadic_inballs(16);
  for (int r = 1; r <= 4; ++r) {
    CoverOptions opt;
    opt.target = 1.0 - std::ldexp(1.0, -r);
    opt.rounds = r;
    auto f = greedy_disjoint_cover(s, lebesgue(1), open_box({0.0}, {1.0}), 0, opt);
    EXPECT_GE(f.covered_fraction, 1.0 - std::ldexp(1.0, -r));
    expect_audit(s, f);
  }
}

TEST(GreedyCover, RoundsNeverDecrease) {
  auto s = gen_farey(200);
  for (int r = 1; r <= 4; ++r) {
    CoverOptions opt;
    opt.target = 0.999;
    opt.rounds = r;
    auto f = greedy_disjoint_cover(s, lebesgue(1), open_box({0.1}, {0.9}), 5, opt);
    for (std::size_t i = 1; i < f.round_fractions.size(); ++i)
      EXPECT_GE(f.round_fractions[i], f.round_fractions[i - 1]);
    expect_audit(s, f);
  }
}

TEST(Besicovitch, Examples) {
  auto one = besicovitch_partition({Ball({0.3}, 0.1)}, 0.5);
  EXPECT_EQ(one.families.size(), 1u);
  std::vector<Ball> three{Ball({0.0}, 0.6), Ball({1.0}, 0.6), Ball({2.0}, 0.6)};
  auto p = besicovitch_partition(three, 1.0);
  EXPECT_LE(p.families.size(), 2u);
  EXPECT_EQ(p.families.size(), brute_partition_min(three, 1.0));
}

TEST(Besicovitch, HundredEqualBalls) {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Ball> balls;
  for (int i = 0; i < 100; ++i) balls.push_back(Ball({u(g)}, 0.01));
  auto p = besicovitch_partition(balls, 0.5);
  for (const auto& fam : p.families)
    for (std::size_t i = 0; i < fam.size(); ++i)
      for (std::size_t j = i + 1; j < fam.size(); ++j)
        EXPECT_TRUE(balls_disjoint(scale_ball(balls[fam[i]], 2.0), scale_ball(balls[fam[j]], 2.0)));
  for (const auto& b : balls) {
    bool hit = false;
    for (const auto& fam : p.families)
      for (auto s : fam) hit = hit || std::fabs(b.center[0] - balls[s].center[0]) <= balls[s].radius;
    EXPECT_TRUE(hit);
  }
}

TEST(Besicovitch, RandomD1AgainstBruteForce) {
  std::mt19937_64 g(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const double v = t % 2 ? 1.0 : 0.5;
    const std::size_t n = 1 + static_cast<std::size_t>(t) % 24;
    std::vector<Ball> balls;
    for (std::size_t i = 0; i < n; ++i) balls.push_back(Ball({u(g)}, 0.01 + 0.2 * u(g)));
    auto p = besicovitch_partition(balls, v);
    for (const auto& fam : p.families)
      for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = i + 1; j < fam.size(); ++j)
          EXPECT_TRUE(balls_disjoint(scale_ball(balls[fam[i]], 1 / v), scale_ball(balls[fam[j]], 1 / v)));
    for (const auto& b : balls) {
      bool hit = false;
      for (auto s : p.selected) hit = hit || std::fabs(b.center[0] - balls[s].center[0]) <= balls[s].radius;
      EXPECT_TRUE(hit);
    }
    if (n <= 10) EXPECT_EQ(p.families.size(), brute_partition_min(balls, v)) << "trial " << t;
  }
}

TEST(Besicovitch, TwoDimensionalProperty) {
  std::mt19937_64 g(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Ball> balls;
  for (int i = 0; i < 80; ++i) balls.push_back(Ball({u(g), u(g)}, 0.01 + 0.1 * u(g)));
  auto p = besicovitch_partition(balls, 0.5);
  std::size_t n = 0;
  for (const auto& fam : p.families) {
    n += fam.size();
    for (std::size_t i = 0; i < fam.size(); ++i)
      for (std::size_t j = i + 1; j < fam.size(); ++j)
        EXPECT_TRUE(balls_disjoint(scale_ball(balls[fam[i]], 2.0), scale_ball(balls[fam[j]], 2.0)));
  }
  EXPECT_EQ(n, p.selected.size());
}

TEST(SortFamilies, Examples) {
  std::vector<Ball> disjoint{Ball({0.0}, 0.1), Ball({1.0}, 0.1), Ball({2.0}, 0.3)};
  EXPECT_EQ(sort_disjoint_families(disjoint, 0.5).families.size(), 1u);
  std::vector<Ball> path{Ball({0.0}, 1), Ball({1.5}, 1), Ball({3.0}, 1)};
  auto r = sort_disjoint_families(path, 0.5);
  EXPECT_EQ(r.families.size(), 2u);
  EXPECT_LE(r.families.size(), r.bound);
}

TEST(SortFamilies, RejectsOverlapNamingPair) {
  std::vector<Ball> bad{Ball({0.0}, 1), Ball({5.0}, 1), Ball({0.5}, 1)};
  try {
    sort_disjoint_families(bad, 0.5);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("0 and 2"), std::string::npos) << e.what();
  }
}

TEST(SortFamilies, GreedyBoundHolds) {
  std::mt19937_64 g(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const double v = 0.25 + 0.5 * u(g);
    std::vector<Ball> balls;
    for (int tries = 0; tries < 200 && balls.size() < 25; ++tries) {
      Ball b({u(g) * 4, u(g) * 4}, std::exp2(-6.0 * u(g)));
      bool ok = true;
      for (const auto& o : balls) ok = ok && balls_disjoint(scale_ball(o, v), scale_ball(b, v));
      if (ok) balls.push_back(b);
    }
    auto r = sort_disjoint_families(balls, v);
    EXPECT_LE(r.families.size(), r.bound);
    for (const auto& fam : r.families)
      for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = i + 1; j < fam.size(); ++j)
          EXPECT_TRUE(balls_disjoint(balls[fam[i]], balls[fam[j]]));
  }
}

TEST(OverlapCount, Examples) {
  EXPECT_EQ(overlap_count({}, Ball({0.0}, 1), 0.5).count, 0u);
  EXPECT_EQ(overlap_count({Ball({10.0}, 1)}, Ball({0.0}, 1), 0.5).count, 0u);
  auto bad = overlap_count({Ball({0.0}, 0.1)}, Ball({0.0}, 1), 0.5);
  EXPECT_FALSE(bad.precondition_ok);
  EXPECT_EQ(bad.count, 1u);
}

TEST(OverlapCount, ExhaustiveGridD1) {
  // centres on a 1/8 grid, radii in {1, 1.5, 2}, halves pairwise disjoint
  std::vector<double> cs;
  for (int i = -40; i <= 40; ++i) cs.push_back(i / 8.0);
  std::mt19937_64 g(31);
  std::size_t worst = 0;
  for (int t = 0; t < 3000; ++t) {
    std::vector<Ball> fam;
    std::vector<std::size_t> order(cs.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), g);
    for (auto i : order) {
      Ball b({cs[i]}, 1.0 + 0.5 * static_cast<double>(g() % 3));
      bool ok = true;
      for (const auto& o : fam) ok = ok && balls_disjoint(scale_ball(o, 0.5), scale_ball(b, 0.5));
      if (ok) fam.push_back(b);
    }
    auto r = overlap_count(fam, Ball({0.0}, 1.0), 0.5);
    EXPECT_TRUE(r.precondition_ok);
    worst = std::max(worst, r.count);
  }
  EXPECT_LE(worst, 6u);
}

TEST(WeakRedundancy, DisjointGivesOne) {
  BallSequence s(1);
  for (int i = 0; i < 16; ++i) s.push((i + 0.5) / 16.0, 1.0 / 64.0);
  auto r = weak_redundancy_report(s, 10);
  for (const auto& row : r.rows) EXPECT_EQ(row.J, 1u);
}

TEST(WeakRedundancy, NestedAtAPoint) {
  BallSequence s(1);
  for (int i = 0; i < 10; ++i) s.push(0.5 + i * 1e-4, std::ldexp(1.0, -5) * (1.0 - i * 0.02));
  auto r = weak_redundancy_report(s, 10);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].k, 5);
  EXPECT_EQ(r.rows[0].J, 10u);
}

TEST(WeakRedundancy, MinimalAgainstBruteForce) {
  std::mt19937_64 g(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    BallSequence s(1);
    const std::size_t n = 2 + t % 11;
    for (std::size_t i = 0; i < n; ++i) s.push(u(g), std::ldexp(1.0, -3) * (0.51 + 0.49 * u(g)));
    auto r = weak_redundancy_report(s, 5, -1, true);
    ASSERT_EQ(r.rows.size(), 1u);
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) adj[i][j] = !balls_disjoint(s.ball(i), s.ball(j));
    EXPECT_EQ(r.rows[0].J, brute_chromatic(adj));
    for (const auto& fam : r.families[3])
      for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = i + 1; j < fam.size(); ++j)
          EXPECT_TRUE(balls_disjoint(s.ball(fam[i]), s.ball(fam[j])));
  }
}

TEST(WeakRedundancy, FareyTail) {
  auto s = gen_farey(1000);
  auto r = weak_redundancy_report(s, 19);
  ASSERT_FALSE(r.rows.empty());
  for (const auto& row : r.rows) {
    EXPECT_GE(row.J, 1u);
    EXPECT_LE(row.J, row.count);
  }
  // slope over the tail shrinks: log2(J_k)/k at k = 19 below the value at k = 10
  double s10 = 0, s19 = 0;
  for (const auto& row : r.rows) {
    if (row.k == 10) s10 = std::log2(static_cast<double>(row.J)) / 10;
    if (row.k == 19) s19 = std::log2(static_cast<double>(row.J)) / 19;
  }
  EXPECT_LT(s19, s10);
}

TEST(AcCheck, DyadicHalf) {
  auto s = gen_dyadic_inballs(12);
  std::vector<OpenSet> oms{open_box({0.0}, {1.0}), open_box({0.1}, {0.35}),
                           open_box({0.3}, {0.9})};
  std::vector<std::size_t> gs{0, 15, 63, 255};
  auto t = ac_empirical_check(s, lebesgue(1), oms, gs);
  EXPECT_GE(t.c_empirical, 0.5);
  EXPECT_EQ(t.rows.size(), 12u);
}

TEST(AcCheck, DisjointSupports) {
  BallSequence s(1);
  for (int i = 0; i < 8; ++i) s.push(0.25, 0.2 / (i + 1));
  auto t = ac_empirical_check(s, lebesgue(1), {open_box({0.5}, {1.0})}, {0});
  EXPECT_EQ(t.c_empirical, 0.0);
}

TEST(AcCheck, FareyMiddle) {
  auto s = gen_farey(400);
  std::size_t g = first_index_with_radius_below(s, 1.0 / 2500.0);
  auto t = ac_empirical_check(s, lebesgue(1), {open_box({0.2}, {0.7})}, {g});
  EXPECT_GE(t.c_empirical, 0.5);
}

TEST(BorelCantelli, DisjointIdentity) {
  BallSequence s(1);
  for (int i = 0; i < 32; ++i) s.push((2 * i + 1) / 64.0, 1.0 / 256.0);
  Ball B({0.5}, 0.5);
  auto r = borel_cantelli_check(s, lebesgue(1), B, 32, 2.0);
  ASSERT_EQ(r.selected.size(), 32u);
  for (std::size_t q = 0; q < r.S.size(); ++q) {
    EXPECT_EQ(r.P[q], r.S[q]);
    EXPECT_EQ(r.ratio[q], r.mass_B * r.S[q] / (r.S[q] * r.S[q]));
  }
}

TEST(BorelCantelli, IdenticalBallsFail) {
  BallSequence s(1);
  for (int i = 0; i < 20; ++i) s.push(0.5, 1.0 / 16.0);
  auto r = borel_cantelli_check(s, lebesgue(1), Ball({0.5}, 0.5), 20, 2.0);
  for (double x : r.ratio) EXPECT_EQ(x, 8.0);
  EXPECT_FALSE(r.quasi_independent);
}

TEST(BorelCantelli, TooFewFlag) {
  BallSequence s(1);
  s.push(0.5, 0.1);
  auto r = borel_cantelli_check(s, lebesgue(1), Ball({0.5}, 0.5), 10, 2.0);
  EXPECT_FALSE(r.flags.empty());
}

TEST(BorelCantelli, SheppLogDivergence) {
  auto rb = gen_random(4000, 2.0, 7);
  auto r = borel_cantelli_check(rb.seq, lebesgue(1), Ball({0.5}, 0.5), 2000, 10.0);
  ASSERT_GT(r.S.size(), 1000u);
  // S_Q grows like 2 log Q; ratio stays bounded
  const std::size_t n = r.S.size();
  EXPECT_GT(r.S[n - 1] - r.S[n / 2 - 1], 0.5);
  for (std::size_t q = 10; q < n; ++q) EXPECT_LT(r.ratio[q], 10.0);
  EXPECT_TRUE(r.quasi_independent);
}

TEST(OpenSetFile, Parse) {
  auto o = parse_open_set_spec("box 0.2 0.7\n");
  EXPECT_EQ(o.dim(), 1u);
  EXPECT_THROW(parse_open_set_spec("box 0.2\n"), std::invalid_argument);
  EXPECT_THROW(parse_open_set_spec("ball 0 1\n"), std::invalid_argument);
}

TEST(RedundancyCsv, Format) {
  BallSequence s(1);
  s.push(0.5, 0.3);
  auto r = weak_redundancy_report(s, 3);
  std::ostringstream os;
  write_redundancy_csv(os, r);
  EXPECT_EQ(os.str(), "k,count,J_k,slope\n1,1,1,0\n");
}

#include "limsup/measure.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <random>

using namespace limsup;

namespace {

// exact Cantor enumeration to depth m on the integer grid 3^m 2^8 Z;
// weights use dyadic p so the sums are exact in double
void cantor_walk(std::int64_t left, std::int64_t len, double w, int depth, std::int64_t a,
                 std::int64_t b, double p, double& in, double& st) {
  const std::int64_t right = left + len;
  if (right < a || left > b) return;
  if (left >= a && right <= b) {
    in += w;
    return;
  }
  if (depth == 0) {
    st += w;
    return;
  }
  const std::int64_t third = len / 3;
  cantor_walk(left, third, w * p, depth - 1, a, b, p, in, st);
  cantor_walk(left + 2 * third, third, w * (1 - p), depth - 1, a, b, p, in, st);
}

// ball [c - r, c + r] with c, r multiples of 2^-8
std::pair<double, double> cantor_oracle(int c256, int r256, int m, double p) {
  std::int64_t three = 1;
  for (int i = 0; i < m; ++i) three *= 3;
  const std::int64_t unit = three * 256;
  double in = 0, st = 0;
  cantor_walk(0, unit, 1.0, m, (c256 - r256) * three, (c256 + r256) * three, p, in, st);
  return {in, in + st};
}

}  // namespace

TEST(EvalMeasure, CantorLeftBalls) {
  auto mu = cantor();
  for (int m = 1; m <= 10; ++m) {
    auto v = eval_measure(mu, Ball({0.0}, std::pow(3.0, -m)), 1e-9);
    double want = std::ldexp(1.0, -m);
    EXPECT_LE(v.lo, want);
    EXPECT_GE(v.hi, want);
    EXPECT_LE(v.width(), 1e-9);
    EXPECT_FALSE(v.budget_exceeded);
  }
}

TEST(EvalMeasure, LebesgueExamples) {
  auto mu = lebesgue(1);
  auto v = eval_measure(mu, Ball({0.5}, 0.25));
  EXPECT_EQ(v.lo, 0.5);
  EXPECT_EQ(v.hi, 0.5);
  auto all = eval_measure(lebesgue(2), Ball({0.5, 0.5}, 0.75));
  EXPECT_EQ(all.lo, 1.0);
  EXPECT_EQ(all.hi, 1.0);
}

TEST(EvalMeasure, WholeSpaceIsOne) {
  auto mu = cantor(0.7);
  auto v = eval_measure(mu, Ball({0.5}, 0.5));
  EXPECT_EQ(v.lo, 1.0);
  EXPECT_EQ(v.hi, 1.0);
}

TEST(EvalMeasure, OutsideSupportIsZero) {
  auto v = eval_measure(cantor(), Ball({0.5}, 0.1));
  EXPECT_EQ(v.lo, 0.0);
  EXPECT_EQ(v.hi, 0.0);
}

TEST(EvalMeasure, AgreesWithExactEnumerationOnDyadicBalls) {
  auto mu = cantor(0.5);
  auto skew = cantor(0.25);
  for (int gen = 1; gen <= 8; ++gen) {
    const int n = 1 << gen, step = 1 << (8 - gen);
    for (int c = 0; c <= n; ++c) {
      for (int rr = 1; rr <= 3; ++rr) {
        double cx = std::ldexp(static_cast<double>(c), -gen);
        double r = std::ldexp(static_cast<double>(rr), -gen);
        for (const auto* m : {&mu, &skew}) {
          auto o = cantor_oracle(c * step, rr * step, 12, m->probs[0]);
          auto v = eval_measure(*m, Ball({cx}, r), 1e-9);
          // both intervals contain the true value, so they must overlap
          EXPECT_LE(v.lo, o.second + 1e-12) << "gen " << gen << " c " << cx << " r " << r;
          EXPECT_GE(v.hi, o.first - 1e-12) << "gen " << gen << " c " << cx << " r " << r;
        }
      }
    }
  }
}

TEST(EvalMeasure, Monotone) {
  auto mu = cantor(0.7);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    double c = u(g), r = 0.2 * u(g) + 1e-4, R = r * (1.0 + u(g));
    auto a = eval_measure(mu, Ball({c}, r)), b = eval_measure(mu, Ball({c}, R));
    EXPECT_LE(a.hi, b.hi + 1e-9);
    EXPECT_LE(a.lo, b.lo + 1e-9);
  }
}

TEST(EvalMeasure, AdditiveOverDyadicPartition) {
  auto dust = make_measure({{0.25, {0.0, 0.0}}, {0.25, {0.75, 0.0}}, {0.25, {0.0, 0.75}},
                            {0.25, {0.75, 0.75}}},
                           {0.4, 0.3, 0.2, 0.1}, true);
  auto line = cantor(0.7);
  for (const auto* mu : {&line, &dust}) {
    const double tol = mu->d == 1 ? 1e-9 : 1e-3;
    for (int k = 1; k <= 8; ++k) {
      if (mu->d == 2 && k > 3) break;
      Box all = unit_box(mu->d);
      for (auto& x : all.hi) x = 1.0 - std::ldexp(1.0, -k - 1);
      // closed cubes: shared faces are null for these measures
      auto cubes = dyadic_cover(all, k);
      double s = 0.0;
      for (auto& q : cubes) {
        auto v = eval_measure_box(*mu, q.box(), tol);
        EXPECT_FALSE(v.budget_exceeded);
        s += v.mid();
      }
      const double n = static_cast<double>(cubes.size());
      EXPECT_GE(s, 1.0 - n * tol) << "k " << k << " d " << mu->d;
      EXPECT_LE(s, 1.0 + n * tol) << "k " << k << " d " << mu->d;
    }
  }
}

TEST(EvalMeasure, BudgetFlag) {
  auto v = eval_measure(cantor(), Ball({0.3}, 0.2), 1e-15, 50);
  EXPECT_TRUE(v.budget_exceeded);
  EXPECT_LE(v.lo, v.hi);
}

TEST(EvalMeasure, BadTolerance) {
  EXPECT_THROW(eval_measure(cantor(), Ball({0.0}, 0.1), 0.0), std::invalid_argument);
}

TEST(LocalDimension, Lebesgue) {
  auto mu = lebesgue(1);
  std::vector<double> grid;
  for (int j = 3; j <= 20; ++j) grid.push_back(std::ldexp(1.0, -j) * 1.1);
  auto p = local_dimension(mu, {0.5}, grid);
  for (auto& s : p.samples) {
    ASSERT_TRUE(s.defined);
    EXPECT_LE(std::fabs(s.ratio - 1.0), std::log(2.0) / std::fabs(std::log(s.r)) + 1e-12);
  }
}

TEST(LocalDimension, CantorAtZero) {
  std::vector<double> grid;
  for (int m = 1; m <= 12; ++m) grid.push_back(std::pow(3.0, -m));
  auto p = local_dimension(cantor(), {0.0}, grid);
  const double want = std::log(2.0) / std::log(3.0);
  for (auto& s : p.samples) EXPECT_NEAR(s.ratio, want, 1e-5);
  EXPECT_NEAR(p.liminf_est, want, 1e-5);
  EXPECT_NEAR(p.limsup_est, want, 1e-5);
}

TEST(LocalDimension, OutsideSupportUndefined) {
  std::vector<double> grid{0.1, 0.05, 0.01};
  auto p = local_dimension(cantor(), {0.5}, grid);
  for (auto& s : p.samples) EXPECT_FALSE(s.defined);
  EXPECT_TRUE(std::isnan(p.liminf_est));
  EXPECT_THROW(local_dimension(cantor(), {0.5}, {0.1, 0.05}), std::invalid_argument);
}

TEST(MeasureDimension, Examples) {
  EXPECT_NEAR(measure_dimension(cantor()), 0.63093, 1e-5);
  EXPECT_EQ(measure_dimension(lebesgue(2)), 2.0);
  // hand value: -(0.7 ln 0.7 + 0.3 ln 0.3)/ln 3
  EXPECT_NEAR(measure_dimension(cantor(0.7)), 0.556033, 1e-6);
  auto no = make_measure({{0.5, {0.0}}, {0.6, {0.4}}}, {0.5, 0.5}, false);
  EXPECT_THROW(measure_dimension(no), std::invalid_argument);
}

TEST(Cylinders, Examples) {
  auto mu = cantor();
  auto c0 = attractor_cylinders(mu, 0);
  ASSERT_EQ(c0.size(), 1u);
  EXPECT_EQ(c0[0].weight, 1.0);
  auto c1 = attractor_cylinders(mu, 1);
  ASSERT_EQ(c1.size(), 2u);
  EXPECT_NEAR(c1[0].box.hi[0], 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(c1[1].box.lo[0], 2.0 / 3.0, 1e-16);
  EXPECT_EQ(c1[1].weight, 0.5);
  auto c2 = attractor_cylinders(mu, 2);
  ASSERT_EQ(c2.size(), 4u);
  double s = 0.0;
  for (auto& c : c2) {
    EXPECT_NEAR(c.box.hi[0] - c.box.lo[0], 1.0 / 9.0, 1e-16);
    EXPECT_EQ(c.weight, 0.25);
    s += c.weight;
  }
  EXPECT_EQ(s, 1.0);
  try {
    attractor_cylinders(mu, 40);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("try depth 23"), std::string::npos) << e.what();
  }
}

TEST(MeasureFile, ParseAndFormat) {
  auto mu = parse_measure_spec("2 1\n0.3333333333333333 0 0.7\n0.3333333333333333 0.6666666666666666 0.3\nosc 1\n");
  EXPECT_EQ(mu.size(), 2u);
  EXPECT_TRUE(mu.osc_asserted);
  auto back = parse_measure_spec(format_measure(mu));
  EXPECT_EQ(back.probs, mu.probs);
  EXPECT_TRUE(parse_measure_spec("lebesgue 3").lebesgue);
  EXPECT_EQ(parse_measure_spec("lebesgue 3").d, 3u);
  EXPECT_THROW(parse_measure_spec("2 1\n0.5 0 0.5\n0.5 0.5 0.4\nosc 1\n"), std::invalid_argument);
}

#pragma once

// Sign of a sum of doubles, decided exactly.  Every finite double is a dyadic
// rational, so the comparison falls back to rational arithmetic whenever the
// floating result is too close to zero to trust.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>

namespace limsup::exact {

using rational = boost::multiprecision::cpp_rational;

inline rational to_rational(double x) {
  if (x == 0.0) return rational(0);
  int e = 0;
  double m = std::frexp(x, &e);
  // m * 2^53 is an integer
  auto mant = static_cast<long long>(std::ldexp(m, 53));
  e -= 53;
  rational r(mant);
  if (e > 0) {
    boost::multiprecision::cpp_int p = 1;
    p <<= e;
    r *= p;
  } else if (e < 0) {
    boost::multiprecision::cpp_int p = 1;
    p <<= -e;
    r /= p;
  }
  return r;
}

// sign(sum of terms): -1, 0 or +1
inline int sign_of_sum(std::initializer_list<double> terms) {
  double s = 0.0, mag = 0.0;
  for (double t : terms) {
    s += t;
    mag += std::fabs(t);
  }
  const double bound = 2.0 * static_cast<double>(terms.size()) *
                       std::numeric_limits<double>::epsilon() * mag;
  if (s > bound) return 1;
  if (s < -bound) return -1;
  rational acc(0);
  for (double t : terms) acc += to_rational(t);
  return acc > 0 ? 1 : (acc < 0 ? -1 : 0);
}

// a < b, a <= b for sums
inline bool less(double a, double b) { return sign_of_sum({a, -b}) < 0; }
inline bool less_equal(double a, double b) { return sign_of_sum({a, -b}) <= 0; }

}  // namespace limsup::exact

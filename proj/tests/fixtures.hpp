#pragma once
// Fields, maps and curves used across the parabolic, CLI and acceptance tests.

#include "fdyn/rs_reduction.hpp"

namespace fdyn::fixtures {

inline JetQ s_pow(int N, int e, GaussQ c = GaussQ(1)) { return JetQ::monomial(1, N, mono_unit(0, e), c); }
inline JetQ mono(int n, int N, std::vector<int> e, GaussQ c = GaussQ(1)) {
  return JetQ::monomial(n, N, mono_from(e), c);
}

// x^3 d/dx + x(y - x) d/dy and its invariant curve y = sum (n-1)! x^n
inline FieldQ euler_field(int N) {
  return FieldQ{{mono(2, N, {3, 0}), mono(2, N, {1, 1}) - mono(2, N, {2, 0})}};
}

inline JetQ euler_series(int N) {
  JetQ g(1, N);
  Rational f(1);
  for (int k = 1; k <= N; ++k) {
    if (k > 1) f = f * Rational(k - 1);
    g = g + s_pow(N, k, GaussQ(f));
  }
  return g;
}

inline CurveParam euler_curve(int N) {
  CurveParam c;
  c.gamma = {s_pow(N, 1), euler_series(N)};
  return c;
}

// x^3 d/dx + x(y - x + y^3) d/dy: same principal part as Euler with a
// nonlinear transverse term, so T genuinely depends on u.
inline FieldQ cubic_field(int N) {
  return FieldQ{{mono(2, N, {3, 0}), mono(2, N, {1, 1}) - mono(2, N, {2, 0}) + mono(2, N, {1, 3})}};
}

// x^2 g' = g - x + g^3
inline CurveParam cubic_curve(int N) {
  std::vector<Rational> g(N + 1, Rational(0));
  g[1] = Rational(1);
  for (int n = 2; n <= N; ++n) {
    Rational s(0);
    for (int i = 1; i < n; ++i)
      for (int j = 1; i + j < n; ++j) s = s + g[i] * g[j] * g[n - i - j];
    g[n] = Rational(n - 1) * g[n - 1] - s;
  }
  JetQ y(1, N);
  for (int n = 1; n <= N; ++n) y = y + s_pow(N, n, GaussQ(g[n]));
  CurveParam c;
  c.gamma = {s_pow(N, 1), y};
  return c;
}

// x^2 d/dx + x(2y + x) d/dy with the invariant line y = -x
inline FieldQ briot_bouquet_field(int N) {
  return FieldQ{{mono(2, N, {2, 0}), mono(2, N, {1, 1}, GaussQ(2)) + mono(2, N, {2, 0})}};
}

inline CurveParam briot_bouquet_curve(int N) {
  CurveParam c;
  c.gamma = {s_pow(N, 1), -s_pow(N, 1)};
  return c;
}

}  // namespace fdyn::fixtures

#include <cmath>
#include <random>

#include "doctest.h"
#include "fdyn/jet.hpp"
#include "test_support.hpp"

using namespace fdyn;
using namespace fdyn::testing;

TEST_CASE("rational hybrid arithmetic") {
  Rational a(1, 3), b(1, 6);
  CHECK((a + b) == Rational(1, 2));
  CHECK((a * b) == Rational(1, 18));
  CHECK(Rational::parse("-6/4") == Rational(-3, 2));
  CHECK(Rational::parse("1.25") == Rational(5, 4));
  CHECK(Rational::parse("2e-2") == Rational(1, 50));
  // leading zeros are decimal, not octal
  CHECK(Rational::parse("0.09") == Rational(9, 100));
  CHECK(Rational::parse("010/08") == Rational(5, 4));
  // overflow spills to GMP and comes back
  Rational big(1LL << 62);
  Rational sq = big * big;
  CHECK(sq.is_big());
  CHECK((sq / big) == big);
  CHECK(!(sq / big).is_big());
  Rational tiny(1, (1LL << 62));
  CHECK(((tiny * tiny) * big * big) == Rational(1));
}

TEST_CASE("difference of squares and truncation boundary") {
  int n = 2, N = 4;
  auto x = X(n, N), y = Y(n, N);
  CHECK((x + y) * (x - y) == x * x - y * y);
  auto xN = JetQ::monomial(1, 3, mono_unit(0, 3), 1);
  CHECK((xN * X(1, 3)).is_zero());
}

TEST_CASE("geometric series by long division") {
  auto x = X(1, 3);
  auto one = C(1, 3, 1);
  auto g = one - x + x * x - x * x * x;
  CHECK((one + x) * g == one);
}

TEST_CASE("composition examples") {
  auto x = X(1, 4);
  auto f = x * x;
  auto r = compose(f, JetTuple<GaussQ>{x + x * x});
  CHECK(r == x * x + (x * x * x).scale(2) + x * x * x * x);
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    auto g = random_jet(rng, 2, 6, 0, 4, 6);
    CHECK(compose(g, identity_tuple<GaussQ>(2, 6)) == g);
  }
}

// Oracle: substitute term by term with explicit repeated products.
static JetQ naive_compose(const JetQ& f, const JetTuple<GaussQ>& a) {
  JetQ r(a[0].nvars(), a[0].trunc());
  for (const auto& [m, c] : f.terms()) {
    JetQ t = JetQ::constant(a[0].nvars(), a[0].trunc(), c);
    for (int i = 0; i < f.nvars(); ++i)
      for (int e = 0; e < mono_exp(m, i); ++e) t = t * a[i];
    r += t;
  }
  return r;
}

TEST_CASE("composition associativity against naive substitution") {
  std::mt19937_64 rng(11);
  const int n = 2, N = 6;
  for (int k = 0; k < 15; ++k) {
    auto f = random_jet(rng, n, N, 0, 3, 5);
    JetTuple<GaussQ> g{random_jet(rng, n, N, 1, 3, 3), random_jet(rng, n, N, 1, 3, 3)};
    JetTuple<GaussQ> h{random_jet(rng, n, N, 1, 3, 3), random_jet(rng, n, N, 1, 3, 3)};
    CHECK(compose(f, g) == naive_compose(f, g));
    JetTuple<GaussQ> gh{compose(g[0], h), compose(g[1], h)};
    CHECK(compose(compose(f, g), h) == compose(f, gh));
  }
}

TEST_CASE("compose rejects nonzero constant terms") {
  auto x = X(1, 3);
  CHECK_THROWS_AS(compose(x, JetTuple<GaussQ>{x + C(1, 3, 1)}), PreconditionError);
}

TEST_CASE("partial derivatives") {
  int n = 2, N = 5;
  auto x = X(n, N), y = Y(n, N);
  auto d = partial_derivative(x * x * y, 0);
  CHECK(d.trunc() == 4);
  CHECK(d == (x * y).scale(2).truncated(4));
  CHECK(partial_derivative(x * x, 1).is_zero());
}

TEST_CASE("derivative against finite differences") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    JetF f = to_float(random_jet(rng, 2, 6, 0, 6, 8));
    auto df = partial_derivative(f, 0);
    std::vector<Cplx> p{Cplx(0.3, 0.1), Cplx(-0.2, 0.25)};
    double h = 1e-6;
    auto pp = p, pm = p;
    pp[0] += h;
    pm[0] -= h;
    Cplx fd = (eval_complex(f, pp) - eval_complex(f, pm)) / (2 * h);
    Cplx an = eval_complex(df, p);
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("order") {
  int n = 2, N = 6;
  auto x = X(n, N), y = Y(n, N);
  CHECK((x * x * y + x * x * x * x * x).order() == 3);
  CHECK(JetQ(n, N).order() == kInfOrder);
  CHECK((x * (y * y - y * y)).order() == kInfOrder);
}

TEST_CASE("order of products") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    auto f = random_jet(rng, 3, 8, 1, 4, 4), g = random_jet(rng, 3, 8, 1, 4, 4);
    auto p = f * g;
    if (p.is_zero()) continue;
    CHECK(p.order() >= f.order() + g.order());
    auto lf = f.homogeneous(f.order()), lg = g.homogeneous(g.order());
    if (f.order() + g.order() <= 8 && !(lf * lg).is_zero()) CHECK(p.order() == f.order() + g.order());
  }
}

TEST_CASE("divide_by_var") {
  int n = 2, N = 5;
  auto x = X(n, N), y = Y(n, N);
  auto r = divide_by_var(x * x * y + x * x * x, 0, 2);
  CHECK(r == (y + x).truncated(3));
  try {
    divide_by_var(x + y, 0, 1);
    CHECK(false);
  } catch (const DivisibilityError& e) {
    CHECK(e.monomial == "y");
  }
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    auto f = random_jet(rng, 2, 8, 0, 8, 6);
    auto g = multiply_by_var(f, 0, 3);
    CHECK(divide_by_var(g, 0, 3) == f);
  }
}

TEST_CASE("evaluation") {
  auto x = X(1, 3);
  CHECK(std::abs(eval_complex(C(1, 3, 1) + x, {Cplx(0.5, 0)}) - Cplx(1.5, 0)) < 1e-15);
  auto xx = X(2, 3), yy = Y(2, 3);
  CHECK(std::abs(eval_complex(xx * xx - yy * yy, {Cplx(0.7, 0.2), Cplx(0.7, 0.2)})) < 1e-15);
  // exponential truncated at 20 vs std::exp at 0.1; remainder bound 0.1^21/21! is negligible
  std::vector<JetQ::Term> t;
  Rational fact(1);
  for (int j = 0; j <= 20; ++j) {
    if (j > 0) fact = fact * Rational(j);
    t.push_back({mono_unit(0, j), GaussQ(fact.inverse())});
  }
  auto e = JetQ::from_terms(1, 20, t);
  CHECK(std::abs(eval_complex(e, {Cplx(0.1, 0)}) - std::exp(0.1)) <= 1e-12);
}

TEST_CASE("ring axioms on random exact jets") {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 40; ++k) {
    int n = 1 + static_cast<int>(rng() % 3);
    int N = 4 + static_cast<int>(rng() % 7);
    auto a = random_jet(rng, n, N, 0, N, 5), b = random_jet(rng, n, N, 0, N, 5), c = random_jet(rng, n, N, 0, N, 5);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a + b == b + a);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * b == b * a);
    CHECK(a * (b + c) == a * b + a * c);
    CHECK((a - a).is_zero());
  }
}

TEST_CASE("printing is canonical") {
  int n = 2, N = 4;
  auto x = X(n, N), y = Y(n, N);
  auto f = (x * y * y).scale(GaussQ(Rational(1, 2))) - x.scale(GaussQ::I());
  CHECK(f.to_string() == "-i*x + (1/2)*x*y^2");
  CHECK((x + x * x * x).to_string() == "x + x^3");
}

TEST_CASE("binomial and inverse series") {
  auto x = X(1, 6);
  auto inv = series_inverse(C(1, 6, 1) + x);
  CHECK(inv * (C(1, 6, 1) + x) == C(1, 6, 1));
  auto r = binomial_power(x, Rational(1, 2));
  CHECK(r * r == C(1, 6, 1) + x);
}

TEST_CASE("mismatched shapes are structural errors") {
  CHECK_THROWS_AS(X(1, 3) + X(1, 4), StructuralError);
  CHECK_THROWS_AS(X(1, 3) + X(2, 3), StructuralError);
}

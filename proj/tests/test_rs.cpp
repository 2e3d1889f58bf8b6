#include "doctest.h"
#include "fdyn/rs_reduction.hpp"
#include "test_support.hpp"

using namespace fdyn;
using namespace fdyn::testing;

namespace {

JetQ s_pow(int N, int e, GaussQ c = GaussQ(1)) { return JetQ::monomial(1, N, mono_unit(0, e), c); }
JetQ mono(int n, int N, std::vector<int> e, GaussQ c = GaussQ(1)) { return JetQ::monomial(n, N, mono_from(e), c); }

CurveParam curve(std::initializer_list<JetQ> g) {
  CurveParam c;
  c.gamma = g;
  return c;
}

JetQ euler_y(int N) {
  JetQ g(1, N);
  Rational f(1);
  for (int k = 1; k <= N; ++k) {
    if (k > 1) f = f * Rational(k - 1);
    g = g + s_pow(N, k, GaussQ(f));
  }
  return g;
}

FieldQ euler_field(int N) {
  return FieldQ{{mono(2, N, {3, 0}), mono(2, N, {1, 1}) - mono(2, N, {2, 0})}};
}

CurveParam euler_curve(int N) { return curve({s_pow(N, 1), euler_y(N)}); }

// x^3 d/dx + x(z + x y^2) d/dy + x(x y + x z^2) d/dz, invariant axis, nilpotent linear part
FieldQ nilpotent_field(int N) {
  int n = 3;
  return FieldQ{{mono(n, N, {3, 0, 0}), mono(n, N, {1, 0, 1}) + mono(n, N, {2, 2, 0}),
                 mono(n, N, {2, 1, 0}) + mono(n, N, {2, 0, 2})}};
}

CurveParam axis(int n, int N) {
  CurveParam c;
  c.gamma.push_back(s_pow(N, 1));
  for (int i = 1; i < n; ++i) c.gamma.push_back(JetQ(1, N));
  return c;
}

MatQ scalar(long long a, long long b = 1) {
  MatQ m(1, 1);
  m(0, 0) = GaussQ(Rational(a, b));
  return m;
}

}  // namespace

TEST_CASE("prenormalize reads the Euler field directly") {
  int N = 20;
  auto r = prenormalize(euler_field(N), euler_curve(N));
  CHECK(r.seq.size() == 0);
  CHECK_FALSE(r.early_exit);
  CHECK(r.pre.l == 1);
  CHECK(r.pre.q == 1);
  CHECK(r.pre.u == JetQ::constant(2, r.pre.u.trunc(), GaussQ(1)));
  CHECK(r.pre.c[0] == -s_pow(r.pre.c[0].trunc(), 1));
  CHECK(r.pre.A.coeff(0) == scalar(1));
  CHECK(r.pre.A.order() == 0);
  CHECK(r.pre.A.coeff(1).is_zero());
  CHECK(r.pre.Theta[0].is_zero());
  CHECK(r.pre.reassemble(2) == r.field.truncated(r.pre.reassemble(2).trunc()));
}

TEST_CASE("early exit after division") {
  int N = 16;
  FieldQ X{{mono(2, N, {2, 0}), JetQ(2, N)}};
  auto pre = prenormalize(X, axis(2, N));
  CHECK(pre.early_exit);
  auto fr = reduce_field(X, axis(2, N));
  CHECK(fr.early_exit);
  CHECK(fr.rs.k == 1);
  CHECK(fr.rs.p == 0);
  CHECK(fr.rs.Ccal == scalar(-1));
  CHECK(fr.rs.u.constant_term() == GaussQ(1));
}

TEST_CASE("radial field times x is already in the p = 0 branch") {
  int N = 16;
  FieldQ X{{mono(2, N, {2, 0}), mono(2, N, {1, 1})}};
  auto fr = reduce_field(X, axis(2, N));
  CHECK_FALSE(fr.early_exit);
  CHECK(fr.seq.size() == 0);
  CHECK(fr.rs.k == 1);
  CHECK(fr.rs.p == 0);
  CHECK(fr.rs.Ccal == scalar(1));
}

TEST_CASE("cusp is resolved by blow-ups") {
  int N = 16;
  FieldQ X{{mono(2, N, {1, 0}, GaussQ(2)), mono(2, N, {0, 1}, GaussQ(3))}};
  auto c = curve({s_pow(N, 2), s_pow(N, 3)});
  auto pre = prenormalize(X, c);
  int blowups = 0;
  for (const auto& s : pre.seq.steps)
    if (s.kind == StepKind::BlowUp) ++blowups;
  CHECK(blowups >= 1);
  CHECK(pre.curve.gamma[0] == s_pow(pre.curve.trunc(), 1));
  auto fr = reduce_field(X, c);
  CHECK(transform_field(X, fr.seq) == fr.field);
  CHECK(graph_form(transform_curve(c, fr.seq)).gamma == fr.curve.gamma);
  CHECK(try_invariance_h(fr.field, fr.curve).invariant);
  CHECK(fr.seq.total_divisor == 0);
}

TEST_CASE("associated system") {
  int N = 20;
  auto r = prenormalize(euler_field(N), euler_curve(N));
  auto sys = associated_system(r.pre, r.curve);
  CHECK(sys.q == 1);
  CHECK(sys.B.coeff(0) == scalar(1));
  CHECK(sys.B.order() == 0);
  for (int d = 1; d <= sys.B.N; ++d) CHECK(sys.B.coeff(d).is_zero());

  PreNormalField pn;
  pn.l = 1;
  pn.q = 1;
  int n = 3, M = 10;
  pn.u = JetQ::constant(n, M, GaussQ(1)) + JetQ::var(n, M, 0);
  pn.A = MatSeries(2, 2, M);
  MatQ a0(2, 2);
  a0(0, 0) = GaussQ(1);
  a0(1, 1) = GaussQ(2);
  pn.A.set(0, a0);
  pn.c = {JetQ(1, M), JetQ(1, M)};
  pn.Theta = {mono(n, M, {0, 2, 0}), mono(n, M, {1, 1, 1})};  // no linear contribution along the axis
  auto s2 = associated_system(pn, axis(3, M));
  for (int d = 0; d < s2.B.N; ++d) {
    int sign = d % 2 ? -1 : 1;
    CHECK(s2.B.coeff(d) == a0.scaled(GaussQ(sign)));
  }
}

TEST_CASE("Euler field: k = 1, p = 1, Dcal = 1, Ccal = 0") {
  int N = 20;
  auto fr = reduce_field(euler_field(N), euler_curve(N));
  CHECK(fr.tsteps.empty());
  CHECK(fr.rs.k == 1);
  CHECK(fr.rs.p == 1);
  REQUIRE(fr.rs.Dcal.size() == 1);
  CHECK(fr.rs.Dcal[0] == scalar(1));
  CHECK(fr.rs.Ccal == scalar(0));
}

TEST_CASE("Euler diffeomorphism and its inverse") {
  int N = 20;
  MapQ F = exp_field(euler_field(N));
  auto dr = reduce_diffeo(F, euler_curve(N));
  CHECK(dr.rs.k == 1);
  CHECK(dr.rs.p == 1);
  CHECK(dr.rs.lambda == GaussQ(1));
  CHECK(dr.rs.D[0] == scalar(1));
  CHECK(dr.rs.C == scalar(1, 2));
  CHECK(dr.relation_ok);
  CHECK(dr.fix_ok);
  CHECK(restricted_order(dr.map, dr.field.curve) == dr.rs.k + dr.rs.p + 1);
  CHECK_NOTHROW(detect_rs(dr.map, dr.field.curve));

  auto di = reduce_diffeo(inverse_map(F), euler_curve(N));
  CHECK(di.rs.k == 1);
  CHECK(di.rs.p == 1);
  CHECK(di.rs.lambda == GaussQ(-1));
  CHECK(di.rs.D[0] == scalar(-1));
  CHECK(di.relation_ok);
}

TEST_CASE("Briot-Bouquet diffeomorphism") {
  int N = 16;
  FieldQ X{{mono(2, N, {2, 0}), mono(2, N, {1, 1}, GaussQ(2)) + mono(2, N, {2, 0})}};
  auto c = curve({s_pow(N, 1), -s_pow(N, 1)});
  auto dr = reduce_diffeo(exp_field(X), c);
  CHECK(dr.rs.k == 1);
  CHECK(dr.rs.p == 0);
  CHECK(dr.rs.C == scalar(2));
  CHECK(dr.relation_ok);
}

TEST_CASE("detect_rs rejects") {
  int N = 12;
  FieldQ X{{mono(2, N, {2, 0}), JetQ(2, N)}};
  MapQ F = exp_field(X);
  try {
    detect_rs(F, axis(2, N));
    FAIL("expected NotInForm");
  } catch (const NotInForm& e) {
    CHECK(e.clause == "p = 0 and C = 0");
  }
  int n = 3;
  MapQ G{{JetQ::var(n, N, 0) + mono(n, N, {3, 0, 0}),
          JetQ::var(n, N, 1) + mono(n, N, {1, 1, 0}) + mono(n, N, {2, 0, 1}),
          JetQ::var(n, N, 2) + mono(n, N, {1, 0, 1}, GaussQ(2))}};
  try {
    detect_rs(G, axis(3, N));
    FAIL("expected NotInForm");
  } catch (const NotInForm& e) {
    CHECK(e.clause == "D does not commute with C");
  }
  MapQ H{{JetQ::var(n, N, 0) + mono(n, N, {3, 0, 0}), JetQ::var(n, N, 1) + mono(n, N, {1, 1, 0}),
          JetQ::var(n, N, 2) + mono(n, N, {1, 0, 1}, GaussQ(2))}};
  auto d = detect_rs(H, axis(3, N));
  CHECK(d.k == 1);
  CHECK(d.p == 1);
  CHECK(d.D[0].is_diagonal());
}

TEST_CASE("nilpotent linear part in dimension 3") {
  int N = 24;
  FieldQ X = nilpotent_field(N);
  auto c = axis(3, N);
  auto fr = reduce_field(X, c);
  CHECK_FALSE(fr.tsteps.empty());
  CHECK(fr.beta == 2);
  CHECK(fr.rs.k + fr.rs.p == fr.beta * (fr.pre.pre.l + fr.pre.pre.q));
  CHECK(read_rs_field(fr.field).has_value());
  // replay from the original data
  CHECK(transform_field(X, fr.seq) == fr.field);
  CHECK(graph_form(transform_curve(c, fr.seq)).gamma == fr.curve.gamma);
  for (const auto& s : fr.seq.steps)
    if (s.kind == StepKind::BlowUp) CHECK(s.permissibility_checked);
  CHECK(fr.seq.total_divisor == 0);
}

TEST_CASE("nilpotent diffeomorphism in dimension 3") {
  int N = 24;
  MapQ F = exp_field(nilpotent_field(N));
  auto dr = reduce_diffeo(F, axis(3, N));
  CHECK(dr.rs.k >= 1);
  CHECK(dr.relation_ok);
  CHECK(dr.fix_ok);
  CHECK(restricted_order(dr.map, dr.field.curve) == dr.rs.k + dr.rs.p + 1);
  // the transformed map and the transformed generator agree
  FieldQ Lg = log_map(dr.map);
  int M = std::min(Lg.trunc(), dr.field.field.trunc());
  CHECK(Lg.truncated(M) == dr.field.field.truncated(M));
}

TEST_CASE("principal part is determined by a finite jet") {
  int N = 24;
  FieldQ X = nilpotent_field(N);
  auto base = reduce_field(X, axis(3, N));
  FieldQ Xp = X;
  Xp.comp[1] = Xp.comp[1] + mono(3, N, {N - 4, 1, 0}, GaussQ(7)) + mono(3, N, {N - 3, 0, 1});
  Xp.comp[0] = Xp.comp[0] + mono(3, N, {N - 2, 0, 1}, GaussQ(-2));
  auto pert = reduce_field(Xp, axis(3, N));
  CHECK(pert.rs.k == base.rs.k);
  CHECK(pert.rs.p == base.rs.p);
  CHECK(pert.rs.Dcal == base.rs.Dcal);
  CHECK(pert.rs.Ccal == base.rs.Ccal);
}

TEST_CASE("preconditions and budget") {
  int N = 20;
  FieldQ X = euler_field(N);
  CHECK_THROWS_AS(reduce_field(X, axis(2, N)), PreconditionError);
  FieldQ Xs = X;
  Xs.comp[0] = Xs.comp[0] + JetQ::constant(2, N, GaussQ(1));
  CHECK_THROWS_AS(reduce_field(Xs, euler_curve(N)), PreconditionError);
  FieldQ zero_on_axis{{mono(2, N, {0, 1}), mono(2, N, {0, 2})}};
  CHECK_THROWS_AS(reduce_field(zero_on_axis, axis(2, N)), PreconditionError);
  try {
    reduce_field(euler_field(10), euler_curve(10));
    FAIL("expected BudgetError");
  } catch (const BudgetError& e) {
    CHECK(e.required_order == 12);
  }
}

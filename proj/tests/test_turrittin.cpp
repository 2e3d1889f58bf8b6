#include <random>

#include "doctest.h"
#include "fdyn/turrittin.hpp"
#include "test_support.hpp"

using namespace fdyn;
using namespace fdyn::testing;

namespace {

MatQ mat(std::initializer_list<std::initializer_list<long long>> rows) {
  int r = static_cast<int>(rows.size());
  int c = static_cast<int>(rows.begin()->size());
  MatQ m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (long long v : row) m(i, j++) = GaussQ(v);
    ++i;
  }
  return m;
}

LinearSystem system(int q, std::vector<MatQ> coeffs, int N) {
  LinearSystem s;
  s.q = q;
  s.B = MatSeries(coeffs[0].rows, coeffs[0].cols, N);
  for (std::size_t k = 0; k < coeffs.size(); ++k) s.B.set(static_cast<int>(k), coeffs[k]);
  s.B.trim();
  return s;
}

// Composite gauge T(t) and ramification index beta; checks
// t^(beta q - p) (T B~ + t^(p+1) T') = beta B(t^beta) T.
void check_gauge_oracle(const LinearSystem& in, const TurrittinResult& res) {
  LinearSystem sys = poincare_rank(in);
  int m = sys.dim();
  const int cap = res.form.system.B.N + 4 * (sys.B.N + 8);
  MatSeries T = MatSeries::identity(m, cap);
  int beta = 1;
  for (const auto& t : res.steps) {
    switch (t.kind) {
      case TKind::PolyLinear:
        T = T * t.P.truncated(cap);
        break;
      case TKind::Shearing: {
        MatSeries S(m, m, cap);
        for (int i = 0; i < m; ++i) {
          MatQ v = S.coeff(t.k[i]);
          v(i, i) = GaussQ(1);
          S.set(t.k[i], v);
        }
        T = T * S;
        break;
      }
      case TKind::Ramify:
        T = T.substitute_power(t.alpha).truncated(cap);
        beta *= t.alpha;
        break;
    }
  }
  const auto& out = res.form.system;
  int p = out.q;
  MatSeries lhs = T * out.B + T.derivative().shifted(p + 1);
  MatSeries rhs = (sys.B.substitute_power(beta) * T).scaled(GaussQ(beta));
  int e = beta * sys.q - p;
  if (e >= 0)
    lhs = lhs.shifted(e);
  else
    rhs = rhs.shifted(-e);
  int M = std::min(lhs.N, rhs.N);
  CHECK(M >= 0);
  CHECK(lhs.truncated(M) == rhs.truncated(M));
}

void check_all(const LinearSystem& in, const TurrittinResult& res) {
  // replay soundness
  LinearSystem r = replay(in, res.steps);
  CHECK(r == res.form.system);
  std::string why;
  CHECK_MESSAGE(is_rs_linear_form(res.form.system, nullptr, &why), why);
  // shearings never raise the rank
  LinearSystem cur = poincare_rank(in);
  for (const auto& t : res.steps) {
    LinearSystem nxt = apply_T(cur, t);
    if (t.kind == TKind::Shearing) CHECK(nxt.q <= cur.q);
    if (t.kind == TKind::Ramify) CHECK(nxt.q == cur.q * t.alpha);
    cur = nxt;
  }
  check_gauge_oracle(in, res);
}

}  // namespace

TEST_CASE("Poincare rank normalization") {
  auto a = poincare_rank(system(1, {MatQ(2, 2), MatQ::identity(2)}, 5));
  CHECK(a.q == 0);
  CHECK(a.B.coeff(0) == MatQ::identity(2));
  auto b = poincare_rank(system(1, {mat({{1, 0}, {0, 2}})}, 5));
  CHECK(b.q == 1);
  MatQ Nn = mat({{0, 1}, {0, 0}}), Mm = mat({{1, 2}, {3, 4}});
  auto c = poincare_rank(system(2, {MatQ(2, 2), Nn, Mm}, 6));
  CHECK(c.q == 1);
  CHECK(c.B.coeff(0) == Nn);
  CHECK(c.B.coeff(1) == Mm);
  CHECK_THROWS_AS(poincare_rank(system(1, {MatQ(2, 2)}, 4)), PreconditionError);
}

TEST_CASE("T-transformations") {
  auto s = system(1, {mat({{1, 0}, {0, 2}}), mat({{0, 1}, {1, 0}})}, 6);
  CHECK(apply_T(s, TTransformation::shearing({0, 0})) == s);
  auto d = system(1, {mat({{1, 0}, {0, 2}})}, 6);
  auto r = apply_T(d, TTransformation::ramify(2));
  CHECK(r.q == 2);
  CHECK(r.B.coeff(0) == mat({{2, 0}, {0, 4}}));
  CHECK(r.B.N == 13);
  MatQ P = mat({{1, 1}, {0, 1}});
  auto c = apply_T(d, TTransformation::poly(MatSeries::constant(P, 100)));
  CHECK(c.B.coeff(0) == *inverse(P) * mat({{1, 0}, {0, 2}}) * P);
  CHECK_THROWS_AS(apply_T(d, TTransformation::poly(MatSeries::constant(MatQ(2, 2), 100))), PreconditionError);
  CHECK_THROWS_AS(TTransformation::shearing({-1, 0}), PreconditionError);
}

TEST_CASE("leading split") {
  auto a = leading_split(mat({{1, 0}, {0, 2}}));
  CHECK(a.sizes == std::vector<int>{1, 1});
  auto b = leading_split(mat({{0, 1}, {0, 0}}));
  CHECK(b.sizes == std::vector<int>{2});
  auto c = leading_split(mat({{1, 1}, {0, 2}}));
  MatQ Dg = *inverse(c.P) * mat({{1, 1}, {0, 2}}) * c.P;
  CHECK(Dg.is_diagonal());
  // irrational eigenvalues are refused
  CHECK_THROWS_AS(leading_split(mat({{0, 1}, {2, 0}})), PrecisionError);
  // Gaussian eigenvalues are fine
  auto g = leading_split(mat({{0, 1}, {-1, 0}}));
  CHECK(g.sizes.size() == 2);
}

TEST_CASE("already final systems are left alone") {
  auto d = system(1, {mat({{1, 0}, {0, 2}})}, 6);
  auto res = turrittin_reduce(d);
  CHECK(res.steps.empty());
  CHECK(res.form.p == 1);
  CHECK(res.form.D[0] == mat({{1, 0}, {0, 2}}));
  CHECK(res.form.C.is_zero());
  auto z = system(0, {mat({{0, 1}, {0, 0}})}, 4);
  auto rz = turrittin_reduce(z);
  CHECK(rz.steps.empty());
  CHECK(rz.form.p == 0);
}

TEST_CASE("distinct eigenvalues need one conjugation") {
  auto s = system(1, {mat({{1, 1}, {0, 2}})}, 6);
  auto res = turrittin_reduce(s);
  CHECK(res.steps.size() == 1);
  CHECK(res.steps[0].kind == TKind::PolyLinear);
  CHECK(res.form.p == 1);
  CHECK(res.form.D[0] == mat({{1, 0}, {0, 2}}));
  CHECK(res.form.C.is_zero());
  check_all(s, res);
}

TEST_CASE("nilpotent leading term") {
  auto s = system(1, {mat({{0, 1}, {0, 0}}), mat({{0, 0}, {1, 0}})}, 10);
  auto res = turrittin_reduce(s);
  bool has_ramify = false, has_shear = false;
  for (const auto& t : res.steps) {
    has_ramify |= t.kind == TKind::Ramify;
    has_shear |= t.kind == TKind::Shearing;
  }
  CHECK(has_ramify);
  CHECK(has_shear);
  CHECK(res.form.p == 1);
  check_all(s, res);
}

TEST_CASE("splitting to higher order") {
  auto s = system(2, {mat({{1, 0}, {0, -1}}), mat({{0, 1}, {1, 0}}), mat({{2, 3}, {-1, 1}})}, 8);
  auto res = turrittin_reduce(s);
  CHECK(res.form.p == 2);
  check_all(s, res);
}

TEST_CASE("random systems reduce and replay") {
  std::mt19937_64 rng(23);
  auto rmat = [&](int m, bool nilpotent_upper) {
    MatQ a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (nilpotent_upper && j <= i) continue;
        if (rng() % 2) a(i, j) = pool_coeff(rng, false);
      }
    return a;
  };
  int done = 0;
  for (int rep = 0; rep < 24; ++rep) {
    int m = 2 + rep % 2;
    int q = 1 + rep % 3;
    int N = 10;
    std::vector<MatQ> cs;
    MatQ B0 = rmat(m, true);
    if (rep % 3 == 0) {
      // triangular with distinct rational diagonal
      for (int i = 0; i < m; ++i) B0(i, i) = GaussQ(i + 1);
    } else if (rep % 3 == 1) {
      for (int i = 0; i < m; ++i) B0(i, i) = GaussQ(2);
    }
    if (B0.is_zero()) B0(0, m - 1) = GaussQ(1);
    cs.push_back(B0);
    for (int k = 1; k <= 3; ++k) cs.push_back(rmat(m, false));
    auto s = system(q, cs, N);
    try {
      auto res = turrittin_reduce(s);
      check_all(s, res);
      ++done;
    } catch (const PrecisionError&) {
      // eigenvalues outside Q(i) appear after some shearings
    }
  }
  CHECK(done >= 12);
}

TEST_CASE("shearing candidates that exhaust the truncation are skipped") {
  // second coordinate decoupled; some shearings leave nothing known at order 10
  auto s = system(3,
                  {mat({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}), mat({{1, 0, 0}, {1, 0, 0}, {0, 0, 0}}),
                   mat({{1, 0, 2}, {0, 0, 0}, {0, 0, 0}}), mat({{0, 0, 0}, {0, 0, -1}, {0, 0, 0}})},
                  10);
  MatQ b0(3, 3);
  b0(1, 2) = GaussQ(Rational(1, 3));
  s.B.set(0, b0);
  MatQ b3 = s.B.coeff(3);
  b3(0, 0) = GaussQ(Rational(1, 3));
  b3(1, 0) = GaussQ(Rational(3, 4));
  b3(2, 0) = GaussQ(Rational(-3, 2));
  s.B.set(3, b3);
  auto res = turrittin_reduce(s);
  CHECK(res.form.p == 2);
  check_all(s, res);
}

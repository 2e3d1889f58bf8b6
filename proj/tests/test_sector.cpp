#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fdyn/explog.hpp"
#include "fdyn/sector.hpp"
#include "test_support.hpp"

using namespace fdyn;
using namespace fdyn::testing;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> angles(const std::vector<Direction>& ds) {
  std::vector<double> out;
  for (const auto& d : ds) out.push_back(d.theta);
  return out;
}

RSDiffeoData rs2(int k, int p, GaussQ lambda, std::vector<GaussQ> d) {
  RSDiffeoData r;
  r.k = k;
  r.p = p;
  r.lambda = lambda;
  r.C = MatQ(1, 1);
  for (auto& c : d) {
    MatQ m(1, 1);
    m(0, 0) = c;
    r.D.push_back(m);
  }
  r.D.resize(static_cast<std::size_t>(p), MatQ(1, 1));
  return r;
}

Direction at(double theta) {
  Direction d;
  d.theta = theta;
  return d;
}

JetQ mono(int n, int N, std::vector<int> e, GaussQ c = GaussQ(1)) { return JetQ::monomial(n, N, mono_from(e), c); }

}  // namespace

TEST_CASE("attracting directions") {
  auto a = angles(attracting_directions(1, 0, GaussQ(-1)));
  REQUIRE(a.size() == 1);
  CHECK(a[0] == doctest::Approx(0));

  a = angles(attracting_directions(1, 1, GaussQ(1)));
  REQUIRE(a.size() == 2);
  CHECK(a[0] == doctest::Approx(kPi / 2));
  CHECK(a[1] == doctest::Approx(3 * kPi / 2));

  a = angles(attracting_directions(2, 1, GaussQ(-1)));
  REQUIRE(a.size() == 3);
  CHECK(a[0] == doctest::Approx(0));
  CHECK(a[1] == doctest::Approx(2 * kPi / 3));
  CHECK(a[2] == doctest::Approx(4 * kPi / 3));

  CHECK_THROWS_AS(attracting_directions(0, 0, GaussQ(1)), PreconditionError);
}

TEST_CASE("saddle domain") {
  auto V = saddle_domain(GaussQ(1), {{GaussQ(1), 0}}, 1);
  REQUIRE(V.arcs.size() == 1);
  CHECK(V.arcs[0].first == doctest::Approx(kPi / 2));
  CHECK(V.arcs[0].second == doctest::Approx(3 * kPi / 2));

  V = saddle_domain(GaussQ(1), {{GaussQ(1), 0}, {GaussQ(-1), 0}}, 1);
  CHECK(V.is_empty());

  CHECK(saddle_domain(GaussQ(1), {{GaussQ(1), 0}}, 0).full);

  // p - nu = 2 gives two arcs of opening pi/2
  V = saddle_domain(GaussQ(-1), {{GaussQ(1), 0}}, 2);
  CHECK(V.arcs.size() == 2);
  CHECK(V.measure() == doctest::Approx(kPi));
}

TEST_CASE("arc intersection across 2 pi") {
  AngularDomain a{false, {{3 * kPi / 2, 5 * kPi / 2}}};
  AngularDomain b{false, {{0.1, 1.0}, {6.0, 6.2}}};
  auto c = intersect(a, b);
  CHECK(c.measure() == doctest::Approx(0.9 + 0.2));
  CHECK(intersect(a, AngularDomain::whole()).measure() == doctest::Approx(kPi));
  CHECK(intersect(a, AngularDomain::empty()).is_empty());
}

TEST_CASE("boundary directions are decided exactly") {
  auto ds = attracting_directions(1, 1, GaussQ(1));
  std::vector<SaddleEntry> e{{GaussQ(1), 0}};
  for (const auto& d : ds) CHECK(in_saddle_domain(d, GaussQ(1), e, 1) == Membership::Boundary);
  // without exact data a direction in the guard band stays undecided
  CHECK(in_saddle_domain(at(kPi / 2 + 1e-14), GaussQ(1), e, 1) == Membership::Indeterminate);
  CHECK(in_saddle_domain(at(kPi / 2 + 1e-6), GaussQ(1), e, 1) == Membership::Inside);
  CHECK(in_saddle_domain(at(kPi / 2 - 1e-6), GaussQ(1), e, 1) == Membership::Outside);
}

TEST_CASE("Euler map is not well placed, its inverse is") {
  auto F = rs2(1, 1, GaussQ(1), {GaussQ(1)});
  auto w = well_placed(F);
  CHECK_FALSE(w.overall);
  CHECK_FALSE(w.indeterminate);
  for (auto m : w.verdicts) CHECK(m == Membership::Boundary);
  REQUIRE(w.dim2);
  CHECK(w.dim2->tag == 'd');
  CHECK(w.dim2->attracting_F == 0);
  CHECK(w.dim2->attracting_Finv == 1);
  CHECK(w.dim2->chosen == "F^-1");

  auto Fi = rs2(1, 1, GaussQ(-1), {GaussQ(-1)});
  auto wi = well_placed(Fi);
  CHECK(wi.overall);
  REQUIRE(wi.directions.size() == 2);
  CHECK(wi.directions[1].theta == doctest::Approx(kPi));
  CHECK(wi.verdicts[1] == Membership::Inside);
  REQUIRE(wi.eta_sup[1]);
  CHECK(*wi.eta_sup[1] == doctest::Approx(kPi));
}

TEST_CASE("Briot-Bouquet type: p = 0") {
  auto F = rs2(1, 0, GaussQ(1), {});
  F.C(0, 0) = GaussQ(2);
  auto w = well_placed(F);
  CHECK(w.V.full);
  CHECK(w.overall);
  REQUIRE(w.eta_sup[0]);
  CHECK(*w.eta_sup[0] == doctest::Approx(2 * kPi));
  CHECK(w.dim2->tag == 'a');
}

TEST_CASE("dimension two cases") {
  auto a = dim2_classify(3, 0, rs2(3, 0, GaussQ(1), {}), rs2(3, 0, GaussQ(-1), {}));
  CHECK(a.tag == 'a');
  CHECK(a.attracting_F == 3);
  CHECK(a.attracting_Finv == 3);

  auto b = dim2_classify(2, 1, rs2(2, 1, GaussQ(-1), {GaussQ(1)}), rs2(2, 1, GaussQ(1), {GaussQ(-1)}));
  CHECK(b.tag == 'b');
  CHECK(b.arcs_hit_F >= 1);
  CHECK(b.arcs_hit_Finv >= 1);

  auto c = dim2_classify(1, 2, rs2(1, 2, GaussQ(1), {GaussQ(1)}), rs2(1, 2, GaussQ(-1), {GaussQ(-1)}));
  CHECK(c.tag == 'c');
  CHECK(c.attracting_F >= 1);
  CHECK(c.attracting_Finv >= 1);
}

TEST_CASE("property: direction counts and dimension two guarantees") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 300; ++it) {
    int k = 1 + static_cast<int>(rng() % 4);
    int p = static_cast<int>(rng() % 4);
    GaussQ lambda = pool_coeff(rng);
    std::vector<GaussQ> d(static_cast<std::size_t>(p));
    // in dimension two the final form has D(0) != 0
    for (int i = 0; i < p; ++i) {
      if (i == 0 || rng() % 2) d[i] = pool_coeff(rng);
    }
    auto F = rs2(k, p, lambda, d);
    auto Fi = rs2(k, p, -lambda, {});
    for (int i = 0; i < p; ++i) Fi.D[i](0, 0) = -d[i];

    auto dF = attracting_directions(k, p, lambda);
    auto dG = attracting_directions(k, p, -lambda);
    REQUIRE(static_cast<int>(dF.size()) == k + p);
    // directions of F and F^-1 interleave at half the spacing
    for (const auto& a : dF) {
      double best = 10;
      for (const auto& b : dG) {
        double t = std::fabs(std::remainder(a.theta - b.theta, 2 * kPi));
        best = std::min(best, t);
      }
      CHECK(best == doctest::Approx(kPi / (k + p)));
    }
    auto entries = saddle_entries(F);
    auto V = saddle_domain(lambda, entries, p);
    CHECK_FALSE(V.is_empty());
    // F and F^-1 share V
    auto Vi = saddle_domain(-lambda, saddle_entries(Fi), p);
    CHECK(V.measure() == doctest::Approx(Vi.measure()));

    auto w = well_placed(F), wi = well_placed(Fi);
    CHECK((w.overall || wi.overall));
    auto r = *w.dim2;
    switch (r.tag) {
      case 'a':
        CHECK(r.attracting_F == k);
        CHECK(r.attracting_Finv == k);
        break;
      case 'b':
        CHECK(r.arcs_hit_F >= p);
        CHECK(r.arcs_hit_Finv >= p);
        break;
      case 'c':
        CHECK(r.attracting_F >= 1);
        CHECK(r.attracting_Finv >= 1);
        break;
      default:
        CHECK((r.arcs_hit_F >= p || r.arcs_hit_Finv >= p));
    }
    // every opening lies in (0, 2 pi / (k + p)]
    for (const auto& e : w.eta_sup) {
      if (!e) continue;
      CHECK(*e > 0);
      CHECK(*e <= 2 * kPi / (k + p) + 1e-12);
    }
  }
}

TEST_CASE("saddle domain is unchanged by x -> x + O(x^(p+1))") {
  int N = 14;
  int n = 2;
  // Euler inverse in final form
  MapQ F{{JetQ::var(n, N, 0) - mono(n, N, {3, 0}), JetQ::var(n, N, 1) - mono(n, N, {1, 1}) +
                                                        mono(n, N, {2, 1}, GaussQ(Rational(1, 2)))}};
  CurveParam ax;
  ax.gamma = {JetQ::monomial(1, N, mono_unit(0, 1), GaussQ(1)), JetQ(1, N)};
  auto rs = detect_rs(F, ax);
  auto V0 = saddle_domain(rs.lambda, saddle_entries(rs), rs.p);

  JetTuple<GaussQ> psi{JetQ::var(n, N, 0) + mono(n, N, {2, 0}, GaussQ(3)), JetQ::var(n, N, 1)};
  auto step = TransformStep::coord(CoordChange::from_forward(psi, N));
  MapQ G = transform_map(F, step);
  auto c2 = transform_curve(ax, step);
  auto rs2d = detect_rs(G, c2);
  CHECK(rs2d.lambda == rs.lambda);
  auto V1 = saddle_domain(rs2d.lambda, saddle_entries(rs2d), rs2d.p);
  REQUIRE(V0.arcs.size() == V1.arcs.size());
  for (std::size_t i = 0; i < V0.arcs.size(); ++i) {
    CHECK(V0.arcs[i].first == doctest::Approx(V1.arcs[i].first));
    CHECK(V0.arcs[i].second == doctest::Approx(V1.arcs[i].second));
  }
}

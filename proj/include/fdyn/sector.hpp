#pragma once
// Attracting directions, saddle domains and the well-placedness test.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdyn/rs_reduction.hpp"

namespace fdyn {

constexpr double kAngleGuard = 1e-12;

struct Direction {
  double theta = 0;  // in [0, 2 pi)
  // Exact data when the direction is a root xi^N = w with w in Q(i).
  int root_degree = 0;
  GaussQ root_of;

  Cplx unit() const { return std::polar(1.0, theta); }
};

double canonical_angle(double t);

// Finite union of open arcs on the circle, stored disjoint and sorted with
// 0 <= a < b <= a + 2 pi; an arc may cross 2 pi.
struct AngularDomain {
  bool full = false;
  std::vector<std::pair<double, double>> arcs;

  static AngularDomain whole() { return {true, {}}; }
  static AngularDomain empty() { return {}; }
  bool is_empty() const { return !full && arcs.empty(); }
  double measure() const;
  std::string to_string() const;
};

AngularDomain intersect(const AngularDomain& a, const AngularDomain& b);
// {theta : Re(w e^(i N theta)) > 0}, N may be negative; N = 0 gives the whole
// circle or nothing.
AngularDomain half_plane_condition(const Cplx& w, int N);

enum class Membership { Inside, Outside, Boundary, Indeterminate };
std::string to_string(Membership m);

struct SaddleEntry {
  GaussQ d0;  // leading coefficient of d_j
  int nu = 0;  // its order
};

std::vector<Direction> attracting_directions(int k, int p, const GaussQ& lambda);
AngularDomain saddle_domain(const GaussQ& lambda, const std::vector<SaddleEntry>& entries, int p);
// Entries of the nonzero diagonal polynomials of D.
std::vector<SaddleEntry> saddle_entries(const RSDiffeoData& rs);

// Membership of a direction in the saddle domain, decided exactly on the
// boundary when the inputs are exact.
Membership in_saddle_domain(const Direction& tau, const GaussQ& lambda, const std::vector<SaddleEntry>& entries, int p);

// Supremum of the openings eta of sectors bisected by tau inside V and the
// extra half-plane constraints, capped by 2 pi / (k + p); nullopt when tau
// violates a constraint.
std::optional<double> interval_I(int k, int p, const GaussQ& lambda, const std::vector<SaddleEntry>& entries,
                                 const Direction& tau);

struct Dim2Report {
  char tag = 'a';
  int attracting_F = 0;     // directions of F inside V
  int attracting_Finv = 0;  // directions of F^-1 inside V
  int arcs = 0;             // connected arcs of V (0 when V is the whole circle)
  int arcs_hit_F = 0;       // arcs containing a direction of F
  int arcs_hit_Finv = 0;
  int guaranteed_attracting = 0;
  int guaranteed_repelling = 0;
  std::string guarantee;    // wording of the guaranteed counts
  std::string chosen;       // "F", "F^-1" or "" when neither applies
};

struct WellPlacedReport {
  int k = 0, p = 0;
  GaussQ lambda;
  std::vector<Direction> directions;
  AngularDomain V;
  std::vector<Membership> verdicts;
  std::vector<std::optional<double>> eta_sup;
  bool overall = false;
  bool indeterminate = false;
  std::optional<Dim2Report> dim2;
};

WellPlacedReport well_placed(const RSDiffeoData& rs);

// Open sector |arg x - tau| < eta / 2, 0 < |x| < delta.
struct SectorSpec {
  double tau = 0;
  double eta = 0;
  double delta = 0;

  // Signed angle of x from the bisector, in (-pi, pi].
  double offset(const Cplx& x) const { return std::arg(x * std::polar(1.0, -tau)); }
  bool contains(const Cplx& x, double slack = 1e-12) const {
    double r = std::abs(x);
    return r > 0 && r < delta * (1 + slack) && std::abs(offset(x)) < eta / 2 + slack;
  }
};

Dim2Report dim2_classify(int k, int p, const RSDiffeoData& rs_F, const RSDiffeoData& rs_Finv);

}  // namespace fdyn

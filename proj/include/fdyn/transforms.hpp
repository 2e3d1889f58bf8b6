#pragma once
// Blow-ups, ramifications and coordinate changes acting on fields, curves
// and maps.  Every step is a map phi from the new coordinates to the old ones;
// fields are pulled back (phi_* X~ = X) and maps conjugated (phi o F~ = F o phi).

#include <optional>
#include <string>
#include <vector>

#include "fdyn/curves.hpp"

namespace fdyn {

struct Center {
  // The center is {z_i = 0 : i in vars}; vars[0] is the chart variable that
  // stays undivided.
  std::vector<int> vars;
  int codim() const { return static_cast<int>(vars.size()); }
  static Center point(int n) {
    Center c;
    for (int i = 0; i < n; ++i) c.vars.push_back(i);
    return c;
  }
  std::string to_string() const;
};

// Invertible change z = psi(z~), with psi_inv(z) = z~ stored alongside.
struct CoordChange {
  JetTuple<GaussQ> psi;
  JetTuple<GaussQ> psi_inv;
  std::string label;

  int nvars() const { return static_cast<int>(psi.size()); }
  static CoordChange identity(int n);
  static CoordChange from_linear(const LinearChange& L);  // z~ = A z
  // z_j = z~_j + shift_j(z~_others); shift must not involve z_j itself.
  static CoordChange translation(int n, int j, const JetQ& shift);
  // Inverse computed by fixed-point iteration to order N.
  static CoordChange from_forward(JetTuple<GaussQ> psi, int N);
  CoordChange then(const CoordChange& next) const;  // this first, then next
};

enum class StepKind { Coord, BlowUp, Ramify };

struct TransformStep {
  StepKind kind = StepKind::Coord;
  CoordChange change;  // Coord
  Center center;       // BlowUp
  int q = 1;           // Ramify
  int var = 0;         // Ramify: distinguished variable
  std::optional<int> divisor;  // variable whose zero set is the exceptional divisor
  bool permissibility_checked = false;
  std::string note;

  static TransformStep coord(CoordChange c, std::string note = {});
  static TransformStep blowup(Center z, std::string note = {});
  static TransformStep ramify(int q, int var = 0, std::string note = {});
  // The substitution phi as a tuple of jets in the new coordinates.
  JetTuple<GaussQ> phi(int n) const;
  std::string describe() const;
};

struct TransformSequence {
  std::vector<TransformStep> steps;
  int total_divisor = -1;  // variable index with E = {z = 0}, -1 if none yet

  void append(TransformStep s);
  std::size_t size() const { return steps.size(); }
};

struct CenterCheck {
  bool ok = false;
  int budget = 0;
  std::string clause;
};

CenterCheck is_invariant_center(const FieldQ& X, const Center& Z);
// Largest l with X(z_i) in I(Z)^l for the defining variables, capped at the
// truncation order.
int nu_along(const FieldQ& X, const Center& Z);
CenterCheck is_permissible(const FieldQ& X, const CurveParam& c, const Center& Z);

// Degree of a monomial in the variables of Z.
int center_degree(Mono m, const Center& Z);

FieldQ blowup_field(const FieldQ& X, const Center& Z, const std::vector<GaussQ>& xi = {});
CurveParam blowup_curve(const CurveParam& c, const Center& Z, const std::vector<GaussQ>& xi = {});
MapQ blowup_map(const MapQ& F, const Center& Z);
FieldQ ramify_field(const FieldQ& X, int q, int var = 0);
CurveParam ramify_curve(const CurveParam& c, int q, int var = 0);
MapQ ramify_map(const MapQ& F, int q, int var = 0);

// Translation z_j -> z_j + xi_j z_c for the divided variables, the chart
// shift that brings the tangent point of the curve to the origin of the chart.
CoordChange chart_shift(int n, const Center& Z, const std::vector<GaussQ>& xi);

FieldQ transform_field(const FieldQ& X, const TransformStep& s);
CurveParam transform_curve(const CurveParam& c, const TransformStep& s);
MapQ transform_map(const MapQ& F, const TransformStep& s);
FieldQ transform_field(const FieldQ& X, const TransformSequence& seq);
CurveParam transform_curve(const CurveParam& c, const TransformSequence& seq);
MapQ transform_map(const MapQ& F, const TransformSequence& seq);

// X~(phi_i) - a_i o phi for every component; all zero iff phi_* X~ = X to the
// returned precision.
struct PushforwardCheck {
  bool ok = true;
  int budget = 0;
  int fail_component = -1;
  int fail_order = -1;
};
PushforwardCheck pushforward_check(const FieldQ& X, const FieldQ& Xt, const TransformStep& s);

// Tangent directions xi_j (j in Z.vars[1..]) of the curve in the chart of Z.
std::vector<GaussQ> tangent_chart_shift(const CurveParam& c, const Center& Z);

}  // namespace fdyn

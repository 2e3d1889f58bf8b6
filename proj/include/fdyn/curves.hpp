#pragma once
// Formal curves given by parametrizations s -> gamma(s).

#include <optional>
#include <string>
#include <vector>

#include "fdyn/explog.hpp"
#include "fdyn/matrix.hpp"

namespace fdyn {

struct CurveParam {
  JetTuple<GaussQ> gamma;  // univariate jets in s
  bool irreducible = false;
  int mult = 0;  // 0 = not computed

  int n() const { return static_cast<int>(gamma.size()); }
  int trunc() const {
    int t = kMaxDegree;
    for (const auto& g : gamma) t = std::min(t, g.trunc());
    return t;
  }
  std::string to_string() const;
};

// Convenience: builds a curve from univariate jets and normalizes it.
CurveParam make_curve(JetTuple<GaussQ> gamma);

// gcd of all exponents in the support of all components (0 if zero curve).
int exponent_gcd(const CurveParam& c);
int multiplicity(CurveParam& c);
int multiplicity(const CurveParam& c);
CurveParam normalize_irreducible(const CurveParam& c);

// Coefficients of s^m, first nonzero coordinate scaled to 1.
std::vector<GaussQ> tangent_line(const CurveParam& c);

// gamma o sigma for a univariate sigma of order >= 1.
CurveParam reparametrize(const CurveParam& c, const JetQ& sigma);

// Linear ambient change z' = A z.
struct LinearChange {
  MatQ A;
  bool is_identity() const { return A == MatQ::identity(A.rows); }
};
CurveParam apply_linear(const LinearChange& L, const CurveParam& c);
FieldQ apply_linear(const LinearChange& L, const FieldQ& X);
MapQ apply_linear(const LinearChange& L, const MapQ& F);

struct PuiseuxForm {
  LinearChange change;
  CurveParam curve;  // first component exactly s^m
};
PuiseuxForm to_puiseux(const CurveParam& c);

struct InvarianceResult {
  bool invariant = false;
  JetQ h;               // valid when invariant
  int budget = 0;       // equations checked through s^budget
  int fail_order = -1;  // first inconsistent order
  int fail_component = -1;
};

// Solves X o gamma = h gamma' for a univariate h.
InvarianceResult try_invariance_h(const FieldQ& X, const CurveParam& c);
// Throws NotInvariant on failure.
JetQ invariance_h(const FieldQ& X, const CurveParam& c);
InvarianceResult invariance_map(const MapQ& F, const CurveParam& c);

// Order of g o gamma (kInfOrder if it vanishes to the available precision).
int order_along(const JetQ& g, const CurveParam& c);
// Components of X o gamma.
JetTuple<GaussQ> field_along(const FieldQ& X, const CurveParam& c);

}  // namespace fdyn

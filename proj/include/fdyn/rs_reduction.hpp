#pragma once
// Reduction of a field or a diffeomorphism along an invariant formal curve
// to Ramis-Sibuya form by blow-ups, ramifications and coordinate changes.

#include <optional>
#include <string>
#include <vector>

#include "fdyn/transforms.hpp"
#include "fdyn/turrittin.hpp"

namespace fdyn {

// X = x^l [x^(q+1) u d/dx + (c + A y + Theta) d/dy]
struct PreNormalField {
  int l = 0;
  int q = 0;
  JetQ u;                  // n variables, u(0,0) != 0
  JetTuple<GaussQ> c;      // univariate in x, c(0) = 0
  MatSeries A;             // (n-1)x(n-1), A(0) != 0
  JetTuple<GaussQ> Theta;  // n variables, order >= 2 in y

  FieldQ reassemble(int n) const;
};

// X = x^k [x^(p+1) u d/dx + (c + (Dcal + x^p Ccal + x^(p+1) Acal) y + O(|y|^2)) d/dy]
struct RSFieldData {
  int k = 0;
  int p = 0;
  JetQ u;
  JetTuple<GaussQ> c;
  std::vector<MatQ> Dcal;  // coefficients of x^0..x^(p-1), all diagonal
  MatQ Ccal;
  MatSeries Acal;          // remainder of the linear part
  std::string to_string() const;
};

// F = (x + lambda x^(k+p+1) (1 + psi), y + x^k [b + (D + x^p C + x^(p+1) A) y + O(|y|^2)])
struct RSDiffeoData {
  int k = 0;
  int p = 0;
  GaussQ lambda;
  JetQ psi;
  JetTuple<GaussQ> b;  // univariate
  std::vector<MatQ> D;
  MatQ C;
  MatSeries A;
  std::string to_string() const;
};

// Minimal order of the components gamma_j, j >= 1, of a graph (s, gamma_bar(s)).
int order_of_contact(const CurveParam& c);

// Reparametrizes a non-singular curve transversal to {z_1 = 0} as (s, gamma_bar(s)).
CurveParam graph_form(const CurveParam& c);

struct PreNormalResult {
  TransformSequence seq;
  FieldQ field;       // transformed field, equal to pre.reassemble(n) when !early_exit
  CurveParam curve;   // graph form
  PreNormalField pre;
  bool early_exit = false;  // field already in final form with p = 0
};

PreNormalResult prenormalize(const FieldQ& X, const CurveParam& c);

// x^(q+1) w' = u(x, gamma_bar(x))^-1 A_hat(x) w
LinearSystem associated_system(const PreNormalField& pn, const CurveParam& graph);

// Reads the final shape from a field; nullopt (with the failed clause) if not
// in form.
std::optional<RSFieldData> read_rs_field(const FieldQ& X, std::string* why = nullptr);

struct FieldReduction {
  TransformSequence seq;
  RSFieldData rs;
  CurveParam curve;
  FieldQ field;
  PreNormalResult pre;
  std::vector<TTransformation> tsteps;
  int beta = 1;  // product of the ramification indices
  int m = 0, M = 0;
  bool early_exit = false;
};

FieldReduction reduce_field(const FieldQ& X, const CurveParam& c);

struct DiffeoReduction {
  FieldReduction field;
  MapQ map;  // transformed diffeomorphism
  RSDiffeoData rs;
  bool relation_ok = false;  // D, C against Dcal, Ccal through x^(k+p)
  bool fix_ok = false;       // Fix = {x = 0} to the available order
};

DiffeoReduction reduce_diffeo(const MapQ& F, const CurveParam& c);

// Throws NotInForm with the first violated clause.
RSDiffeoData detect_rs(const MapQ& F, const CurveParam& c);

// I + x^k (D + x^p C) = J_(k+p) exp(x^k (Dcal + x^p Ccal))
bool check_exp_relation(const RSDiffeoData& d, const RSFieldData& f);

// Order of x o F along the curve minus the identity; kInfOrder if none.
int restricted_order(const MapQ& F, const CurveParam& graph);

// Input truncation needed by the pipeline.
int required_truncation(const FieldQ& X, const CurveParam& c);

}  // namespace fdyn

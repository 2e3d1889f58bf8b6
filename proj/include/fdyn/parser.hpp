#pragma once
// Expression and document parsing for the command-line tool.
//
// Grammar (precedence low to high):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*      divisors must be nonzero constants
//   unary  := ('+' | '-') unary | power
//   power  := atom ('^' exponent)?            right-associative
//   atom   := number | 'i' | variable | '(' expr ')'
// Exponents are nonnegative integer constants. Terms beyond the document
// order are dropped silently.

#include <string>
#include <vector>

#include "fdyn/curves.hpp"
#include "fdyn/explog.hpp"
#include "fdyn/turrittin.hpp"

namespace fdyn {

JetQ parse_expression(const std::string& text, const std::vector<std::string>& vars, int N, int line = 1,
                      int col0 = 1);
// Canonical print; parse_expression(print_expression(j)) == j.
std::string print_expression(const JetQ& j, const std::vector<std::string>& vars);

GaussQ parse_coeff(const std::string& text);
std::string print_coeff(const GaussQ& c);

template <class T>
struct Named {
  std::string name;
  T value;
};

struct InputDocument {
  int dim = 0;
  std::vector<std::string> vars;
  int order = 0;
  std::string backend = "exact";
  std::string curve_var = "s";
  std::vector<Named<MapQ>> diffeos;
  std::vector<Named<FieldQ>> fields;
  std::vector<Named<CurveParam>> curves;
  std::vector<Named<LinearSystem>> systems;

  const MapQ* diffeo(const std::string& name = {}) const;
  const FieldQ* field(const std::string& name = {}) const;
  const CurveParam* curve(const std::string& name = {}) const;
  const LinearSystem* system(const std::string& name = {}) const;
};

// Headers: dim N, vars a b c, order N, backend exact|float. Blocks start with
// "diffeo NAME:", "field NAME:", "curve NAME:" or "system NAME:" and hold one
// component per line (curves in the variable s). A system block starts with
// "q Q" and then one matrix row per line, entries separated by commas, in the
// first variable. '#' starts a comment.
// order_override > 0 replaces the order header.
InputDocument parse_document(const std::string& text, int order_override = 0);
std::string print_document(const InputDocument& doc);

}  // namespace fdyn

#pragma once
// Formal meromorphic linear systems x^(q+1) y' = B(x) y and their reduction
// by polynomial gauge changes, shearings and ramifications.

#include <string>
#include <vector>

#include "fdyn/matrix.hpp"

namespace fdyn {

struct LinearSystem {
  int q = 0;
  MatSeries B;

  int dim() const { return B.rows; }
  int trunc() const { return B.N; }
  std::string to_string() const;
  friend bool operator==(const LinearSystem& a, const LinearSystem& b) { return a.q == b.q && a.B == b.B; }
};

enum class TKind { PolyLinear, Shearing, Ramify };

struct TTransformation {
  TKind kind = TKind::PolyLinear;
  MatSeries P;          // polynomial, P(0) invertible
  std::vector<int> k;   // shearing exponents
  int alpha = 1;        // ramification index

  static TTransformation poly(MatSeries P);
  static TTransformation shearing(std::vector<int> k);
  static TTransformation ramify(int alpha);
  std::string to_string() const;
};

struct RSLinearForm {
  int p = 0;
  std::vector<MatQ> D;  // diagonal, D[0..p-1]
  MatQ C;
  LinearSystem system;  // the reduced system, rank p
};

struct TurrittinResult {
  std::vector<TTransformation> steps;
  RSLinearForm form;
};

// Strips common powers of x from B while q > 0.
LinearSystem poincare_rank(const LinearSystem& sys);
LinearSystem apply_T(const LinearSystem& sys, const TTransformation& t);
LinearSystem replay(const LinearSystem& sys, const std::vector<TTransformation>& steps);

struct BlockSplit {
  MatQ P;                  // P^-1 B0 P is block diagonal
  std::vector<int> sizes;  // block sizes in order
  std::vector<GaussQ> eigenvalues;
};
BlockSplit leading_split(const MatQ& B0);

// Checks the final shape; on success fills D and C.
bool is_rs_linear_form(const LinearSystem& sys, RSLinearForm* out = nullptr, std::string* why = nullptr);

TurrittinResult turrittin_reduce(const LinearSystem& sys);

// Minimal valuation over the eigenvalues of B(x) read from the Newton polygon
// of det(t I - B(x)), as a reduced fraction (num, den); den = 0 when every
// non-leading coefficient vanishes to the truncation.
std::pair<int, int> eigenvalue_valuation(const MatSeries& B);

}  // namespace fdyn

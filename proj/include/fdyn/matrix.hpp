#pragma once
// Dense matrices over Gaussian rationals with exact elimination.

#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "fdyn/coeff.hpp"
#include "fdyn/errors.hpp"
#include "fdyn/jet.hpp"

namespace fdyn {

struct MatQ {
  int rows = 0, cols = 0;
  std::vector<GaussQ> a;

  MatQ() = default;
  MatQ(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
  static MatQ identity(int n);
  static MatQ zero(int r, int c) { return MatQ(r, c); }

  GaussQ& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const GaussQ& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  bool is_zero() const;
  bool is_diagonal() const;
  bool is_scalar() const;
  MatQ transpose() const;
  MatQ block(int r0, int c0, int nr, int nc) const;
  void set_block(int r0, int c0, const MatQ& b);
  MatQ scaled(const GaussQ& c) const;
  std::string to_string() const;

  friend MatQ operator+(const MatQ& x, const MatQ& y);
  friend MatQ operator-(const MatQ& x, const MatQ& y);
  friend MatQ operator*(const MatQ& x, const MatQ& y);
  friend bool operator==(const MatQ& x, const MatQ& y) {
    return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
  }
  friend bool operator!=(const MatQ& x, const MatQ& y) { return !(x == y); }
};

int rank(const MatQ& m);
// Basis of the right nullspace, as columns of the returned matrix.
MatQ nullspace(const MatQ& m);
std::optional<MatQ> inverse(const MatQ& m);
// Solves m x = b for a single right-hand side column; nullopt if inconsistent.
std::optional<std::vector<GaussQ>> solve(const MatQ& m, const std::vector<GaussQ>& b);
GaussQ determinant(const MatQ& m);
// Coefficients c_0..c_n of det(t I - m) = sum c_k t^k (c_n = 1), Faddeev-LeVerrier.
std::vector<GaussQ> char_poly(const MatQ& m);
bool is_nilpotent(const MatQ& m);

// Exact eigenvalues with algebraic multiplicities.  Roots of the
// characteristic polynomial are located numerically, rationalized and
// verified exactly; PrecisionError if they do not all lie in Q(i).
std::vector<std::pair<GaussQ, int>> exact_eigenvalues(const MatQ& m);
// Jordan basis of a nilpotent matrix as columns of P, chains ordered so that
// P^-1 m P has its ones on the superdiagonal.
MatQ jordan_basis_nilpotent(const MatQ& m);
// A X - X B = C.
std::optional<MatQ> solve_sylvester(const MatQ& A, const MatQ& B, const MatQ& C);

// Matrix-valued power series sum_k c[k] x^k known through x^N.  Stored
// coefficients may stop early; the missing ones are zero.
struct MatSeries {
  int rows = 0, cols = 0, N = 0;
  std::vector<MatQ> c;

  MatSeries() = default;
  MatSeries(int r, int cc, int trunc) : rows(r), cols(cc), N(trunc) {}
  static MatSeries identity(int m, int trunc);
  static MatSeries constant(const MatQ& a, int trunc);

  MatQ coeff(int k) const;
  void set(int k, const MatQ& v);
  int order() const;  // kInfOrder when zero to N
  int eff_order() const { return order() == kInfOrder ? N + 1 : order(); }
  bool is_zero() const { return order() == kInfOrder; }
  MatSeries truncated(int M) const;
  MatSeries shifted(int k) const;  // x^k * this
  MatSeries divided(int k) const;  // this / x^k
  MatSeries derivative() const;
  MatSeries substitute_power(int alpha) const;  // x -> x^alpha
  MatSeries scaled(const GaussQ& s) const;
  MatSeries block(int r0, int c0, int nr, int nc) const;
  void set_block(int r0, int c0, const MatSeries& b);
  MatSeries transpose() const;
  std::string to_string() const;
  void trim();

  friend MatSeries operator+(const MatSeries& a, const MatSeries& b);
  friend MatSeries operator-(const MatSeries& a, const MatSeries& b);
  friend MatSeries operator*(const MatSeries& a, const MatSeries& b);
  friend bool operator==(const MatSeries& a, const MatSeries& b);
};

std::optional<MatSeries> inverse(const MatSeries& a);

// Incremental row echelon form used for consistency tracking: rows are
// appended one at a time and the first inconsistent row can be reported.
class IncrementalEchelon {
 public:
  explicit IncrementalEchelon(int ncols) : ncols_(ncols) {}
  // Adds the equation row . x = rhs; returns false if it contradicts the
  // previous ones.
  bool add(std::vector<GaussQ> row, GaussQ rhs);

 private:
  int ncols_;
  std::vector<std::vector<GaussQ>> rows_;
  std::vector<GaussQ> rhs_;
  std::vector<int> pivots_;
};

}  // namespace fdyn

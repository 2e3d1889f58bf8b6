#include "fdyn/matrix.hpp"

#include <stdexcept>

namespace fdyn {

MatQ MatQ::identity(int n) {
  MatQ m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = GaussQ(1);
  return m;
}

bool MatQ::is_zero() const {
  for (const auto& v : a)
    if (!v.is_zero()) return false;
  return true;
}

bool MatQ::is_diagonal() const {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (i != j && !(*this)(i, j).is_zero()) return false;
  return true;
}

bool MatQ::is_scalar() const {
  if (!is_diagonal() || rows != cols) return false;
  for (int i = 1; i < rows; ++i)
    if ((*this)(i, i) != (*this)(0, 0)) return false;
  return true;
}

MatQ MatQ::transpose() const {
  MatQ t(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

MatQ MatQ::block(int r0, int c0, int nr, int nc) const {
  MatQ b(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void MatQ::set_block(int r0, int c0, const MatQ& b) {
  for (int i = 0; i < b.rows; ++i)
    for (int j = 0; j < b.cols; ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

MatQ MatQ::scaled(const GaussQ& c) const {
  MatQ r = *this;
  for (auto& v : r.a) v = v * c;
  return r;
}

std::string MatQ::to_string() const {
  std::string s = "[";
  for (int i = 0; i < rows; ++i) {
    s += i ? ", [" : "[";
    for (int j = 0; j < cols; ++j) s += (j ? ", " : "") + (*this)(i, j).to_string();
    s += "]";
  }
  return s + "]";
}

MatQ operator+(const MatQ& x, const MatQ& y) {
  MatQ r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

MatQ operator-(const MatQ& x, const MatQ& y) {
  MatQ r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

MatQ operator*(const MatQ& x, const MatQ& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matrix shape mismatch");
  MatQ r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      if (x(i, k).is_zero()) continue;
      for (int j = 0; j < y.cols; ++j)
        if (!y(k, j).is_zero()) r(i, j) += x(i, k) * y(k, j);
    }
  return r;
}

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<int> rref(MatQ& m) {
  std::vector<int> piv;
  int r = 0;
  for (int c = 0; c < m.cols && r < m.rows; ++c) {
    int p = -1;
    for (int i = r; i < m.rows; ++i)
      if (!m(i, c).is_zero()) { p = i; break; }
    if (p < 0) continue;
    if (p != r)
      for (int j = 0; j < m.cols; ++j) std::swap(m(p, j), m(r, j));
    GaussQ inv = m(r, c).inverse();
    for (int j = c; j < m.cols; ++j) m(r, j) = m(r, j) * inv;
    for (int i = 0; i < m.rows; ++i) {
      if (i == r || m(i, c).is_zero()) continue;
      GaussQ f = m(i, c);
      for (int j = c; j < m.cols; ++j)
        if (!m(r, j).is_zero()) m(i, j) -= f * m(r, j);
    }
    piv.push_back(c);
    ++r;
  }
  return piv;
}

}  // namespace

int rank(const MatQ& m) {
  MatQ c = m;
  return static_cast<int>(rref(c).size());
}

MatQ nullspace(const MatQ& m) {
  MatQ c = m;
  auto piv = rref(c);
  std::vector<bool> is_piv(m.cols, false);
  for (int p : piv) is_piv[p] = true;
  std::vector<int> free;
  for (int j = 0; j < m.cols; ++j)
    if (!is_piv[j]) free.push_back(j);
  MatQ ns(m.cols, static_cast<int>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) {
    int f = free[k];
    ns(f, static_cast<int>(k)) = GaussQ(1);
    for (std::size_t r = 0; r < piv.size(); ++r) ns(piv[r], static_cast<int>(k)) = -c(static_cast<int>(r), f);
  }
  return ns;
}

std::optional<MatQ> inverse(const MatQ& m) {
  if (m.rows != m.cols) return std::nullopt;
  int n = m.rows;
  MatQ aug(n, 2 * n);
  aug.set_block(0, 0, m);
  aug.set_block(0, n, MatQ::identity(n));
  auto piv = rref(aug);
  if (static_cast<int>(piv.size()) < n || piv[n - 1] != n - 1) return std::nullopt;
  return aug.block(0, n, n, n);
}

std::optional<std::vector<GaussQ>> solve(const MatQ& m, const std::vector<GaussQ>& b) {
  MatQ aug(m.rows, m.cols + 1);
  aug.set_block(0, 0, m);
  for (int i = 0; i < m.rows; ++i) aug(i, m.cols) = b[i];
  auto piv = rref(aug);
  if (!piv.empty() && piv.back() == m.cols) return std::nullopt;
  std::vector<GaussQ> x(m.cols);
  for (std::size_t r = 0; r < piv.size(); ++r) x[piv[r]] = aug(static_cast<int>(r), m.cols);
  return x;
}

GaussQ determinant(const MatQ& m) {
  MatQ c = m;
  int n = m.rows;
  GaussQ det(1);
  for (int col = 0; col < n; ++col) {
    int p = -1;
    for (int i = col; i < n; ++i)
      if (!c(i, col).is_zero()) { p = i; break; }
    if (p < 0) return GaussQ(0);
    if (p != col) {
      for (int j = 0; j < n; ++j) std::swap(c(p, j), c(col, j));
      det = -det;
    }
    det = det * c(col, col);
    GaussQ inv = c(col, col).inverse();
    for (int i = col + 1; i < n; ++i) {
      if (c(i, col).is_zero()) continue;
      GaussQ f = c(i, col) * inv;
      for (int j = col; j < n; ++j) c(i, j) -= f * c(col, j);
    }
  }
  return det;
}

std::vector<GaussQ> char_poly(const MatQ& m) {
  int n = m.rows;
  std::vector<GaussQ> c(n + 1);
  c[n] = GaussQ(1);
  MatQ M = MatQ::zero(n, n);
  MatQ I = MatQ::identity(n);
  for (int k = 1; k <= n; ++k) {
    M = m * M + I.scaled(c[n - k + 1]);
    MatQ AM = m * M;
    GaussQ tr;
    for (int i = 0; i < n; ++i) tr += AM(i, i);
    c[n - k] = tr * GaussQ(Rational(-1, k));
  }
  return c;
}

bool is_nilpotent(const MatQ& m) {
  auto c = char_poly(m);
  for (int k = 0; k < m.rows; ++k)
    if (!c[k].is_zero()) return false;
  return true;
}

bool IncrementalEchelon::add(std::vector<GaussQ> row, GaussQ rhs) {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    int p = pivots_[r];
    if (row[p].is_zero()) continue;
    GaussQ f = row[p];
    for (int j = 0; j < ncols_; ++j)
      if (!rows_[r][j].is_zero()) row[j] -= f * rows_[r][j];
    rhs -= f * rhs_[r];
  }
  int p = -1;
  for (int j = 0; j < ncols_; ++j)
    if (!row[j].is_zero()) { p = j; break; }
  if (p < 0) return rhs.is_zero();
  GaussQ inv = row[p].inverse();
  for (auto& v : row) v = v * inv;
  rhs = rhs * inv;
  // keep earlier rows reduced with respect to the new pivot
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r][p].is_zero()) continue;
    GaussQ f = rows_[r][p];
    for (int j = 0; j < ncols_; ++j)
      if (!row[j].is_zero()) rows_[r][j] -= f * row[j];
    rhs_[r] -= f * rhs;
  }
  rows_.push_back(std::move(row));
  rhs_.push_back(rhs);
  pivots_.push_back(p);
  return true;
}

}  // namespace fdyn

// ---- spectral tools ---------------------------------------------------------

#include <Eigen/Eigenvalues>

namespace fdyn {

namespace {

GaussQ poly_eval(const std::vector<GaussQ>& p, const GaussQ& x) {
  GaussQ acc;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// Divides p by (t - r); p(r) must vanish.
std::vector<GaussQ> deflate(const std::vector<GaussQ>& p, const GaussQ& r) {
  int n = static_cast<int>(p.size()) - 1;
  std::vector<GaussQ> q(n);
  GaussQ carry;
  for (int k = n; k >= 1; --k) {
    carry = p[k] + carry * r;
    q[k - 1] = carry;
  }
  return q;
}

}  // namespace

std::vector<std::pair<GaussQ, int>> exact_eigenvalues(const MatQ& m) {
  if (m.rows != m.cols) throw StructuralError("eigenvalues of a non-square matrix", "linsys");
  int n = m.rows;
  std::vector<GaussQ> p = char_poly(m);
  std::vector<std::pair<GaussQ, int>> out;
  // strip zero roots exactly
  int z = 0;
  while (z < n && p[z].is_zero()) ++z;
  if (z) {
    out.push_back({GaussQ(0), z});
    p.erase(p.begin(), p.begin() + z);
  }
  while (p.size() > 1) {
    int d = static_cast<int>(p.size()) - 1;
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 1; i < d; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) C(i, d - 1) = -p[i].to_complex();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    bool found = false;
    for (int i = 0; i < d && !found; ++i) {
      Cplx z0 = es.eigenvalues()(i);
      for (long long den : {1LL, 10LL, 100LL, 1000LL, 10000LL, 1000000LL}) {
        GaussQ cand = rationalize(z0, den);
        if (poly_eval(p, cand).is_zero()) {
          int mult = 0;
          while (p.size() > 1 && poly_eval(p, cand).is_zero()) {
            p = deflate(p, cand);
            ++mult;
          }
          out.push_back({cand, mult});
          found = true;
          break;
        }
      }
    }
    if (!found)
      throw PrecisionError("linsys", "characteristic polynomial does not split over the Gaussian rationals");
  }
  return out;
}

MatQ jordan_basis_nilpotent(const MatQ& m) {
  int n = m.rows;
  if (!is_nilpotent(m)) throw PreconditionError("linsys", "Jordan basis requested for a non-nilpotent matrix");
  std::vector<MatQ> pw{MatQ::identity(n)};
  while (!pw.back().is_zero()) pw.push_back(pw.back() * m);
  int s = static_cast<int>(pw.size()) - 1;  // m^s = 0
  std::vector<std::vector<GaussQ>> V;
  std::vector<std::vector<std::vector<GaussQ>>> chains;
  auto columns = [](const MatQ& a) {
    std::vector<std::vector<GaussQ>> r;
    for (int j = 0; j < a.cols; ++j) {
      std::vector<GaussQ> c(a.rows);
      for (int i = 0; i < a.rows; ++i) c[i] = a(i, j);
      r.push_back(c);
    }
    return r;
  };
  auto rank_of = [n](const std::vector<std::vector<GaussQ>>& vs) {
    if (vs.empty()) return 0;
    MatQ a(n, static_cast<int>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j)
      for (int i = 0; i < n; ++i) a(i, static_cast<int>(j)) = vs[j][i];
    return rank(a);
  };
  auto apply = [&](const std::vector<GaussQ>& v) {
    std::vector<GaussQ> r(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) r[i] = r[i] + m(i, k) * v[k];
    return r;
  };
  for (int j = s; j >= 1; --j) {
    auto base = columns(nullspace(pw[j - 1]));
    for (const auto& w : columns(nullspace(pw[j]))) {
      auto span = base;
      span.insert(span.end(), V.begin(), V.end());
      int r0 = rank_of(span);
      span.push_back(w);
      if (rank_of(span) == r0) continue;
      std::vector<std::vector<GaussQ>> chain(j);
      chain[j - 1] = w;
      for (int i = j - 2; i >= 0; --i) chain[i] = apply(chain[i + 1]);
      for (const auto& v : chain) V.push_back(v);
      chains.push_back(chain);
    }
  }
  MatQ P(n, n);
  int col = 0;
  for (const auto& ch : chains)
    for (const auto& v : ch) {
      for (int i = 0; i < n; ++i) P(i, col) = v[i];
      ++col;
    }
  if (col != n || !inverse(P)) throw std::logic_error("Jordan basis construction failed");
  return P;
}

std::optional<MatQ> solve_sylvester(const MatQ& A, const MatQ& B, const MatQ& C) {
  int p = A.rows, q = B.rows;
  // unknown X(i,j) at index i*q + j
  MatQ K(p * q, p * q);
  std::vector<GaussQ> rhs(p * q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) {
      int row = i * q + j;
      rhs[row] = C(i, j);
      for (int k = 0; k < p; ++k) K(row, k * q + j) = K(row, k * q + j) + A(i, k);
      for (int k = 0; k < q; ++k) K(row, i * q + k) = K(row, i * q + k) - B(k, j);
    }
  auto x = solve(K, rhs);
  if (!x) return std::nullopt;
  MatQ X(p, q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) X(i, j) = (*x)[i * q + j];
  return X;
}

// ---- matrix series ----------------------------------------------------------

MatSeries MatSeries::identity(int m, int trunc) { return constant(MatQ::identity(m), trunc); }

MatSeries MatSeries::constant(const MatQ& a, int trunc) {
  MatSeries s(a.rows, a.cols, trunc);
  s.c.push_back(a);
  s.trim();
  return s;
}

MatQ MatSeries::coeff(int k) const {
  if (k > N) throw BudgetError("linsys", "coefficient x^" + std::to_string(k) + " beyond truncation " + std::to_string(N), k);
  if (k < 0 || k >= static_cast<int>(c.size())) return MatQ(rows, cols);
  return c[k];
}

void MatSeries::set(int k, const MatQ& v) {
  if (k > N) return;
  if (static_cast<int>(c.size()) <= k) c.resize(k + 1, MatQ(rows, cols));
  c[k] = v;
}

int MatSeries::order() const {
  for (std::size_t k = 0; k < c.size() && static_cast<int>(k) <= N; ++k)
    if (!c[k].is_zero()) return static_cast<int>(k);
  return kInfOrder;
}

void MatSeries::trim() {
  if (static_cast<int>(c.size()) > N + 1) c.resize(std::max(0, N + 1));
  while (!c.empty() && c.back().is_zero()) c.pop_back();
}

MatSeries MatSeries::truncated(int M) const {
  MatSeries r = *this;
  r.N = std::min(N, M);
  r.trim();
  return r;
}

MatSeries MatSeries::shifted(int k) const {
  MatSeries r(rows, cols, N + k);
  r.c.assign(k, MatQ(rows, cols));
  r.c.insert(r.c.end(), c.begin(), c.end());
  r.trim();
  return r;
}

MatSeries MatSeries::divided(int k) const {
  for (int i = 0; i < k && i < static_cast<int>(c.size()); ++i)
    if (!c[i].is_zero()) throw DivisibilityError("matrix series not divisible by x^" + std::to_string(k), "x^" + std::to_string(i));
  MatSeries r(rows, cols, N - k);
  if (static_cast<int>(c.size()) > k) r.c.assign(c.begin() + k, c.end());
  r.trim();
  return r;
}

MatSeries MatSeries::derivative() const {
  MatSeries r(rows, cols, N - 1);
  for (std::size_t k = 1; k < c.size(); ++k) r.c.push_back(c[k].scaled(GaussQ(static_cast<long long>(k))));
  r.trim();
  return r;
}

MatSeries MatSeries::substitute_power(int alpha) const {
  long long M = static_cast<long long>(alpha) * (N + 1) - 1;
  MatSeries r(rows, cols, static_cast<int>(std::min<long long>(M, 1 << 28)));
  for (std::size_t k = 0; k < c.size(); ++k) r.set(static_cast<int>(k) * alpha, c[k]);
  r.trim();
  return r;
}

MatSeries MatSeries::scaled(const GaussQ& s) const {
  MatSeries r = *this;
  for (auto& m : r.c) m = m.scaled(s);
  r.trim();
  return r;
}

MatSeries MatSeries::block(int r0, int c0, int nr, int nc) const {
  MatSeries r(nr, nc, N);
  for (const auto& m : c) r.c.push_back(m.block(r0, c0, nr, nc));
  r.trim();
  return r;
}

void MatSeries::set_block(int r0, int c0, const MatSeries& b) {
  N = std::min(N, b.N);
  int K = std::max(c.size(), b.c.size());
  for (int k = 0; k < K && k <= N; ++k) {
    MatQ v = coeff(k);
    v.set_block(r0, c0, b.coeff(k));
    set(k, v);
  }
  trim();
}

MatSeries MatSeries::transpose() const {
  MatSeries r(cols, rows, N);
  for (const auto& m : c) r.c.push_back(m.transpose());
  return r;
}

std::string MatSeries::to_string() const {
  std::string s;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].is_zero()) continue;
    if (!s.empty()) s += " + ";
    s += c[k].to_string() + (k ? "*x^" + std::to_string(k) : "");
  }
  if (s.empty()) s = "0";
  return s + " + O(x^" + std::to_string(N + 1) + ")";
}

MatSeries operator+(const MatSeries& a, const MatSeries& b) {
  MatSeries r(a.rows, a.cols, std::min(a.N, b.N));
  std::size_t K = std::max(a.c.size(), b.c.size());
  for (std::size_t k = 0; k < K && static_cast<int>(k) <= r.N; ++k)
    r.c.push_back(a.coeff(static_cast<int>(k)) + b.coeff(static_cast<int>(k)));
  r.trim();
  return r;
}

MatSeries operator-(const MatSeries& a, const MatSeries& b) {
  MatSeries r(a.rows, a.cols, std::min(a.N, b.N));
  std::size_t K = std::max(a.c.size(), b.c.size());
  for (std::size_t k = 0; k < K && static_cast<int>(k) <= r.N; ++k)
    r.c.push_back(a.coeff(static_cast<int>(k)) - b.coeff(static_cast<int>(k)));
  r.trim();
  return r;
}

MatSeries operator*(const MatSeries& a, const MatSeries& b) {
  if (a.cols != b.rows) throw StructuralError("matrix series product: shape mismatch", "linsys");
  long long M = std::min<long long>(static_cast<long long>(a.N) + b.eff_order(), static_cast<long long>(b.N) + a.eff_order());
  M = std::min<long long>(M, std::max(a.N, b.N));
  MatSeries r(a.rows, b.cols, static_cast<int>(M));
  for (std::size_t i = 0; i < a.c.size(); ++i) {
    if (a.c[i].is_zero()) continue;
    for (std::size_t j = 0; j < b.c.size() && static_cast<long long>(i + j) <= M; ++j) {
      if (b.c[j].is_zero()) continue;
      int k = static_cast<int>(i + j);
      if (static_cast<int>(r.c.size()) <= k) r.c.resize(k + 1, MatQ(a.rows, b.cols));
      r.c[k] = r.c[k] + a.c[i] * b.c[j];
    }
  }
  r.trim();
  return r;
}

bool operator==(const MatSeries& a, const MatSeries& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.N != b.N) return false;
  std::size_t K = std::max(a.c.size(), b.c.size());
  for (std::size_t k = 0; k < K; ++k)
    if (a.coeff(static_cast<int>(k)) != b.coeff(static_cast<int>(k))) return false;
  return true;
}

std::optional<MatSeries> inverse(const MatSeries& a) {
  auto i0 = inverse(a.coeff(0));
  if (!i0) return std::nullopt;
  MatSeries r(a.rows, a.cols, a.N);
  r.set(0, *i0);
  for (int k = 1; k <= a.N; ++k) {
    MatQ acc(a.rows, a.cols);
    for (int j = 1; j <= k && j < static_cast<int>(a.c.size()); ++j) acc = acc + a.c[j] * r.coeff(k - j);
    if (!acc.is_zero()) r.set(k, (*i0 * acc).scaled(GaussQ(-1)));
  }
  r.trim();
  return r;
}

}  // namespace fdyn

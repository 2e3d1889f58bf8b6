#include "fdyn/turrittin.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <optional>
#include <tuple>

namespace fdyn {

namespace {

// Exact polynomials are stored with a truncation far above any system's.
constexpr int kPolyTrunc = 1 << 20;

MatSeries scalar_identity(const MatSeries& s, int m) {  // s is 1x1
  MatSeries r(m, m, s.N);
  for (std::size_t k = 0; k < s.c.size(); ++k) r.set(static_cast<int>(k), MatQ::identity(m).scaled(s.c[k](0, 0)));
  r.trim();
  return r;
}

MatSeries trace_series(const MatSeries& a) {
  MatSeries t(1, 1, a.N);
  for (std::size_t k = 0; k < a.c.size(); ++k) {
    MatQ v(1, 1);
    for (int i = 0; i < a.rows; ++i) v(0, 0) = v(0, 0) + a.c[k](i, i);
    t.set(static_cast<int>(k), v);
  }
  t.trim();
  return t;
}

struct BlockInfo {
  int r = 0;          // first order whose coefficient is not scalar
  bool finished = false;
  MatQ lead;          // block coefficient at order r
  GaussQ mu;          // trace / size
  bool single = false;  // lead - mu I nilpotent
  int nil_rank = 0;
};

BlockInfo analyze(const LinearSystem& sys, int lo, int sz) {
  BlockInfo bi;
  for (int r = 0; r < sys.q; ++r) {
    if (r > sys.B.N) throw BudgetError("turrittin", "truncation exhausted while scanning scalar parts", r);
    MatQ v = sys.B.coeff(r).block(lo, lo, sz, sz);
    if (v.is_scalar()) continue;
    bi.r = r;
    bi.lead = v;
    GaussQ tr;
    for (int i = 0; i < sz; ++i) tr = tr + v(i, i);
    bi.mu = tr * GaussQ(Rational(1, sz));
    MatQ nil = v - MatQ::identity(sz).scaled(bi.mu);
    bi.single = is_nilpotent(nil);
    bi.nil_rank = bi.single ? rank(nil) : 0;
    return bi;
  }
  bi.r = sys.q;
  bi.finished = true;
  return bi;
}

// Lexicographic progress measure of a block: (remaining rank, nilpotent, rank)
std::tuple<int, int, int> measure(const LinearSystem& sys, int lo, int sz) {
  BlockInfo bi = analyze(sys, lo, sz);
  if (bi.finished) return {0, 0, 0};
  return {sys.q - bi.r, bi.single ? 1 : 0, bi.nil_rank};
}

}  // namespace

std::string LinearSystem::to_string() const {
  return "x^" + std::to_string(q + 1) + " y' = (" + B.to_string() + ") y";
}

TTransformation TTransformation::poly(MatSeries P) {
  TTransformation t;
  t.kind = TKind::PolyLinear;
  t.P = std::move(P);
  t.P.N = kPolyTrunc;
  return t;
}

TTransformation TTransformation::shearing(std::vector<int> k) {
  for (int v : k)
    if (v < 0) throw PreconditionError("turrittin", "shearing exponents must be nonnegative");
  TTransformation t;
  t.kind = TKind::Shearing;
  t.k = std::move(k);
  return t;
}

TTransformation TTransformation::ramify(int alpha) {
  if (alpha < 1) throw PreconditionError("turrittin", "ramification index must be positive");
  TTransformation t;
  t.kind = TKind::Ramify;
  t.alpha = alpha;
  return t;
}

std::string TTransformation::to_string() const {
  switch (kind) {
    case TKind::PolyLinear: {
      MatSeries shown = P;
      shown.N = static_cast<int>(P.c.size()) - 1;
      std::string s = shown.to_string();
      return "y = P(x) y~, P = " + s.substr(0, s.rfind(" + O("));
    }
    case TKind::Shearing: {
      std::string s = "y = diag(";
      for (std::size_t i = 0; i < k.size(); ++i) s += (i ? ", x^" : "x^") + std::to_string(k[i]);
      return s + ") y~";
    }
    case TKind::Ramify:
      return "x = t^" + std::to_string(alpha);
  }
  return {};
}

LinearSystem poincare_rank(const LinearSystem& sys) {
  if (sys.B.is_zero()) throw PreconditionError("turrittin", "system matrix vanishes to the truncation order");
  LinearSystem r = sys;
  while (r.q > 0 && r.B.coeff(0).is_zero()) {
    r.B = r.B.divided(1);
    r.q -= 1;
  }
  return r;
}

LinearSystem apply_T(const LinearSystem& sys, const TTransformation& t) {
  int m = sys.dim();
  LinearSystem r;
  switch (t.kind) {
    case TKind::PolyLinear: {
      MatSeries P = t.P.truncated(sys.B.N);
      auto Pi = inverse(P);
      if (!Pi) throw PreconditionError("turrittin", "polynomial transformation with singular P(0)");
      r.q = sys.q;
      r.B = *Pi * sys.B * P - (*Pi * P.derivative()).shifted(sys.q + 1);
      r.B = r.B.truncated(sys.B.N);
      break;
    }
    case TKind::Shearing: {
      if (static_cast<int>(t.k.size()) != m) throw StructuralError("shearing size mismatch", "turrittin");
      int kmax = *std::max_element(t.k.begin(), t.k.end());
      int kmin = *std::min_element(t.k.begin(), t.k.end());
      int d = 0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          int v = kInfOrder;
          for (std::size_t k = 0; k < sys.B.c.size(); ++k)
            if (!sys.B.c[k](i, j).is_zero()) {
              v = static_cast<int>(k);
              break;
            }
          if (v == kInfOrder) continue;
          d = std::max(d, t.k[i] - t.k[j] - v);
        }
      r.q = sys.q + d;
      int N = sys.B.N + d - (kmax - kmin);
      if (N < 0) throw BudgetError("turrittin", "shearing exhausts the truncation", sys.B.N + (kmax - kmin) - d);
      r.B = MatSeries(m, m, N);
      for (std::size_t k = 0; k < sys.B.c.size(); ++k)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            const GaussQ& v = sys.B.c[k](i, j);
            if (v.is_zero()) continue;
            int e = static_cast<int>(k) + t.k[j] - t.k[i] + d;
            if (e > N) continue;
            MatQ cur = r.B.coeff(e);
            cur(i, j) = cur(i, j) + v;
            r.B.set(e, cur);
          }
      for (int i = 0; i < m; ++i) {
        if (t.k[i] == 0 || r.q > N) continue;
        MatQ cur = r.B.coeff(r.q);
        cur(i, i) = cur(i, i) - GaussQ(t.k[i]);
        r.B.set(r.q, cur);
      }
      r.B.trim();
      break;
    }
    case TKind::Ramify: {
      r.q = sys.q * t.alpha;
      r.B = sys.B.substitute_power(t.alpha).scaled(GaussQ(t.alpha));
      break;
    }
  }
  if (r.B.is_zero() && !sys.B.is_zero())
    throw BudgetError("turrittin", "the transformed system vanishes to its eroded truncation order " +
                                       std::to_string(r.B.N) + "; raise the order");
  return poincare_rank(r);
}

LinearSystem replay(const LinearSystem& sys, const std::vector<TTransformation>& steps) {
  LinearSystem r = poincare_rank(sys);
  for (const auto& t : steps) r = apply_T(r, t);
  return r;
}

BlockSplit leading_split(const MatQ& B0) {
  BlockSplit s;
  int n = B0.rows;
  s.P = MatQ(n, n);
  int col = 0;
  for (const auto& [lam, mult] : exact_eigenvalues(B0)) {
    MatQ A = B0 - MatQ::identity(n).scaled(lam);
    MatQ Ap = MatQ::identity(n);
    for (int i = 0; i < mult; ++i) Ap = Ap * A;
    MatQ K = nullspace(Ap);
    if (K.cols != mult) throw std::logic_error("generalized eigenspace dimension mismatch");
    for (int j = 0; j < K.cols; ++j) {
      for (int i = 0; i < n; ++i) s.P(i, col) = K(i, j);
      ++col;
    }
    s.sizes.push_back(mult);
    s.eigenvalues.push_back(lam);
  }
  return s;
}

bool is_rs_linear_form(const LinearSystem& sys, RSLinearForm* out, std::string* why) {
  auto fail = [&](const std::string& w) {
    if (why) *why = w;
    return false;
  };
  int p = sys.q;
  if (sys.B.N < p) return fail("truncation below the rank");
  if (p == 0) {
    if (sys.B.coeff(0).is_zero()) return fail("p = 0 and C = 0");
  } else {
    if (sys.B.coeff(0).is_zero()) return fail("D(0) = 0");
    for (int j = 0; j < p; ++j)
      if (!sys.B.coeff(j).is_diagonal()) return fail("coefficient of x^" + std::to_string(j) + " is not diagonal");
    MatQ C = sys.B.coeff(p);
    for (int j = 0; j < p; ++j) {
      MatQ Dj = sys.B.coeff(j);
      if (Dj * C != C * Dj) return fail("D does not commute with C");
    }
  }
  if (out) {
    out->p = p;
    out->D.clear();
    for (int j = 0; j < p; ++j) out->D.push_back(sys.B.coeff(j));
    out->C = sys.B.coeff(p);
    out->system = sys;
  }
  return true;
}

std::pair<int, int> eigenvalue_valuation(const MatSeries& A) {
  int n = A.rows;
  // Faddeev-LeVerrier over matrix series
  MatSeries M = MatSeries::identity(n, A.N);
  std::vector<MatSeries> c(n + 1);
  c[n] = MatSeries::constant(MatQ::identity(1), A.N);
  for (int k = 1; k <= n; ++k) {
    MatSeries AM = A * M;
    MatSeries ck = trace_series(AM).scaled(GaussQ(Rational(-1, k)));
    c[n - k] = ck;
    if (k < n) M = AM + scalar_identity(ck, n);
  }
  int best_num = 0, best_den = 0;
  for (int k = 0; k < n; ++k) {
    int v = c[k].order();
    if (v == kInfOrder) continue;
    int num = v, den = n - k;
    if (best_den == 0 || static_cast<long long>(num) * best_den < static_cast<long long>(best_num) * den) {
      best_num = num;
      best_den = den;
    }
  }
  if (best_den == 0) return {0, 0};
  int g = std::gcd(best_num, best_den);
  return {best_num / g, best_den / g};
}

namespace {

struct Block {
  int lo, sz;
};

void record(LinearSystem& sys, std::vector<TTransformation>& steps, TTransformation t) {
  sys = apply_T(sys, t);
  steps.push_back(std::move(t));
}

MatSeries const_embed(const MatQ& P, int m, int lo) {
  MatQ full = MatQ::identity(m);
  full.set_block(lo, lo, P);
  return MatSeries::constant(full, kPolyTrunc);
}

void split_block(LinearSystem& sys, std::vector<TTransformation>& steps, std::vector<Block>& blocks, std::size_t bi,
                 int r) {
  int m = sys.dim();
  Block b = blocks[bi];
  MatQ lead = sys.B.coeff(r).block(b.lo, b.lo, b.sz, b.sz);
  BlockSplit s = leading_split(lead);
  if (s.P != MatQ::identity(b.sz)) record(sys, steps, TTransformation::poly(const_embed(s.P, m, b.lo)));
  std::vector<int> off{0};
  for (int z : s.sizes) off.push_back(off.back() + z);
  MatQ L = sys.B.coeff(r).block(b.lo, b.lo, b.sz, b.sz);
  int K = static_cast<int>(s.sizes.size());
  // orders far above the rank never reach the final principal part, even after
  // the shearings of later block reductions
  int top = std::min(sys.B.N, sys.q + m * (sys.q + 1));
  for (int o = r + 1; o <= top; ++o) {
    MatQ E = sys.B.coeff(o).block(b.lo, b.lo, b.sz, b.sz);
    MatQ T(b.sz, b.sz);
    bool any = false;
    for (int g = 0; g < K; ++g)
      for (int h = 0; h < K; ++h) {
        if (g == h) continue;
        MatQ Egh = E.block(off[g], off[h], s.sizes[g], s.sizes[h]);
        if (Egh.is_zero()) continue;
        any = true;
        MatQ Ag = L.block(off[g], off[g], s.sizes[g], s.sizes[g]);
        MatQ Ah = L.block(off[h], off[h], s.sizes[h], s.sizes[h]);
        auto X = solve_sylvester(Ag, Ah, Egh.scaled(GaussQ(-1)));
        if (!X) throw std::logic_error("Sylvester equation with disjoint spectra has no solution");
        T.set_block(off[g], off[h], *X);
      }
    if (!any) continue;
    MatSeries P(m, m, kPolyTrunc);
    P.set(0, MatQ::identity(m));
    MatQ Tf(m, m);
    Tf.set_block(b.lo, b.lo, T);
    P.set(o - r, Tf);
    record(sys, steps, TTransformation::poly(P));
  }
  std::vector<Block> sub;
  for (int g = 0; g < K; ++g) sub.push_back({b.lo + off[g], s.sizes[g]});
  blocks.erase(blocks.begin() + static_cast<long>(bi));
  blocks.insert(blocks.begin() + static_cast<long>(bi), sub.begin(), sub.end());
}

// Block-local (B - s(x) I) / x^r where s collects the scalar part below r
// and mu x^r.
MatSeries reduced_block(const LinearSystem& sys, const Block& b, const BlockInfo& bi) {
  MatSeries R = sys.B.block(b.lo, b.lo, b.sz, b.sz);
  for (int j = 0; j < bi.r; ++j) R.set(j, MatQ(b.sz, b.sz));
  R.set(bi.r, R.coeff(bi.r) - MatQ::identity(b.sz).scaled(bi.mu));
  R.trim();
  return R.divided(bi.r);
}

bool reduce_nilpotent(LinearSystem& sys, std::vector<TTransformation>& steps, const Block& b) {
  int m = sys.dim();
  BlockInfo bi = analyze(sys, b.lo, b.sz);
  int qb = sys.q - bi.r;
  auto [num, den] = eigenvalue_valuation(reduced_block(sys, b, bi));
  if (den > 1 && static_cast<long long>(num) < static_cast<long long>(qb) * den) {
    record(sys, steps, TTransformation::ramify(den));
    return true;
  }
  MatQ nil = bi.lead - MatQ::identity(b.sz).scaled(bi.mu);
  MatQ J = jordan_basis_nilpotent(nil);
  if (J != MatQ::identity(b.sz)) {
    record(sys, steps, TTransformation::poly(const_embed(J, m, b.lo)));
    bi = analyze(sys, b.lo, b.sz);
  }
  auto current = measure(sys, b.lo, b.sz);
  int K = b.sz * (qb + 1);
  // keep the enumeration bounded
  while (K > 1 && std::pow(K + 1.0, b.sz) > 20000) --K;
  std::vector<int> k(b.sz, 0);
  std::optional<std::vector<int>> best;
  auto best_measure = current;
  std::optional<LinearSystem> best_sys;
  while (true) {
    if (*std::min_element(k.begin(), k.end()) == 0 && *std::max_element(k.begin(), k.end()) > 0) {
      std::vector<int> full(m, 0);
      for (int i = 0; i < b.sz; ++i) full[b.lo + i] = k[i];
      try {
        LinearSystem cand = apply_T(sys, TTransformation::shearing(full));
        if (cand.q <= sys.q && cand.B.N >= cand.q) {
          auto mm = measure(cand, b.lo, b.sz);
          if (mm < best_measure) {
            best_measure = mm;
            best = full;
            best_sys = cand;
          }
        }
      } catch (const BudgetError&) {
      }
    }
    int i = 0;
    while (i < b.sz && k[i] == K) k[i++] = 0;
    if (i == b.sz) break;
    ++k[i];
  }
  if (!best) return false;
  sys = *best_sys;
  steps.push_back(TTransformation::shearing(*best));
  return true;
}

}  // namespace

TurrittinResult turrittin_reduce(const LinearSystem& input) {
  TurrittinResult res;
  LinearSystem sys = poincare_rank(input);
  std::vector<Block> blocks{{0, sys.dim()}};
  for (int iter = 0; iter < 400; ++iter) {
    if (sys.B.N < sys.q)
      throw BudgetError("turrittin", "truncation order " + std::to_string(sys.B.N) + " below the Poincare rank " +
                                         std::to_string(sys.q), input.B.N + (sys.q - sys.B.N) + 1);
    std::size_t idx = blocks.size();
    BlockInfo info;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      info = analyze(sys, blocks[i].lo, blocks[i].sz);
      if (!info.finished) {
        idx = i;
        break;
      }
    }
    if (idx == blocks.size()) {
      std::string why;
      if (!is_rs_linear_form(sys, &res.form, &why)) throw std::logic_error("Turrittin reduction ended outside the final form: " + why);
      return res;
    }
    if (!info.single) {
      split_block(sys, res.steps, blocks, idx, info.r);
      continue;
    }
    if (!reduce_nilpotent(sys, res.steps, blocks[idx]))
      throw ConstructionFailed("no shearing lowers the block invariant of a nilpotent leading term", "turrittin");
  }
  throw ConstructionFailed("Turrittin reduction did not terminate", "turrittin");
}

}  // namespace fdyn

#pragma once
// Truncated multivariate power series ("jets").
//
// A Jet<K> stores the terms of total degree <= trunc() of a formal series in
// nvars() variables.  Exponent vectors are packed one byte per variable into a
// 64-bit word, so multiplying monomials is integer addition.  Terms are kept
// sorted in graded order: ascending total degree, then descending
// lexicographic exponent vector (x^2, x*y, y^2, ...).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fdyn/coeff.hpp"
#include "fdyn/errors.hpp"

namespace fdyn {

constexpr int kMaxVars = 7;
constexpr int kMaxDegree = 250;
constexpr int kInfOrder = std::numeric_limits<int>::max();

using Mono = std::uint64_t;

inline int mono_exp(Mono m, int i) { return static_cast<int>((m >> (8 * i)) & 0xffu); }
inline Mono mono_unit(int i, int e = 1) { return static_cast<Mono>(e) << (8 * i); }
inline int mono_degree(Mono m) {
  int d = 0;
  while (m) {
    d += static_cast<int>(m & 0xffu);
    m >>= 8;
  }
  return d;
}
inline Mono mono_from(const std::vector<int>& e) {
  Mono m = 0;
  for (std::size_t i = 0; i < e.size(); ++i) m |= mono_unit(static_cast<int>(i), e[i]);
  return m;
}
inline bool mono_divides(Mono a, Mono b) {  // a | b
  for (int i = 0; i < kMaxVars; ++i)
    if (mono_exp(a, i) > mono_exp(b, i)) return false;
  return true;
}
// Graded order used for storage and printing.
inline bool mono_less(Mono a, Mono b) {
  int da = mono_degree(a), db = mono_degree(b);
  if (da != db) return da < db;
  return __builtin_bswap64(a) > __builtin_bswap64(b);
}
std::string mono_to_string(Mono m, const std::vector<std::string>& names);
std::vector<std::string> default_var_names(int n);

template <class K>
class Jet {
 public:
  using Traits = CoeffTraits<K>;
  using Term = std::pair<Mono, K>;

  Jet() = default;
  Jet(int nvars, int trunc) : n_(nvars), N_(trunc) { check_shape(); }

  static Jet constant(int n, int N, const K& c) {
    Jet j(n, N);
    if (!Traits::is_zero(c)) j.terms_.push_back({0, c});
    return j;
  }
  static Jet var(int n, int N, int i, const K& c = Traits::from_int(1)) {
    return monomial(n, N, mono_unit(i), c);
  }
  static Jet monomial(int n, int N, Mono m, const K& c) {
    Jet j(n, N);
    if (mono_degree(m) <= N && !Traits::is_zero(c)) j.terms_.push_back({m, c});
    return j;
  }
  // Builds a jet from arbitrary (possibly repeated) terms.
  static Jet from_terms(int n, int N, std::vector<Term> t) {
    Jet j(n, N);
    std::sort(t.begin(), t.end(), [](const Term& a, const Term& b) { return mono_less(a.first, b.first); });
    for (auto& [m, c] : t) {
      if (mono_degree(m) > N) continue;
      if (!j.terms_.empty() && j.terms_.back().first == m)
        j.terms_.back().second += c;
      else
        j.terms_.push_back({m, std::move(c)});
    }
    j.normalize();
    return j;
  }

  int nvars() const { return n_; }
  int trunc() const { return N_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  K coeff(Mono m) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                               [](const Term& t, Mono v) { return mono_less(t.first, v); });
    if (it != terms_.end() && it->first == m) return it->second;
    return K{};
  }
  K constant_term() const { return coeff(0); }

  // Minimal total degree of a stored term; kInfOrder for the zero jet,
  // which callers must read as "order > trunc()".
  int order() const { return terms_.empty() ? kInfOrder : mono_degree(terms_.front().first); }
  // Order usable in precision bounds: trunc()+1 for the zero jet.
  int eff_order() const { return terms_.empty() ? N_ + 1 : order(); }
  int degree() const { return terms_.empty() ? -1 : mono_degree(terms_.back().first); }

  // Drops terms above M and records the lower truncation.
  Jet truncated(int M) const {
    if (M > N_) throw StructuralError("cannot raise truncation order from " + std::to_string(N_) + " to " + std::to_string(M));
    Jet r(n_, M);
    for (const auto& t : terms_)
      if (mono_degree(t.first) <= M) r.terms_.push_back(t);
    return r;
  }
  // Same terms, declared known to a higher order.  Only valid when the caller
  // knows the omitted terms vanish (e.g. exact polynomials).
  Jet promoted(int M) const {
    Jet r(n_, M);
    r.terms_ = terms_;
    if (M < N_) r = truncated(M);
    return r;
  }
  Jet homogeneous(int d) const {
    Jet r(n_, N_);
    for (const auto& t : terms_)
      if (mono_degree(t.first) == d) r.terms_.push_back(t);
    return r;
  }
  Jet scale(const K& c) const {
    Jet r(n_, N_);
    if (Traits::is_zero(c)) return r;
    r.terms_.reserve(terms_.size());
    for (const auto& [m, v] : terms_) r.terms_.push_back({m, v * c});
    r.normalize();
    return r;
  }
  Jet operator-() const {
    Jet r(n_, N_);
    r.terms_.reserve(terms_.size());
    for (const auto& [m, v] : terms_) r.terms_.push_back({m, -v});
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    a.check_same(b);
    return merge(a, b, false);
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    a.check_same(b);
    return merge(a, b, true);
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_same(b);
    return mul_to(a, b, a.N_);
  }
  Jet& operator+=(const Jet& b) { return *this = *this + b; }
  Jet& operator-=(const Jet& b) { return *this = *this - b; }
  Jet& operator*=(const Jet& b) { return *this = *this * b; }

  friend bool operator==(const Jet& a, const Jet& b) {
    return a.n_ == b.n_ && a.N_ == b.N_ && a.terms_ == b.terms_;
  }
  friend bool operator!=(const Jet& a, const Jet& b) { return !(a == b); }

  // Product truncated at M, ignoring the inputs' own truncation orders.
  static Jet mul_to(const Jet& a, const Jet& b, int M) {
    Jet r(a.n_, M);
    if (a.terms_.empty() || b.terms_.empty()) return r;
    if (a.terms_.size() == 1 && a.terms_[0].first == 0) return b.promoted_to(M).scale(a.terms_[0].second);
    if (b.terms_.size() == 1 && b.terms_[0].first == 0) return a.promoted_to(M).scale(b.terms_[0].second);
    std::unordered_map<Mono, K> acc;
    acc.reserve(a.terms_.size() * 2 + b.terms_.size() * 2);
    int ob = mono_degree(b.terms_.front().first);
    for (const auto& [ma, ca] : a.terms_) {
      int da = mono_degree(ma);
      if (da + ob > M) break;
      for (const auto& [mb, cb] : b.terms_) {
        if (da + mono_degree(mb) > M) break;
        auto [it, fresh] = acc.try_emplace(ma + mb, ca * cb);
        if (!fresh) it->second += ca * cb;
      }
    }
    r.terms_.reserve(acc.size());
    for (auto& kv : acc)
      if (!Traits::is_zero(kv.second)) r.terms_.push_back({kv.first, std::move(kv.second)});
    std::sort(r.terms_.begin(), r.terms_.end(), [](const Term& x, const Term& y) { return mono_less(x.first, y.first); });
    r.normalize();
    return r;
  }

  // Relabels a jet as living in nv >= nvars() variables (new variables absent).
  Jet extended(int nv) const {
    if (nv < n_) throw StructuralError("cannot shrink variable count");
    Jet r(nv, N_);
    r.terms_ = terms_;
    return r;
  }

  std::string to_string(const std::vector<std::string>& names) const;
  std::string to_string() const { return to_string(default_var_names(n_)); }

  void normalize() {
    std::vector<Term> kept;
    kept.reserve(terms_.size());
    if constexpr (Traits::exact) {
      for (auto& t : terms_)
        if (!Traits::is_zero(t.second)) kept.push_back(std::move(t));
    } else {
      double mx = 0;
      for (auto& t : terms_) mx = std::max(mx, Traits::magnitude(t.second));
      double thr = float_epsilon() * mx;
      for (auto& t : terms_)
        if (Traits::magnitude(t.second) > thr && mx > 0) kept.push_back(std::move(t));
    }
    terms_.swap(kept);
  }

 private:
  Jet promoted_to(int M) const {
    Jet r(n_, M);
    for (const auto& t : terms_)
      if (mono_degree(t.first) <= M) r.terms_.push_back(t);
    return r;
  }
  void check_shape() const {
    if (n_ < 0 || n_ > kMaxVars) throw StructuralError("variable count out of range: " + std::to_string(n_));
    if (N_ < 0 || N_ > kMaxDegree) throw StructuralError("truncation order out of range: " + std::to_string(N_));
  }
  void check_same(const Jet& b) const {
    if (n_ != b.n_) throw StructuralError("mismatched nvars " + std::to_string(n_) + " vs " + std::to_string(b.n_));
    if (N_ != b.N_) throw StructuralError("mismatched trunc_order " + std::to_string(N_) + " vs " + std::to_string(b.N_));
  }
  static Jet merge(const Jet& a, const Jet& b, bool subtract) {
    Jet r(a.n_, a.N_);
    r.terms_.reserve(a.terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() || (i < a.terms_.size() && mono_less(a.terms_[i].first, b.terms_[j].first))) {
        r.terms_.push_back(a.terms_[i++]);
      } else if (i == a.terms_.size() || mono_less(b.terms_[j].first, a.terms_[i].first)) {
        r.terms_.push_back({b.terms_[j].first, subtract ? -b.terms_[j].second : b.terms_[j].second});
        ++j;
      } else {
        K c = subtract ? a.terms_[i].second - b.terms_[j].second : a.terms_[i].second + b.terms_[j].second;
        if constexpr (Traits::exact) {
          if (!Traits::is_zero(c)) r.terms_.push_back({a.terms_[i].first, std::move(c)});
        } else {
          r.terms_.push_back({a.terms_[i].first, c});
        }
        ++i;
        ++j;
      }
    }
    if constexpr (!Traits::exact) r.normalize();
    return r;
  }

  int n_ = 1;
  int N_ = 0;
  std::vector<Term> terms_;
};

using JetQ = Jet<GaussQ>;
using JetF = Jet<Cplx>;

// Tuple of jets sharing nvars and trunc_order.
template <class K>
using JetTuple = std::vector<Jet<K>>;

std::string format_coeff(const GaussQ& c, bool has_mono, bool leading);
std::string format_coeff(const Cplx& c, bool has_mono, bool leading);

template <class K>
std::string Jet<K>::to_string(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    std::string mono = m == 0 ? "" : mono_to_string(m, names);
    std::string cs = format_coeff(c, !mono.empty(), first);
    bool neg = !cs.empty() && cs[0] == '-';
    if (!first) out += neg ? " - " : " + ";
    if (!first && neg) cs = cs.substr(1);
    out += cs;
    if (!mono.empty()) out += (cs.empty() || cs == "-") ? mono : "*" + mono;
    first = false;
  }
  return out;
}

// ---- kernel operations ------------------------------------------------------

template <class K>
Jet<K> lowered(const Jet<K>& a, int M) {
  return M >= a.trunc() ? a : a.truncated(M);
}

// Aligns two jets to the smaller truncation order.
template <class K>
std::pair<Jet<K>, Jet<K>> aligned(const Jet<K>& a, const Jet<K>& b) {
  int M = std::min(a.trunc(), b.trunc());
  return {lowered(a, M), lowered(b, M)};
}

template <class K>
Jet<K> add_min(const Jet<K>& a, const Jet<K>& b) {
  auto [x, y] = aligned(a, b);
  return x + y;
}
template <class K>
Jet<K> sub_min(const Jet<K>& a, const Jet<K>& b) {
  auto [x, y] = aligned(a, b);
  return x - y;
}

// Product with the sharp precision bound min(Na + ord b, Nb + ord a),
// never exceeding the larger input truncation.
template <class K>
Jet<K> mul_sharp(const Jet<K>& a, const Jet<K>& b) {
  if (a.nvars() != b.nvars()) throw StructuralError("mismatched nvars in product");
  long long s1 = static_cast<long long>(a.trunc()) + b.eff_order();
  long long s2 = static_cast<long long>(b.trunc()) + a.eff_order();
  int M = static_cast<int>(std::min<long long>({s1, s2, std::max(a.trunc(), b.trunc())}));
  return Jet<K>::mul_to(a, b, M);
}

template <class K>
Jet<K> partial_derivative(const Jet<K>& f, int i) {
  if (i < 0 || i >= f.nvars()) throw StructuralError("derivative index out of range");
  std::vector<typename Jet<K>::Term> t;
  for (const auto& [m, c] : f.terms()) {
    int e = mono_exp(m, i);
    if (e == 0) continue;
    t.push_back({m - mono_unit(i), c * CoeffTraits<K>::from_int(e)});
  }
  return Jet<K>::from_terms(f.nvars(), std::max(0, f.trunc() - 1), std::move(t));
}

template <class K>
Jet<K> multiply_by_var(const Jet<K>& f, int i, int k) {
  std::vector<typename Jet<K>::Term> t;
  for (const auto& [m, c] : f.terms()) t.push_back({m + mono_unit(i, k), c});
  return Jet<K>::from_terms(f.nvars(), f.trunc() + k, std::move(t));
}

template <class K>
Jet<K> divide_by_var(const Jet<K>& f, int i, int k) {
  if (k < 0) throw StructuralError("negative division exponent");
  if (k == 0) return f;
  std::vector<typename Jet<K>::Term> t;
  double thr = 0;
  if constexpr (!CoeffTraits<K>::exact) {
    double mx = 0;
    for (const auto& tt : f.terms()) mx = std::max(mx, CoeffTraits<K>::magnitude(tt.second));
    thr = float_epsilon() * std::max(mx, 1.0);
  }
  for (const auto& [m, c] : f.terms()) {
    if (mono_exp(m, i) < k) {
      if constexpr (!CoeffTraits<K>::exact) {
        if (CoeffTraits<K>::magnitude(c) <= thr) continue;
      }
      throw DivisibilityError("term not divisible by variable " + std::to_string(i) + "^" + std::to_string(k) + ": " +
                                  mono_to_string(m, default_var_names(f.nvars())),
                              mono_to_string(m, default_var_names(f.nvars())));
    }
    t.push_back({m - mono_unit(i, k), c});
  }
  return Jet<K>::from_terms(f.nvars(), std::max(0, f.trunc() - k), std::move(t));
}

// Largest k with var_i^k dividing every term (kInfOrder for zero).
template <class K>
int var_valuation(const Jet<K>& f, int i) {
  int v = kInfOrder;
  for (const auto& [m, c] : f.terms()) v = std::min(v, mono_exp(m, i));
  return v;
}

// Substitutes the value `v` for variable i's entire dependence: returns the
// part of f not involving variable i (i.e. f restricted to z_i = 0).
template <class K>
Jet<K> restrict_zero(const Jet<K>& f, int i) {
  std::vector<typename Jet<K>::Term> t;
  for (const auto& tt : f.terms())
    if (mono_exp(tt.first, i) == 0) t.push_back(tt);
  return Jet<K>::from_terms(f.nvars(), f.trunc(), std::move(t));
}

// Caches powers args^alpha so that repeated compositions with the same
// arguments share work.
template <class K>
class Composer {
 public:
  explicit Composer(JetTuple<K> args) : args_(std::move(args)) {
    if (args_.empty()) throw StructuralError("compose: empty argument tuple");
    m_ = args_[0].nvars();
    Ma_ = args_[0].trunc();
    omin_ = kInfOrder;
    monomial_args_ = true;
    for (const auto& a : args_) {
      if (a.nvars() != m_) throw StructuralError("compose: arguments disagree on nvars");
      Ma_ = std::min(Ma_, a.trunc());
      if (!CoeffTraits<K>::is_zero(a.constant_term()))
        throw PreconditionError("jet", "compose: argument with nonzero constant term");
      omin_ = std::min(omin_, a.eff_order());
      if (a.size() > 1) monomial_args_ = false;
    }
    if (omin_ == kInfOrder) omin_ = Ma_ + 1;
  }

  int result_trunc(int Nf) const {
    long long sharp = static_cast<long long>(Nf + 1) * omin_ - 1;
    return static_cast<int>(std::min<long long>({sharp, Ma_, kMaxDegree}));
  }

  Jet<K> operator()(const Jet<K>& f) {
    if (static_cast<int>(args_.size()) != f.nvars())
      throw StructuralError("compose: argument count " + std::to_string(args_.size()) + " != nvars " + std::to_string(f.nvars()));
    int M = result_trunc(f.trunc());
    if (monomial_args_) return substitute_monomials(f, M);
    std::unordered_map<Mono, K> acc;
    for (const auto& [a, c] : f.terms()) {
      if (static_cast<long long>(mono_degree(a)) * omin_ > M) break;
      const Jet<K>& p = power(a, M);
      for (const auto& [m, v] : p.terms()) {
        if (mono_degree(m) > M) break;
        auto [it, fresh] = acc.try_emplace(m, c * v);
        if (!fresh) it->second += c * v;
      }
    }
    std::vector<typename Jet<K>::Term> t(acc.begin(), acc.end());
    return Jet<K>::from_terms(m_, M, std::move(t));
  }

 private:
  Jet<K> substitute_monomials(const Jet<K>& f, int M) {
    std::vector<typename Jet<K>::Term> t;
    for (const auto& [a, c] : f.terms()) {
      K coef = c;
      Mono mm = 0;
      bool zero = false;
      for (int i = 0; i < f.nvars(); ++i) {
        int e = mono_exp(a, i);
        if (e == 0) continue;
        if (args_[i].is_zero()) { zero = true; break; }
        const auto& [am, ac] = args_[i].terms()[0];
        for (int r = 0; r < e; ++r) coef = coef * ac;
        for (int r = 0; r < e; ++r) mm += am;
        if (mono_degree(mm) > M) { zero = true; break; }
      }
      if (!zero) t.push_back({mm, coef});
    }
    return Jet<K>::from_terms(m_, M, std::move(t));
  }

  const Jet<K>& power(Mono a, int M) {
    if (M != cacheM_) {
      cache_.clear();
      cacheM_ = M;
    }
    auto it = cache_.find(a);
    if (it != cache_.end()) return it->second;
    Jet<K> val(m_, M);
    if (a == 0) {
      val = Jet<K>::constant(m_, M, CoeffTraits<K>::from_int(1));
    } else {
      int i = 0;
      while (mono_exp(a, i) == 0) ++i;
      Jet<K> prev = power(a - mono_unit(i), M);
      val = Jet<K>::mul_to(prev, args_[i], M);
    }
    return cache_.emplace(a, std::move(val)).first->second;
  }

  JetTuple<K> args_;
  int m_ = 0, Ma_ = 0, omin_ = 1;
  bool monomial_args_ = false;
  int cacheM_ = -1;
  std::unordered_map<Mono, Jet<K>> cache_;
};

template <class K>
Jet<K> compose(const Jet<K>& f, const JetTuple<K>& args) {
  Composer<K> c(args);
  return c(f);
}

template <class K>
JetTuple<K> identity_tuple(int n, int N) {
  JetTuple<K> r;
  for (int i = 0; i < n; ++i) r.push_back(Jet<K>::var(n, N, i));
  return r;
}

template <class K>
Cplx eval_complex(const Jet<K>& f, const std::vector<Cplx>& pt) {
  if (static_cast<int>(pt.size()) != f.nvars()) throw StructuralError("eval: point dimension mismatch");
  int D = std::max(0, f.degree());
  std::vector<std::vector<Cplx>> pw(pt.size(), std::vector<Cplx>(D + 1, Cplx(1, 0)));
  for (std::size_t i = 0; i < pt.size(); ++i)
    for (int e = 1; e <= D; ++e) pw[i][e] = pw[i][e - 1] * pt[i];
  Cplx s(0, 0);
  // highest degree first keeps the summation closer to Horner's ordering
  for (auto it = f.terms().rbegin(); it != f.terms().rend(); ++it) {
    Cplx v = CoeffTraits<K>::to_complex(it->second);
    for (std::size_t i = 0; i < pt.size(); ++i) v *= pw[i][mono_exp(it->first, static_cast<int>(i))];
    s += v;
  }
  return s;
}

inline JetF to_float(const JetF& f) { return f; }
inline JetF to_float(const JetQ& f) {
  std::vector<JetF::Term> t;
  for (const auto& [m, c] : f.terms()) t.push_back({m, c.to_complex()});
  return JetF::from_terms(f.nvars(), f.trunc(), std::move(t));
}

template <class K>
bool approx_equal(const Jet<K>& a, const Jet<K>& b, double tol) {
  if (a.nvars() != b.nvars()) return false;
  Jet<K> d = sub_min(a, b);
  for (const auto& [m, c] : d.terms())
    if (CoeffTraits<K>::magnitude(c) > tol) return false;
  return true;
}

// Univariate helpers (nvars == 1) used by curve code.
template <class K>
Jet<K> series_inverse(const Jet<K>& a) {  // 1/a, a(0) != 0
  K a0 = a.constant_term();
  if (CoeffTraits<K>::is_zero(a0)) throw PreconditionError("jet", "series inverse of a non-unit");
  int N = a.trunc();
  K inv0 = inverse_of(a0);
  // Newton iteration b <- b(2 - a b)
  Jet<K> b = Jet<K>::constant(a.nvars(), N, inv0);
  Jet<K> two = Jet<K>::constant(a.nvars(), N, CoeffTraits<K>::from_int(2));
  for (int prec = 1; prec <= N; prec *= 2) b = b * (two - a * b);
  b = b * (two - a * b);
  return b;
}

// (1 + a)^r for a with zero constant term, r rational.
template <class K>
Jet<K> binomial_power(const Jet<K>& a, const Rational& r) {
  if (!CoeffTraits<K>::is_zero(a.constant_term())) throw PreconditionError("jet", "binomial series needs a(0)=0");
  int N = a.trunc();
  Jet<K> result = Jet<K>::constant(a.nvars(), N, CoeffTraits<K>::from_int(1));
  Jet<K> pw = result;
  Rational binom(1);
  int ord = a.eff_order();
  for (int j = 1; static_cast<long long>(j) * ord <= N; ++j) {
    binom = binom * (r - Rational(j - 1)) / Rational(j);
    pw = pw * a;
    if (pw.is_zero()) break;
    if constexpr (CoeffTraits<K>::exact) {
      result += pw.scale(GaussQ(binom));
    } else {
      result += pw.scale(Cplx(binom.to_double(), 0));
    }
  }
  return result;
}

}  // namespace fdyn

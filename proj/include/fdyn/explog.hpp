#pragma once
// Diffeomorphisms tangent to the identity and their infinitesimal generators.

#include <string>
#include <utility>
#include <vector>

#include "fdyn/jet.hpp"

namespace fdyn {

// Component j is z_j o F.
template <class K>
struct FormalMap {
  JetTuple<K> comp;

  int nvars() const { return comp.empty() ? 0 : comp[0].nvars(); }
  int trunc() const {
    int t = kMaxDegree;
    for (const auto& c : comp) t = std::min(t, c.trunc());
    return t;
  }
  static FormalMap identity(int n, int N) { return {identity_tuple<K>(n, N)}; }
  FormalMap truncated(int M) const {
    FormalMap r;
    for (const auto& c : comp) r.comp.push_back(lowered(c, M));
    return r;
  }
  friend bool operator==(const FormalMap& a, const FormalMap& b) { return a.comp == b.comp; }
};

// Component j is the coefficient of d/dz_j.
template <class K>
struct FormalField {
  JetTuple<K> comp;

  int nvars() const { return comp.empty() ? 0 : comp[0].nvars(); }
  int trunc() const {
    int t = kMaxDegree;
    for (const auto& c : comp) t = std::min(t, c.trunc());
    return t;
  }
  static FormalField zero(int n, int N) {
    FormalField f;
    for (int i = 0; i < n; ++i) f.comp.push_back(Jet<K>(n, N));
    return f;
  }
  FormalField truncated(int M) const {
    FormalField r;
    for (const auto& c : comp) r.comp.push_back(lowered(c, M));
    return r;
  }
  FormalField operator-() const {
    FormalField r;
    for (const auto& c : comp) r.comp.push_back(-c);
    return r;
  }
  FormalField scaled(const K& s) const {
    FormalField r;
    for (const auto& c : comp) r.comp.push_back(c.scale(s));
    return r;
  }
  friend bool operator==(const FormalField& a, const FormalField& b) { return a.comp == b.comp; }
};

using MapQ = FormalMap<GaussQ>;
using FieldQ = FormalField<GaussQ>;
using MapF = FormalMap<Cplx>;
using FieldF = FormalField<Cplx>;

template <class K>
FormalMap<K> truncate_all(const FormalMap<K>& f) {
  return f.truncated(f.trunc());
}
template <class K>
FormalField<K> truncate_all(const FormalField<K>& f) {
  return f.truncated(f.trunc());
}

// nu_0(X): minimal order of the components.
template <class K>
int multiplicity(const FormalField<K>& X) {
  int v = kInfOrder;
  for (const auto& c : X.comp) v = std::min(v, c.order());
  return v;
}

// Lowest degree where F differs from the identity (kInfOrder for identity).
template <class K>
int map_order(const FormalMap<K>& F) {
  int v = kInfOrder;
  int n = F.nvars();
  for (int i = 0; i < n; ++i) v = std::min(v, (F.comp[i] - Jet<K>::var(n, F.comp[i].trunc(), i)).order());
  return v;
}

template <class K>
void check_tangent_to_identity(const FormalMap<K>& F) {
  int n = F.nvars();
  if (static_cast<int>(F.comp.size()) != n) throw PreconditionError("explog", "map must have nvars components");
  for (int i = 0; i < n; ++i) {
    const auto& c = F.comp[i];
    if (!CoeffTraits<K>::is_zero(c.constant_term())) throw PreconditionError("explog", "map does not fix the origin");
    for (int j = 0; j < n; ++j) {
      K v = c.coeff(mono_unit(j));
      K want = CoeffTraits<K>::from_int(i == j ? 1 : 0);
      if (!(v == want)) throw PreconditionError("explog", "map is not tangent to the identity");
    }
  }
}

// Sum_j a_j dg/dz_j.
template <class K>
Jet<K> apply_field(const FormalField<K>& X, const Jet<K>& g) {
  if (static_cast<int>(X.comp.size()) != g.nvars()) throw StructuralError("apply_field: dimension mismatch");
  Jet<K> acc;
  bool have = false;
  for (int j = 0; j < g.nvars(); ++j) {
    Jet<K> d = partial_derivative(g, j);
    if (d.is_zero() && d.trunc() >= g.trunc()) continue;
    Jet<K> t = mul_sharp(X.comp[j], d);
    if (!have) {
      acc = t;
      have = true;
    } else {
      acc = add_min(acc, t);
    }
  }
  if (!have) return Jet<K>(g.nvars(), std::min(g.trunc(), X.trunc()));
  return lowered(acc, std::min(acc.trunc(), std::max(g.trunc(), X.trunc())));
}

template <class K>
FormalMap<K> exp_field(const FormalField<K>& X) {
  int n = X.nvars();
  int nu = multiplicity(X);
  int N = X.trunc();
  if (nu == kInfOrder) return FormalMap<K>::identity(n, N);
  if (nu < 2) throw PreconditionError("explog", "exp_field needs multiplicity >= 2, got " + std::to_string(nu));
  FormalMap<K> F;
  for (int i = 0; i < n; ++i) {
    Jet<K> g = Jet<K>::var(n, N, i);
    Jet<K> sum = g;
    Rational fact(1);
    const int max_terms = (N + nu - 2) / (nu - 1) + 1;  // ceil(N/(nu-1)) + 1
    for (int j = 1; j <= max_terms; ++j) {
      g = apply_field(X, g);
      if (g.is_zero()) break;
      fact = fact * Rational(j);
      if constexpr (CoeffTraits<K>::exact) {
        sum = add_min(sum, g.scale(GaussQ(fact.inverse())));
      } else {
        sum = add_min(sum, g.scale(Cplx(1.0 / fact.to_double(), 0)));
      }
    }
    F.comp.push_back(sum);
  }
  return truncate_all(F);
}

template <class K>
FormalField<K> log_map(const FormalMap<K>& F) {
  check_tangent_to_identity(F);
  int n = F.nvars();
  int N = F.trunc();
  FormalMap<K> Ft = F.truncated(N);
  int nu = map_order(Ft);
  if (nu == kInfOrder) return FormalField<K>::zero(n, N);
  Composer<K> comp(Ft.comp);
  FormalField<K> X;
  const int max_terms = (N + nu - 2) / (nu - 1) + 1;
  for (int i = 0; i < n; ++i) {
    Jet<K> h = Jet<K>::var(n, N, i);
    Jet<K> sum(n, N);
    for (int j = 1; j <= max_terms; ++j) {
      h = sub_min(comp(h), h);
      if (h.is_zero()) break;
      Rational w(j % 2 ? 1 : -1, j);
      if constexpr (CoeffTraits<K>::exact) {
        sum = add_min(sum, h.scale(GaussQ(w)));
      } else {
        sum = add_min(sum, h.scale(Cplx(w.to_double(), 0)));
      }
    }
    X.comp.push_back(sum);
  }
  return truncate_all(X);
}

template <class K>
FormalMap<K> inverse_map(const FormalMap<K>& F) {
  return exp_field(-log_map(F));
}

template <class K>
FormalMap<K> compose_maps(const FormalMap<K>& F, const FormalMap<K>& G) {  // F o G
  Composer<K> c(G.comp);
  FormalMap<K> r;
  for (const auto& f : F.comp) r.comp.push_back(c(f));
  return truncate_all(r);
}

// Returns (order(F), nu_0(X)) and checks that the lowest homogeneous parts
// of F - id and X coincide; throws std::logic_error otherwise.
template <class K>
std::pair<int, int> orders(const FormalMap<K>& F, const FormalField<K>& X) {
  int of = map_order(F);
  int nx = multiplicity(X);
  if (of != nx) throw std::logic_error("order(F) != multiplicity(log F)");
  if (of != kInfOrder) {
    int n = F.nvars();
    for (int i = 0; i < n; ++i) {
      auto fi = (F.comp[i] - Jet<K>::var(n, F.comp[i].trunc(), i)).homogeneous(of);
      auto ai = X.comp[i].homogeneous(of);
      if (!approx_equal(fi, ai, CoeffTraits<K>::exact ? 0.0 : 1e-12))
        throw std::logic_error("lowest homogeneous parts of F - id and log F differ");
    }
  }
  return {of, nx};
}

struct IdealCheck {
  bool equal = true;
  std::string witness;  // monomial whose equation first failed
  int budget = 0;
};

// Mutual membership of (f_1..f_n) and (a_1..a_n), f = F - id, a = log F,
// modulo terms of degree > trunc_order.
IdealCheck fixed_ideal_equal(const MapQ& F);
// Membership test of each g in (gens) modulo degree > N; exposed for tests.
IdealCheck ideal_contains(const JetTuple<GaussQ>& gens, const JetTuple<GaussQ>& g, int N);

}  // namespace fdyn

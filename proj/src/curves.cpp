#include "fdyn/curves.hpp"

#include <numeric>

namespace fdyn {

std::string CurveParam::to_string() const {
  std::string out = "(";
  for (int i = 0; i < n(); ++i) {
    if (i) out += ", ";
    out += gamma[i].to_string({"s"});
  }
  return out + ")";
}

CurveParam make_curve(JetTuple<GaussQ> gamma) {
  CurveParam c;
  c.gamma = std::move(gamma);
  return normalize_irreducible(c);
}

int exponent_gcd(const CurveParam& c) {
  int g = 0;
  for (const auto& j : c.gamma)
    for (const auto& [m, v] : j.terms()) g = std::gcd(g, mono_exp(m, 0));
  return g;
}

int multiplicity(const CurveParam& c) {
  int m = kInfOrder;
  for (const auto& j : c.gamma) {
    if (j.nvars() != 1) throw StructuralError("curve components must be univariate", "curves");
    if (!j.constant_term().is_zero()) throw StructuralError("curve components must vanish at s = 0", "curves");
    m = std::min(m, j.order());
  }
  if (m == kInfOrder) throw StructuralError("all curve components are zero", "curves");
  return m;
}

int multiplicity(CurveParam& c) {
  c.mult = multiplicity(static_cast<const CurveParam&>(c));
  return c.mult;
}

CurveParam normalize_irreducible(const CurveParam& c) {
  int l = exponent_gcd(c);
  CurveParam r;
  if (l <= 1) {
    r = c;
  } else {
    for (const auto& j : c.gamma) {
      std::vector<JetQ::Term> t;
      for (const auto& [m, v] : j.terms()) t.push_back({mono_unit(0, mono_exp(m, 0) / l), v});
      r.gamma.push_back(JetQ::from_terms(1, j.trunc() / l, std::move(t)));
    }
  }
  r.irreducible = true;
  multiplicity(r);
  return r;
}

std::vector<GaussQ> tangent_line(const CurveParam& c) {
  int m = c.mult ? c.mult : multiplicity(c);
  std::vector<GaussQ> t;
  for (const auto& j : c.gamma) t.push_back(j.coeff(mono_unit(0, m)));
  GaussQ lead;
  for (const auto& v : t)
    if (!v.is_zero()) {
      lead = v;
      break;
    }
  GaussQ inv = lead.inverse();
  for (auto& v : t) v = v * inv;
  return t;
}

CurveParam reparametrize(const CurveParam& c, const JetQ& sigma) {
  Composer<GaussQ> comp({sigma});
  CurveParam r;
  r.irreducible = c.irreducible;
  for (const auto& j : c.gamma) r.gamma.push_back(comp(j));
  multiplicity(r);
  return r;
}

namespace {

JetTuple<GaussQ> linear_tuple(const MatQ& A, int n, int N) {
  JetTuple<GaussQ> r;
  for (int i = 0; i < n; ++i) {
    std::vector<JetQ::Term> t;
    for (int k = 0; k < n; ++k)
      if (!A(i, k).is_zero()) t.push_back({mono_unit(k), A(i, k)});
    r.push_back(JetQ::from_terms(n, N, std::move(t)));
  }
  return r;
}

template <class T>
JetTuple<GaussQ> mix(const MatQ& A, const T& comps) {
  JetTuple<GaussQ> r;
  int n = A.rows;
  for (int i = 0; i < n; ++i) {
    JetQ acc = JetQ(comps[0].nvars(), comps[0].trunc());
    for (int k = 0; k < n; ++k)
      if (!A(i, k).is_zero()) acc = add_min(acc, comps[k].scale(A(i, k)));
    r.push_back(acc);
  }
  return r;
}

}  // namespace

CurveParam apply_linear(const LinearChange& L, const CurveParam& c) {
  CurveParam r;
  r.gamma = mix(L.A, c.gamma);
  r.irreducible = c.irreducible;
  multiplicity(r);
  return r;
}

FieldQ apply_linear(const LinearChange& L, const FieldQ& X) {
  auto Ai = inverse(L.A);
  if (!Ai) throw PreconditionError("curves", "linear change is not invertible");
  int n = X.nvars();
  Composer<GaussQ> comp(linear_tuple(*Ai, n, X.trunc()));
  JetTuple<GaussQ> pulled;
  for (const auto& a : X.comp) pulled.push_back(comp(a));
  return FieldQ{mix(L.A, pulled)};
}

MapQ apply_linear(const LinearChange& L, const MapQ& F) {
  auto Ai = inverse(L.A);
  if (!Ai) throw PreconditionError("curves", "linear change is not invertible");
  int n = F.nvars();
  Composer<GaussQ> comp(linear_tuple(*Ai, n, F.trunc()));
  JetTuple<GaussQ> pulled;
  for (const auto& a : F.comp) pulled.push_back(comp(a));
  return MapQ{mix(L.A, pulled)};
}

PuiseuxForm to_puiseux(const CurveParam& c0) {
  CurveParam c = normalize_irreducible(c0);
  int n = c.n();
  int m = c.mult;
  PuiseuxForm out;
  out.change.A = MatQ::identity(n);
  auto t = tangent_line(c);
  if (t[0].is_zero()) {
    int k = 1;
    while (t[k].is_zero()) ++k;
    MatQ P = MatQ::identity(n);
    P(0, 0) = GaussQ(0);
    P(k, k) = GaussQ(0);
    P(0, k) = GaussQ(1);
    P(k, 0) = GaussQ(1);
    out.change.A = P;
    c = apply_linear(out.change, c);
  }
  int N = c.trunc();
  GaussQ lead = c.gamma[0].coeff(mono_unit(0, m));
  if (!(lead == GaussQ(1))) {
    if (auto rho = exact_root(lead, m)) {
      c = reparametrize(c, JetQ::var(1, N, 0, rho->inverse()));
    } else {
      MatQ S = MatQ::identity(n);
      S(0, 0) = lead.inverse();
      c = apply_linear(LinearChange{S}, c);
      out.change.A = S * out.change.A;
    }
  }
  N = c.trunc();
  // gamma_1 = w(s)^m with w = s (gamma_1 / s^m)^(1/m)
  JetQ u = divide_by_var(lowered(c.gamma[0], N), 0, m);
  JetQ w = multiply_by_var(binomial_power(u - JetQ::constant(1, u.trunc(), GaussQ(1)), Rational(1, m)), 0, 1);
  MapQ W{{w}};
  JetQ sigma = inverse_map(W).comp[0].promoted(N);
  CurveParam r = reparametrize(c, sigma);
  // the remaining components have order >= m, so gamma o sigma is known to N
  r.gamma[0] = JetQ::monomial(1, r.trunc(), mono_unit(0, m), GaussQ(1));
  r.irreducible = true;
  multiplicity(r);
  out.curve = r;
  return out;
}

JetTuple<GaussQ> field_along(const FieldQ& X, const CurveParam& c) {
  if (X.nvars() != c.n()) throw StructuralError("field and curve dimensions differ", "curves");
  Composer<GaussQ> comp(c.gamma);
  JetTuple<GaussQ> r;
  for (const auto& a : X.comp) r.push_back(comp(a));
  return r;
}

int order_along(const JetQ& g, const CurveParam& c) {
  return compose(g, c.gamma).order();
}

InvarianceResult try_invariance_h(const FieldQ& X, const CurveParam& c) {
  InvarianceResult res;
  int n = c.n();
  int m = multiplicity(c);
  auto Xg = field_along(X, c);
  JetTuple<GaussQ> gp;
  for (const auto& g : c.gamma) gp.push_back(partial_derivative(g, 0));
  int i0 = 0;
  for (int j = 0; j < n; ++j)
    if (c.gamma[j].order() == m) {
      i0 = j;
      break;
    }
  JetQ q;
  try {
    q = divide_by_var(Xg[i0], 0, m - 1);
  } catch (const DivisibilityError&) {
    res.fail_order = Xg[i0].order();
    res.fail_component = i0;
    res.budget = Xg[i0].trunc();
    return res;
  }
  JetQ unit = divide_by_var(gp[i0], 0, m - 1);
  JetQ h = mul_sharp(q, series_inverse(unit));
  res.budget = kMaxDegree;
  int worst = kInfOrder, worst_comp = -1;
  for (int j = 0; j < n; ++j) {
    JetQ r = sub_min(mul_sharp(h, gp[j]), Xg[j]);
    res.budget = std::min(res.budget, r.trunc());
    if (r.order() < worst) {
      worst = r.order();
      worst_comp = j;
    }
  }
  if (worst <= res.budget) {
    res.fail_order = worst;
    res.fail_component = worst_comp;
    return res;
  }
  res.invariant = true;
  res.h = h;
  return res;
}

JetQ invariance_h(const FieldQ& X, const CurveParam& c) {
  auto r = try_invariance_h(X, c);
  if (!r.invariant) throw NotInvariant(r.fail_order, r.fail_component);
  return r.h;
}

InvarianceResult invariance_map(const MapQ& F, const CurveParam& c) {
  return try_invariance_h(log_map(F), c);
}

}  // namespace fdyn

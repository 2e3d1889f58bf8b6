#include "fdyn/transforms.hpp"

namespace fdyn {

namespace {

JetTuple<GaussQ> compose_tuple(const JetTuple<GaussQ>& outer, const JetTuple<GaussQ>& inner) {
  Composer<GaussQ> c(inner);
  JetTuple<GaussQ> r;
  for (const auto& f : outer) r.push_back(c(f));
  return r;
}

JetQ exact_var(int n, int i) { return JetQ::var(n, kMaxDegree, i); }

void check_center(const Center& Z, int n) {
  if (Z.vars.empty() || Z.codim() > n) throw PreconditionError("transforms", "bad center codimension");
  for (std::size_t a = 0; a < Z.vars.size(); ++a) {
    if (Z.vars[a] < 0 || Z.vars[a] >= n) throw PreconditionError("transforms", "center variable out of range");
    for (std::size_t b = 0; b < a; ++b)
      if (Z.vars[a] == Z.vars[b]) throw PreconditionError("transforms", "repeated center variable");
  }
}

}  // namespace

std::string Center::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < vars.size(); ++i) s += (i ? "=z" : "z") + std::to_string(vars[i] + 1);
  return s + "=0}";
}

CoordChange CoordChange::identity(int n) {
  CoordChange c;
  for (int i = 0; i < n; ++i) {
    c.psi.push_back(exact_var(n, i));
    c.psi_inv.push_back(exact_var(n, i));
  }
  c.label = "identity";
  return c;
}

CoordChange CoordChange::from_linear(const LinearChange& L) {
  auto Ai = inverse(L.A);
  if (!Ai) throw PreconditionError("transforms", "singular linear change");
  int n = L.A.rows;
  CoordChange c;
  for (int i = 0; i < n; ++i) {
    std::vector<JetQ::Term> f, b;
    for (int k = 0; k < n; ++k) {
      if (!(*Ai)(i, k).is_zero()) f.push_back({mono_unit(k), (*Ai)(i, k)});
      if (!L.A(i, k).is_zero()) b.push_back({mono_unit(k), L.A(i, k)});
    }
    c.psi.push_back(JetQ::from_terms(n, kMaxDegree, std::move(f)));
    c.psi_inv.push_back(JetQ::from_terms(n, kMaxDegree, std::move(b)));
  }
  c.label = "linear";
  return c;
}

CoordChange CoordChange::translation(int n, int j, const JetQ& shift) {
  if (shift.nvars() != n) throw StructuralError("translation: shift has wrong nvars", "transforms");
  if (var_valuation(shift, j) != kInfOrder && !shift.is_zero())
    for (const auto& [m, v] : shift.terms())
      if (mono_exp(m, j) > 0) throw PreconditionError("transforms", "translation shift depends on its own variable");
  if (!shift.constant_term().is_zero()) throw PreconditionError("transforms", "translation must fix the origin");
  JetQ s = shift.promoted(kMaxDegree);
  CoordChange c = identity(n);
  c.psi[j] = c.psi[j] + s;
  c.psi_inv[j] = c.psi_inv[j] - s;
  c.label = "translation";
  return c;
}

CoordChange CoordChange::from_forward(JetTuple<GaussQ> psi, int N) {
  int n = static_cast<int>(psi.size());
  MatQ L(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) L(i, k) = psi[i].coeff(mono_unit(k));
  auto Li = inverse(L);
  if (!Li) throw PreconditionError("transforms", "coordinate change has singular linear part");
  JetTuple<GaussQ> H;
  for (int i = 0; i < n; ++i) {
    JetQ lin(n, psi[i].trunc());
    for (int k = 0; k < n; ++k) lin = lin + JetQ::monomial(n, psi[i].trunc(), mono_unit(k), L(i, k));
    H.push_back(lowered(psi[i] - lin, N));
  }
  auto apply_Li = [&](const JetTuple<GaussQ>& v) {
    JetTuple<GaussQ> r;
    for (int i = 0; i < n; ++i) {
      JetQ acc(n, N);
      for (int k = 0; k < n; ++k)
        if (!(*Li)(i, k).is_zero()) acc = add_min(acc, v[k].scale((*Li)(i, k)));
      r.push_back(acc);
    }
    return r;
  };
  JetTuple<GaussQ> G = apply_Li(identity_tuple<GaussQ>(n, N));
  for (int it = 0; it <= N; ++it) {
    JetTuple<GaussQ> HG = compose_tuple(H, G);
    JetTuple<GaussQ> rhs;
    for (int i = 0; i < n; ++i) rhs.push_back(lowered(JetQ::var(n, N, i) - lowered(HG[i], N), N));
    JetTuple<GaussQ> G2 = apply_Li(rhs);
    for (auto& g : G2) g = lowered(g, N);
    if (G2 == G) break;
    G = G2;
  }
  CoordChange c;
  c.psi = std::move(psi);
  c.psi_inv = G;
  c.label = "series";
  return c;
}

CoordChange CoordChange::then(const CoordChange& next) const {
  CoordChange c;
  c.psi = compose_tuple(psi, next.psi);
  c.psi_inv = compose_tuple(next.psi_inv, psi_inv);
  c.label = label + ";" + next.label;
  return c;
}

TransformStep TransformStep::coord(CoordChange c, std::string note) {
  TransformStep s;
  s.kind = StepKind::Coord;
  s.change = std::move(c);
  s.note = std::move(note);
  return s;
}

TransformStep TransformStep::blowup(Center z, std::string note) {
  TransformStep s;
  s.kind = StepKind::BlowUp;
  s.divisor = z.vars.at(0);
  s.center = std::move(z);
  s.note = std::move(note);
  return s;
}

TransformStep TransformStep::ramify(int q, int var, std::string note) {
  if (q < 1) throw PreconditionError("transforms", "ramification index must be positive");
  TransformStep s;
  s.kind = StepKind::Ramify;
  s.q = q;
  s.var = var;
  s.divisor = var;
  s.note = std::move(note);
  return s;
}

JetTuple<GaussQ> TransformStep::phi(int n) const {
  switch (kind) {
    case StepKind::Coord:
      return change.psi;
    case StepKind::BlowUp: {
      JetTuple<GaussQ> r = identity_tuple<GaussQ>(n, kMaxDegree);
      int c = center.vars[0];
      for (std::size_t k = 1; k < center.vars.size(); ++k) {
        int j = center.vars[k];
        r[j] = JetQ::monomial(n, kMaxDegree, mono_unit(c) + mono_unit(j), GaussQ(1));
      }
      return r;
    }
    case StepKind::Ramify: {
      JetTuple<GaussQ> r = identity_tuple<GaussQ>(n, kMaxDegree);
      r[var] = JetQ::monomial(n, kMaxDegree, mono_unit(var, q), GaussQ(1));
      return r;
    }
  }
  return {};
}

std::string TransformStep::describe() const {
  switch (kind) {
    case StepKind::Coord:
      return "coordinate change (" + change.label + ")" + (note.empty() ? "" : ": " + note);
    case StepKind::BlowUp:
      return "blow-up with center " + center.to_string() + (note.empty() ? "" : ": " + note);
    case StepKind::Ramify:
      return "ramification z" + std::to_string(var + 1) + " -> z" + std::to_string(var + 1) + "^" + std::to_string(q) +
             (note.empty() ? "" : ": " + note);
  }
  return {};
}

void TransformSequence::append(TransformStep s) {
  if (s.divisor) total_divisor = *s.divisor;
  steps.push_back(std::move(s));
}

int center_degree(Mono m, const Center& Z) {
  int d = 0;
  for (int v : Z.vars) d += mono_exp(m, v);
  return d;
}

CenterCheck is_invariant_center(const FieldQ& X, const Center& Z) {
  check_center(Z, X.nvars());
  CenterCheck r;
  r.budget = X.trunc();
  r.ok = true;
  for (int v : Z.vars)
    for (const auto& [m, c] : X.comp[v].terms())
      if (center_degree(m, Z) == 0) {
        r.ok = false;
        r.clause = "invariance: " + default_var_names(X.nvars())[v] + "-component has the term " +
                   (m == 0 ? std::string("1") : mono_to_string(m, default_var_names(X.nvars())));
        return r;
      }
  return r;
}

int nu_along(const FieldQ& X, const Center& Z) {
  if (!is_invariant_center(X, Z).ok) throw PreconditionError("transforms", "center is not invariant");
  int l = X.trunc();
  for (int v : Z.vars)
    for (const auto& [m, c] : X.comp[v].terms()) l = std::min(l, center_degree(m, Z));
  return l;
}

CenterCheck is_permissible(const FieldQ& X, const CurveParam& c, const Center& Z) {
  int n = X.nvars();
  check_center(Z, n);
  CenterCheck r;
  r.budget = X.trunc();
  if (Z.codim() == n) {
    for (const auto& a : X.comp)
      if (!a.constant_term().is_zero()) {
        r.clause = "invariance: the origin is not a singular point";
        return r;
      }
    r.ok = true;
    return r;
  }
  auto t = tangent_line(c);
  bool transversal = false;
  for (int v : Z.vars)
    if (!t[v].is_zero()) transversal = true;
  if (!transversal) {
    r.clause = "transversality";
    return r;
  }
  auto inv = is_invariant_center(X, Z);
  if (!inv.ok) return inv;
  int nu0 = multiplicity(X);
  int nz = nu_along(X, Z);
  if (nz < nu0) {
    r.clause = "multiplicity: nu_Z = " + std::to_string(nz) + " < nu_0 = " + std::to_string(nu0);
    return r;
  }
  r.ok = true;
  return r;
}

std::vector<GaussQ> tangent_chart_shift(const CurveParam& c, const Center& Z) {
  auto t = tangent_line(c);
  GaussQ tc = t[Z.vars[0]];
  if (tc.is_zero()) throw PreconditionError("transforms", "curve tangent is not in the chart of " + Z.to_string());
  std::vector<GaussQ> xi(t.size());
  for (std::size_t k = 1; k < Z.vars.size(); ++k) xi[Z.vars[k]] = t[Z.vars[k]] / tc;
  return xi;
}

CoordChange chart_shift(int n, const Center& Z, const std::vector<GaussQ>& xi) {
  CoordChange c = CoordChange::identity(n);
  int zc = Z.vars[0];
  for (std::size_t k = 1; k < Z.vars.size(); ++k) {
    int j = Z.vars[k];
    if (static_cast<std::size_t>(j) >= xi.size() || xi[j].is_zero()) continue;
    c.psi[j] = c.psi[j] + JetQ::var(n, kMaxDegree, zc, xi[j]);
    c.psi_inv[j] = c.psi_inv[j] - JetQ::var(n, kMaxDegree, zc, xi[j]);
  }
  c.label = "chart shift";
  return c;
}

namespace {

bool all_zero(const std::vector<GaussQ>& v) {
  for (const auto& x : v)
    if (!x.is_zero()) return false;
  return true;
}

FieldQ coord_field(const FieldQ& X, const CoordChange& c) {
  Composer<GaussQ> comp(c.psi);
  FieldQ r;
  for (const auto& g : c.psi_inv) r.comp.push_back(comp(apply_field(X, g)));
  return truncate_all(r);
}

FieldQ monomial_blowup_field(const FieldQ& X, const Center& Z) {
  int n = X.nvars();
  check_center(Z, n);
  TransformStep s = TransformStep::blowup(Z);
  Composer<GaussQ> comp(s.phi(n));
  JetTuple<GaussQ> ap;
  for (const auto& a : X.comp) ap.push_back(comp(a));
  int c = Z.vars[0];
  FieldQ r;
  r.comp = ap;
  for (std::size_t k = 1; k < Z.vars.size(); ++k) {
    int j = Z.vars[k];
    JetQ num = sub_min(ap[j], multiply_by_var(ap[c], j, 1));
    r.comp[j] = divide_by_var(num, c, 1);
  }
  return truncate_all(r);
}

}  // namespace

FieldQ blowup_field(const FieldQ& X, const Center& Z, const std::vector<GaussQ>& xi) {
  if (!xi.empty() && !all_zero(xi)) return monomial_blowup_field(coord_field(X, chart_shift(X.nvars(), Z, xi)), Z);
  return monomial_blowup_field(X, Z);
}

CurveParam blowup_curve(const CurveParam& c0, const Center& Z, const std::vector<GaussQ>& xi) {
  int n = c0.n();
  check_center(Z, n);
  CurveParam c = c0;
  if (!xi.empty() && !all_zero(xi)) c = transform_curve(c0, TransformStep::coord(chart_shift(n, Z, xi)));
  int zc = Z.vars[0];
  int mc = c.gamma[zc].order();
  if (mc == kInfOrder) throw PreconditionError("transforms", "curve lies in the chart divisor");
  JetQ unit_inv = series_inverse(divide_by_var(c.gamma[zc], 0, mc));
  CurveParam r = c;
  for (std::size_t k = 1; k < Z.vars.size(); ++k) {
    int j = Z.vars[k];
    if (c.gamma[j].order() <= mc && !c.gamma[j].is_zero())
      throw PreconditionError("transforms", "curve tangent is not aligned with the chart of " + Z.to_string());
    if (c.gamma[j].is_zero()) {
      r.gamma[j] = JetQ(1, std::max(0, c.gamma[j].trunc() - mc));
      continue;
    }
    r.gamma[j] = mul_sharp(divide_by_var(c.gamma[j], 0, mc), unit_inv);
  }
  r.mult = 0;
  multiplicity(r);
  return r;
}

MapQ blowup_map(const MapQ& F, const Center& Z) {
  int n = F.nvars();
  check_center(Z, n);
  TransformStep s = TransformStep::blowup(Z);
  Composer<GaussQ> comp(s.phi(n));
  JetTuple<GaussQ> G;
  for (const auto& f : F.comp) G.push_back(comp(f));
  int c = Z.vars[0];
  JetQ unit = divide_by_var(G[c], c, 1);
  JetQ inv = series_inverse(unit);
  MapQ r{G};
  for (std::size_t k = 1; k < Z.vars.size(); ++k) {
    int j = Z.vars[k];
    r.comp[j] = mul_sharp(divide_by_var(G[j], c, 1), inv);
  }
  return truncate_all(r);
}

FieldQ ramify_field(const FieldQ& X, int q, int var) {
  if (q < 1) throw PreconditionError("transforms", "ramification index must be positive");
  if (q == 1) return X;
  int n = X.nvars();
  TransformStep s = TransformStep::ramify(q, var);
  Composer<GaussQ> comp(s.phi(n));
  FieldQ r;
  for (int i = 0; i < n; ++i) {
    if (i == var) {
      JetQ bar = divide_by_var(X.comp[i], var, 1);
      r.comp.push_back(multiply_by_var(comp(bar), var, 1).scale(GaussQ(Rational(1, q))));
    } else {
      r.comp.push_back(comp(X.comp[i]));
    }
  }
  return truncate_all(r);
}

CurveParam ramify_curve(const CurveParam& c, int q, int var) {
  if (q < 1) throw PreconditionError("transforms", "ramification index must be positive");
  JetQ s1 = JetQ::var(1, c.gamma[var].trunc(), 0);
  if (!(c.gamma[var] == s1)) throw PreconditionError("transforms", "ramification needs the curve component to be exactly s");
  if (q == 1) return c;
  int M = std::min<long long>(kMaxDegree, static_cast<long long>(q) * (c.trunc() + 1) - 1);
  Composer<GaussQ> comp({JetQ::monomial(1, M, mono_unit(0, q), GaussQ(1))});
  CurveParam r;
  for (int i = 0; i < c.n(); ++i) r.gamma.push_back(i == var ? JetQ::var(1, M, 0) : comp(c.gamma[i]));
  int N = r.trunc();
  for (auto& g : r.gamma) g = lowered(g, N);
  r.irreducible = true;
  multiplicity(r);
  return r;
}

MapQ ramify_map(const MapQ& F, int q, int var) {
  if (q < 1) throw PreconditionError("transforms", "ramification index must be positive");
  if (q == 1) return F;
  int n = F.nvars();
  TransformStep s = TransformStep::ramify(q, var);
  Composer<GaussQ> comp(s.phi(n));
  MapQ r;
  for (int i = 0; i < n; ++i) {
    if (i == var) {
      JetQ B = divide_by_var(F.comp[i], var, 1);
      JetQ A = comp(B) - JetQ::constant(n, B.trunc(), GaussQ(1));
      r.comp.push_back(multiply_by_var(binomial_power(A, Rational(1, q)), var, 1));
    } else {
      r.comp.push_back(comp(F.comp[i]));
    }
  }
  return truncate_all(r);
}

FieldQ transform_field(const FieldQ& X, const TransformStep& s) {
  switch (s.kind) {
    case StepKind::Coord:
      return coord_field(X, s.change);
    case StepKind::BlowUp:
      return monomial_blowup_field(X, s.center);
    case StepKind::Ramify:
      return ramify_field(X, s.q, s.var);
  }
  return X;
}

CurveParam transform_curve(const CurveParam& c, const TransformStep& s) {
  switch (s.kind) {
    case StepKind::Coord: {
      CurveParam r;
      r.gamma = compose_tuple(s.change.psi_inv, c.gamma);
      int N = r.trunc();
      for (auto& g : r.gamma) g = lowered(g, N);
      r.irreducible = c.irreducible;
      multiplicity(r);
      return r;
    }
    case StepKind::BlowUp:
      return blowup_curve(c, s.center);
    case StepKind::Ramify:
      return ramify_curve(c, s.q, s.var);
  }
  return c;
}

MapQ transform_map(const MapQ& F, const TransformStep& s) {
  switch (s.kind) {
    case StepKind::Coord: {
      MapQ r{compose_tuple(s.change.psi_inv, compose_tuple(F.comp, s.change.psi))};
      return truncate_all(r);
    }
    case StepKind::BlowUp:
      return blowup_map(F, s.center);
    case StepKind::Ramify:
      return ramify_map(F, s.q, s.var);
  }
  return F;
}

FieldQ transform_field(const FieldQ& X, const TransformSequence& seq) {
  FieldQ r = X;
  for (const auto& s : seq.steps) r = transform_field(r, s);
  return r;
}

CurveParam transform_curve(const CurveParam& c, const TransformSequence& seq) {
  CurveParam r = c;
  for (const auto& s : seq.steps) r = transform_curve(r, s);
  return r;
}

MapQ transform_map(const MapQ& F, const TransformSequence& seq) {
  MapQ r = F;
  for (const auto& s : seq.steps) r = transform_map(r, s);
  return r;
}

PushforwardCheck pushforward_check(const FieldQ& X, const FieldQ& Xt, const TransformStep& s) {
  int n = X.nvars();
  auto phi = s.phi(n);
  Composer<GaussQ> comp(phi);
  PushforwardCheck r;
  r.budget = kMaxDegree;
  for (int i = 0; i < n; ++i) {
    JetQ lhs = apply_field(Xt, phi[i]);
    JetQ rhs = comp(X.comp[i]);
    JetQ d = sub_min(lhs, rhs);
    r.budget = std::min(r.budget, d.trunc());
    if (!d.is_zero() && r.ok) {
      r.ok = false;
      r.fail_component = i;
      r.fail_order = d.order();
    }
  }
  return r;
}

}  // namespace fdyn

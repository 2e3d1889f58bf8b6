#include "fdyn/rs_reduction.hpp"

#include <algorithm>

namespace fdyn {

namespace {

constexpr int kLoopCap = 64;

JetQ lift(const JetQ& u1, int n, int N) {
  std::vector<JetQ::Term> t;
  for (const auto& [m, v] : u1.terms()) t.push_back({mono_unit(0, mono_exp(m, 0)), v});
  return JetQ::from_terms(n, N, std::move(t));
}

// Terms of f that involve only x, as a univariate jet.
JetQ x_part(const JetQ& f) {
  std::vector<JetQ::Term> t;
  for (const auto& [m, v] : f.terms())
    if (m == mono_unit(0, mono_exp(m, 0))) t.push_back({mono_unit(0, mono_exp(m, 0)), v});
  return JetQ::from_terms(1, f.trunc(), std::move(t));
}

int y_degree(Mono m) { return mono_degree(m) - mono_exp(m, 0); }

int x_valuation(const FieldQ& X) {
  int e = kInfOrder;
  for (const auto& a : X.comp) e = std::min(e, var_valuation(a, 0));
  return e;
}

FieldQ divide_x(const FieldQ& X, int e) {
  FieldQ r;
  for (const auto& a : X.comp) r.comp.push_back(divide_by_var(a, 0, e));
  return r;
}

bool singular_at_origin(const FieldQ& X) {
  for (const auto& a : X.comp)
    if (!a.constant_term().is_zero()) return false;
  return true;
}

// Coefficient matrix of the y-linear part of comps[1..n-1] as a series in x.
MatSeries linear_part(const JetTuple<GaussQ>& Y, int n) {
  int N = kMaxDegree;
  for (int j = 1; j < n; ++j) N = std::min(N, Y[j].trunc() - 1);
  MatSeries L(n - 1, n - 1, std::max(N, -1));
  if (N < 0) return L;
  for (int j = 1; j < n; ++j)
    for (const auto& [m, v] : Y[j].terms()) {
      if (y_degree(m) != 1) continue;
      int d = mono_exp(m, 0);
      if (d > N) continue;
      int i = 1;
      while (mono_exp(m, i) == 0) ++i;
      MatQ cur = L.coeff(d);
      cur(j - 1, i - 1) = cur(j - 1, i - 1) + v;
      L.set(d, cur);
    }
  L.trim();
  return L;
}

struct Tracker {
  TransformSequence seq;
  FieldQ X;
  CurveParam curve;
  bool track_curve = true;

  void apply(TransformStep s) {
    X = transform_field(X, s);
    if (track_curve) curve = transform_curve(curve, s);
    seq.append(std::move(s));
  }

  void blow_point(const std::string& note) {
    int n = X.nvars();
    Center Z = Center::point(n);
    auto chk = is_permissible(X, curve, Z);
    if (!chk.ok) throw ConstructionFailed("point blow-up not permissible: " + chk.clause, "rs");
    auto xi = tangent_chart_shift(curve, Z);
    bool shift = false;
    for (const auto& v : xi) shift = shift || !v.is_zero();
    if (shift) apply(TransformStep::coord(chart_shift(n, Z, xi), "move the curve to the chart origin"));
    TransformStep s = TransformStep::blowup(Z, note);
    s.permissibility_checked = true;
    apply(std::move(s));
    check_budget();
  }

  void check_budget() const {
    if (X.trunc() < 1) throw BudgetError("rs", "field truncation exhausted by the transformations", -1);
  }
};

// Resolves the curve into a non-singular one transversal to the divisor and
// brings it to graph form with the divisor {x = 0}.
void resolve_curve(Tracker& tr) {
  int n = tr.X.nvars();
  std::vector<int> D;
  int last = -1;
  for (int it = 0; it < kLoopCap; ++it) {
    int mlt = multiplicity(tr.curve);
    if (mlt == kInfOrder || mlt == 0) throw PreconditionError("rs", "curve vanishes to the available order");
    auto ord = [&](int j) { return tr.curve.gamma[j].order(); };
    if (mlt == 1) {
      int c0 = -1;
      if (D.empty()) {
        for (int j = 0; j < n && c0 < 0; ++j)
          if (ord(j) == 1) c0 = j;
      } else if (D.size() == 1 && ord(D[0]) == 1) {
        c0 = D[0];
      }
      if (c0 >= 0) {
        if (c0 != 0) {
          MatQ P = MatQ::identity(n);
          P(0, 0) = GaussQ(0);
          P(c0, c0) = GaussQ(0);
          P(0, c0) = GaussQ(1);
          P(c0, 0) = GaussQ(1);
          tr.apply(TransformStep::coord(CoordChange::from_linear(LinearChange{P}), "divisor variable first"));
        }
        tr.curve = graph_form(tr.curve);
        return;
      }
    }
    int cv = (last >= 0 && ord(last) == mlt) ? last : -1;
    for (int j = 0; j < n && cv < 0; ++j)
      if (ord(j) == mlt) cv = j;
    Center Z;
    Z.vars.push_back(cv);
    for (int j = 0; j < n; ++j)
      if (j != cv) Z.vars.push_back(j);
    auto chk = is_permissible(tr.X, tr.curve, Z);
    if (!chk.ok) throw ConstructionFailed("point blow-up not permissible: " + chk.clause, "rs");
    auto xi = tangent_chart_shift(tr.curve, Z);
    bool shift = false;
    for (const auto& v : xi) shift = shift || !v.is_zero();
    if (shift) tr.apply(TransformStep::coord(chart_shift(n, Z, xi), "move the curve to the chart origin"));
    TransformStep s = TransformStep::blowup(Z, "resolve the curve");
    s.permissibility_checked = true;
    tr.apply(std::move(s));
    tr.check_budget();
    std::vector<int> D2{cv};
    for (int d : D)
      if (d != cv && xi[d].is_zero()) D2.push_back(d);
    D = D2;
    last = cv;
  }
  throw BudgetError("rs", "curve resolution did not finish within the step cap", -1);
}

PreNormalField split_prenormal(const FieldQ& X, int l, int q) {
  int n = X.nvars();
  PreNormalField pn;
  pn.l = l;
  pn.q = q;
  pn.u = divide_by_var(X.comp[0], 0, l + q + 1);
  JetTuple<GaussQ> Y{JetQ(n, 0)};
  for (int j = 1; j < n; ++j) Y.push_back(divide_by_var(X.comp[j], 0, l));
  pn.A = linear_part(Y, n);
  for (int j = 1; j < n; ++j) {
    pn.c.push_back(x_part(Y[j]));
    std::vector<JetQ::Term> t;
    for (const auto& [m, v] : Y[j].terms())
      if (y_degree(m) >= 2) t.push_back({m, v});
    pn.Theta.push_back(JetQ::from_terms(n, Y[j].trunc(), std::move(t)));
  }
  return pn;
}

bool prenormal_conditions(const FieldQ& Xb, int r) {
  const JetQ& a = Xb.comp[0];
  if (var_valuation(a, 0) < r || a.coeff(mono_unit(0, r)).is_zero()) return false;
  for (std::size_t j = 1; j < Xb.comp.size(); ++j)
    for (const auto& [m, v] : Xb.comp[j].terms())
      if (y_degree(m) >= 2 && mono_exp(m, 0) < r) return false;
  return true;
}

}  // namespace

FieldQ PreNormalField::reassemble(int n) const {
  int N = u.trunc() + l + q + 1;
  FieldQ X;
  X.comp.push_back(multiply_by_var(u, 0, l + q + 1));
  for (int j = 1; j < n; ++j) {
    JetQ y = lift(c[j - 1], n, Theta[j - 1].trunc());
    y = add_min(y, Theta[j - 1]);
    for (int i = 1; i < n; ++i)
      for (int d = 0; d <= A.N; ++d) {
        GaussQ v = A.coeff(d)(j - 1, i - 1);
        if (!v.is_zero()) y = add_min(y, JetQ::monomial(n, kMaxDegree, mono_unit(0, d) + mono_unit(i), v));
      }
    X.comp.push_back(multiply_by_var(y, 0, l));
    N = std::min(N, X.comp.back().trunc());
  }
  return X.truncated(std::min(N, X.trunc()));
}

std::string RSFieldData::to_string() const {
  std::string s = "k = " + std::to_string(k) + ", p = " + std::to_string(p) + ", u(0) = " + u.constant_term().to_string();
  for (int i = 0; i < p; ++i) s += ", Dcal_" + std::to_string(i) + " = " + Dcal[i].to_string();
  return s + ", Ccal = " + Ccal.to_string();
}

std::string RSDiffeoData::to_string() const {
  std::string s = "k = " + std::to_string(k) + ", p = " + std::to_string(p) + ", lambda = " + lambda.to_string();
  for (int i = 0; i < p; ++i) s += ", D_" + std::to_string(i) + " = " + D[i].to_string();
  return s + ", C = " + C.to_string();
}

int order_of_contact(const CurveParam& c) {
  int l = kInfOrder;
  for (int j = 1; j < c.n(); ++j) l = std::min(l, c.gamma[j].order());
  return l;
}

CurveParam graph_form(const CurveParam& c) {
  if (c.gamma.empty() || c.gamma[0].order() != 1)
    throw PreconditionError("rs", "curve is not transversal to {z1 = 0}");
  return to_puiseux(c).curve;
}

int required_truncation(const FieldQ& X, const CurveParam& c) {
  int nu = multiplicity(X);
  int m = multiplicity(c);
  if (nu == kInfOrder || m == kInfOrder) return kInfOrder;
  return 4 * (nu + m);
}

PreNormalResult prenormalize(const FieldQ& X, const CurveParam& c) {
  int n = X.nvars();
  if (n < 2) throw PreconditionError("rs", "dimension must be at least 2");
  if (!singular_at_origin(X)) throw PreconditionError("rs", "the origin is not a singular point");
  Tracker tr;
  tr.X = X;
  tr.curve = normalize_irreducible(c);
  resolve_curve(tr);

  auto early = [&](int l) {
    if (l < 1) throw PreconditionError("rs", "field is non-singular at the origin");
    tr.blow_point("non-singular after division");
    PreNormalResult r;
    r.seq = tr.seq;
    r.field = tr.X;
    r.curve = graph_form(tr.curve);
    r.early_exit = true;
    r.pre.l = l;
    r.pre.q = -1;
    return r;
  };

  bool translated = false;
  for (int it = 0; it < kLoopCap; ++it) {
    int e = x_valuation(tr.X);
    if (e == kInfOrder) throw BudgetError("rs", "field vanishes to the truncation order", tr.X.trunc() + 1);
    FieldQ Xb = divide_x(tr.X, e);
    if (!singular_at_origin(Xb)) return early(e);
    int r = order_along(Xb.comp[0], tr.curve);
    if (r == kInfOrder)
      throw PreconditionError("rs", "curve is contained in the singular locus to the available order");
    if (!prenormal_conditions(Xb, r)) {
      if (Xb.trunc() <= r) throw BudgetError("rs", "truncation exhausted during the pre-normal blow-ups", X.trunc() + r);
      tr.blow_point("pre-normal form");
      continue;
    }
    JetTuple<GaussQ> Y{JetQ(n, 0)};
    for (int j = 1; j < n; ++j) Y.push_back(Xb.comp[j]);
    MatSeries A = linear_part(Y, n);
    int ordA = A.order();
    if (ordA > 0 && !translated) {
      bool any = false;
      CoordChange cc = CoordChange::identity(n);
      for (int j = 1; j < n; ++j) {
        JetQ Q = lowered(tr.curve.gamma[j], std::min(r, tr.curve.gamma[j].trunc()));
        if (Q.is_zero()) continue;
        any = true;
        cc = cc.then(CoordChange::translation(n, j, lift(Q, n, kMaxDegree)));
      }
      translated = true;
      if (any) {
        cc.label = "translation";
        tr.apply(TransformStep::coord(cc, "clear the low order terms of c"));
        tr.curve = graph_form(tr.curve);
        continue;
      }
    }
    int t = std::min(ordA, r);
    int l = e + t, q = r - t - 1;
    if (q < 0) return early(l);
    PreNormalResult res;
    res.seq = tr.seq;
    res.field = tr.X;
    res.curve = tr.curve;
    res.pre = split_prenormal(tr.X, l, q);
    return res;
  }
  throw BudgetError("rs", "pre-normal form not reached within the step cap", -1);
}

LinearSystem associated_system(const PreNormalField& pn, const CurveParam& graph) {
  int n = graph.n();
  int N = graph.trunc();
  JetTuple<GaussQ> inner{JetQ::var(1, N, 0)};
  for (int j = 1; j < n; ++j) inner.push_back(graph.gamma[j]);
  Composer<GaussQ> comp(inner);
  JetQ ua = comp(pn.u);
  if (ua.constant_term().is_zero()) throw PreconditionError("rs", "u vanishes at the origin");
  JetQ uinv = series_inverse(ua);
  int Nb = std::min(pn.A.N, uinv.trunc());
  std::vector<std::vector<JetQ>> dT(n - 1, std::vector<JetQ>(n - 1));
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) {
      dT[j - 1][i - 1] = comp(partial_derivative(pn.Theta[j - 1], i));
      Nb = std::min(Nb, dT[j - 1][i - 1].trunc());
    }
  if (Nb < 0) throw BudgetError("rs", "no precision left for the associated system", -1);
  MatSeries Ahat(n - 1, n - 1, Nb);
  for (int d = 0; d <= Nb; ++d) {
    MatQ v = pn.A.coeff(d);
    for (int j = 0; j < n - 1; ++j)
      for (int i = 0; i < n - 1; ++i) v(j, i) = v(j, i) + dT[j][i].coeff(mono_unit(0, d));
    Ahat.set(d, v);
  }
  Ahat.trim();
  MatSeries U(n - 1, n - 1, Nb);
  for (int d = 0; d <= Nb; ++d) U.set(d, MatQ::identity(n - 1).scaled(uinv.coeff(mono_unit(0, d))));
  U.trim();
  LinearSystem sys;
  sys.q = pn.q;
  sys.B = (U * Ahat).truncated(Nb);
  return sys;
}

std::optional<RSFieldData> read_rs_field(const FieldQ& X, std::string* why) {
  auto fail = [&](const std::string& w) -> std::optional<RSFieldData> {
    if (why) *why = w;
    return std::nullopt;
  };
  int n = X.nvars();
  if (n < 2) return fail("dimension below 2");
  int k = x_valuation(X);
  if (k == kInfOrder) return fail("field vanishes to the truncation order");
  int v0 = var_valuation(X.comp[0], 0);
  if (v0 == kInfOrder) return fail("x-component vanishes to the truncation order");
  int p = v0 - k - 1;
  if (p < 0) return fail("x-component not divisible by x^(k+1)");
  RSFieldData d;
  d.k = k;
  d.p = p;
  d.u = divide_by_var(X.comp[0], 0, v0);
  if (d.u.constant_term().is_zero()) return fail("u(0,0) = 0");
  JetTuple<GaussQ> Y{JetQ(n, 0)};
  for (int j = 1; j < n; ++j) {
    Y.push_back(divide_by_var(X.comp[j], 0, k));
    if (!Y.back().constant_term().is_zero()) return fail("c(0) != 0");
    d.c.push_back(x_part(Y.back()));
  }
  MatSeries L = linear_part(Y, n);
  if (L.N < p) return fail("truncation below the rank");
  RSLinearForm f;
  std::string w;
  if (!is_rs_linear_form(LinearSystem{p, L}, &f, &w)) return fail(w);
  d.Dcal = f.D;
  d.Ccal = f.C;
  MatSeries R = L;
  for (int i = 0; i <= p; ++i) R.set(i, MatQ(n - 1, n - 1));
  R.trim();
  d.Acal = R.divided(p + 1);
  return d;
}

namespace {

CoordChange poly_change(const MatSeries& P, int n, int N) {
  auto Pi = inverse(P.truncated(N));
  if (!Pi) throw PreconditionError("rs", "polynomial transformation with singular P(0)");
  CoordChange cc;
  cc.psi.push_back(JetQ::var(n, kMaxDegree, 0));
  cc.psi_inv.push_back(JetQ::var(n, kMaxDegree, 0));
  for (int i = 0; i < n - 1; ++i) {
    std::vector<JetQ::Term> f, b;
    for (int j = 0; j < n - 1; ++j) {
      for (std::size_t d = 0; d < P.c.size(); ++d)
        if (!P.c[d](i, j).is_zero()) f.push_back({mono_unit(0, static_cast<int>(d)) + mono_unit(j + 1), P.c[d](i, j)});
      for (std::size_t d = 0; d < Pi->c.size() && static_cast<int>(d) < N; ++d)
        if (!Pi->c[d](i, j).is_zero()) b.push_back({mono_unit(0, static_cast<int>(d)) + mono_unit(j + 1), Pi->c[d](i, j)});
    }
    cc.psi.push_back(JetQ::from_terms(n, kMaxDegree, std::move(f)));
    cc.psi_inv.push_back(JetQ::from_terms(n, N, std::move(b)));
  }
  cc.label = "polynomial linear";
  return cc;
}

std::optional<FieldReduction> run_full(const PreNormalResult& pre, const std::vector<TTransformation>& tsteps, int M,
                                       int m, std::string* why) {
  int n = pre.field.nvars();
  Tracker tr;
  tr.seq = pre.seq;
  tr.X = pre.field;
  tr.curve = pre.curve;
  if (m > tr.curve.trunc())
    throw BudgetError("rs", "curve known only to order " + std::to_string(tr.curve.trunc()) + ", need " + std::to_string(m), m);
  CoordChange cc = CoordChange::identity(n);
  bool any = false;
  for (int j = 1; j < n; ++j) {
    JetQ Q = lowered(tr.curve.gamma[j], m);
    if (Q.is_zero()) continue;
    any = true;
    cc = cc.then(CoordChange::translation(n, j, lift(Q, n, kMaxDegree)));
  }
  if (any) {
    cc.label = "translation";
    tr.apply(TransformStep::coord(cc, "raise the order of contact to " + std::to_string(m + 1)));
    tr.curve = graph_form(tr.curve);
  }
  for (int i = 0; i < M; ++i) tr.blow_point("y = x^M w");
  for (const auto& t : tsteps) {
    switch (t.kind) {
      case TKind::PolyLinear:
        tr.apply(TransformStep::coord(poly_change(t.P, n, tr.X.trunc() + 1), t.to_string()));
        break;
      case TKind::Shearing: {
        std::vector<int> rem = t.k;
        int total = 0;
        for (int v : rem) total += v;
        for (int done = 0; done < total; ++done) {
          bool ok = false;
          for (int j = 0; j < n - 1 && !ok; ++j) {
            if (rem[j] == 0) continue;
            Center Z;
            Z.vars = {0, j + 1};
            auto chk = is_permissible(tr.X, tr.curve, Z);
            if (!chk.ok) continue;
            TransformStep s = TransformStep::blowup(Z, "shearing " + t.to_string());
            s.permissibility_checked = true;
            tr.apply(std::move(s));
            tr.check_budget();
            --rem[j];
            ok = true;
          }
          if (!ok) {
            if (why) *why = "no permissible codimension-2 center for " + t.to_string();
            return std::nullopt;
          }
        }
        break;
      }
      case TKind::Ramify:
        tr.apply(TransformStep::ramify(t.alpha, 0, "x = t^" + std::to_string(t.alpha)));
        break;
    }
  }
  FieldReduction fr;
  std::string w;
  auto rs = read_rs_field(tr.X, &w);
  if (!rs) {
    int e = x_valuation(tr.X);
    if (e != kInfOrder && e >= 1 && var_valuation(tr.X.comp[0], 0) == e && !singular_at_origin(divide_x(tr.X, e))) {
      tr.blow_point("non-singular after division");
      fr.early_exit = true;
      rs = read_rs_field(tr.X, &w);
    }
  }
  if (!rs) {
    if (why) *why = w;
    return std::nullopt;
  }
  fr.seq = tr.seq;
  fr.rs = *rs;
  fr.curve = graph_form(tr.curve);
  fr.field = tr.X;
  fr.pre = pre;
  fr.tsteps = tsteps;
  fr.M = M;
  fr.m = m;
  for (const auto& t : tsteps)
    if (t.kind == TKind::Ramify) fr.beta *= t.alpha;
  return fr;
}

}  // namespace

FieldReduction reduce_field(const FieldQ& X, const CurveParam& c) {
  int n = X.nvars();
  if (n < 2 || c.n() != n) throw PreconditionError("rs", "field and curve dimensions must agree and be at least 2");
  if (!singular_at_origin(X)) throw PreconditionError("rs", "X(0) != 0");
  auto inv = try_invariance_h(X, c);
  if (!inv.invariant)
    throw PreconditionError("rs", "curve is not invariant (first inconsistency at order " + std::to_string(inv.fail_order) + ")");
  if (inv.h.is_zero()) throw PreconditionError("rs", "curve is contained in the singular locus");
  int req = required_truncation(X, c);
  if (X.trunc() < req)
    throw BudgetError("rs", "truncation order " + std::to_string(X.trunc()) + " below the required " + std::to_string(req), req);

  PreNormalResult pre = prenormalize(X, c);
  auto finish_direct = [&](bool early) -> std::optional<FieldReduction> {
    std::string w;
    auto rs = read_rs_field(pre.field, &w);
    if (!rs) {
      if (early) throw ConstructionFailed("early exit did not produce the final form: " + w, "rs");
      return std::nullopt;
    }
    FieldReduction fr;
    fr.seq = pre.seq;
    fr.rs = *rs;
    fr.curve = pre.curve;
    fr.field = pre.field;
    fr.pre = pre;
    fr.early_exit = early;
    return fr;
  };
  if (pre.early_exit) return *finish_direct(true);
  if (auto fr = finish_direct(false)) return *fr;

  LinearSystem sys = associated_system(pre.pre, pre.curve);
  TurrittinResult tres = turrittin_reduce(sys);
  int beta = 1, shear = 0;
  for (const auto& t : tres.steps) {
    if (t.kind == TKind::Ramify) beta *= t.alpha;
    if (t.kind == TKind::Shearing)
      for (int v : t.k) shear += v;
  }
  int target = beta * (pre.pre.l + pre.pre.q) + 1;
  int Nprime = (target + beta - 1) / beta + shear + 1;
  int M = Nprime + 1;
  std::string why;
  for (int attempt = 0; attempt < 4; ++attempt, M *= 2) {
    int m = M + 2;
    if (auto fr = run_full(pre, tres.steps, M, m, &why)) return *fr;
  }
  throw ConstructionFailed("transformed field not in final form: " + why, "rs");
}

RSDiffeoData detect_rs(const MapQ& F, const CurveParam& c) {
  int n = F.nvars();
  if (n < 2) throw NotInForm("dimension below 2");
  if (c.n() != n || c.gamma[0].order() != 1) throw NotInForm("coordinates not adapted to the curve");
  JetQ f = F.comp[0] - JetQ::var(n, F.comp[0].trunc(), 0);
  int v = var_valuation(f, 0);
  if (v == kInfOrder) throw NotInForm("x o F = x to the truncation order");
  std::vector<JetQ> G;
  int kk = kInfOrder;
  for (int j = 1; j < n; ++j) {
    G.push_back(F.comp[j] - JetQ::var(n, F.comp[j].trunc(), j));
    kk = std::min(kk, var_valuation(G.back(), 0));
  }
  int k = std::min(kk, v - 1);
  if (k < 1) throw NotInForm("k >= 1");
  int p = v - k - 1;
  RSDiffeoData d;
  d.k = k;
  d.p = p;
  JetQ fx = divide_by_var(f, 0, v);
  d.lambda = fx.constant_term();
  if (d.lambda.is_zero()) throw NotInForm("x-component is lambda x^(k+p+1) (1 + psi) with lambda != 0");
  d.psi = fx.scale(d.lambda.inverse()) - JetQ::constant(n, fx.trunc(), GaussQ(1));
  JetTuple<GaussQ> Y{JetQ(n, 0)};
  for (auto& g : G) {
    Y.push_back(divide_by_var(g, 0, k));
    if (!Y.back().constant_term().is_zero()) throw NotInForm("b(0) = 0");
    d.b.push_back(x_part(Y.back()));
  }
  MatSeries L = linear_part(Y, n);
  if (L.N < p) throw BudgetError("rs", "truncation below the rank", F.trunc() + p - L.N);
  RSLinearForm form;
  std::string why;
  if (!is_rs_linear_form(LinearSystem{p, L}, &form, &why)) throw NotInForm(why);
  d.D = form.D;
  d.C = form.C;
  MatSeries R = L;
  for (int i = 0; i <= p; ++i) R.set(i, MatQ(n - 1, n - 1));
  R.trim();
  d.A = R.divided(p + 1);
  return d;
}

bool check_exp_relation(const RSDiffeoData& d, const RSFieldData& f) {
  if (d.k != f.k || d.p != f.p || d.k < 1) return false;
  int m = d.C.rows;
  int N = d.k + d.p;
  MatSeries S(m, m, N);
  for (int i = 0; i < f.p; ++i) S.set(f.k + i, f.Dcal[i]);
  S.set(f.k + f.p, f.Ccal);
  S.trim();
  MatSeries E = MatSeries::identity(m, N);
  MatSeries term = MatSeries::identity(m, N);
  for (int j = 1; j * d.k <= N; ++j) {
    term = (term * S).truncated(N).scaled(GaussQ(Rational(1, j)));
    E = E + term;
  }
  MatSeries lhs = MatSeries::identity(m, N);
  for (int i = 0; i < d.p; ++i) lhs.set(d.k + i, d.D[i]);
  lhs.set(d.k + d.p, d.C);
  for (int i = 0; i <= N; ++i)
    if (lhs.coeff(i) != E.coeff(i)) return false;
  return true;
}

int restricted_order(const MapQ& F, const CurveParam& graph) {
  Composer<GaussQ> comp(graph.gamma);
  JetQ fx = comp(F.comp[0]);
  return (fx - JetQ::var(1, fx.trunc(), 0)).order();
}

DiffeoReduction reduce_diffeo(const MapQ& F, const CurveParam& c) {
  check_tangent_to_identity(F);
  FieldQ X = log_map(F);
  DiffeoReduction dr;
  dr.field = reduce_field(X, c);
  if (dr.field.rs.k < 1) throw std::logic_error("reduced generator of a diffeomorphism has k = 0");
  dr.map = transform_map(F, dr.field.seq);
  dr.rs = detect_rs(dr.map, dr.field.curve);
  dr.relation_ok = check_exp_relation(dr.rs, dr.field.rs);
  dr.fix_ok = dr.rs.k == dr.field.rs.k && !dr.rs.lambda.is_zero();
  return dr;
}

}  // namespace fdyn

#include "fdyn/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace fdyn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxN = 8;

Cplx ipow(Cplx x, int e) {
  if (e < 0) return 1.0 / ipow(x, -e);
  Cplx r(1, 0);
  while (e) {
    if (e & 1) r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

// log(1 + z) and exp(w) - 1 without cancellation for small arguments.
Cplx log1p_c(const Cplx& z) {
  Cplx u = 1.0 + z;
  if (u == Cplx(1, 0)) return z;
  return std::log(u) * z / (u - 1.0);
}

Cplx expm1_c(const Cplx& w) {
  double s = std::sin(w.imag() / 2);
  return Cplx(std::expm1(w.real()) * std::cos(w.imag()) - 2 * s * s, std::exp(w.real()) * std::sin(w.imag()));
}

double vnorm(const Cplx* a, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += std::norm(a[i]);
  return std::sqrt(s);
}

// Chebyshev points of the first kind on [-1, 1], largest first, and their
// barycentric weights.
void cheb1(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int j = 0; j < n; ++j) {
    double a = (2 * j + 1) * kPi / (2 * n);
    x[j] = std::cos(a);
    w[j] = (j % 2 ? -1.0 : 1.0) * std::sin(a);
  }
}

void bary(double xi, const std::vector<double>& x, const std::vector<double>& w, double* out) {
  int n = static_cast<int>(x.size());
  for (int j = 0; j < n; ++j) {
    if (std::abs(xi - x[j]) < 1e-15) {
      for (int l = 0; l < n; ++l) out[l] = l == j ? 1.0 : 0.0;
      return;
    }
  }
  double s = 0;
  for (int j = 0; j < n; ++j) {
    out[j] = w[j] / (xi - x[j]);
    s += out[j];
  }
  for (int j = 0; j < n; ++j) out[j] /= s;
}

JetQ embed_x(const JetQ& g, int n, int N, int maxe) {
  std::vector<JetQ::Term> t;
  for (const auto& [m, c] : g.terms()) {
    int e = mono_exp(m, 0);
    if (e <= maxe) t.push_back({mono_unit(0, e), c});
  }
  return JetQ::from_terms(n, N, std::move(t));
}

Cplx eval_uni(const JetQ& g, const Cplx& x, int lo, int hi) {
  Cplx s(0, 0);
  for (const auto& [m, c] : g.terms()) {
    int e = mono_exp(m, 0);
    if (e >= lo && e <= hi) s += c.to_complex() * ipow(x, e);
  }
  return s;
}

// log(I + W) through x^K for W = O(x^k).
MatSeries log_series(const MatSeries& W, int K, int k) {
  int m = W.rows;
  MatSeries L(m, m, K);
  MatSeries P = MatSeries::identity(m, K);
  for (int j = 1; j * k <= K; ++j) {
    P = (P * W).truncated(K);
    GaussQ c(Rational(j % 2 ? 1 : -1, j));
    L = L + P.scaled(c);
  }
  return L;
}

}  // namespace

// ---------------------------------------------------------------- PolyMap

PolyMap PolyMap::from(const MapQ& F, const Cplx& alpha) {
  PolyMap P;
  P.n = F.nvars();
  if (P.n > kMaxN) throw PreconditionError("parabolic", "too many variables");
  for (int i = 0; i < P.n; ++i) {
    std::vector<std::pair<Mono, Cplx>> t;
    for (const auto& [m, c] : F.comp[i].terms()) {
      int a = mono_exp(m, 0);
      t.push_back({m, c.to_complex() * ipow(alpha, a - (i == 0 ? 1 : 0))});
      for (int v = 0; v < P.n; ++v) P.maxdeg = std::max(P.maxdeg, mono_exp(m, v));
    }
    P.comps.push_back(std::move(t));
  }
  return P;
}

void PolyMap::eval(const Cplx* z, Cplx* out) const {
  thread_local std::vector<Cplx> pw;
  int D = maxdeg + 1;
  pw.resize(static_cast<std::size_t>(n) * D);
  for (int v = 0; v < n; ++v) {
    pw[v * D] = 1;
    for (int e = 1; e < D; ++e) pw[v * D + e] = pw[v * D + e - 1] * z[v];
  }
  for (int i = 0; i < n; ++i) {
    Cplx s(0, 0);
    for (const auto& [m, c] : comps[i]) {
      Cplx t = c;
      for (int v = 0; v < n; ++v) {
        int e = mono_exp(m, v);
        if (e) t *= pw[v * D + e];
      }
      s += t;
    }
    out[i] = s;
  }
}

// ---------------------------------------------------------------- NormalizedRS

MatC NormalizedRS::expC(const Cplx& L) const {
  int m = n1();
  if (m == 1) return MatC::Constant(1, 1, std::exp(-Csc(0, 0) * L));
  if (c_diag) {
    VecC d(m);
    for (int i = 0; i < m; ++i) d(i) = std::exp(-cEig(i) * L);
    return cV * d.asDiagonal() * cVinv;
  }
  MatC A = -Csc * L;
  return A.exp();
}

VecC NormalizedRS::R(const Cplx& x) const {
  VecC r = VecC::Zero(n1());
  for (int i = 0; i < p; ++i) {
    Cplx xp = ipow(x, i - p) / double(p - i);
    for (int l = 0; l < n1(); ++l) r(l) += Dsc[i][l] * xp;
  }
  return r;
}

void NormalizedRS::step(const Cplx& x, const VecC& y, Cplx& x1, VecC& y1) const {
  Cplx z[kMaxN], out[kMaxN];
  z[0] = x;
  for (int i = 0; i < n1(); ++i) z[i + 1] = y(i);
  dmap.eval(z, out);
  x1 = x + out[0];
  y1.resize(n1());
  for (int i = 0; i < n1(); ++i) y1(i) = y(i) + out[i + 1];
}

void NormalizedRS::step_H(const Cplx* z, Cplx* z1, Cplx* ell, Cplx& Lstep, Cplx* H) const {
  int m1 = n1();
  Cplx d[kMaxN];
  dmap.eval(z, d);
  const Cplx x = z[0];
  for (int i = 0; i < n; ++i) z1[i] = z[i] + d[i];
  Cplx lg = log1p_c(d[0] / x);  // log(x1 / x)
  Lstep = -lg;
  for (int l = 0; l < m1; ++l) ell[l] = 0;
  for (int i = 0; i < p; ++i) {
    int e = i - p;
    Cplx w = ipow(x, e) * (-expm1_c(double(e) * lg)) / double(p - i);
    for (int l = 0; l < m1; ++l) ell[l] += Dsc[i][l] * w;
  }
  // H = -(F_bar - y) - (G1 - I) F_bar
  if (m1 == 1) {
    Cplx g1m = expm1_c(ell[0] - Csc(0, 0) * Lstep);
    H[0] = -d[1] - g1m * z1[1];
    return;
  }
  MatC X = -Csc * Lstep, T = X, EmI = X;
  for (int k = 2; k < 40 && T.norm() > 1e-18 * EmI.norm(); ++k) {
    T = T * X / double(k);
    EmI += T;
  }
  MatC GmI = EmI;
  for (int l = 0; l < m1; ++l) GmI.row(l) += expm1_c(ell[l]) * (MatC::Identity(m1, m1) + EmI).row(l);
  for (int l = 0; l < m1; ++l) {
    Cplx s = -d[1 + l];
    for (int c = 0; c < m1; ++c) s -= GmI(l, c) * z1[1 + c];
    H[l] = s;
  }
}

NormalizedRS normalize_rs(const MapQ& F, const CurveParam& graph_in, int m, bool check_m0) {
  NormalizedRS nr;
  int n = F.nvars();
  nr.n = n;
  nr.m = m;
  RSDiffeoData rs0 = detect_rs(F, graph_in);
  int k = rs0.k, p = rs0.p, M = k + p;
  nr.k = k;
  nr.p = p;
  nr.lambda = rs0.lambda;
  if (m < p + 2) throw PreconditionError("parabolic", "m = " + std::to_string(m) + " below p + 2");
  int N = F.trunc();
  if (N < M + m) throw BudgetError("parabolic", "map truncation below k + p + m", M + m);
  CurveParam graph = graph_form(graph_in);
  if (graph.trunc() < m + p - 1) throw BudgetError("parabolic", "curve truncation below m + p - 1", m + p - 1);

  // Normalize the restricted map x -> x + lambda x^(M+1) + ... so that its
  // terms of order M+2 .. M+p+1 vanish.
  MapQ G = F;
  for (int r = 1; r <= p; ++r) {
    Composer<GaussQ> comp(graph.gamma);
    JetQ h = comp(G.comp[0]);
    GaussQ c = h.coeff(mono_unit(0, M + 1 + r));
    nr.P_coeffs.push_back(GaussQ(0));
    if (c.is_zero()) continue;
    GaussQ a = -c / (nr.lambda * GaussQ(M - r));
    nr.P_coeffs.back() = a;
    JetTuple<GaussQ> psi = identity_tuple<GaussQ>(n, N);
    psi[0] = psi[0] + JetQ::monomial(n, N, mono_unit(0, r + 1), a);
    auto step = TransformStep::coord(CoordChange::from_forward(psi, N), "x -> x + a x^" + std::to_string(r + 1));
    G = transform_map(G, step);
    graph = graph_form(transform_curve(graph, step));
    nr.seq.append(step);
    Composer<GaussQ> comp2(graph.gamma);
    if (!comp2(G.comp[0]).coeff(mono_unit(0, M + 1 + r)).is_zero())
      throw std::logic_error("normalize_rs: x-normalization did not cancel its term");
  }
  nr.graph = graph;

  // y_m = y - J_(m+p-1) gamma_bar(x)
  for (int j = 1; j < n; ++j) {
    JetQ g = graph.gamma[j];
    nr.gammabar_trunc.push_back(lowered(g, m + p - 1));
    JetQ shift = embed_x(g, n, N, m + p - 1);
    if (shift.is_zero()) continue;
    auto step = TransformStep::coord(CoordChange::translation(n, j, shift), "recentre y" + std::to_string(j));
    G = transform_map(G, step);
    nr.seq.append(step);
  }
  CurveParam rec = graph_form(transform_curve(graph, nr.seq.steps.empty() ? TransformSequence{} : [&] {
    TransformSequence s;
    for (const auto& st : nr.seq.steps)
      if (st.note.rfind("recentre", 0) == 0) s.append(st);
    return s;
  }()));
  for (int j = 1; j < n; ++j)
    if (rec.gamma[j].order() < m + p)
      throw std::logic_error("normalize_rs: recentred curve has contact below m + p");
  nr.map = G;
  nr.N = G.trunc();
  nr.rs = detect_rs(G, rec);
  if (nr.rs.k != k || nr.rs.p != p || nr.rs.lambda != nr.lambda)
    throw std::logic_error("normalize_rs: normalization changed k, p or lambda");

  // Dcal + x^p Ccal = x^-k J_(k+p) log(I + x^k (D + x^p C))
  int n1 = n - 1;
  MatSeries W(n1, n1, M);
  for (int i = 0; i < p; ++i) W.set(k + i, nr.rs.D[i]);
  W.set(M, nr.rs.C);
  W.trim();
  MatSeries L = log_series(W, M, k);
  for (int i = 0; i < p; ++i) nr.Dcal.push_back(L.coeff(k + i));
  nr.Ccal = L.coeff(M);

  // scaling x = alpha x~ with lambda alpha^M = -1
  GaussQ target = -nr.lambda.inverse();
  if (auto r = exact_root(target, M)) {
    nr.alpha = r->to_complex();
    nr.alpha_exact = true;
  } else {
    nr.alpha = std::pow(target.to_complex(), 1.0 / M);
  }
  nr.fmap = PolyMap::from(G, nr.alpha);
  MapQ Gd = G;
  for (int i = 0; i < n; ++i) Gd.comp[i] = Gd.comp[i] - JetQ::var(n, Gd.comp[i].trunc(), i);
  nr.dmap = PolyMap::from(Gd, nr.alpha);
  for (int i = 0; i < p; ++i) {
    std::vector<Cplx> d;
    Cplx s = ipow(nr.alpha, k + i);
    for (int l = 0; l < n1; ++l) d.push_back(s * nr.Dcal[i](l, l).to_complex());
    nr.Dsc.push_back(d);
  }
  nr.Csc = MatC(n1, n1);
  Cplx sM = ipow(nr.alpha, M);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) nr.Csc(i, j) = sM * nr.Ccal(i, j).to_complex();
  Eigen::ComplexEigenSolver<MatC> es(nr.Csc);
  nr.cEig = es.eigenvalues();
  nr.cV = es.eigenvectors();
  nr.min_re_spec = nr.cEig.real().minCoeff();
  Eigen::JacobiSVD<MatC> svd(nr.cV);
  double smin = svd.singularValues().minCoeff();
  if (smin > 0 && svd.singularValues().maxCoeff() / smin < 1e8) {
    nr.c_diag = true;
    nr.cVinv = nr.cV.inverse();
  }
  nr.m0 = std::max(p + 2, static_cast<int>(std::ceil(p + 2 - nr.min_re_spec - 1e-9)));
  if (check_m0 && m < nr.m0)
    throw PreconditionError("parabolic", "m = " + std::to_string(m) + " below m0 = " + std::to_string(nr.m0));

  // trust radius from the coefficient growth of the pure-x parts
  double rt = 1.0;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> pure;
    for (const auto& [mm, c] : nr.fmap.comps[i]) {
      if (mm != mono_unit(0, mono_exp(mm, 0))) continue;
      int a = mono_exp(mm, 0);
      if (i == 0 && a <= 1) continue;
      if (std::abs(c) > 0) pure.push_back({a, std::abs(c)});
    }
    if (pure.size() < 2) continue;
    auto [a0, c0] = pure.front();
    for (std::size_t t = 1; t < pure.size(); ++t)
      rt = std::min(rt, std::pow(c0 / pure[t].second, 1.0 / (pure[t].first - a0)));
  }
  nr.delta_trust = rt;
  return nr;
}

MatC E_factors(const NormalizedRS& nr, const Cplx& xf, const Cplx& xt, double tau) {
  int n1 = nr.n1();
  VecC A = nr.R(xf) - nr.R(xt);
  for (int l = 0; l < n1; ++l)
    if (A(l).real() > 50) throw OrbitOrderingError("E-ratio exponent with real part above 50");
  auto Lsec = [&](const Cplx& x) {
    double off = std::arg(x * std::polar(1.0, -tau));
    return Cplx(std::log(std::abs(x)), tau + off);
  };
  MatC G = nr.expC(Lsec(xf) - Lsec(xt));
  for (int l = 0; l < n1; ++l) G.row(l) *= std::exp(A(l));
  return G;
}

VecC H_eval(const NormalizedRS& nr, const Cplx& x, const VecC& y) {
  double r = std::abs(x);
  if (r > nr.delta_trust * (1 + 1e-12)) throw PreconditionError("parabolic", "H_eval: |x| outside the trust radius");
  if (y.norm() > 2 * std::pow(r, nr.m - 1)) throw PreconditionError("parabolic", "H_eval: |y| above 2 |x|^(m-1)");
  Cplx z[kMaxN], z1[kMaxN], ell[kMaxN], H[kMaxN], L;
  z[0] = x;
  for (int l = 0; l < nr.n1(); ++l) z[l + 1] = y(l);
  nr.step_H(z, z1, ell, L, H);
  VecC h(nr.n1());
  for (int l = 0; l < nr.n1(); ++l) h(l) = H[l];
  return h;
}

// ---------------------------------------------------------------- SectorGrid

SectorGrid SectorGrid::make(const SectorSpec& sec, int m, int p, int n1, int ns, int nth, double inner_ratio,
                            double fill) {
  if (ns < 2 || nth < 2) throw PreconditionError("parabolic", "grid needs at least 2 x 2 nodes");
  if (!(inner_ratio > 0 && inner_ratio < 1)) throw PreconditionError("parabolic", "inner ratio outside (0, 1)");
  SectorGrid g;
  g.sector = sec;
  g.m = m;
  g.p = p;
  g.n1 = n1;
  g.ns = ns;
  g.nth = nth;
  g.s1 = std::log(sec.delta);
  g.s0 = std::log(sec.delta * inner_ratio);
  g.t0 = sec.tau - fill * sec.eta / 2;
  g.t1 = sec.tau + fill * sec.eta / 2;
  std::vector<double> x, w;
  cheb1(ns, x, w);
  for (double c : x) g.snodes.push_back(0.5 * (g.s0 + g.s1) + 0.5 * (g.s1 - g.s0) * c);
  cheb1(nth, x, w);
  for (double c : x) g.tnodes.push_back(0.5 * (g.t0 + g.t1) + 0.5 * (g.t1 - g.t0) * c);
  g.v.assign(static_cast<std::size_t>(ns) * nth * n1, Cplx(0, 0));
  return g;
}

Cplx SectorGrid::node(int idx) const {
  int i = idx / nth, j = idx % nth;
  return std::polar(std::exp(snodes[i]), tnodes[j]);
}

VecC SectorGrid::u_node(int idx) const {
  Cplx w = ipow(node(idx), weight());
  VecC u(n1);
  for (int c = 0; c < n1; ++c) u(c) = v[static_cast<std::size_t>(idx) * n1 + c] * w;
  return u;
}

void SectorGrid::set_u(int idx, const VecC& u) {
  Cplx w = ipow(node(idx), weight());
  for (int c = 0; c < n1; ++c) v[static_cast<std::size_t>(idx) * n1 + c] = u(c) / w;
}

void SectorGrid::eval_into(const Cplx& x, Cplx* out) const {
  thread_local std::vector<double> xs, ws, xt, wt, a, b;
  if (static_cast<int>(xs.size()) != ns) cheb1(ns, xs, ws);
  if (static_cast<int>(xt.size()) != nth) cheb1(nth, xt, wt);
  a.resize(ns);
  b.resize(nth);
  double s = std::log(std::abs(x));
  double t = sector.tau + sector.offset(x);
  bary((2 * s - s0 - s1) / (s1 - s0), xs, ws, a.data());
  bary((2 * t - t0 - t1) / (t1 - t0), xt, wt, b.data());
  for (int c = 0; c < n1; ++c) out[c] = 0;
  for (int i = 0; i < ns; ++i) {
    if (a[i] == 0) continue;
    for (int j = 0; j < nth; ++j) {
      double ab = a[i] * b[j];
      if (ab == 0) continue;
      const Cplx* vv = &v[(static_cast<std::size_t>(i) * nth + j) * n1];
      for (int c = 0; c < n1; ++c) out[c] += ab * vv[c];
    }
  }
  Cplx w = ipow(x, weight());
  for (int c = 0; c < n1; ++c) out[c] *= w;
}

VecC SectorGrid::eval(const Cplx& x) const {
  VecC u(n1);
  eval_into(x, u.data());
  return u;
}

VecC SectorGrid::deriv(const Cplx& x) const {
  const double h = 1e-5;
  return (eval(x * std::exp(h)) - eval(x * std::exp(-h))) / (2 * h) / x;
}

// ---------------------------------------------------------------- orbits and T

OrbitTrace orbit(const NormalizedRS& nr, const SectorGrid& u, const Cplx& x0, OrbitCaps caps) {
  OrbitTrace tr;
  tr.x0 = x0;
  double floor = caps.floor > 0 ? caps.floor : 0.2 * u.rmin();
  Cplx z[kMaxN], out[kMaxN];
  Cplx x = x0;
  tr.xs.push_back(x);
  for (int j = 0; j < caps.cap; ++j) {
    if (!u.sector.contains(x)) {
      std::ostringstream os;
      os << "orbit left the sector at step " << j << " (|x| = " << std::abs(x) << ")";
      throw SectorExitError(os.str());
    }
    z[0] = x;
    u.eval_into(x, z + 1);
    nr.dmap.eval(z, out);
    x += out[0];
    tr.xs.push_back(x);
    if (std::abs(x) < floor) {
      tr.stop = "radius floor";
      return tr;
    }
  }
  tr.stop = "iteration cap";
  return tr;
}

VecC orbit_sum(const NormalizedRS& nr, const SectorGrid& u, const Cplx& x0, const TOptions& opt, TStats* st) {
  int n1 = nr.n1();
  const int M = nr.M();
  Cplx z[kMaxN], z1[kMaxN], ell[kMaxN], H[kMaxN], Lstep;
  std::vector<Cplx> sum(n1, Cplx(0, 0)), term(n1);
  // G_j = diag(exp A) exp(-C Lacc), both exponents accumulated step by step
  std::vector<Cplx> A(n1, Cplx(0, 0));
  Cplx Lacc(0, 0);
  double scale0 = std::pow(std::abs(x0), nr.k + nr.p + nr.m);
  Cplx x = x0;
  int quiet = 0;
  double last = 0;
  std::vector<double> ratios;
  long j = 0;
  for (;; ++j) {
    if (j >= opt.cap) throw TailError("orbit sum did not settle within the step cap");
    if (!u.sector.contains(x)) {
      std::ostringstream os;
      os << "orbit left the sector at step " << j << " (|x| = " << std::abs(x) << ")";
      throw SectorExitError(os.str());
    }
    z[0] = x;
    u.eval_into(x, z + 1);
    nr.step_H(z, z1, ell, Lstep, H);
    if (n1 == 1) {
      term[0] = std::exp(A[0] - nr.Csc(0, 0) * Lacc) * H[0];
    } else {
      MatC G = nr.expC(Lacc);
      for (int l = 0; l < n1; ++l) {
        Cplx s(0, 0);
        for (int c = 0; c < n1; ++c) s += G(l, c) * H[c];
        term[l] = std::exp(A[l]) * s;
      }
    }
    for (int l = 0; l < n1; ++l) {
      sum[l] += term[l];
      A[l] += ell[l];
      if (A[l].real() > 50) throw OrbitOrderingError("E-ratio exponent with real part above 50");
    }
    Lacc += Lstep;
    double tn = vnorm(term.data(), n1);
    double ref = vnorm(sum.data(), n1) + scale0;
    if (last > 0 && tn > 0) {
      ratios.push_back(tn / last);
      if (ratios.size() > 10) ratios.erase(ratios.begin());
    }
    last = tn;
    if (tn < opt.tail_tol * ref) {
      if (++quiet >= 10) {
        double q = ratios.empty() ? 0 : *std::max_element(ratios.begin(), ratios.end());
        double tail = q < 1 ? tn * q / (1 - q) : tn * double(j + 1) / std::max(1, M);
        if (st) st->tail_est = std::max(st->tail_est, tail / ref);
        break;
      }
    } else {
      quiet = 0;
    }
    x = z1[0];
  }
  if (st) {
    st->steps += j + 1;
    st->longest = std::max(st->longest, j + 1);
  }
  VecC r(n1);
  for (int l = 0; l < n1; ++l) r(l) = sum[l];
  return r;
}

SectorGrid apply_T(const NormalizedRS& nr, const SectorGrid& u, const TOptions& opt, TStats* st,
                   const std::vector<int>* only) {
  SectorGrid out = u;
  if (only) {
    for (int idx : *only) out.set_u(idx, orbit_sum(nr, u, u.node(idx), opt, st));
  } else {
    for (int idx = 0; idx < u.nodes(); ++idx) out.set_u(idx, orbit_sum(nr, u, u.node(idx), opt, st));
  }
  return out;
}

GridNorms grid_norms(const SectorGrid& u) {
  GridNorms g;
  for (int idx = 0; idx < u.nodes(); ++idx) {
    Cplx x = u.node(idx);
    double r = std::abs(x);
    double a = u.u_node(idx).norm();
    g.sup = std::max(g.sup, a);
    g.n = std::max(g.n, a / std::pow(r, u.m - 1));
    g.dnorm = std::max(g.dnorm, u.deriv(x).norm() / std::pow(r, u.m - u.p - 2));
  }
  return g;
}

double n_distance(const SectorGrid& a, const SectorGrid& b) {
  double d = 0;
  for (int idx = 0; idx < a.nodes(); ++idx)
    d = std::max(d, (a.u_node(idx) - b.u_node(idx)).norm() / std::pow(std::abs(a.node(idx)), a.m - 1));
  return d;
}

double sup_distance(const SectorGrid& a, const SectorGrid& b) {
  double d = 0;
  for (int idx = 0; idx < a.nodes(); ++idx) d = std::max(d, (a.u_node(idx) - b.u_node(idx)).norm());
  return d;
}

Residuals invariance_residual(const NormalizedRS& nr, const SectorGrid& u) {
  Residuals r;
  for (int idx = 0; idx < u.nodes(); ++idx) {
    Cplx x = u.node(idx), x1;
    VecC y = u.u_node(idx), Fb;
    nr.step(x, y, x1, Fb);
    double e = (u.eval(x1) - Fb).norm();
    r.sup = std::max(r.sup, e);
    r.scaled = std::max(r.scaled, e / std::pow(std::abs(x), nr.k));
  }
  return r;
}

double fixed_point_defect(const NormalizedRS& nr, const SectorGrid& u, const TOptions& opt) {
  return sup_distance(apply_T(nr, u, opt), u);
}

// ---------------------------------------------------------------- construct

namespace {

struct ContractionFailure {
  std::string why;
};

void check_placement(const NormalizedRS& nr, double tau, double eta) {
  auto dirs = attracting_directions(nr.k, nr.p, nr.rs.lambda);
  const Direction* hit = nullptr;
  for (const auto& d : dirs) {
    double diff = std::abs(std::remainder(d.theta - tau, 2 * kPi));
    if (diff < 1e-9) hit = &d;
  }
  if (!hit) throw PreconditionError("parabolic", "tau is not an attracting direction");
  auto I = interval_I(nr.k, nr.p, nr.rs.lambda, saddle_entries(nr.rs), *hit);
  if (!I) throw PreconditionError("parabolic", "tau is not well placed");
  if (!(eta > 0 && eta < *I)) {
    std::ostringstream os;
    os << "eta = " << eta << " outside (0, " << *I << ")";
    throw PreconditionError("parabolic", os.str());
  }
}

}  // namespace

ParabolicCurveNumeric construct(const NormalizedRS& nr, double tau, double eta, double delta,
                                const ConstructOptions& opt) {
  check_placement(nr, tau, eta);
  double ra = std::abs(nr.alpha);
  if (!(delta > 0) || delta / ra > nr.delta_trust * (1 + 1e-12)) {
    std::ostringstream os;
    os << "delta = " << delta << " outside the trust radius " << nr.delta_trust * ra;
    throw PreconditionError("parabolic", os.str());
  }
  ParabolicCurveNumeric pc;
  pc.m = nr.m;
  pc.tau = tau;
  pc.eta = eta;
  pc.tau_scaled = nr.scaled_tau(tau);
  pc.chain = nr.seq;
  for (int h = 0; h <= opt.max_halvings; ++h) {
    double d = delta / std::ldexp(1.0, h);
    Attempt at;
    at.delta = d;
    SectorSpec sec{pc.tau_scaled, eta, d / ra};
    SectorGrid u = SectorGrid::make(sec, nr.m, nr.p, nr.n1(), opt.ns, opt.nth, opt.inner_ratio, opt.angular_fill);
    if (opt.seed)
      for (int idx = 0; idx < u.nodes(); ++idx) u.set_u(idx, opt.seed->eval(u.node(idx)));
    TStats st;
    std::vector<double> changes;
    double prev = 0, ratio = 0;
    bool ok = false;
    int bad = 0;
    try {
      for (int it = 1; it <= opt.max_iter; ++it) {
        SectorGrid nu = apply_T(nr, u, opt.T, &st);
        double dn = n_distance(nu, u), ds = sup_distance(nu, u);
        changes.push_back(dn);
        ratio = prev > 0 ? dn / prev : 0;
        prev = dn;
        u = std::move(nu);
        at.iterations = it;
        at.last_change = dn;
        at.contraction = ratio;
        if (dn <= opt.ntol) {
          ok = true;
          break;
        }
        if (it >= 4 && ratio > 0.5 && ds <= opt.tol * 1e-2) {  // rounding floor
          ok = true;
          break;
        }
        bad = ratio >= 1 ? bad + 1 : 0;
        if (bad >= 2) throw ContractionFailure{"successive changes stopped decreasing"};
      }
      if (!ok) {
        if (sup_distance(apply_T(nr, u, opt.T, &st), u) <= opt.tol * 1e-2) ok = true;
        else throw ContractionFailure{"no convergence within the iteration cap"};
      }
    } catch (const SectorExitError& e) {
      at.outcome = std::string("sector exit: ") + e.what();
    } catch (const TailError& e) {
      at.outcome = std::string("tail: ") + e.what();
    } catch (const OrbitOrderingError& e) {
      at.outcome = std::string("orbit ordering: ") + e.what();
    } catch (const ContractionFailure& e) {
      at.outcome = "contraction: " + e.why;
    }
    if (ok) {
      at.outcome = "converged";
      pc.attempts.push_back(at);
      pc.delta = d;
      pc.grid = std::move(u);
      pc.iterations = at.iterations;
      pc.changes = changes;
      pc.contraction = ratio;
      pc.tstats = st;
      pc.residual = invariance_residual(nr, pc.grid);
      pc.residual_sup = pc.residual.sup;
      pc.norms = grid_norms(pc.grid);
      pc.in_ball = pc.norms.n <= 1 && pc.norms.dnorm <= 1;
      return pc;
    }
    pc.attempts.push_back(at);
  }
  std::ostringstream os;
  os << "no delta in the ladder succeeded:";
  for (const auto& a : pc.attempts) os << " [delta " << a.delta << ": " << a.outcome << "]";
  throw ConstructionFailed(os.str());
}

// ---------------------------------------------------------------- verification

AsymptoticReport verify_asymptotic(const ParabolicCurveNumeric& pc, const NormalizedRS& nr,
                                   const JetTuple<GaussQ>& gammabar, int N) {
  AsymptoticReport rep;
  const auto& g = pc.grid;
  int lo = nr.m + nr.p - 1;
  for (const auto& gj : gammabar)
    if (gj.trunc() < N) throw BudgetError("parabolic", "curve known below the requested order", N);
  // supplied minus the jet used for recentring; zero when they agree
  std::vector<JetQ> diff;
  for (int l = 0; l < g.n1; ++l) diff.push_back(lowered(gammabar[l], lo) - nr.gammabar_trunc[l]);
  std::vector<int> idxs;
  for (int i = g.ns / 2; i < g.ns; ++i)
    for (int j = 0; j < g.nth; ++j) idxs.push_back(i * g.nth + j);
  for (int Np = 0; Np <= N; ++Np) {
    std::vector<double> X, Y;
    double c = 0;
    for (int idx : idxs) {
      Cplx xs = g.node(idx);
      Cplx x = nr.alpha * xs;
      VecC q = g.u_node(idx);
      for (int l = 0; l < g.n1; ++l) {
        const JetQ& gj = gammabar[l];
        if (Np < lo) q(l) += eval_uni(nr.gammabar_trunc[l], x, Np + 1, lo);
        else q(l) -= eval_uni(gj, x, lo + 1, Np);
        if (!diff[l].is_zero()) q(l) -= eval_uni(diff[l], x, 1, std::min(Np, lo));
      }
      double a = q.norm(), r = std::abs(x);
      if (a <= 0) continue;
      X.push_back(std::log(r));
      Y.push_back(std::log(a));
      c = std::max(c, a / std::pow(r, Np + 1));
    }
    AsymptoticEntry e;
    e.order = Np;
    e.c = c;
    if (X.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < X.size(); ++i) mx += X[i], my += Y[i];
      mx /= X.size();
      my /= Y.size();
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < X.size(); ++i) sxy += (X[i] - mx) * (Y[i] - my), sxx += (X[i] - mx) * (X[i] - mx);
      e.slope = sxy / sxx;
    } else {
      e.slope = std::numeric_limits<double>::infinity();  // q vanishes identically
    }
    e.pass = e.slope >= Np + 0.5;
    if (!e.pass) {
      rep.pass = false;
      rep.failing.push_back(Np);
    }
    rep.entries.push_back(e);
  }
  return rep;
}

StabilityReport verify_stability(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, int seeds,
                                 unsigned long long rng_seed, int steps) {
  StabilityReport rep;
  const auto& g = pc.grid;
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> U(0, 1);
  int M = nr.M();
  rep.seeds = seeds;
  rep.threshold = 10 * pc.residual_sup;
  double floor = 0.2 * g.rmin();
  double rin = g.radius_of_ring(g.ns - 1), rout = g.radius_of_ring(0);
  for (int s = 0; s < seeds; ++s) {
    double r = rin * std::pow(rout / rin, U(rng));
    double t = g.tnodes.back() + (g.tnodes.front() - g.tnodes.back()) * U(rng);
    Cplx x0 = std::polar(r, t), x = x0;
    bool exited = false;
    int j = 0;
    for (; j < steps && std::abs(x) >= floor; ++j) {
      if (!g.sector.contains(x)) {
        exited = true;
        break;
      }
      VecC y = g.eval(x), y1;
      Cplx x1;
      nr.step(x, y, x1, y1);
      rep.max_deviation = std::max(rep.max_deviation, (y1 - g.eval(x1)).norm());
      x = x1;
    }
    if (exited) {
      ++rep.exited;
      std::ostringstream os;
      os << "seed " << s << " left the sector at step " << j;
      rep.violations.push_back(os.str());
      continue;
    }
    Cplx pred = ipow(x0, -M) + double(M) * j;
    double law = std::abs(ipow(x, -M) / pred - 1.0);
    rep.worst_law = std::max(rep.worst_law, law);
    if (std::abs(x) < std::abs(x0) && law <= 0.05) ++rep.converged;
    else rep.violations.push_back("seed " + std::to_string(s) + " does not follow the orbit law");
  }
  if (rep.max_deviation > rep.threshold) {
    std::ostringstream os;
    os << "graph deviation " << rep.max_deviation << " above " << rep.threshold;
    rep.violations.push_back(os.str());
  }
  rep.pass = rep.violations.empty();
  return rep;
}

OrbitLawReport orbit_law(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, int j) {
  OrbitLawReport rep;
  rep.j = j;
  int M = nr.M();
  rep.s = nr.k + nr.p + nr.m;
  const auto& g = pc.grid;
  double kmin = 1e300, kmax = 0;
  for (int t = 0; t < g.nth; ++t) {
    Cplx x0 = g.node(t);
    OrbitCaps caps;
    caps.cap = j;
    caps.floor = 1e-300;
    auto tr = orbit(nr, g, x0, caps);
    Cplx xj = tr.xs.back();
    rep.deviation.push_back(std::abs(double(M) * j * ipow(xj, M) - 1.0));
    double S = 0;
    for (const auto& x : tr.xs) S += std::pow(std::abs(x), rep.s);
    double K = S / std::pow(std::abs(x0), rep.s - M);
    rep.K.push_back(K);
    kmin = std::min(kmin, K);
    kmax = std::max(kmax, K);
  }
  rep.worst = *std::max_element(rep.deviation.begin(), rep.deviation.end());
  rep.K_spread = kmax / kmin;
  return rep;
}

ContractionReport measure_contraction(const NormalizedRS& nr, double tau, double eta, double delta, int pairs,
                                      unsigned long long rng_seed, const ConstructOptions& opt) {
  check_placement(nr, tau, eta);
  ContractionReport rep;
  rep.pairs = pairs;
  rep.delta = delta;
  double ra = std::abs(nr.alpha);
  SectorSpec sec{nr.scaled_tau(tau), eta, delta / ra};
  SectorGrid base = SectorGrid::make(sec, nr.m, nr.p, nr.n1(), opt.ns, opt.nth, opt.inner_ratio, opt.angular_fill);
  std::vector<int> outer;
  for (int i = 0; i < base.ns / 2; ++i)
    for (int j = 0; j < base.nth; ++j) outer.push_back(i * base.nth + j);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> Z(0, 1);
  double ds = sec.delta;
  double budget = 0.9 * std::min(1.0, 1.0 / ((nr.m + 2) * std::pow(ds, nr.p)));
  const int terms = 4;
  auto random_u = [&]() {
    SectorGrid u = base;
    std::vector<Cplx> a(static_cast<std::size_t>(terms) * nr.n1());
    double tot = 0;
    for (auto& c : a) {
      c = Cplx(Z(rng), Z(rng));
      tot += std::abs(c);
    }
    for (auto& c : a) c *= budget / tot;
    for (int idx = 0; idx < u.nodes(); ++idx) {
      Cplx x = u.node(idx);
      VecC val = VecC::Zero(nr.n1());
      for (int l = 0; l < nr.n1(); ++l)
        for (int t = 0; t < terms; ++t) val(l) += a[l * terms + t] * ipow(x / ds, t);
      u.set_u(idx, val * ipow(x, nr.m - 1));
    }
    return u;
  };
  auto n_on = [&](const SectorGrid& a, const SectorGrid& b) {
    double d = 0;
    for (int idx : outer)
      d = std::max(d, (a.u_node(idx) - b.u_node(idx)).norm() / std::pow(std::abs(a.node(idx)), a.m - 1));
    return d;
  };
  for (int k = 0; k < pairs; ++k) {
    SectorGrid u = random_u(), v = random_u();
    SectorGrid Tu = apply_T(nr, u, opt.T, nullptr, &outer), Tv = apply_T(nr, v, opt.T, nullptr, &outer);
    double f = n_on(Tu, Tv) / n_distance(u, v);
    rep.factor = std::max(rep.factor, f);
  }
  return rep;
}

std::vector<Cplx> pull_back(const TransformSequence& seq, int n, std::vector<Cplx> pt) {
  for (auto it = seq.steps.rbegin(); it != seq.steps.rend(); ++it) {
    auto phi = it->phi(n);
    std::vector<Cplx> q(n);
    for (int i = 0; i < n; ++i) q[i] = eval_complex(phi[i], pt);
    pt = std::move(q);
  }
  return pt;
}

std::vector<Cplx> curve_point(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, const Cplx& xs) {
  std::vector<Cplx> pt(nr.n);
  pt[0] = nr.alpha * xs;
  VecC y = pc.grid.eval(xs);
  for (int l = 0; l < nr.n1(); ++l) pt[l + 1] = y(l);
  return pull_back(nr.seq, nr.n, pt);
}

}  // namespace fdyn

#include "fdyn/sector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fdyn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * std::numbers::pi;

// One half-plane condition Re(c xi^N) > 0 on a direction xi.
struct Constraint {
  GaussQ c;
  int N = 0;
};

std::vector<Constraint> v_constraints(const GaussQ& lambda, const std::vector<SaddleEntry>& entries, int p) {
  std::vector<Constraint> out;
  if (p == 0) return out;
  for (const auto& e : entries) out.push_back({-e.d0 / lambda, -(p - e.nu)});
  return out;
}

std::vector<Constraint> growth_constraints(int k, const std::vector<SaddleEntry>& entries) {
  std::vector<Constraint> out;
  for (const auto& e : entries) out.push_back({e.d0, k + e.nu});
  return out;
}

Membership evaluate(const Constraint& con, const Direction& tau) {
  if (con.N == 0) {
    int s = con.c.re.sign();
    if (s > 0) return Membership::Inside;
    return s < 0 ? Membership::Outside : Membership::Boundary;
  }
  Cplx z = con.c.to_complex() * std::polar(1.0, con.N * tau.theta);
  double s = z.real() / std::abs(z);
  if (s > kAngleGuard) return Membership::Inside;
  if (s < -kAngleGuard) return Membership::Outside;
  if (tau.root_degree == 0) return Membership::Indeterminate;
  // Re z = 0 forces z^(2M) to be real with sign (-1)^M; the roots of that
  // equation are pi/M apart, so the float value picks the right one.
  int M = tau.root_degree;
  GaussQ w = gpow(con.c, 2 * M) * gpow(tau.root_of, 2 * con.N);
  if (w.is_real() && !w.re.is_zero() && w.re.sign() == (M % 2 == 0 ? 1 : -1)) return Membership::Boundary;
  return Membership::Indeterminate;
}

Membership combine(const std::vector<Constraint>& cons, const Direction& tau) {
  Membership out = Membership::Inside;
  for (const auto& c : cons) {
    Membership m = evaluate(c, tau);
    if (m == Membership::Outside) return m;
    if (m == Membership::Indeterminate) out = m;
    else if (m == Membership::Boundary && out == Membership::Inside) out = m;
  }
  return out;
}

AngularDomain domain_of(const std::vector<Constraint>& cons) {
  AngularDomain d = AngularDomain::whole();
  for (const auto& c : cons) d = intersect(d, half_plane_condition(c.c.to_complex(), c.N));
  return d;
}

// Distance from theta to the complement of the arc containing it, or -1.
double clearance(const AngularDomain& d, double theta) {
  if (d.full) return kPi;
  for (const auto& [a, b] : d.arcs) {
    for (double t : {theta, theta + kTwoPi}) {
      if (t > a && t < b) return std::min(t - a, b - t);
    }
  }
  return -1;
}

int arc_index(const AngularDomain& d, double theta) {
  for (std::size_t i = 0; i < d.arcs.size(); ++i) {
    auto [a, b] = d.arcs[i];
    for (double t : {theta, theta + kTwoPi}) {
      if (t > a + kAngleGuard && t < b - kAngleGuard) return static_cast<int>(i);
    }
  }
  return -1;
}

}  // namespace

double canonical_angle(double t) {
  double r = std::fmod(t, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi - 1e-15) r = 0;
  return r;
}

double AngularDomain::measure() const {
  if (full) return kTwoPi;
  double s = 0;
  for (const auto& [a, b] : arcs) s += b - a;
  return s;
}

std::string AngularDomain::to_string() const {
  if (full) return "circle";
  if (arcs.empty()) return "empty";
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    if (i) os << " u ";
    os << "(" << arcs[i].first << ", " << arcs[i].second << ")";
  }
  return os.str();
}

AngularDomain intersect(const AngularDomain& x, const AngularDomain& y) {
  if (x.full) return y;
  if (y.full) return x;
  AngularDomain out;
  for (const auto& [a1, b1] : x.arcs) {
    for (const auto& [a2, b2] : y.arcs) {
      for (int s = -1; s <= 1; ++s) {
        double lo = std::max(a1, a2 + s * kTwoPi), hi = std::min(b1, b2 + s * kTwoPi);
        if (hi - lo > 1e-15) {
          double start = canonical_angle(lo);
          out.arcs.emplace_back(start, start + (hi - lo));
        }
      }
    }
  }
  std::sort(out.arcs.begin(), out.arcs.end());
  return out;
}

AngularDomain half_plane_condition(const Cplx& w, int N) {
  if (N == 0) return w.real() > 0 ? AngularDomain::whole() : AngularDomain::empty();
  double phi = std::arg(w);
  int n = std::abs(N);
  // cos(phi + N theta) > 0
  double centre = (N > 0 ? -phi : phi) / n;
  AngularDomain d;
  for (int m = 0; m < n; ++m) {
    double c = centre + kTwoPi * m / n;
    double start = canonical_angle(c - kPi / (2 * n));
    d.arcs.emplace_back(start, start + kPi / n);
  }
  std::sort(d.arcs.begin(), d.arcs.end());
  return d;
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::Inside: return "inside";
    case Membership::Outside: return "outside";
    case Membership::Boundary: return "boundary";
    case Membership::Indeterminate: return "indeterminate";
  }
  return "?";
}

std::vector<Direction> attracting_directions(int k, int p, const GaussQ& lambda) {
  if (k + p < 1) throw PreconditionError("sector", "attracting directions need k + p >= 1");
  if (lambda.is_zero()) throw PreconditionError("sector", "attracting directions need lambda != 0");
  int M = k + p;
  GaussQ w = -lambda;
  double base = std::arg(w.to_complex());
  std::vector<Direction> out;
  for (int j = 0; j < M; ++j) {
    Direction d;
    d.theta = canonical_angle((base + kTwoPi * j) / M);
    d.root_degree = M;
    d.root_of = w;
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(), [](const Direction& a, const Direction& b) { return a.theta < b.theta; });
  return out;
}

AngularDomain saddle_domain(const GaussQ& lambda, const std::vector<SaddleEntry>& entries, int p) {
  return domain_of(v_constraints(lambda, entries, p));
}

std::vector<SaddleEntry> saddle_entries(const RSDiffeoData& rs) {
  std::vector<SaddleEntry> out;
  int n1 = rs.C.rows;
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < static_cast<int>(rs.D.size()); ++i) {
      if (!rs.D[i](j, j).is_zero()) {
        out.push_back({rs.D[i](j, j), i});
        break;
      }
    }
  }
  return out;
}

Membership in_saddle_domain(const Direction& tau, const GaussQ& lambda, const std::vector<SaddleEntry>& entries,
                            int p) {
  return combine(v_constraints(lambda, entries, p), tau);
}

std::optional<double> interval_I(int k, int p, const GaussQ& lambda, const std::vector<SaddleEntry>& entries,
                                 const Direction& tau) {
  auto cons = v_constraints(lambda, entries, p);
  auto g = growth_constraints(k, entries);
  cons.insert(cons.end(), g.begin(), g.end());
  if (combine(cons, tau) != Membership::Inside) return std::nullopt;
  double cap = kTwoPi / (k + p);
  double r = clearance(domain_of(cons), tau.theta);
  if (r <= 0) return std::nullopt;
  return std::min(cap, 2 * r);
}

Dim2Report dim2_classify(int k, int p, const RSDiffeoData& rs_F, const RSDiffeoData& rs_Finv) {
  Dim2Report r;
  if (k < 1) throw PreconditionError("sector", "dim2_classify needs k >= 1");
  auto entries = saddle_entries(rs_F);
  AngularDomain V = saddle_domain(rs_F.lambda, entries, p);
  r.arcs = V.full ? 0 : static_cast<int>(V.arcs.size());
  auto count = [&](const GaussQ& lam, int& inside, int& hit) {
    std::vector<bool> seen(V.arcs.size(), false);
    for (const auto& d : attracting_directions(k, p, lam)) {
      if (in_saddle_domain(d, rs_F.lambda, entries, p) != Membership::Inside) continue;
      ++inside;
      int a = arc_index(V, d.theta);
      if (a >= 0 && !seen[a]) {
        seen[a] = true;
        ++hit;
      }
    }
    if (V.full) hit = inside;
  };
  count(rs_F.lambda, r.attracting_F, r.arcs_hit_F);
  count(rs_Finv.lambda, r.attracting_Finv, r.arcs_hit_Finv);
  if (p == 0) {
    r.tag = 'a';
    r.guaranteed_attracting = r.guaranteed_repelling = k;
    r.guarantee = std::to_string(k) + " attracting and " + std::to_string(k) + " repelling";
  } else if (p < k) {
    r.tag = 'b';
    r.guaranteed_attracting = r.guaranteed_repelling = p;
    r.guarantee = std::to_string(p) + " attracting and " + std::to_string(p) + " repelling";
  } else if (k < p) {
    r.tag = 'c';
    r.guaranteed_attracting = r.guaranteed_repelling = 1;
    r.guarantee = "at least one attracting and at least one repelling";
  } else {
    r.tag = 'd';
    r.guaranteed_attracting = r.guaranteed_repelling = p;
    r.guarantee = std::to_string(p) + " attracting or " + std::to_string(p) + " repelling";
  }
  if (r.attracting_F > 0) r.chosen = "F";
  else if (r.attracting_Finv > 0) r.chosen = "F^-1";
  return r;
}

WellPlacedReport well_placed(const RSDiffeoData& rs) {
  WellPlacedReport w;
  w.k = rs.k;
  w.p = rs.p;
  w.lambda = rs.lambda;
  auto entries = saddle_entries(rs);
  w.directions = attracting_directions(rs.k, rs.p, rs.lambda);
  w.V = saddle_domain(rs.lambda, entries, rs.p);
  bool any_indet = false;
  for (const auto& d : w.directions) {
    Membership m = in_saddle_domain(d, rs.lambda, entries, rs.p);
    w.verdicts.push_back(m);
    w.eta_sup.push_back(m == Membership::Inside ? interval_I(rs.k, rs.p, rs.lambda, entries, d) : std::nullopt);
    if (m == Membership::Inside) w.overall = true;
    if (m == Membership::Indeterminate) any_indet = true;
  }
  w.indeterminate = !w.overall && any_indet;
  if (rs.C.rows == 1 && rs.k >= 1) {
    // The inverse has the same k, p and D, lambda up to sign at leading order.
    RSDiffeoData inv = rs;
    inv.lambda = -rs.lambda;
    for (auto& m : inv.D) m = m.scaled(GaussQ(-1));
    w.dim2 = dim2_classify(rs.k, rs.p, rs, inv);
  }
  return w;
}

}  // namespace fdyn

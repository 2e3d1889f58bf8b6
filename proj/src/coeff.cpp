#include "fdyn/coeff.hpp"

#include <cmath>
#include <stdexcept>

namespace fdyn {

namespace {
double g_float_eps = 1e-12;
}

double float_epsilon() { return g_float_eps; }
void set_float_epsilon(double eps) { g_float_eps = eps; }

GaussQ GaussQ::inverse() const {
  if (im.is_zero()) return GaussQ(re.inverse());
  Rational n = norm2();
  if (n.is_zero()) throw std::domain_error("gaussian rational: division by zero");
  return GaussQ(re / n, -im / n);
}

std::string GaussQ::to_string() const {
  if (im.is_zero()) return re.to_string();
  std::string imag = im.is_one() ? "i" : (im == Rational(-1) ? "-i" : im.to_string() + "*i");
  if (re.is_zero()) return imag;
  if (im.sign() < 0) {
    std::string mag = (-im).is_one() ? "i" : (-im).to_string() + "*i";
    return re.to_string() + " - " + mag;
  }
  return re.to_string() + " + " + imag;
}

}  // namespace fdyn

// ---- printing helpers used by Jet::to_string ---------------------------------

#include <cstdio>

#include "fdyn/jet.hpp"

namespace fdyn {

std::vector<std::string> default_var_names(int n) {
  if (n <= 3) {
    static const char* base[] = {"x", "y", "z"};
    return std::vector<std::string>(base, base + n);
  }
  std::vector<std::string> r;
  for (int i = 0; i < n; ++i) r.push_back("z" + std::to_string(i + 1));
  return r;
}

std::string mono_to_string(Mono m, const std::vector<std::string>& names) {
  std::string s;
  for (int i = 0; i < kMaxVars; ++i) {
    int e = mono_exp(m, i);
    if (e == 0) continue;
    if (!s.empty()) s += "*";
    s += i < static_cast<int>(names.size()) ? names[i] : "z" + std::to_string(i + 1);
    if (e > 1) s += "^" + std::to_string(e);
  }
  return s;
}

namespace {

std::string wrap_fraction(const Rational& r) {
  // r > 0 here
  return r.is_integer() ? r.to_string() : "(" + r.to_string() + ")";
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string format_coeff(const GaussQ& c, bool has_mono, bool /*leading*/) {
  if (c.im.is_zero()) {
    const Rational& r = c.re;
    bool neg = r.sign() < 0;
    Rational a = r.abs();
    std::string body;
    if (has_mono)
      body = a.is_one() ? "" : wrap_fraction(a);
    else
      body = a.to_string();
    return neg ? "-" + body : body;
  }
  if (c.re.is_zero()) {
    const Rational& r = c.im;
    bool neg = r.sign() < 0;
    Rational a = r.abs();
    std::string body = a.is_one() ? "i" : wrap_fraction(a) + "*i";
    return neg ? "-" + body : body;
  }
  return "(" + c.to_string() + ")";
}

std::string format_coeff(const Cplx& c, bool has_mono, bool /*leading*/) {
  if (c.imag() == 0.0) {
    double v = c.real();
    bool neg = std::signbit(v);
    double a = std::fabs(v);
    std::string body = (has_mono && a == 1.0) ? "" : fmt_double(a);
    return neg ? "-" + body : body;
  }
  if (c.real() == 0.0) {
    double v = c.imag();
    bool neg = std::signbit(v);
    double a = std::fabs(v);
    std::string body = a == 1.0 ? "i" : fmt_double(a) + "*i";
    return neg ? "-" + body : body;
  }
  std::string im = c.imag() < 0 ? " - " + fmt_double(-c.imag()) + "*i" : " + " + fmt_double(c.imag()) + "*i";
  return "(" + fmt_double(c.real()) + im + ")";
}

}  // namespace fdyn

namespace fdyn {

Rational rationalize(double x, long long maxden) {
  if (!std::isfinite(x)) throw std::domain_error("rationalize: non-finite value");
  bool neg = x < 0;
  double v = std::fabs(x);
  if (v > 9e15) throw std::domain_error("rationalize: value too large");
  // convergents p/q
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = v;
  for (int it = 0; it < 64; ++it) {
    double a = std::floor(r);
    if (a > 9e15) break;
    long long ai = static_cast<long long>(a);
    __int128 p2 = static_cast<__int128>(ai) * p1 + p0;
    __int128 q2 = static_cast<__int128>(ai) * q1 + q0;
    if (q2 > maxden || p2 > static_cast<__int128>(9e15)) break;
    p0 = p1; q0 = q1;
    p1 = static_cast<long long>(p2); q1 = static_cast<long long>(q2);
    double frac = r - a;
    if (frac < 1e-15 || std::fabs(static_cast<double>(p1) / q1 - v) < 1e-15 * std::max(1.0, v)) break;
    r = 1.0 / frac;
  }
  if (q1 == 0) return Rational(0);
  Rational res(p1, q1);
  return neg ? -res : res;
}

GaussQ rationalize(const Cplx& z, long long maxden) {
  return GaussQ(rationalize(z.real(), maxden), rationalize(z.imag(), maxden));
}

GaussQ gpow(const GaussQ& c, int e) {
  GaussQ r(1), b = c;
  if (e < 0) return gpow(c.inverse(), -e);
  while (e) {
    if (e & 1) r = r * b;
    b = b * b;
    e >>= 1;
  }
  return r;
}

std::optional<GaussQ> exact_root(const GaussQ& c, int m) {
  if (m <= 0) throw std::invalid_argument("exact_root: m must be positive");
  if (m == 1 || c.is_zero()) return c;
  Cplx z = c.to_complex();
  double mag = std::pow(std::abs(z), 1.0 / m);
  double arg = std::arg(z) / m;
  for (int k = 0; k < m; ++k) {
    double th = arg + 2 * M_PI * k / m;
    GaussQ cand = rationalize(Cplx(mag * std::cos(th), mag * std::sin(th)), 100000);
    if (gpow(cand, m) == c) return cand;
  }
  return std::nullopt;
}

}  // namespace fdyn

#pragma once
// Coefficient backends: exact Gaussian rationals and double-precision complex.

#include <complex>
#include <optional>
#include <string>

#include "fdyn/rational.hpp"

namespace fdyn {

using Cplx = std::complex<double>;

struct GaussQ {
  Rational re, im;

  GaussQ() = default;
  GaussQ(long long r) : re(r) {}  // NOLINT(implicit)
  GaussQ(Rational r) : re(std::move(r)) {}  // NOLINT(implicit)
  GaussQ(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

  static GaussQ I() { return GaussQ(Rational(0), Rational(1)); }

  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  bool is_real() const { return im.is_zero(); }
  GaussQ conj() const { return GaussQ(re, -im); }
  Rational norm2() const { return re * re + im * im; }
  GaussQ inverse() const;
  Cplx to_complex() const { return Cplx(re.to_double(), im.to_double()); }
  std::string to_string() const;  // "a/b", "(a/b)*i" style used in reports

  GaussQ operator-() const { return GaussQ(-re, -im); }
  friend GaussQ operator+(const GaussQ& a, const GaussQ& b) { return GaussQ(a.re + b.re, a.im + b.im); }
  friend GaussQ operator-(const GaussQ& a, const GaussQ& b) { return GaussQ(a.re - b.re, a.im - b.im); }
  friend GaussQ operator*(const GaussQ& a, const GaussQ& b) {
    if (a.im.is_zero() && b.im.is_zero()) return GaussQ(a.re * b.re);
    if (a.im.is_zero()) return GaussQ(a.re * b.re, a.re * b.im);
    if (b.im.is_zero()) return GaussQ(a.re * b.re, a.im * b.re);
    return GaussQ(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
  }
  friend GaussQ operator/(const GaussQ& a, const GaussQ& b) { return a * b.inverse(); }
  GaussQ& operator+=(const GaussQ& b) { re += b.re; if (!b.im.is_zero()) im += b.im; return *this; }
  GaussQ& operator-=(const GaussQ& b) { re -= b.re; if (!b.im.is_zero()) im -= b.im; return *this; }
  GaussQ& operator*=(const GaussQ& b) { return *this = *this * b; }
  friend bool operator==(const GaussQ& a, const GaussQ& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const GaussQ& a, const GaussQ& b) { return !(a == b); }
};

// Relative threshold below which float coefficients are dropped.
double float_epsilon();
void set_float_epsilon(double eps);

template <class K>
struct CoeffTraits;

template <>
struct CoeffTraits<GaussQ> {
  static constexpr bool exact = true;
  static constexpr const char* name = "exact";
  static GaussQ from_int(long long v) { return GaussQ(v); }
  static GaussQ from_rational(const Rational& r) { return GaussQ(r); }
  static bool is_zero(const GaussQ& c) { return c.is_zero(); }
  static Cplx to_complex(const GaussQ& c) { return c.to_complex(); }
  static double magnitude(const GaussQ& c) { return std::abs(c.to_complex()); }
};

template <>
struct CoeffTraits<Cplx> {
  static constexpr bool exact = false;
  static constexpr const char* name = "float";
  static Cplx from_int(long long v) { return Cplx(static_cast<double>(v), 0.0); }
  static Cplx from_rational(const Rational& r) { return Cplx(r.to_double(), 0.0); }
  static bool is_zero(const Cplx& c) { return c == Cplx(0.0, 0.0); }
  static Cplx to_complex(const Cplx& c) { return c; }
  static double magnitude(const Cplx& c) { return std::abs(c); }
};

inline Cplx inverse_of(const Cplx& c) { return 1.0 / c; }
inline GaussQ inverse_of(const GaussQ& c) { return c.inverse(); }

// Best rational approximation with denominator <= maxden (continued fractions).
Rational rationalize(double x, long long maxden = 1000000);
GaussQ rationalize(const Cplx& z, long long maxden = 1000000);
GaussQ gpow(const GaussQ& c, int e);
// An exact m-th root of c in Q(i) when one exists; the principal one is
// preferred.
std::optional<GaussQ> exact_root(const GaussQ& c, int m);

}  // namespace fdyn

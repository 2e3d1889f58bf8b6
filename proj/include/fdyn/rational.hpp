#pragma once
// Exact rational numbers. Values whose numerator and denominator fit in
// int64 are stored inline; anything larger spills to a shared GMP rational.
// The representation is canonical, so equality is componentwise.

#include <cstdint>
#include <memory>
#include <string>

#include <gmpxx.h>

namespace fdyn {

class Rational {
 public:
  Rational() = default;
  Rational(long long n) : num_(n) {}  // NOLINT(implicit)
  Rational(long long n, long long d);
  explicit Rational(const mpq_class& q);

  // Accepts "a", "-a/b" and decimals such as "1.25" or "-3e-2".
  static Rational parse(const std::string& s);

  bool is_zero() const { return !big_ && num_ == 0; }
  bool is_one() const { return !big_ && num_ == 1 && den_ == 1; }
  bool is_integer() const;
  int sign() const;
  mpq_class to_mpq() const;
  double to_double() const;
  std::string to_string() const;  // "a" or "a/b"
  // Small-path accessors; only valid when !is_big().
  bool is_big() const { return static_cast<bool>(big_); }
  long long small_num() const { return num_; }
  long long small_den() const { return den_; }

  Rational operator-() const;
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }
  friend bool operator==(const Rational& a, const Rational& b);
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b);
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  Rational inverse() const;
  Rational abs() const { return sign() < 0 ? -*this : *this; }
  Rational pow(int e) const;
  std::size_t hash() const;

 private:
  static Rational from_i128(__int128 n, __int128 d);  // d > 0, reduced
  long long num_ = 0;
  long long den_ = 1;
  std::shared_ptr<const mpq_class> big_;
};

}  // namespace fdyn

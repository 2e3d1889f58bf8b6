#include "fdyn/rational.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fdyn {

namespace {

constexpr __int128 kMax = std::numeric_limits<long long>::max();
constexpr __int128 kMin = -kMax;  // keep negation safe

bool fits(__int128 v) { return v <= kMax && v >= kMin; }

mpz_class to_mpz(__int128 v) {
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  mpz_class hi(static_cast<unsigned long>(static_cast<std::uint64_t>(u >> 64)));
  mpz_class lo(static_cast<unsigned long>(static_cast<std::uint64_t>(u)));
  mpz_class r = (hi << 64) + lo;
  return neg ? mpz_class(-r) : r;
}

unsigned __int128 gcd128(unsigned __int128 a, unsigned __int128 b) {
  while (b != 0) {
    unsigned __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

unsigned __int128 uabs(__int128 v) {
  return v < 0 ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
}

}  // namespace

Rational::Rational(long long n, long long d) {
  if (d == 0) throw std::domain_error("rational: zero denominator");
  *this = from_i128(0, 1);
  __int128 N = n, D = d;
  if (D < 0) { N = -N; D = -D; }
  unsigned __int128 g = gcd128(uabs(N), static_cast<unsigned __int128>(D));
  if (g > 1) { N /= static_cast<__int128>(g); D /= static_cast<__int128>(g); }
  *this = from_i128(N, D);
}

Rational::Rational(const mpq_class& q) {
  mpq_class c(q);
  c.canonicalize();
  if (c.get_num().fits_slong_p() && c.get_den().fits_slong_p() &&
      c.get_num() != mpz_class(std::numeric_limits<long>::min())) {
    num_ = c.get_num().get_si();
    den_ = c.get_den().get_si();
  } else {
    big_ = std::make_shared<const mpq_class>(c);
    num_ = 0;
    den_ = 1;
  }
}

Rational Rational::from_i128(__int128 n, __int128 d) {
  Rational r;
  if (fits(n) && fits(d)) {
    r.num_ = static_cast<long long>(n);
    r.den_ = static_cast<long long>(d);
    return r;
  }
  mpq_class q(to_mpz(n), to_mpz(d));
  q.canonicalize();
  return Rational(q);
}

Rational Rational::parse(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("rational: empty literal");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    mpq_class q(mpz_class(s.substr(0, slash), 10), mpz_class(s.substr(slash + 1), 10));
    if (q.get_den() == 0) throw std::invalid_argument("rational: zero denominator");
    q.canonicalize();
    return Rational(q);
  }
  // decimal with optional exponent
  std::string mant = s;
  long exp10 = 0;
  auto e = s.find_first_of("eE");
  if (e != std::string::npos) {
    mant = s.substr(0, e);
    exp10 = std::stol(s.substr(e + 1));
  }
  auto dot = mant.find('.');
  std::string digits = mant;
  if (dot != std::string::npos) {
    exp10 -= static_cast<long>(mant.size() - dot - 1);
    digits = mant.substr(0, dot) + mant.substr(dot + 1);
  }
  if (digits.empty() || digits == "-" || digits == "+") throw std::invalid_argument("rational: bad literal " + s);
  if (digits[0] == '+') digits = digits.substr(1);
  mpz_class n(digits, 10);
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
  mpq_class q = exp10 >= 0 ? mpq_class(n * p) : mpq_class(n, p);
  q.canonicalize();
  return Rational(q);
}

bool Rational::is_integer() const { return big_ ? big_->get_den() == 1 : den_ == 1; }

int Rational::sign() const {
  if (big_) return sgn(*big_);
  return (num_ > 0) - (num_ < 0);
}

mpq_class Rational::to_mpq() const {
  if (big_) return *big_;
  return mpq_class(mpz_class(static_cast<long>(num_)), mpz_class(static_cast<long>(den_)));
}

double Rational::to_double() const {
  if (big_) return big_->get_d();
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::to_string() const {
  if (big_) return big_->get_str();
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const {
  if (big_) return Rational(mpq_class(-*big_));
  Rational r;
  r.num_ = -num_;
  r.den_ = den_;
  return r;
}

Rational operator+(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    if (b.num_ == 0) return a;
    if (a.num_ == 0) return b;
    if (a.den_ == 1 && b.den_ == 1) return Rational::from_i128(static_cast<__int128>(a.num_) + b.num_, 1);
    long long g = std::gcd(a.den_, b.den_);
    __int128 da = a.den_ / g, db = b.den_ / g;
    __int128 n = static_cast<__int128>(a.num_) * db + static_cast<__int128>(b.num_) * da;
    if (n == 0) return Rational();
    __int128 t = static_cast<__int128>(gcd128(uabs(n % g), static_cast<unsigned __int128>(g)));
    if (t == 0) t = g;
    __int128 d = da * b.den_;
    return Rational::from_i128(n / t, d / t);
  }
  return Rational(mpq_class(a.to_mpq() + b.to_mpq()));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    if (a.num_ == 0 || b.num_ == 0) return Rational();
    if (a.den_ == 1 && b.den_ == 1) return Rational::from_i128(static_cast<__int128>(a.num_) * b.num_, 1);
    long long g1 = std::gcd(a.num_ < 0 ? -a.num_ : a.num_, b.den_);
    long long g2 = std::gcd(b.num_ < 0 ? -b.num_ : b.num_, a.den_);
    __int128 n = static_cast<__int128>(a.num_ / g1) * (b.num_ / g2);
    __int128 d = static_cast<__int128>(a.den_ / g2) * (b.den_ / g1);
    return Rational::from_i128(n, d);
  }
  return Rational(mpq_class(a.to_mpq() * b.to_mpq()));
}

Rational Rational::inverse() const {
  if (is_zero()) throw std::domain_error("rational: division by zero");
  if (big_) return Rational(mpq_class(1 / *big_));
  Rational r;
  if (num_ < 0) { r.num_ = -den_; r.den_ = -num_; }
  else { r.num_ = den_; r.den_ = num_; }
  return r;
}

Rational operator/(const Rational& a, const Rational& b) { return a * b.inverse(); }

bool operator==(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) return a.num_ == b.num_ && a.den_ == b.den_;
  if (a.big_ && b.big_) return *a.big_ == *b.big_;
  return false;  // canonical: big values never fit the small path
}

bool operator<(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_)
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  return a.to_mpq() < b.to_mpq();
}

Rational Rational::pow(int e) const {
  if (e < 0) return inverse().pow(-e);
  Rational r(1), b = *this;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

std::size_t Rational::hash() const {
  if (big_) return std::hash<std::string>()(big_->get_str());
  return std::hash<long long>()(num_) * 31u + std::hash<long long>()(den_);
}

}  // namespace fdyn

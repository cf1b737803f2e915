#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace labvar {

/// Thrown when exact integer arithmetic would overflow 64 bits.
struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact rational number with 64-bit numerator and denominator.
///
/// Always stored normalized: denominator > 0, gcd(|num|, den) == 1.
/// All arithmetic is checked; an operation whose exact result does not fit
/// in 64/64 bits throws OverflowError rather than silently wrapping.
class Rational {
 public:
  constexpr Rational() : num_(0), den_(1) {}
  Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == 1 && den_ == 1; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  friend Rational operator-(const Rational& a) {
    return Rational(checked(-static_cast<Wide>(a.num_)), a.den_);
  }
  friend Rational operator+(const Rational& a, const Rational& b) {
    Wide n = static_cast<Wide>(a.num_) * b.den_ + static_cast<Wide>(b.num_) * a.den_;
    Wide d = static_cast<Wide>(a.den_) * b.den_;
    return from_wide(n, d);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    Wide n = static_cast<Wide>(a.num_) * b.num_;
    Wide d = static_cast<Wide>(a.den_) * b.den_;
    return from_wide(n, d);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    Wide n = static_cast<Wide>(a.num_) * b.den_;
    Wide d = static_cast<Wide>(a.den_) * b.num_;
    return from_wide(n, d);
  }

  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<Wide>(a.num_) * b.den_ < static_cast<Wide>(b.num_) * a.den_;
  }

  /// a^k for integer k; requires a != 0 when k < 0.
  static Rational int_pow(const Rational& a, std::int64_t k) {
    if (k < 0) {
      if (a.is_zero()) throw std::domain_error("0 raised to a negative power");
      return int_pow(Rational(a.den_, a.num_), -k);
    }
    Rational r(1);
    Rational base = a;
    while (k > 0) {
      if (k & 1) r *= base;
      base = (k >>= 1) ? base * base : base;
    }
    return r;
  }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  using Wide = __int128;

  static std::int64_t checked(Wide v) {
    if (v > INT64_MAX || v < INT64_MIN) throw OverflowError("rational overflow");
    return static_cast<std::int64_t>(v);
  }

  static Rational from_wide(Wide n, Wide d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    Wide g = wide_gcd(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    Rational r;
    r.num_ = checked(n);
    r.den_ = checked(d);
    return r;
  }

  static Wide wide_gcd(Wide a, Wide b) {
    while (b != 0) { Wide t = a % b; a = b; b = t; }
    return a == 0 ? 1 : a;
  }

  void normalize() {
    Rational r = from_wide(num_, den_);
    num_ = r.num_;
    den_ = r.den_;
  }

  std::int64_t num_;
  std::int64_t den_;
};

}  // namespace labvar

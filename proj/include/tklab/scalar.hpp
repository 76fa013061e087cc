#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <variant>

namespace tklab {

// Exact rational number, always kept canonical (lowest terms, positive
// denominator). mpq_class arithmetic preserves canonical form; the parse
// helpers below canonicalize raw input.
using Rational = mpq_class;

Rational rat(long num, long den = 1);

// Accepts "p", "-p", "p/q". Throws std::invalid_argument on malformed text
// or zero denominator.
Rational rat_parse(const std::string& text);

// "p" when the denominator is 1, otherwise "p/q".
std::string rat_str(const Rational& q);

enum class Num { rational, real };

struct ModeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A number carrying its arithmetic mode. Mixing modes in one operation is a
// usage error and throws; nothing is coerced silently. Conversions to double
// are available only through the explicit to_double().
class Scalar {
 public:
  Scalar() : v_(Rational(0)) {}
  // mpq_class(p, q) does not reduce; canonicalize here so every Scalar is in
  // lowest terms and GMP comparisons stay reliable.
  Scalar(Rational q) : v_(std::move(q)) {
    std::get<Rational>(v_).canonicalize();
  }
  Scalar(long n) : v_(Rational(n)) {}

  static Scalar real(double x) {
    Scalar s;
    s.v_ = x;
    return s;
  }
  static Scalar zero(Num mode) {
    return mode == Num::rational ? Scalar(Rational(0)) : real(0.0);
  }
  static Scalar one(Num mode) {
    return mode == Num::rational ? Scalar(Rational(1)) : real(1.0);
  }

  Num mode() const {
    return std::holds_alternative<Rational>(v_) ? Num::rational : Num::real;
  }
  bool is_rational() const { return mode() == Num::rational; }

  const Rational& rational() const {
    if (!is_rational()) throw ModeError("scalar is not rational");
    return std::get<Rational>(v_);
  }
  double real_value() const {
    if (is_rational()) throw ModeError("scalar is not a float");
    return std::get<double>(v_);
  }
  double to_double() const {
    return is_rational() ? std::get<Rational>(v_).get_d()
                         : std::get<double>(v_);
  }

  bool is_zero() const {
    return is_rational() ? sgn(std::get<Rational>(v_)) == 0
                         : std::get<double>(v_) == 0.0;
  }
  int sign() const {
    if (is_rational()) return sgn(std::get<Rational>(v_));
    double x = std::get<double>(v_);
    return x > 0 ? 1 : (x < 0 ? -1 : 0);
  }
  Scalar abs() const { return sign() < 0 ? -*this : *this; }

  Scalar operator-() const {
    return is_rational() ? Scalar(Rational(-std::get<Rational>(v_)))
                         : real(-std::get<double>(v_));
  }

  friend Scalar operator+(const Scalar& a, const Scalar& b) {
    check_same(a, b);
    if (a.is_rational()) return Scalar(a.rational() + b.rational());
    return real(a.real_value() + b.real_value());
  }
  friend Scalar operator-(const Scalar& a, const Scalar& b) {
    check_same(a, b);
    if (a.is_rational()) return Scalar(a.rational() - b.rational());
    return real(a.real_value() - b.real_value());
  }
  friend Scalar operator*(const Scalar& a, const Scalar& b) {
    check_same(a, b);
    if (a.is_rational()) return Scalar(a.rational() * b.rational());
    return real(a.real_value() * b.real_value());
  }
  friend Scalar operator/(const Scalar& a, const Scalar& b) {
    check_same(a, b);
    if (b.is_zero()) throw std::domain_error("scalar division by zero");
    if (a.is_rational()) return Scalar(a.rational() / b.rational());
    return real(a.real_value() / b.real_value());
  }
  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }

  friend bool operator==(const Scalar& a, const Scalar& b) {
    check_same(a, b);
    if (a.is_rational()) return a.rational() == b.rational();
    return a.real_value() == b.real_value();
  }
  friend bool operator!=(const Scalar& a, const Scalar& b) {
    return !(a == b);
  }
  friend bool operator<(const Scalar& a, const Scalar& b) {
    check_same(a, b);
    if (a.is_rational()) return a.rational() < b.rational();
    return a.real_value() < b.real_value();
  }
  friend bool operator<=(const Scalar& a, const Scalar& b) {
    return a < b || a == b;
  }
  friend bool operator>(const Scalar& a, const Scalar& b) { return b < a; }
  friend bool operator>=(const Scalar& a, const Scalar& b) { return b <= a; }

  // "p/q" for rationals, shortest round-trip decimal for floats.
  std::string str() const;

 private:
  static void check_same(const Scalar& a, const Scalar& b) {
    if (a.mode() != b.mode())
      throw ModeError("mixed rational/float arithmetic");
  }
  std::variant<Rational, double> v_;
};

}  // namespace tklab

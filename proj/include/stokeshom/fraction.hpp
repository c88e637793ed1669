#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace shom {

// Thrown when a rational result no longer fits in 64-bit numerator/denominator.
// Geometry routines catch it and fall back to tolerance-based doubles.
struct FractionOverflow : std::runtime_error {
  FractionOverflow() : std::runtime_error("rational overflow") {}
};

// Exact rational scalar on int64 with eager gcd normalization. Denominator is
// kept positive. Intermediate products run through __int128 and overflow is
// reported, never wrapped.
class Fraction {
 public:
  Fraction() : num_(0), den_(1) {}
  Fraction(std::int64_t n) : num_(n), den_(1) {}
  Fraction(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  // Exact conversion of a finite double (doubles are dyadic rationals).
  // Throws FractionOverflow when the dyadic denominator exceeds int64.
  static Fraction from_double(double x) {
    if (!std::isfinite(x)) throw FractionOverflow();
    if (x == 0.0) return Fraction(0);
    int e = 0;
    double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
    auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    e -= 53;
    while (mant != 0 && (mant % 2) == 0) {
      mant /= 2;
      ++e;
    }
    if (e >= 0) {
      if (e > 61) throw FractionOverflow();
      return Fraction(check(static_cast<__int128>(mant) << e), 1);
    }
    if (-e > 61) throw FractionOverflow();
    return Fraction(mant, std::int64_t(1) << (-e));
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Fraction operator+(const Fraction& a, const Fraction& b) {
    __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
    __int128 d = static_cast<__int128>(a.den_) * b.den_;
    return make(n, d);
  }
  friend Fraction operator-(const Fraction& a, const Fraction& b) {
    __int128 n = static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_;
    __int128 d = static_cast<__int128>(a.den_) * b.den_;
    return make(n, d);
  }
  friend Fraction operator*(const Fraction& a, const Fraction& b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Fraction operator/(const Fraction& a, const Fraction& b) {
    if (b.num_ == 0) throw std::domain_error("Fraction division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Fraction operator-() const { return Fraction(-num_, den_); }
  Fraction& operator+=(const Fraction& o) { return *this = *this + o; }
  Fraction& operator-=(const Fraction& o) { return *this = *this - o; }
  Fraction& operator*=(const Fraction& o) { return *this = *this * o; }
  Fraction& operator/=(const Fraction& o) { return *this = *this / o; }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Fraction& a, const Fraction& b) { return !(a == b); }
  friend bool operator<(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }
  friend bool operator>(const Fraction& a, const Fraction& b) { return b < a; }
  friend bool operator<=(const Fraction& a, const Fraction& b) { return !(b < a); }
  friend bool operator>=(const Fraction& a, const Fraction& b) { return !(a < b); }

  friend Fraction abs(const Fraction& a) { return a.num_ < 0 ? -a : a; }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_)
                     : std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  static std::int64_t check(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw FractionOverflow();
    return static_cast<std::int64_t>(v);
  }
  static Fraction make(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("Fraction with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 an = n < 0 ? -n : n;
    __int128 g = gcd128(an, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    Fraction f;
    f.num_ = check(n);
    f.den_ = check(d);
    return f;
  }
  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }
  void normalize() { *this = make(num_, den_); }

  std::int64_t num_, den_;
};

template <class S>
using Vec2 = Eigen::Matrix<S, 2, 1>;
using Vec2d = Eigen::Vector2d;

}  // namespace shom

namespace Eigen {
template <>
struct NumTraits<shom::Fraction> {
  using Real = shom::Fraction;
  using NonInteger = shom::Fraction;
  using Literal = shom::Fraction;
  using Nested = shom::Fraction;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 10,
    MulCost = 10
  };
  static inline Real epsilon() { return shom::Fraction(0); }
  static inline Real dummy_precision() { return shom::Fraction(0); }
  static inline int digits10() { return 18; }
};
}  // namespace Eigen

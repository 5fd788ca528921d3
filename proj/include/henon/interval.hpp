#pragma once

// Closed real intervals with outward-rounded endpoint arithmetic.
//
// Two endpoint types are supported:
//  - double: endpoints are 53-bit dyadics. Every operation is rounded to
//    nearest and then corrected one ulp outward only when an error-free
//    transformation shows the rounded value is on the wrong side, so exact
//    results stay exact and results are identical on any IEEE-754 platform.
//  - Dyadic: ring operations are exact unless a precision cap is active;
//    division and sqrt round to the cap (or kDefaultDyadicBits).

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "henon/dyadic.hpp"
#include "henon/errors.hpp"

namespace henon {

inline constexpr long kDefaultDyadicBits = 160;

namespace detail {
inline thread_local long dyadic_cap_bits = 0;  // 0: exact ring operations
}

// Scoped precision cap for Interval<Dyadic> arithmetic on this thread.
class DyadicPrecisionScope {
 public:
  explicit DyadicPrecisionScope(long bits) : saved_(detail::dyadic_cap_bits) {
    detail::dyadic_cap_bits = bits;
  }
  ~DyadicPrecisionScope() { detail::dyadic_cap_bits = saved_; }
  DyadicPrecisionScope(const DyadicPrecisionScope&) = delete;
  DyadicPrecisionScope& operator=(const DyadicPrecisionScope&) = delete;

 private:
  long saved_;
};

template <class T>
struct Rounding;

template <>
struct Rounding<double> {
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kMax = std::numeric_limits<double>::max();
  static constexpr double kTiny = 0x1p-960;

  static double zero() { return 0.0; }
  static double from_int(long v) { return static_cast<double>(v); }
  static double prev(double x) { return std::nextafter(x, -kInf); }
  static double next(double x) { return std::nextafter(x, kInf); }

  static double add(double a, double b, bool up) {
    double s = a + b;
    if (!std::isfinite(s)) {
      if (std::isfinite(a) && std::isfinite(b)) return (s > 0) == up ? s : (s > 0 ? kMax : -kMax);
      return s;
    }
    double bp = s - a;
    double ap = s - bp;
    double err = (a - ap) + (b - bp);
    if (up) return err > 0 ? next(s) : s;
    return err < 0 ? prev(s) : s;
  }
  static double mul(double a, double b, bool up) {
    if (a == 0.0 || b == 0.0) return 0.0;
    double p = a * b;
    if (!std::isfinite(p)) {
      if (std::isfinite(a) && std::isfinite(b)) return (p > 0) == up ? p : (p > 0 ? kMax : -kMax);
      return p;
    }
    if (std::fabs(p) < kTiny) return up ? next(p) : prev(p);
    double err = std::fma(a, b, -p);
    if (up) return err > 0 ? next(p) : p;
    return err < 0 ? prev(p) : p;
  }
  static double div(double a, double b, bool up) {
    if (a == 0.0) return 0.0;
    double q = a / b;
    if (!std::isfinite(q)) {
      if (std::isfinite(a)) return (q > 0) == up ? q : (q > 0 ? kMax : -kMax);
      return q;
    }
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny) return up ? next(q) : prev(q);
    double r = std::fma(-q, b, a);  // a - q*b, exact
    // true quotient = q + r/b
    double sgn = (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) * (b > 0 ? 1.0 : -1.0);
    if (up) return sgn > 0 ? next(q) : q;
    return sgn < 0 ? prev(q) : q;
  }
  static double sqrt(double a, bool up) {
    if (a <= 0.0) return 0.0;
    if (std::isinf(a)) return a;
    double s = std::sqrt(a);
    if (a < kTiny) return up ? next(s) : prev(s);
    double r = std::fma(-s, s, a);
    if (up) return r > 0 ? next(s) : s;
    return r < 0 ? prev(s) : s;
  }
  static double midpoint(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      if (std::isfinite(lo)) return lo;
      if (std::isfinite(hi)) return hi;
      return 0.0;
    }
    double m = 0.5 * lo + 0.5 * hi;
    return std::clamp(m, lo, hi);
  }
  static Dyadic to_dyadic(double x) { return Dyadic::from_double(x); }
  static double from_dyadic(const Dyadic& d, bool up) { return up ? d.to_double_up() : d.to_double_down(); }
  static double to_double(double x) { return x; }
};

template <>
struct Rounding<Dyadic> {
  static Dyadic zero() { return {}; }
  static Dyadic from_int(long v) { return Dyadic(v); }
  static long div_bits() {
    return detail::dyadic_cap_bits > 0 ? detail::dyadic_cap_bits : kDefaultDyadicBits;
  }
  static Dyadic cap(Dyadic x, bool up) {
    if (detail::dyadic_cap_bits <= 0) return x;
    return up ? x.round_up(detail::dyadic_cap_bits) : x.round_down(detail::dyadic_cap_bits);
  }
  static Dyadic add(const Dyadic& a, const Dyadic& b, bool up) { return cap(a + b, up); }
  static Dyadic mul(const Dyadic& a, const Dyadic& b, bool up) { return cap(a * b, up); }
  static Dyadic div(const Dyadic& a, const Dyadic& b, bool up) {
    return up ? Dyadic::div_up(a, b, div_bits()) : Dyadic::div_down(a, b, div_bits());
  }
  static Dyadic sqrt(const Dyadic& a, bool up) {
    if (a.sign() <= 0) return {};
    return up ? Dyadic::sqrt_up(a, div_bits()) : Dyadic::sqrt_down(a, div_bits());
  }
  static Dyadic midpoint(const Dyadic& lo, const Dyadic& hi) { return (lo + hi).scaled(-1); }
  static Dyadic to_dyadic(const Dyadic& x) { return x; }
  static Dyadic from_dyadic(const Dyadic& d, bool /*up*/) { return d; }
  static double to_double(const Dyadic& x) { return x.to_double_nearest(); }
};

template <class T>
class Interval {
  using R = Rounding<T>;

 public:
  using scalar_type = T;

  Interval() : lo_(R::zero()), hi_(R::zero()) {}
  Interval(const T& v) : lo_(v), hi_(v) {}  // NOLINT(implicit): exact point
  Interval(const T& lo, const T& hi) : lo_(lo), hi_(hi) {
    if (hi_ < lo_) throw InvalidInput("interval with lo > hi");
  }
  static Interval from_int(long v) { return Interval(R::from_int(v)); }
  static Interval entire() {
    if constexpr (std::is_same_v<T, double>) return Interval(-R::kInf, R::kInf);
    else throw InvalidInput("dyadic intervals cannot be unbounded");
  }
  // Outward enclosure of a dyadic interval.
  static Interval from_dyadic(const Dyadic& lo, const Dyadic& hi) {
    return Interval(R::from_dyadic(lo, false), R::from_dyadic(hi, true));
  }
  static Interval from_dyadic(const Dyadic& v) { return from_dyadic(v, v); }

  [[nodiscard]] const T& lo() const { return lo_; }
  [[nodiscard]] const T& hi() const { return hi_; }
  [[nodiscard]] bool is_point() const { return lo_ == hi_; }
  [[nodiscard]] T mid() const { return R::midpoint(lo_, hi_); }
  [[nodiscard]] T width() const { return R::add(hi_, -lo_, true); }
  // Half-width rounded up: mid() +- rad() covers the interval.
  [[nodiscard]] T rad() const {
    T m = mid();
    T a = R::add(hi_, -m, true);
    T b = R::add(m, -lo_, true);
    return std::max(a, b);
  }
  [[nodiscard]] T mag() const {
    T a = lo_ < R::zero() ? -lo_ : lo_;
    T b = hi_ < R::zero() ? -hi_ : hi_;
    return std::max(a, b);
  }
  [[nodiscard]] T mig() const {
    if (lo_ <= R::zero() && R::zero() <= hi_) return R::zero();
    return lo_ > R::zero() ? lo_ : -hi_;
  }
  [[nodiscard]] bool contains(const T& x) const { return lo_ <= x && x <= hi_; }
  [[nodiscard]] bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }
  [[nodiscard]] bool contains_zero() const { return lo_ <= R::zero() && R::zero() <= hi_; }
  [[nodiscard]] bool interior_contains(const Interval& o) const { return lo_ < o.lo_ && o.hi_ < hi_; }
  [[nodiscard]] bool intersects(const Interval& o) const { return !(o.hi_ < lo_ || hi_ < o.lo_); }
  [[nodiscard]] bool certainly_lt(const Interval& o) const { return hi_ < o.lo_; }
  [[nodiscard]] bool certainly_gt(const Interval& o) const { return lo_ > o.hi_; }
  [[nodiscard]] bool certainly_positive() const { return lo_ > R::zero(); }
  [[nodiscard]] bool certainly_negative() const { return hi_ < R::zero(); }

  friend Interval hull(const Interval& a, const Interval& b) {
    return Interval(std::min(a.lo_, b.lo_), std::max(a.hi_, b.hi_));
  }
  // Caller guarantees a.intersects(b).
  friend Interval intersect(const Interval& a, const Interval& b) {
    return Interval(std::max(a.lo_, b.lo_), std::min(a.hi_, b.hi_));
  }
  friend Interval inflate(const Interval& a, const T& r) {
    return Interval(R::add(a.lo_, -r, false), R::add(a.hi_, r, true));
  }

  friend Interval operator-(const Interval& a) { return Interval(-a.hi_, -a.lo_); }
  friend Interval operator+(const Interval& a, const Interval& b) {
    return Interval(R::add(a.lo_, b.lo_, false), R::add(a.hi_, b.hi_, true));
  }
  friend Interval operator-(const Interval& a, const Interval& b) {
    return Interval(R::add(a.lo_, -b.hi_, false), R::add(a.hi_, -b.lo_, true));
  }
  friend Interval operator*(const Interval& a, const Interval& b) {
    if (a.is_point() && b.is_point()) {
      return Interval(R::mul(a.lo_, b.lo_, false), R::mul(a.lo_, b.lo_, true));
    }
    const T* as[2] = {&a.lo_, &a.hi_};
    const T* bs[2] = {&b.lo_, &b.hi_};
    T lo = R::mul(*as[0], *bs[0], false);
    T hi = R::mul(*as[0], *bs[0], true);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (i == 0 && j == 0) continue;
        lo = std::min(lo, R::mul(*as[i], *bs[j], false));
        hi = std::max(hi, R::mul(*as[i], *bs[j], true));
      }
    }
    return Interval(lo, hi);
  }
  friend Interval operator/(const Interval& a, const Interval& b) {
    if (b.contains_zero()) throw DivisionByIntervalContainingZero("interval divisor contains zero");
    const T* as[2] = {&a.lo_, &a.hi_};
    const T* bs[2] = {&b.lo_, &b.hi_};
    T lo = R::div(*as[0], *bs[0], false);
    T hi = R::div(*as[0], *bs[0], true);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (i == 0 && j == 0) continue;
        lo = std::min(lo, R::div(*as[i], *bs[j], false));
        hi = std::max(hi, R::div(*as[i], *bs[j], true));
      }
    }
    return Interval(lo, hi);
  }
  Interval& operator+=(const Interval& o) { return *this = *this + o; }
  Interval& operator-=(const Interval& o) { return *this = *this - o; }
  Interval& operator*=(const Interval& o) { return *this = *this * o; }

  // Exact scaling by 2^k for dyadics; for doubles ldexp is exact away from
  // the subnormal range, which the ring operations guard anyway.
  [[nodiscard]] Interval scaled_pow2(int k) const {
    if constexpr (std::is_same_v<T, double>) {
      return Interval(R::mul(lo_, std::ldexp(1.0, k), false), R::mul(hi_, std::ldexp(1.0, k), true));
    } else {
      return Interval(lo_.scaled(k), hi_.scaled(k));
    }
  }

  friend Interval sqr(const Interval& a) {
    if (a.lo_ >= R::zero()) return Interval(R::mul(a.lo_, a.lo_, false), R::mul(a.hi_, a.hi_, true));
    if (a.hi_ <= R::zero()) return Interval(R::mul(a.hi_, a.hi_, false), R::mul(a.lo_, a.lo_, true));
    T m = std::max(-a.lo_, a.hi_);
    return Interval(R::zero(), R::mul(m, m, true));
  }
  // Square root of the nonnegative part; intervals entirely below zero are rejected.
  friend Interval sqrt(const Interval& a) {
    if (a.hi_ < R::zero()) throw InvalidInput("sqrt of a negative interval");
    T lo = a.lo_ > R::zero() ? R::sqrt(a.lo_, false) : R::zero();
    return Interval(lo, R::sqrt(a.hi_, true));
  }
  friend Interval abs(const Interval& a) { return Interval(a.mig(), a.mag()); }
  friend Interval max(const Interval& a, const Interval& b) {
    return Interval(std::max(a.lo_, b.lo_), std::max(a.hi_, b.hi_));
  }
  friend Interval min(const Interval& a, const Interval& b) {
    return Interval(std::min(a.lo_, b.lo_), std::min(a.hi_, b.hi_));
  }

  friend bool operator==(const Interval& a, const Interval& b) { return a.lo_ == b.lo_ && a.hi_ == b.hi_; }

  friend std::ostream& operator<<(std::ostream& os, const Interval& a) {
    if constexpr (std::is_same_v<T, double>) {
      os << '[' << a.lo_ << ", " << a.hi_ << ']';
    } else {
      os << '[' << a.lo_.to_double_down() << ", " << a.hi_.to_double_up() << ']';
    }
    return os;
  }

 private:
  T lo_;
  T hi_;
};

using RealInterval = Interval<Dyadic>;
using FastInterval = Interval<double>;

// Exact widening of a double interval to dyadic endpoints.
inline RealInterval to_dyadic(const FastInterval& a) {
  return RealInterval(Dyadic::from_double(a.lo()), Dyadic::from_double(a.hi()));
}
inline FastInterval to_fast(const RealInterval& a) { return FastInterval::from_dyadic(a.lo(), a.hi()); }

}  // namespace henon

#pragma once

// Exact dyadic rationals m * 2^e with arbitrary-precision mantissa.

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "henon/errors.hpp"

namespace henon {

class Dyadic {
 public:
  Dyadic() = default;
  Dyadic(long v) : mant_(v) { normalize(); }  // NOLINT(implicit)
  Dyadic(int v) : mant_(static_cast<long>(v)) { normalize(); }  // NOLINT(implicit)
  Dyadic(mpz_class m, long e) : mant_(std::move(m)), exp_(e) { normalize(); }

  // Every finite double is a dyadic; the conversion is exact.
  static Dyadic from_double(double x) {
    if (!std::isfinite(x)) throw InvalidInput("non-finite value has no dyadic form");
    if (x == 0.0) return {};
    int e = 0;
    double frac = std::frexp(x, &e);
    // frac * 2^53 is an integer for any double.
    auto m = static_cast<std::int64_t>(std::ldexp(frac, 53));
    return Dyadic(mpz_class(static_cast<long>(m)), static_cast<long>(e) - 53);
  }

  // Nearest dyadic with `frac_bits` bits after the binary point.
  static Dyadic from_decimal(const std::string& text, int frac_bits = 64) {
    mpq_class q;
    std::string s = text;
    bool neg = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
      neg = s[0] == '-';
      s = s.substr(1);
    }
    auto dot = s.find('.');
    std::string digits = s;
    long scale = 0;
    if (dot != std::string::npos) {
      digits = s.substr(0, dot) + s.substr(dot + 1);
      scale = static_cast<long>(s.size() - dot - 1);
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw InvalidInput("malformed decimal '" + text + "'");
    mpz_class num(digits, 10);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, static_cast<unsigned long>(scale));
    q = mpq_class(num, den);
    q.canonicalize();
    mpz_class scaled = q.get_num() << frac_bits;
    mpz_class m;
    // round half away from zero
    mpz_class two_den = 2 * q.get_den();
    m = (2 * scaled + q.get_den()) / two_den;
    if (neg) m = -m;
    return Dyadic(m, -frac_bits);
  }

  static Dyadic pow2(long e) { return Dyadic(mpz_class(1), e); }

  [[nodiscard]] const mpz_class& mantissa() const { return mant_; }
  [[nodiscard]] long exponent() const { return exp_; }
  [[nodiscard]] int sign() const { return sgn(mant_); }
  [[nodiscard]] bool is_zero() const { return mant_ == 0; }

  // Position of the most significant bit: 2^msb <= |x| < 2^(msb+1).
  [[nodiscard]] long msb() const {
    return static_cast<long>(mpz_sizeinbase(mant_.get_mpz_t(), 2)) - 1 + exp_;
  }

  [[nodiscard]] double to_double_nearest() const {
    if (is_zero()) return 0.0;
    // mpz_get_d truncates; use mpf-free path through long double scaling.
    long bits = static_cast<long>(mpz_sizeinbase(mant_.get_mpz_t(), 2));
    if (bits <= 53) return std::ldexp(mant_.get_d(), static_cast<int>(exp_));
    Dyadic r = round_nearest(53);
    return std::ldexp(r.mant_.get_d(), static_cast<int>(r.exp_));
  }
  [[nodiscard]] double to_double_down() const { return to_double_dir(false); }
  [[nodiscard]] double to_double_up() const { return to_double_dir(true); }

  // Round to `bits` significant bits, toward -inf / +inf / nearest.
  [[nodiscard]] Dyadic round_down(long bits) const { return round_sig(bits, -1); }
  [[nodiscard]] Dyadic round_up(long bits) const { return round_sig(bits, +1); }
  [[nodiscard]] Dyadic round_nearest(long bits) const { return round_sig(bits, 0); }

  // Largest multiple of 2^q that is <= *this.
  [[nodiscard]] Dyadic floor_to(long q) const {
    if (is_zero() || exp_ >= q) return *this;
    mpz_class m;
    mpz_fdiv_q_2exp(m.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(q - exp_));
    return Dyadic(m, q);
  }
  [[nodiscard]] Dyadic ceil_to(long q) const {
    if (is_zero() || exp_ >= q) return *this;
    mpz_class m;
    mpz_cdiv_q_2exp(m.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(q - exp_));
    return Dyadic(m, q);
  }
  // floor(x) as an exact integer
  [[nodiscard]] mpz_class floor_int() const {
    if (exp_ >= 0) return mant_ << exp_;
    mpz_class m;
    mpz_fdiv_q_2exp(m.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(-exp_));
    return m;
  }

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    long e = std::min(a.exp_, b.exp_);
    mpz_class m = (a.mant_ << (a.exp_ - e)) + (b.mant_ << (b.exp_ - e));
    return Dyadic(m, e);
  }
  friend Dyadic operator-(const Dyadic& a) {
    Dyadic r = a;
    r.mant_ = -r.mant_;
    return r;
  }
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    return Dyadic(a.mant_ * b.mant_, a.exp_ + b.exp_);
  }
  Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
  Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }
  Dyadic& operator*=(const Dyadic& o) { return *this = *this * o; }

  [[nodiscard]] Dyadic scaled(long k) const { return is_zero() ? *this : Dyadic(mant_, exp_ + k); }
  [[nodiscard]] Dyadic abs() const { return sign() < 0 ? -*this : *this; }

  // Quotient rounded toward -inf / +inf at `bits` significant bits.
  static Dyadic div_down(const Dyadic& a, const Dyadic& b, long bits) { return div_dir(a, b, bits, false); }
  static Dyadic div_up(const Dyadic& a, const Dyadic& b, long bits) { return div_dir(a, b, bits, true); }
  static Dyadic sqrt_down(const Dyadic& a, long bits) { return sqrt_dir(a, bits, false); }
  static Dyadic sqrt_up(const Dyadic& a, long bits) { return sqrt_dir(a, bits, true); }

  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    int c = cmp(a, b);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }
  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    return a.exp_ == b.exp_ && a.mant_ == b.mant_;
  }

  [[nodiscard]] std::string mantissa_string() const { return mant_.get_str(10); }
  [[nodiscard]] std::string to_string() const {
    return mant_.get_str(10) + "*2^" + std::to_string(exp_);
  }

 private:
  void normalize() {
    if (mant_ == 0) {
      exp_ = 0;
      return;
    }
    auto tz = static_cast<long>(mpz_scan1(mant_.get_mpz_t(), 0));
    if (tz > 0) {
      mpz_class m;
      mpz_tdiv_q_2exp(m.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(tz));
      mant_ = m;
      exp_ += tz;
    }
  }

  static int cmp(const Dyadic& a, const Dyadic& b) {
    int sa = a.sign(), sb = b.sign();
    if (sa != sb) return sa < sb ? -1 : 1;
    if (sa == 0) return 0;
    long e = std::min(a.exp_, b.exp_);
    // Quick magnitude check avoids huge shifts when exponents differ wildly.
    long ma = a.msb(), mb = b.msb();
    if (ma != mb) return (ma < mb) == (sa > 0) ? -1 : 1;
    mpz_class x = a.mant_ << (a.exp_ - e);
    mpz_class y = b.mant_ << (b.exp_ - e);
    return ::cmp(x, y);
  }

  Dyadic round_sig(long bits, int dir) const {
    if (is_zero()) return *this;
    auto size = static_cast<long>(mpz_sizeinbase(mant_.get_mpz_t(), 2));
    if (size <= bits) return *this;
    auto drop = static_cast<mp_bitcnt_t>(size - bits);
    mpz_class m;
    if (dir < 0) {
      mpz_fdiv_q_2exp(m.get_mpz_t(), mant_.get_mpz_t(), drop);
    } else if (dir > 0) {
      mpz_cdiv_q_2exp(m.get_mpz_t(), mant_.get_mpz_t(), drop);
    } else {
      mpz_class half = mpz_class(1) << (drop - 1);
      mpz_class t = mant_ + (sign() > 0 ? half : mpz_class(-half));
      mpz_tdiv_q_2exp(m.get_mpz_t(), t.get_mpz_t(), drop);
    }
    return Dyadic(m, exp_ + static_cast<long>(drop));
  }

  double to_double_dir(bool up) const {
    if (is_zero()) return 0.0;
    Dyadic r = up ? round_up(53) : round_down(53);
    double d = std::ldexp(r.mant_.get_d(), static_cast<int>(r.exp_));
    // ldexp is exact unless the value leaves the normal range.
    Dyadic back = std::isfinite(d) ? from_double(d) : Dyadic();
    if (!std::isfinite(d) || (up ? back < r : back > r))
      d = std::nextafter(d, up ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity());
    return d;
  }

  static Dyadic div_dir(const Dyadic& a, const Dyadic& b, long bits, bool up) {
    if (b.is_zero()) throw DivisionByIntervalContainingZero("dyadic division by zero");
    if (a.is_zero()) return {};
    auto sa = static_cast<long>(mpz_sizeinbase(a.mant_.get_mpz_t(), 2));
    auto sb = static_cast<long>(mpz_sizeinbase(b.mant_.get_mpz_t(), 2));
    long shift = std::max(0L, bits + sb - sa + 2);
    mpz_class num = a.mant_ << shift;
    mpz_class q;
    if (up)
      mpz_cdiv_q(q.get_mpz_t(), num.get_mpz_t(), b.mant_.get_mpz_t());
    else
      mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), b.mant_.get_mpz_t());
    Dyadic r(q, a.exp_ - b.exp_ - shift);
    return up ? r.round_up(bits) : r.round_down(bits);
  }

  static Dyadic sqrt_dir(const Dyadic& a, long bits, bool up) {
    if (a.sign() < 0) throw InvalidInput("sqrt of negative dyadic");
    if (a.is_zero()) return {};
    // Make the exponent even and the mantissa wide enough.
    auto sa = static_cast<long>(mpz_sizeinbase(a.mant_.get_mpz_t(), 2));
    long shift = std::max(0L, 2 * bits + 4 - sa);
    if ((a.exp_ - shift) % 2 != 0) ++shift;
    mpz_class m = a.mant_ << shift;
    mpz_class r;
    mpz_sqrt(r.get_mpz_t(), m.get_mpz_t());
    if (up && r * r != m) r += 1;
    Dyadic res(r, (a.exp_ - shift) / 2);
    return up ? res.round_up(bits) : res.round_down(bits);
  }

  mpz_class mant_{0};
  long exp_ = 0;
};

}  // namespace henon

#pragma once

// Rectangular enclosures over C, C^2 and 2x2 complex matrices, plus the two
// norms used throughout: L-infinity on the base space (max over the four real
// coordinates) and Euclidean on tangent vectors.

#include <array>
#include <complex>
#include <ostream>

#include "henon/interval.hpp"

namespace henon {

template <class T>
struct ComplexRect {
  using I = Interval<T>;
  I re;
  I im;

  ComplexRect() = default;
  ComplexRect(I r, I i) : re(std::move(r)), im(std::move(i)) {}
  static ComplexRect point(const T& r, const T& i) { return ComplexRect(I(r), I(i)); }
  static ComplexRect real(const I& r) { return ComplexRect(r, I()); }

  [[nodiscard]] bool contains(const ComplexRect& o) const { return re.contains(o.re) && im.contains(o.im); }
  [[nodiscard]] bool contains_zero() const { return re.contains_zero() && im.contains_zero(); }
  [[nodiscard]] bool intersects(const ComplexRect& o) const { return re.intersects(o.re) && im.intersects(o.im); }
  [[nodiscard]] bool is_point() const { return re.is_point() && im.is_point(); }
  [[nodiscard]] ComplexRect mid_point() const { return point(re.mid(), im.mid()); }
  [[nodiscard]] std::complex<double> mid_double() const {
    return {Rounding<T>::to_double(re.mid()), Rounding<T>::to_double(im.mid())};
  }
  [[nodiscard]] T mag_linf() const { return std::max(re.mag(), im.mag()); }

  friend ComplexRect operator+(const ComplexRect& a, const ComplexRect& b) { return {a.re + b.re, a.im + b.im}; }
  friend ComplexRect operator-(const ComplexRect& a, const ComplexRect& b) { return {a.re - b.re, a.im - b.im}; }
  friend ComplexRect operator-(const ComplexRect& a) { return {-a.re, -a.im}; }
  friend ComplexRect operator*(const ComplexRect& a, const ComplexRect& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend ComplexRect operator*(const I& s, const ComplexRect& b) { return {s * b.re, s * b.im}; }
  // Division by conjugate multiplication: a * conj(b) / |b|^2.
  friend ComplexRect operator/(const ComplexRect& a, const ComplexRect& b) {
    if (b.contains_zero()) throw DivisionByIntervalContainingZero("complex divisor rectangle contains zero");
    I den = sqr(b.re) + sqr(b.im);
    ComplexRect num{a.re * b.re + a.im * b.im, a.im * b.re - a.re * b.im};
    return {num.re / den, num.im / den};
  }
  friend ComplexRect operator/(const ComplexRect& a, const I& s) { return {a.re / s, a.im / s}; }
  ComplexRect& operator+=(const ComplexRect& o) { return *this = *this + o; }
  ComplexRect& operator-=(const ComplexRect& o) { return *this = *this - o; }
  ComplexRect& operator*=(const ComplexRect& o) { return *this = *this * o; }

  friend ComplexRect sqr(const ComplexRect& a) {
    return {sqr(a.re) - sqr(a.im), (a.re * a.im).scaled_pow2(1)};
  }
  friend ComplexRect conj(const ComplexRect& a) { return {a.re, -a.im}; }
  friend I abs_sq(const ComplexRect& a) { return sqr(a.re) + sqr(a.im); }
  friend I abs(const ComplexRect& a) { return sqrt(abs_sq(a)); }
  friend ComplexRect hull(const ComplexRect& a, const ComplexRect& b) { return {hull(a.re, b.re), hull(a.im, b.im)}; }
  friend ComplexRect intersect(const ComplexRect& a, const ComplexRect& b) {
    return {intersect(a.re, b.re), intersect(a.im, b.im)};
  }
  friend ComplexRect inflate(const ComplexRect& a, const T& r) { return {inflate(a.re, r), inflate(a.im, r)}; }
  friend bool operator==(const ComplexRect& a, const ComplexRect& b) { return a.re == b.re && a.im == b.im; }
  friend std::ostream& operator<<(std::ostream& os, const ComplexRect& a) { return os << a.re << "+i" << a.im; }
};

// Enclosure of one square root branch of every element of z.  The branch is
// chosen continuous over the rectangle whenever the rectangle avoids the
// origin; both eigenvalue formulas use +-sqrt, so either branch serves.
template <class T>
ComplexRect<T> sqrt_branch(const ComplexRect<T>& z) {
  using I = Interval<T>;
  using C = ComplexRect<T>;
  auto principal = [](const C& w) {
    I r = abs(w);
    I re = sqrt(max((r + w.re).scaled_pow2(-1), I()));
    I imm = sqrt(max((r - w.re).scaled_pow2(-1), I()));
    I im = w.im.certainly_positive() || w.im.lo() >= Rounding<T>::zero()
               ? imm
               : (w.im.hi() <= Rounding<T>::zero() ? -imm : hull(imm, -imm));
    return C(re, im);
  };
  const T zero = Rounding<T>::zero();
  // Principal branch is continuous off the closed negative real axis.
  bool meets_negative_axis = z.im.contains_zero() && z.re.lo() <= zero;
  if (!meets_negative_axis) return principal(z);
  if (z.re.hi() < zero) {
    C s = principal(-z);  // right half plane
    return C(-s.im, s.re);  // i * s
  }
  T m = sqrt(abs(z)).hi();
  return C(I(-m, m), I(-m, m));
}

template <class T>
struct VecC2 {
  using C = ComplexRect<T>;
  using I = Interval<T>;
  C x;
  C y;

  C& operator[](int i) { return i == 0 ? x : y; }
  const C& operator[](int i) const { return i == 0 ? x : y; }
  friend VecC2 operator+(const VecC2& a, const VecC2& b) { return {a.x + b.x, a.y + b.y}; }
  friend VecC2 operator-(const VecC2& a, const VecC2& b) { return {a.x - b.x, a.y - b.y}; }
  friend VecC2 operator*(const C& s, const VecC2& v) { return {s * v.x, s * v.y}; }
  friend VecC2 operator/(const VecC2& v, const I& s) { return {v.x / s, v.y / s}; }
  friend VecC2 operator/(const VecC2& v, const C& s) { return {v.x / s, v.y / s}; }
  [[nodiscard]] bool contains(const VecC2& o) const { return x.contains(o.x) && y.contains(o.y); }
};

// Euclidean norm of a tangent vector enclosure.
template <class T>
Interval<T> euclid_norm(const VecC2<T>& v) {
  return sqrt(abs_sq(v.x) + abs_sq(v.y));
}

// Hermitian inner product <u, v> = sum u_i * conj(v_i).
template <class T>
ComplexRect<T> inner(const VecC2<T>& u, const VecC2<T>& v) {
  return u.x * conj(v.x) + u.y * conj(v.y);
}

// A box in C^2 = R^4, coordinates (z, w).
template <class T>
struct BoxC2 {
  using C = ComplexRect<T>;
  using I = Interval<T>;
  C z;
  C w;

  [[nodiscard]] const I& coord(int k) const {
    switch (k) {
      case 0: return z.re;
      case 1: return z.im;
      case 2: return w.re;
      default: return w.im;
    }
  }
  I& coord(int k) {
    switch (k) {
      case 0: return z.re;
      case 1: return z.im;
      case 2: return w.re;
      default: return w.im;
    }
  }
  static BoxC2 from_coords(const std::array<I, 4>& c) { return {C(c[0], c[1]), C(c[2], c[3])}; }
  static BoxC2 point(const T& zr, const T& zi, const T& wr, const T& wi) {
    return {C::point(zr, zi), C::point(wr, wi)};
  }
  [[nodiscard]] bool contains(const BoxC2& o) const { return z.contains(o.z) && w.contains(o.w); }
  [[nodiscard]] bool intersects(const BoxC2& o) const { return z.intersects(o.z) && w.intersects(o.w); }
  [[nodiscard]] bool interior_contains(const BoxC2& o) const {
    for (int k = 0; k < 4; ++k)
      if (!coord(k).interior_contains(o.coord(k))) return false;
    return true;
  }
  [[nodiscard]] BoxC2 mid_point() const { return {z.mid_point(), w.mid_point()}; }
  // L-infinity diameter: largest real side length (rounded up).
  [[nodiscard]] T diameter() const {
    T d = coord(0).width();
    for (int k = 1; k < 4; ++k) d = std::max(d, coord(k).width());
    return d;
  }
  [[nodiscard]] VecC2<T> as_vec() const { return {z, w}; }
  friend BoxC2 hull(const BoxC2& a, const BoxC2& b) { return {hull(a.z, b.z), hull(a.w, b.w)}; }
  friend BoxC2 inflate(const BoxC2& a, const T& r) { return {inflate(a.z, r), inflate(a.w, r)}; }
  friend bool operator==(const BoxC2& a, const BoxC2& b) { return a.z == b.z && a.w == b.w; }
  friend std::ostream& operator<<(std::ostream& os, const BoxC2& b) { return os << '(' << b.z << ", " << b.w << ')'; }
};

// Enclosure of {||x||_inf : x in b} with ||x||_inf = max of |Re|, |Im| over both coordinates.
template <class T>
Interval<T> norm_linf(const BoxC2<T>& b) {
  T lo = b.coord(0).mig();
  T hi = b.coord(0).mag();
  for (int k = 1; k < 4; ++k) {
    lo = std::max(lo, b.coord(k).mig());
    hi = std::max(hi, b.coord(k).mag());
  }
  return Interval<T>(lo, hi);
}

template <class T>
struct MatrixRect {
  using C = ComplexRect<T>;
  std::array<C, 4> e;  // row-major a00 a01 a10 a11

  static MatrixRect identity() {
    MatrixRect m;
    m.e[0] = C::point(Rounding<T>::from_int(1), Rounding<T>::zero());
    m.e[3] = m.e[0];
    return m;
  }
  C& operator()(int r, int c) { return e[static_cast<std::size_t>(2 * r + c)]; }
  const C& operator()(int r, int c) const { return e[static_cast<std::size_t>(2 * r + c)]; }

  friend MatrixRect operator*(const MatrixRect& a, const MatrixRect& b) {
    MatrixRect m;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) m(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c);
    return m;
  }
  friend VecC2<T> operator*(const MatrixRect& a, const VecC2<T>& v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y, a(1, 0) * v.x + a(1, 1) * v.y};
  }
  friend MatrixRect operator-(const MatrixRect& a, const MatrixRect& b) {
    MatrixRect m;
    for (std::size_t i = 0; i < 4; ++i) m.e[i] = a.e[i] - b.e[i];
    return m;
  }
  [[nodiscard]] C det() const { return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0); }
  [[nodiscard]] C trace() const { return (*this)(0, 0) + (*this)(1, 1); }
  [[nodiscard]] MatrixRect inverse() const {
    C d = det();
    MatrixRect m;
    m(0, 0) = (*this)(1, 1) / d;
    m(0, 1) = -(*this)(0, 1) / d;
    m(1, 0) = -(*this)(1, 0) / d;
    m(1, 1) = (*this)(0, 0) / d;
    return m;
  }
  [[nodiscard]] bool contains(const MatrixRect& o) const {
    for (std::size_t i = 0; i < 4; ++i)
      if (!e[i].contains(o.e[i])) return false;
    return true;
  }
  // Upper bound of the operator 2-norm via the Frobenius norm.
  [[nodiscard]] T norm_bound() const {
    Interval<T> s;
    for (const auto& c : e) s = s + abs_sq(c);
    return sqrt(s).hi();
  }
};

using BoxC2D = BoxC2<double>;
using ComplexRectD = ComplexRect<double>;
using MatrixRectD = MatrixRect<double>;
using VecC2D = VecC2<double>;

}  // namespace henon

#pragma once

// Compositions of generalized Henon factors (z, w) -> (p(z) - a w, z) with
// monic p of degree >= 2 and a != 0.  Coefficients are exact complex dyadics;
// an optional parameter radius turns every coefficient into the rectangle
// [c - r, c + r] so that one evaluation encloses a whole family of maps.

#include <complex>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "henon/rigor.hpp"

namespace henon {

struct ComplexDyadic {
  Dyadic re;
  Dyadic im;
  friend bool operator==(const ComplexDyadic&, const ComplexDyadic&) = default;
  [[nodiscard]] std::complex<double> to_complex() const { return {re.to_double_nearest(), im.to_double_nearest()}; }
  [[nodiscard]] bool is_zero() const { return re.is_zero() && im.is_zero(); }
};

struct MonicPoly {
  int degree = 2;
  std::vector<ComplexDyadic> coeffs;  // degrees 0 .. degree-1; leading coefficient is 1
};

struct HenonFactor {
  MonicPoly p;
  ComplexDyadic a;
};

enum class Direction { kForward, kInverse };

template <class T>
struct FactorEnclosure {
  int degree = 2;
  std::vector<ComplexRect<T>> c;  // c[j] encloses the degree-j coefficient
  ComplexRect<T> a;
  ComplexRect<T> inv_a;
};

struct FactorNumeric {
  int degree = 2;
  std::vector<std::complex<double>> c;
  std::complex<double> a;
};

class PolyDiffeo {
 public:
  PolyDiffeo() = default;
  explicit PolyDiffeo(std::vector<HenonFactor> factors, Dyadic param_radius = {})
      : factors_(std::move(factors)), radius_(std::move(param_radius)) {
    validate();
    build_caches();
  }

  // Quadratic Henon map H_{a,c}(z, w) = (z^2 + c - a w, z).
  static PolyDiffeo quadratic(const ComplexDyadic& c, const ComplexDyadic& a) {
    HenonFactor f;
    f.p.degree = 2;
    f.p.coeffs = {c, ComplexDyadic{}};
    f.a = a;
    return PolyDiffeo({f});
  }

  [[nodiscard]] const std::vector<HenonFactor>& factors() const { return factors_; }
  [[nodiscard]] std::size_t factor_count() const { return factors_.size(); }
  [[nodiscard]] const Dyadic& param_radius() const { return radius_; }
  [[nodiscard]] PolyDiffeo with_param_radius(const Dyadic& r) const { return PolyDiffeo(factors_, r); }

  template <class T>
  [[nodiscard]] const std::vector<FactorEnclosure<T>>& enclosures() const {
    if constexpr (std::is_same_v<T, double>) return fast_;
    else return exact_;
  }
  [[nodiscard]] const std::vector<FactorNumeric>& numeric() const { return numeric_; }

  [[nodiscard]] int dynamical_degree() const {
    int d = 1;
    for (const auto& f : factors_) d *= f.p.degree;
    return d;
  }

  // Canonical text form; stable across platforms, used for hashing and files.
  [[nodiscard]] std::string canonical_text() const {
    std::ostringstream os;
    os << "henon-map v1\n";
    auto put = [&os](const ComplexDyadic& c) {
      os << c.re.mantissa_string() << ' ' << c.re.exponent() << ' ' << c.im.mantissa_string() << ' '
         << c.im.exponent();
    };
    for (const auto& f : factors_) {
      os << "factor degree " << f.p.degree << '\n';
      for (int j = 0; j < f.p.degree; ++j) {
        os << "coeff " << j << ' ';
        put(f.p.coeffs[static_cast<std::size_t>(j)]);
        os << '\n';
      }
      os << "a ";
      put(f.a);
      os << '\n';
    }
    if (!radius_.is_zero()) os << "radius " << radius_.mantissa_string() << ' ' << radius_.exponent() << '\n';
    return os.str();
  }

  // 64-bit FNV-1a of the canonical text, as 16 hex digits.
  [[nodiscard]] std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical_text()) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = hex[h & 15U];
      h >>= 4;
    }
    return s;
  }

 private:
  void validate() const {
    if (factors_.empty()) throw InvalidInput("map needs at least one factor");
    if (radius_.sign() < 0) throw InvalidInput("parameter radius must be nonnegative");
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const auto& f = factors_[i];
      if (f.p.degree < 2) throw InvalidInput("factor " + std::to_string(i) + ": degree must be >= 2");
      if (static_cast<int>(f.p.coeffs.size()) != f.p.degree)
        throw InvalidInput("factor " + std::to_string(i) + ": expected " + std::to_string(f.p.degree) +
                           " coefficients below the monic leading term");
      if (f.a.is_zero()) throw InvalidInput("factor " + std::to_string(i) + ": a must be nonzero");
    }
  }

  template <class T>
  FactorEnclosure<T> enclose(const HenonFactor& f) const {
    using C = ComplexRect<T>;
    using I = Interval<T>;
    auto rect = [this](const ComplexDyadic& v) {
      return C(I::from_dyadic(v.re - radius_, v.re + radius_), I::from_dyadic(v.im - radius_, v.im + radius_));
    };
    FactorEnclosure<T> e;
    e.degree = f.p.degree;
    for (const auto& c : f.p.coeffs) e.c.push_back(rect(c));
    e.a = rect(f.a);
    if (e.a.contains_zero()) throw InvalidInput("parameter rectangle for a contains zero");
    e.inv_a = C::point(Rounding<T>::from_int(1), Rounding<T>::zero()) / e.a;
    return e;
  }

  void build_caches() {
    fast_.clear();
    exact_.clear();
    numeric_.clear();
    for (const auto& f : factors_) {
      fast_.push_back(enclose<double>(f));
      exact_.push_back(enclose<Dyadic>(f));
      FactorNumeric n;
      n.degree = f.p.degree;
      for (const auto& c : f.p.coeffs) n.c.push_back(c.to_complex());
      n.a = f.a.to_complex();
      numeric_.push_back(std::move(n));
    }
  }

  std::vector<HenonFactor> factors_;
  Dyadic radius_;
  std::vector<FactorEnclosure<double>> fast_;
  std::vector<FactorEnclosure<Dyadic>> exact_;
  std::vector<FactorNumeric> numeric_;
};

namespace detail {

template <class T>
ComplexRect<T> one() {
  return ComplexRect<T>::point(Rounding<T>::from_int(1), Rounding<T>::zero());
}
template <class T>
ComplexRect<T> from_long(long v) {
  return ComplexRect<T>::point(Rounding<T>::from_int(v), Rounding<T>::zero());
}

// Powers z^0 .. z^n, using squaring for even exponents to limit dependency loss.
template <class T>
std::vector<ComplexRect<T>> powers(const ComplexRect<T>& z, int n) {
  std::vector<ComplexRect<T>> pw(static_cast<std::size_t>(n + 1));
  pw[0] = one<T>();
  if (n >= 1) pw[1] = z;
  for (int k = 2; k <= n; ++k) {
    auto ku = static_cast<std::size_t>(k);
    pw[ku] = (k % 2 == 0) ? sqr(pw[ku / 2]) : pw[ku - 1] * z;
  }
  return pw;
}

}  // namespace detail

template <class T>
ComplexRect<T> poly_value(const FactorEnclosure<T>& f, const ComplexRect<T>& z) {
  auto pw = detail::powers(z, f.degree);
  ComplexRect<T> s = pw[static_cast<std::size_t>(f.degree)];
  for (int j = f.degree - 1; j >= 0; --j) {
    auto ju = static_cast<std::size_t>(j);
    if (f.c[ju].is_point() && f.c[ju].re.lo() == Rounding<T>::zero() && f.c[ju].im.lo() == Rounding<T>::zero())
      continue;
    s += f.c[ju] * pw[ju];
  }
  return s;
}

template <class T>
ComplexRect<T> poly_derivative(const FactorEnclosure<T>& f, const ComplexRect<T>& z) {
  auto pw = detail::powers(z, f.degree - 1);
  ComplexRect<T> s = detail::from_long<T>(f.degree) * pw[static_cast<std::size_t>(f.degree - 1)];
  for (int j = f.degree - 1; j >= 1; --j) {
    auto ju = static_cast<std::size_t>(j);
    s += detail::from_long<T>(j) * f.c[ju] * pw[ju - 1];
  }
  return s;
}

template <class T>
ComplexRect<T> poly_second_derivative(const FactorEnclosure<T>& f, const ComplexRect<T>& z) {
  int d = f.degree;
  auto pw = detail::powers(z, d - 2);
  ComplexRect<T> s = detail::from_long<T>(static_cast<long>(d) * (d - 1)) * pw[static_cast<std::size_t>(d - 2)];
  for (int j = d - 1; j >= 2; --j) {
    auto ju = static_cast<std::size_t>(j);
    s += detail::from_long<T>(static_cast<long>(j) * (j - 1)) * f.c[ju] * pw[ju - 2];
  }
  return s;
}

template <class T>
BoxC2<T> apply_factor(const FactorEnclosure<T>& f, const BoxC2<T>& x, Direction dir) {
  if (dir == Direction::kForward) return {poly_value(f, x.z) - f.a * x.w, x.z};
  return {x.w, (poly_value(f, x.w) - x.z) * f.inv_a};
}

template <class T>
MatrixRect<T> factor_jacobian(const FactorEnclosure<T>& f, const BoxC2<T>& x, Direction dir) {
  MatrixRect<T> m;
  if (dir == Direction::kForward) {
    m(0, 0) = poly_derivative(f, x.z);
    m(0, 1) = -f.a;
    m(1, 0) = detail::one<T>();
  } else {
    m(0, 1) = detail::one<T>();
    m(1, 0) = -f.inv_a;
    m(1, 1) = poly_derivative(f, x.w) * f.inv_a;
  }
  return m;
}

// Enclosure of f(x) or f^{-1}(x) for every point of the box x.
template <class T>
BoxC2<T> eval(const PolyDiffeo& f, const BoxC2<T>& x, Direction dir) {
  const auto& fs = f.enclosures<T>();
  BoxC2<T> y = x;
  if (dir == Direction::kForward) {
    for (const auto& fac : fs) y = apply_factor(fac, y, dir);
  } else {
    for (auto it = fs.rbegin(); it != fs.rend(); ++it) y = apply_factor(*it, y, dir);
  }
  return y;
}

// Enclosure of D_y f (or D_y f^{-1}) for all y in x.
template <class T>
MatrixRect<T> jacobian(const PolyDiffeo& f, const BoxC2<T>& x, Direction dir) {
  const auto& fs = f.enclosures<T>();
  BoxC2<T> y = x;
  MatrixRect<T> m = MatrixRect<T>::identity();
  auto step = [&](const FactorEnclosure<T>& fac) {
    m = factor_jacobian(fac, y, dir) * m;
    y = apply_factor(fac, y, dir);
  };
  if (dir == Direction::kForward) {
    for (const auto& fac : fs) step(fac);
  } else {
    for (auto it = fs.rbegin(); it != fs.rend(); ++it) step(*it);
  }
  return m;
}

// Enclosure of D f^{+-m} at x0 by the chain rule along the orbit enclosure.
// Throws PrecisionExhausted when the orbit enclosure grows past `budget`
// (L-infinity diameter); budget <= 0 disables the check.
template <class T>
MatrixRect<T> iterate_jacobian(const PolyDiffeo& f, const BoxC2<T>& x0, int m, Direction dir, double budget = 0.0) {
  if (m < 1) throw InvalidInput("iterate_jacobian needs m >= 1");
  BoxC2<T> y = x0;
  MatrixRect<T> acc = MatrixRect<T>::identity();
  for (int i = 0; i < m; ++i) {
    acc = jacobian(f, y, dir) * acc;
    y = eval(f, y, dir);
    if (budget > 0.0 && Rounding<T>::to_double(y.diameter()) > budget)
      throw PrecisionExhausted("orbit enclosure exceeded the diameter budget at step " + std::to_string(i + 1));
  }
  return acc;
}

// Second-derivative tensor T[i][j][k] = d^2 F_i / dx_j dx_k of a holomorphic map C^2 -> C^2.
template <class T>
struct Tensor2 {
  std::array<ComplexRect<T>, 8> e{};
  ComplexRect<T>& operator()(int i, int j, int k) { return e[static_cast<std::size_t>(4 * i + 2 * j + k)]; }
  const ComplexRect<T>& operator()(int i, int j, int k) const { return e[static_cast<std::size_t>(4 * i + 2 * j + k)]; }
  // Frobenius norm bounds the bilinear operator norm (Cauchy-Schwarz per output).
  [[nodiscard]] T norm_bound() const {
    Interval<T> s;
    for (const auto& c : e) s = s + abs_sq(c);
    return sqrt(s).hi();
  }
};

// Enclosure of the second derivative of f^{+-m} over the box `region`.
template <class T>
Tensor2<T> second_derivative_enclosure(const PolyDiffeo& f, const BoxC2<T>& region, int m, Direction dir) {
  const auto& fs = f.enclosures<T>();
  BoxC2<T> y = region;
  MatrixRect<T> J = MatrixRect<T>::identity();
  Tensor2<T> H;
  auto step = [&](const FactorEnclosure<T>& fac) {
    MatrixRect<T> Jg = factor_jacobian(fac, y, dir);
    Tensor2<T> Hg;
    if (dir == Direction::kForward) Hg(0, 0, 0) = poly_second_derivative(fac, y.z);
    else Hg(1, 1, 1) = poly_second_derivative(fac, y.w) * fac.inv_a;
    Tensor2<T> Hn;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          ComplexRect<T> s;
          for (int a = 0; a < 2; ++a) {
            s += Jg(i, a) * H(a, j, k);
            for (int b = 0; b < 2; ++b) s += Hg(i, a, b) * (J(a, j) * J(b, k));
          }
          Hn(i, j, k) = s;
        }
    H = Hn;
    J = Jg * J;
    y = apply_factor(fac, y, dir);
  };
  for (int it = 0; it < m; ++it) {
    if (dir == Direction::kForward) {
      for (const auto& fac : fs) step(fac);
    } else {
      for (auto r = fs.rbegin(); r != fs.rend(); ++r) step(*r);
    }
  }
  return H;
}

// Upper bound M2 on the L-infinity Lipschitz constant of x -> D_x f^{+-m}
// (operator 2-norm) over the box `region`:
//   ||D_x f^m - D_y f^m|| <= M2 ||x - y||_inf   for x, y in region.
// Since ||.||_2 <= 2 ||.||_inf on R^4, M2 = 2 sup ||D^2 f^m||, which also
// dominates the second-derivative norm itself.  `splits` subdivides each real
// side to tighten the bound.
inline Dyadic second_derivative_bound(const PolyDiffeo& f, const BoxC2D& region, int m, Direction dir,
                                      int splits = 1) {
  if (m < 1) throw InvalidInput("second_derivative_bound needs m >= 1");
  if (splits < 1) splits = 1;
  double best = 0.0;
  std::array<std::vector<FastInterval>, 4> parts;
  for (int k = 0; k < 4; ++k) {
    const auto& c = region.coord(k);
    for (int s = 0; s < splits; ++s) {
      double a = c.lo() + (c.hi() - c.lo()) * s / splits;
      double b = s + 1 == splits ? c.hi() : c.lo() + (c.hi() - c.lo()) * (s + 1) / splits;
      if (s == 0) a = c.lo();
      parts[static_cast<std::size_t>(k)].emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  for (const auto& p0 : parts[0])
    for (const auto& p1 : parts[1])
      for (const auto& p2 : parts[2])
        for (const auto& p3 : parts[3]) {
          BoxC2D b = BoxC2D::from_coords({p0, p1, p2, p3});
          double n = second_derivative_enclosure(f, b, m, dir).norm_bound();
          best = std::max(best, n);
        }
  return Dyadic::from_double(Rounding<double>::mul(best, 2.0, true));
}

inline Dyadic second_derivative_bound(const PolyDiffeo& f, const Dyadic& R, int m,
                                      Direction dir = Direction::kForward, int splits = 1) {
  if (R.sign() <= 0) throw InvalidInput("second_derivative_bound needs R > 0");
  FastInterval side = FastInterval::from_dyadic(-R, R);
  BoxC2D v = BoxC2D::from_coords({side, side, side, side});
  return second_derivative_bound(f, v, m, dir, splits);
}

// Does every factor satisfy min_{|z|=R} |p(z)| >= (2 + |a|) R?  Uses the
// lower bound |p(z)| >= R^d - sum |c_j| R^j with outward-rounded |c_j|.
inline bool filtration_holds(const PolyDiffeo& f, const Dyadic& R) {
  if (R.sign() <= 0) return false;
  DyadicPrecisionScope scope(0);
  for (const auto& fac : f.enclosures<Dyadic>()) {
    RealInterval r(R);
    RealInterval rp(Dyadic(1));
    RealInterval bound;  // sum |c_j| R^j, upper bound
    for (int j = 0; j < fac.degree; ++j) {
      bound = bound + RealInterval(abs(fac.c[static_cast<std::size_t>(j)]).hi()) * rp;
      rp = rp * r;
    }
    // rp == R^d
    RealInterval lhs = rp - bound;
    RealInterval rhs = (RealInterval(Dyadic(2)) + RealInterval(abs(fac.a).hi())) * r;
    if (!(lhs.lo() >= rhs.hi())) return false;
  }
  return true;
}

// Smallest R on the 1/16 grid with the escape inequality certified for every
// factor; all bounded orbits (hence the chain recurrent set) lie in [-R, R]^4.
inline Dyadic filtration_radius(const PolyDiffeo& f) {
  for (long k = 1;; ++k) {
    Dyadic R(mpz_class(k), -4);
    if (filtration_holds(f, R)) return R;
    if (k > (1L << 40)) throw InvalidInput("no filtration radius found");
  }
}

// Accepts a user-provided radius only if the escape inequality is certified.
inline Dyadic checked_filtration_radius(const PolyDiffeo& f, const Dyadic& user_R) {
  if (!filtration_holds(f, user_R))
    throw InvalidInput("radius " + user_R.to_string() + " fails the certified escape condition");
  return user_R;
}

inline int dynamical_degree(const PolyDiffeo& f) { return f.dynamical_degree(); }

// Plain complex evaluation at a point, for Newton-type iterations.
inline std::complex<double> poly_numeric(const FactorNumeric& f, std::complex<double> z) {
  std::complex<double> s = 1.0;
  for (int j = f.degree - 1; j >= 0; --j) s = s * z + f.c[static_cast<std::size_t>(j)];
  return s;
}
inline std::complex<double> poly_numeric_derivative(const FactorNumeric& f, std::complex<double> z) {
  std::complex<double> s = static_cast<double>(f.degree);
  for (int j = f.degree - 1; j >= 1; --j) s = s * z + static_cast<double>(j) * f.c[static_cast<std::size_t>(j)];
  return s;
}

}  // namespace henon

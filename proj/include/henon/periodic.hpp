#pragma once

// Certified enumeration of periodic orbits.
//
// A point x_0 with f^m(x_0) = x_0 is encoded by the cyclic z-sequence
// u_0, ..., u_{L-1} (L = m * #factors) with
//     u_{i+1} = p_{j(i)}(u_i) - a_{j(i)} u_{i-1},   j(i) = i mod #factors,
// so that x_t = (u_{tk}, u_{tk-1}).  Each equation has degree d_{j(i)} in a
// single variable, so the system has exactly d(f)^m solutions with
// multiplicity and no solutions at infinity.  Candidates come from a
// total-degree homotopy; each is certified by the Krawczyk test, and
// completeness follows once d(f)^m distinct simple solutions are certified.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "henon/henon_map.hpp"
#include "henon/parallel.hpp"

namespace henon {

enum class OrbitClass { kSaddle, kAttracting, kRepelling, kUndetermined };

inline const char* to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::kSaddle: return "saddle";
    case OrbitClass::kAttracting: return "attracting";
    case OrbitClass::kRepelling: return "repelling";
    default: return "undetermined";
  }
}

struct EigenData {
  ComplexRectD lambda_u;  // larger modulus
  ComplexRectD lambda_s;
  VecC2D eu;  // unit eigenvector enclosures, filled for saddles
  VecC2D es;
};

struct PeriodicOrbit {
  int period = 1;                           // prime period
  std::vector<std::array<Dyadic, 4>> points;  // exact approximations (z_re, z_im, w_re, w_im)
  std::vector<BoxC2D> boxes;                // certified enclosure of each orbit point
  std::vector<ComplexRectD> sequence;       // z-sequence enclosure over one period
  Dyadic precision;                         // largest enclosure side
  std::vector<EigenData> eigen;             // per orbit point
  OrbitClass cls = OrbitClass::kUndetermined;

  [[nodiscard]] BoxC2D point_box(std::size_t t) const {
    const auto& p = points[t];
    return BoxC2D::point(p[0].to_double_nearest(), p[1].to_double_nearest(), p[2].to_double_nearest(),
                         p[3].to_double_nearest());
  }
};

struct PeriodicOptions {
  int max_period = 1;
  int precision_bits = 16;  // enclosures must be no wider than 2^-precision_bits
  std::uint64_t seed = 0x5eed;
  int attempts = 4;
  int threads = 1;
};

namespace detail {

using cx = std::complex<double>;
using CMat = std::vector<cx>;  // row-major L x L

// Solves A x = b in place by Gaussian elimination with partial pivoting.
inline bool lu_solve(CMat a, std::vector<cx>& b) {
  const auto n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (std::abs(a[piv * n + c]) == 0.0) return false;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      cx m = a[r * n + c] / a[c * n + c];
      if (m == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= m * a[c * n + k];
      b[r] -= m * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    cx s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c * n + k] * b[k];
    b[c] = s / a[c * n + c];
  }
  return true;
}

inline bool invert(const CMat& a, std::size_t n, CMat& inv) {
  inv.assign(n * n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<cx> e(n, 0.0);
    e[c] = 1.0;
    if (!lu_solve(a, e)) return false;
    for (std::size_t r = 0; r < n; ++r) inv[r * n + c] = e[r];
  }
  return true;
}

inline double norm_inf(const std::vector<cx>& v) {
  double m = 0;
  for (auto x : v) m = std::max({m, std::fabs(x.real()), std::fabs(x.imag())});
  return m;
}

class CyclicSystem {
 public:
  CyclicSystem(const PolyDiffeo& f, int m) : f_(f), k_(static_cast<int>(f.factor_count())), L_(m * k_) {}

  [[nodiscard]] int size() const { return L_; }
  [[nodiscard]] int factor_of(int i) const { return i % k_; }
  [[nodiscard]] std::size_t at(int i) const { return static_cast<std::size_t>(((i % L_) + L_) % L_); }
  [[nodiscard]] int degree(int i) const { return f_.numeric()[static_cast<std::size_t>(factor_of(i))].degree; }

  void residual(const std::vector<cx>& u, std::vector<cx>& F) const {
    F.resize(u.size());
    for (int i = 0; i < L_; ++i) {
      const auto& fac = f_.numeric()[static_cast<std::size_t>(factor_of(i))];
      F[at(i)] = poly_numeric(fac, u[at(i)]) - fac.a * u[at(i - 1)] - u[at(i + 1)];
    }
  }
  void jacobian(const std::vector<cx>& u, CMat& J) const {
    auto n = static_cast<std::size_t>(L_);
    J.assign(n * n, 0.0);
    for (int i = 0; i < L_; ++i) {
      const auto& fac = f_.numeric()[static_cast<std::size_t>(factor_of(i))];
      J[at(i) * n + at(i)] += poly_numeric_derivative(fac, u[at(i)]);
      J[at(i) * n + at(i - 1)] -= fac.a;
      J[at(i) * n + at(i + 1)] -= 1.0;
    }
  }

  [[nodiscard]] std::vector<ComplexRectD> residual(const std::vector<ComplexRectD>& u) const {
    std::vector<ComplexRectD> F(u.size());
    const auto& enc = f_.enclosures<double>();
    for (int i = 0; i < L_; ++i) {
      const auto& fac = enc[static_cast<std::size_t>(factor_of(i))];
      F[at(i)] = poly_value(fac, u[at(i)]) - fac.a * u[at(i - 1)] - u[at(i + 1)];
    }
    return F;
  }
  [[nodiscard]] std::vector<ComplexRectD> jacobian(const std::vector<ComplexRectD>& u) const {
    auto n = static_cast<std::size_t>(L_);
    std::vector<ComplexRectD> J(n * n);
    const auto& enc = f_.enclosures<double>();
    ComplexRectD one = ComplexRectD::point(1.0, 0.0);
    for (int i = 0; i < L_; ++i) {
      const auto& fac = enc[static_cast<std::size_t>(factor_of(i))];
      J[at(i) * n + at(i)] += poly_derivative(fac, u[at(i)]);
      J[at(i) * n + at(i - 1)] -= fac.a;
      J[at(i) * n + at(i + 1)] -= one;
    }
    return J;
  }

 private:
  const PolyDiffeo& f_;
  int k_;
  int L_;
};

// Tracks H = (1-t) gamma G + t F from a root of G_i = u_i^{d_i} - 1 at t = 0.
inline std::optional<std::vector<cx>> track_path(const CyclicSystem& sys, std::vector<cx> u, cx gamma) {
  const auto n = static_cast<std::size_t>(sys.size());
  std::vector<cx> F, G(n), rhs(n);
  CMat JF, J(n * n);
  auto eval_G = [&](const std::vector<cx>& x, std::vector<cx>& g, std::vector<cx>& dg) {
    g.resize(n);
    dg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      int d = sys.degree(static_cast<int>(i));
      cx p = std::pow(x[i], d - 1);
      g[i] = p * x[i] - 1.0;
      dg[i] = static_cast<double>(d) * p;
    }
  };
  std::vector<cx> dG;
  auto assemble = [&](const std::vector<cx>& x, double t) {
    sys.residual(x, F);
    sys.jacobian(x, JF);
    eval_G(x, G, dG);
    for (std::size_t i = 0; i < n * n; ++i) J[i] = t * JF[i];
    for (std::size_t i = 0; i < n; ++i) J[i * n + i] += (1.0 - t) * gamma * dG[i];
  };
  double t = 0.0, dt = 0.02;
  int streak = 0;
  int steps = 0;
  while (t < 1.0) {
    if (++steps > 200000) return std::nullopt;
    dt = std::min(dt, 1.0 - t);
    assemble(u, t);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -(F[i] - gamma * G[i]);
    if (!lu_solve(J, rhs)) return std::nullopt;
    std::vector<cx> v = rhs;
    std::vector<cx> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = u[i] + dt * v[i];
    double t1 = (t + dt >= 1.0) ? 1.0 : t + dt;
    bool ok = false;
    double scale = 1.0 + norm_inf(x);
    double prev = 0.0;
    for (int it = 0; it < 4; ++it) {
      assemble(x, t1);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = -((1.0 - t1) * gamma * G[i] + t1 * F[i]);
      if (!lu_solve(J, rhs)) break;
      double step = norm_inf(rhs);
      if (it == 0 && step > 0.05 * scale) break;
      if (it > 0 && step > 0.5 * prev) break;
      for (std::size_t i = 0; i < n; ++i) x[i] += rhs[i];
      prev = step;
      if (step < 1e-10 * scale) {
        ok = true;
        break;
      }
    }
    if (ok) {
      u = x;
      t = t1;
      if (++streak >= 3) {
        dt = std::min(dt * 2.0, 0.1);
        streak = 0;
      }
    } else {
      dt *= 0.5;
      streak = 0;
      if (dt < 1e-13) return std::nullopt;
    }
  }
  // Polish on the target system.
  for (int it = 0; it < 30; ++it) {
    sys.residual(u, F);
    sys.jacobian(u, JF);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -F[i];
    if (!lu_solve(JF, rhs)) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) u[i] += rhs[i];
    if (norm_inf(rhs) < 1e-15 * (1.0 + norm_inf(u))) break;
  }
  for (auto& x : u)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return std::nullopt;
  return u;
}

struct CertifiedRoot {
  std::vector<ComplexRectD> uniq;  // the system has exactly one root here
  std::vector<ComplexRectD> encl;  // and that root lies here
};

inline std::vector<ComplexRectD> krawczyk(const CyclicSystem& sys, const std::vector<ComplexRectD>& X) {
  const auto n = static_cast<std::size_t>(sys.size());
  std::vector<ComplexRectD> y(n);
  std::vector<cx> ym(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = X[i].mid_point();
    ym[i] = X[i].mid_double();
  }
  CMat A, C;
  sys.jacobian(ym, A);
  if (!invert(A, n, C)) throw DivisionByIntervalContainingZero("singular Jacobian at Krawczyk midpoint");
  auto Fy = sys.residual(y);
  auto JX = sys.jacobian(X);
  std::vector<ComplexRectD> Cr(n * n);
  for (std::size_t i = 0; i < n * n; ++i) Cr[i] = ComplexRectD::point(C[i].real(), C[i].imag());
  std::vector<ComplexRectD> K(n);
  for (std::size_t i = 0; i < n; ++i) {
    ComplexRectD s = y[i];
    for (std::size_t j = 0; j < n; ++j) s -= Cr[i * n + j] * Fy[j];
    for (std::size_t j = 0; j < n; ++j) {
      ComplexRectD mij = i == j ? ComplexRectD::point(1.0, 0.0) : ComplexRectD();
      for (std::size_t l = 0; l < n; ++l) mij -= Cr[i * n + l] * JX[l * n + j];
      s += mij * (X[j] - y[j]);
    }
    K[i] = s;
  }
  return K;
}

inline bool interior_contains(const std::vector<ComplexRectD>& X, const std::vector<ComplexRectD>& K) {
  for (std::size_t i = 0; i < X.size(); ++i)
    if (!X[i].re.interior_contains(K[i].re) || !X[i].im.interior_contains(K[i].im)) return false;
  return true;
}

inline double max_width(const std::vector<ComplexRectD>& X) {
  double w = 0;
  for (const auto& c : X) w = std::max({w, c.re.width(), c.im.width()});
  return w;
}

inline std::optional<CertifiedRoot> certify_root(const CyclicSystem& sys, const std::vector<cx>& u) {
  double scale = 1.0 + norm_inf(u);
  for (double r = 1e-13; r <= 1e-6; r *= 10.0) {
    double rad = r * scale;
    std::vector<ComplexRectD> X(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      X[i] = ComplexRectD(FastInterval(u[i].real() - rad, u[i].real() + rad),
                          FastInterval(u[i].imag() - rad, u[i].imag() + rad));
    std::vector<ComplexRectD> K;
    try {
      K = krawczyk(sys, X);
    } catch (const DivisionByIntervalContainingZero&) {
      return std::nullopt;
    }
    if (!interior_contains(X, K)) continue;
    CertifiedRoot root{X, K};
    for (int it = 0; it < 6; ++it) {
      std::vector<ComplexRectD> K2;
      try {
        K2 = krawczyk(sys, root.encl);
      } catch (const DivisionByIntervalContainingZero&) {
        break;
      }
      double before = max_width(root.encl);
      for (std::size_t i = 0; i < K2.size(); ++i) {
        if (!root.encl[i].intersects(K2[i])) return std::nullopt;  // cannot happen for a true root
        root.encl[i] = intersect(root.encl[i], K2[i]);
      }
      if (max_width(root.encl) > 0.9 * before) break;
    }
    return root;
  }
  return std::nullopt;
}

inline std::vector<ComplexRectD> shifted(const std::vector<ComplexRectD>& v, std::size_t s) {
  std::vector<ComplexRectD> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[(i + s) % v.size()];
  return out;
}

inline bool all_contain(const std::vector<ComplexRectD>& outer, const std::vector<ComplexRectD>& inner) {
  for (std::size_t i = 0; i < outer.size(); ++i)
    if (!outer[i].contains(inner[i])) return false;
  return true;
}
inline bool any_disjoint(const std::vector<ComplexRectD>& a, const std::vector<ComplexRectD>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].intersects(b[i])) return true;
  return false;
}

// Distinct certified roots, with lookup by enclosure.
class RootSet {
 public:
  // Index of the stored root equal to r, or -1 if r is certainly new; throws
  // Inconclusive when neither can be decided.
  [[nodiscard]] long find(const std::vector<ComplexRectD>& encl) const {
    for (std::size_t i = 0; i < roots_.size(); ++i) {
      if (all_contain(roots_[i].uniq, encl)) return static_cast<long>(i);
      if (!any_disjoint(roots_[i].uniq, encl) && !any_disjoint(roots_[i].encl, encl)) {
        if (all_contain(encl, roots_[i].encl)) continue;  // handled by the caller's uniq test
        throw Inconclusive("overlapping root enclosures could not be separated");
      }
    }
    return -1;
  }
  bool insert(const CertifiedRoot& r) {
    for (const auto& s : roots_) {
      if (all_contain(s.uniq, r.encl) || all_contain(r.uniq, s.encl)) return false;
      if (!any_disjoint(s.uniq, r.encl) && !any_disjoint(r.uniq, s.encl))
        throw Inconclusive("overlapping root enclosures could not be separated");
    }
    roots_.push_back(r);
    return true;
  }
  [[nodiscard]] const std::vector<CertifiedRoot>& roots() const { return roots_; }
  [[nodiscard]] std::size_t size() const { return roots_.size(); }

 private:
  std::vector<CertifiedRoot> roots_;
};

inline std::vector<cx> start_point(const CyclicSystem& sys, std::uint64_t q) {
  std::vector<cx> u(static_cast<std::size_t>(sys.size()));
  for (int i = 0; i < sys.size(); ++i) {
    auto d = static_cast<std::uint64_t>(sys.degree(i));
    double ang = 2.0 * std::numbers::pi * static_cast<double>(q % d) / static_cast<double>(d);
    u[static_cast<std::size_t>(i)] = std::polar(1.0, ang);
    q /= d;
  }
  return u;
}

}  // namespace detail

// Enclosure of D f^{len/k} at sequence position `start`, from the per-step
// factor Jacobians along the cyclic z-sequence enclosure.
inline MatrixRectD sequence_jacobian(const PolyDiffeo& f, const std::vector<ComplexRectD>& seq, std::size_t start,
                                     std::size_t len) {
  const auto& enc = f.enclosures<double>();
  const std::size_t k = enc.size(), L = seq.size();
  MatrixRectD M = MatrixRectD::identity();
  for (std::size_t s = 0; s < len; ++s) {
    std::size_t i = (start + s) % L;
    std::size_t prev = (i + L - 1) % L;
    BoxC2D x{seq[i], seq[prev]};
    M = factor_jacobian(enc[i % k], x, Direction::kForward) * M;
  }
  return M;
}

// Eigenvalues of a 2x2 enclosure by the quadratic formula.
inline std::pair<ComplexRectD, ComplexRectD> eigenvalues(const MatrixRectD& M) {
  ComplexRectD half_tr = M.trace() * ComplexRectD::point(0.5, 0.0);
  ComplexRectD disc = sqr(half_tr) - M.det();
  ComplexRectD s = sqrt_branch(disc);
  return {half_tr + s, half_tr - s};
}

// Unit eigenvector enclosure for eigenvalue enclosure lam, scaled so that its
// largest component has real positive midpoint.
inline VecC2D eigenvector(const MatrixRectD& M, const ComplexRectD& lam) {
  VecC2D v1{M(0, 1), lam - M(0, 0)};
  VecC2D v2{lam - M(1, 1), M(1, 0)};
  auto mid_norm = [](const VecC2D& v) { return std::abs(v.x.mid_double()) + std::abs(v.y.mid_double()); };
  VecC2D v = mid_norm(v1) >= mid_norm(v2) ? v1 : v2;
  std::complex<double> big = std::abs(v.x.mid_double()) >= std::abs(v.y.mid_double()) ? v.x.mid_double()
                                                                                       : v.y.mid_double();
  if (big == 0.0) throw DivisionByIntervalContainingZero("degenerate eigenvector");
  ComplexRectD phase = ComplexRectD::point(big.real(), -big.imag());
  v = phase * v;
  FastInterval n = euclid_norm(v);
  return v / n;
}

// Fills eigenvalue/eigenvector data and the class from the orbit enclosure.
// Class and eigen data of a single D f^m enclosure.
inline std::pair<OrbitClass, EigenData> classify_matrix(const MatrixRectD& M) {
  auto [l1, l2] = eigenvalues(M);
  FastInterval a1 = abs(l1), a2 = abs(l2);
  if (a2.mid() > a1.mid()) {
    std::swap(l1, l2);
    std::swap(a1, a2);
  }
  EigenData e{l1, l2, {}, {}};
  FastInterval one(1.0);
  OrbitClass c = OrbitClass::kUndetermined;
  if (a1.certainly_gt(one) && a2.certainly_lt(one)) c = OrbitClass::kSaddle;
  else if (a1.certainly_lt(one) && a2.certainly_lt(one)) c = OrbitClass::kAttracting;
  else if (a1.certainly_gt(one) && a2.certainly_gt(one)) c = OrbitClass::kRepelling;
  if (c == OrbitClass::kSaddle) {
    try {
      e.eu = eigenvector(M, l1);
      e.es = eigenvector(M, l2);
    } catch (const HenonError&) {
      c = OrbitClass::kUndetermined;
    }
  }
  return {c, e};
}

// Fills eigenvalue/eigenvector data and the class from the orbit enclosure.
inline void classify(PeriodicOrbit& orbit, const PolyDiffeo& f) {
  const std::size_t L = orbit.sequence.size();
  const std::size_t k = f.factor_count();
  orbit.eigen.clear();
  orbit.cls = OrbitClass::kUndetermined;
  std::vector<OrbitClass> per_point;
  for (std::size_t t = 0; t < static_cast<std::size_t>(orbit.period); ++t) {
    auto [c, e] = classify_matrix(sequence_jacobian(f, orbit.sequence, t * k, L));
    orbit.eigen.push_back(e);
    per_point.push_back(c);
  }
  // All points of an orbit share multipliers; require agreement of the enclosures.
  OrbitClass c0 = per_point.front();
  for (auto c : per_point)
    if (c != c0) c0 = OrbitClass::kUndetermined;
  orbit.cls = c0;
}

namespace detail {

inline bool lex_less(const std::array<double, 4>& a, const std::array<double, 4>& b) { return a < b; }

inline PeriodicOrbit make_orbit(const PolyDiffeo& f, const CertifiedRoot& root, int period) {
  const std::size_t k = f.factor_count();
  const std::size_t L = root.encl.size();
  const std::size_t Lp = static_cast<std::size_t>(period) * k;
  // Canonical start: lexicographically smallest midpoint among orbit points.
  std::size_t best = 0;
  std::array<double, 4> best_key{};
  for (std::size_t t = 0; t < static_cast<std::size_t>(period); ++t) {
    auto z = root.encl[(t * k) % L].mid_double();
    auto w = root.encl[(t * k + L - 1) % L].mid_double();
    std::array<double, 4> key{z.real(), z.imag(), w.real(), w.imag()};
    if (t == 0 || lex_less(key, best_key)) {
      best = t;
      best_key = key;
    }
  }
  PeriodicOrbit o;
  o.period = period;
  std::vector<ComplexRectD> seq(Lp);
  for (std::size_t i = 0; i < Lp; ++i) seq[i] = root.encl[(best * k + i) % L];
  o.sequence = seq;
  double width = 0;
  for (std::size_t t = 0; t < static_cast<std::size_t>(period); ++t) {
    BoxC2D b{seq[t * k], seq[(t * k + Lp - 1) % Lp]};
    o.boxes.push_back(b);
    width = std::max(width, b.diameter());
    auto m = b.mid_point();
    o.points.push_back({Dyadic::from_double(m.z.re.lo()), Dyadic::from_double(m.z.im.lo()),
                        Dyadic::from_double(m.w.re.lo()), Dyadic::from_double(m.w.im.lo())});
  }
  o.precision = Dyadic::from_double(width);
  return o;
}

}  // namespace detail

// All certified roots of the period-m cyclic system (exactly d(f)^m of them).
inline std::vector<detail::CertifiedRoot> certified_period_roots(const PolyDiffeo& f, int m,
                                                                 const PeriodicOptions& opt) {
  detail::CyclicSystem sys(f, m);
  std::uint64_t total = 1;
  for (int i = 0; i < sys.size(); ++i) total *= static_cast<std::uint64_t>(sys.degree(i));
  detail::RootSet found;
  for (int attempt = 0; attempt < opt.attempts && found.size() < total; ++attempt) {
    std::mt19937_64 rng(opt.seed + 7919ULL * static_cast<std::uint64_t>(m) + 104729ULL * static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    detail::cx gamma = std::polar(1.0, ang(rng));
    int chunks = chunk_count(total, opt.threads);
    std::vector<std::vector<detail::CertifiedRoot>> per_chunk(static_cast<std::size_t>(chunks));
    parallel_chunks(total, opt.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
      for (std::size_t q = b; q < e; ++q) {
        auto end = detail::track_path(sys, detail::start_point(sys, q), gamma);
        if (!end) continue;
        auto root = detail::certify_root(sys, *end);
        if (root) per_chunk[c].push_back(std::move(*root));
      }
    });
    for (auto& chunk : per_chunk)
      for (auto& r : chunk) found.insert(r);
  }
  if (found.size() != total)
    throw Inconclusive("period " + std::to_string(m) + ": certified " + std::to_string(found.size()) + " of " +
                       std::to_string(total) + " solutions");
  return found.roots();
}

// Orbits of prime period exactly m, certified and classified, sorted by first point.
inline std::vector<PeriodicOrbit> enumerate_prime_period(const PolyDiffeo& f, int m, const PeriodicOptions& opt) {
  if (m < 1) throw InvalidInput("period must be >= 1");
  const std::size_t k = f.factor_count();
  auto roots = certified_period_roots(f, m, opt);
  auto key = [](const detail::CertifiedRoot& r) { return r.encl[0].re.mid(); };
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    for (std::size_t i = 0; i < a.encl.size(); ++i) {
      auto x = a.encl[i].mid_double(), y = b.encl[i].mid_double();
      if (x.real() != y.real()) return x.real() < y.real();
      if (x.imag() != y.imag()) return x.imag() < y.imag();
    }
    return false;
  });
  std::vector<double> keys;
  double reach = 0;
  for (const auto& r : roots) {
    keys.push_back(key(r));
    reach = std::max(reach, r.uniq[0].re.width());
  }
  // candidates whose uniqueness box may contain the shifted enclosure
  auto lookup = [&](const std::vector<ComplexRectD>& sh, std::vector<char>& used) {
    auto lo = std::lower_bound(keys.begin(), keys.end(), sh[0].re.lo() - reach);
    for (auto it = lo; it != keys.end() && *it <= sh[0].re.hi() + reach; ++it) {
      auto s = static_cast<std::size_t>(it - keys.begin());
      if (detail::all_contain(roots[s].uniq, sh)) used[s] = 1;
    }
  };
  std::vector<PeriodicOrbit> out;
  std::vector<char> used(roots.size(), 0);
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (used[r]) continue;
    // prime period: smallest shift by t*k mapping the root to itself
    int prime = m;
    for (int t = 1; t < m; ++t) {
      if (m % t != 0) continue;
      if (detail::all_contain(roots[r].uniq, detail::shifted(roots[r].encl, static_cast<std::size_t>(t) * k))) {
        prime = t;
        break;
      }
    }
    for (int t = 0; t < m; ++t) lookup(detail::shifted(roots[r].encl, static_cast<std::size_t>(t) * k), used);
    used[r] = 1;
    if (prime != m) continue;  // reported at its own period
    PeriodicOrbit o = detail::make_orbit(f, roots[r], m);
    if (o.precision > Dyadic::pow2(-opt.precision_bits))
      throw PrecisionExhausted("orbit enclosure wider than the requested precision");
    classify(o, f);
    out.push_back(std::move(o));
  }
  std::sort(out.begin(), out.end(),
            [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.points.front() < b.points.front(); });
  return out;
}

// Every periodic orbit of period <= opt.max_period, each certified,
// classified and reported once at its prime period, sorted by (period, first point).
inline std::vector<PeriodicOrbit> enumerate_periodic(const PolyDiffeo& f, const PeriodicOptions& opt) {
  if (opt.max_period < 1) throw InvalidInput("max period must be >= 1");
  std::vector<PeriodicOrbit> out;
  for (int m = 1; m <= opt.max_period; ++m) {
    auto part = enumerate_prime_period(f, m, opt);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace henon

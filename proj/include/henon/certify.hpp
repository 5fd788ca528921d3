#pragma once

// Hyperbolicity certificates: expansion witness, cone fields over the saddle
// part of a 2^-N approximation of J, the constants gamma, Q and Delta, and an
// independent re-verification.
//
// Cones.  A frame (e1, e2) at a box defines S = {alpha e1 + beta e2 : |beta| <= rho |alpha|}.
// For the unstable cone (e1, e2) = (e^u, e^s) and the derivative is D f^m; the
// stable cone swaps the axes and uses D f^-m.  Every vector of S is a multiple
// of e1 + t e2 with |t| <= rho; the boundary is |t| = rho.
//
// What the certifier proves, for every box j of Xi' and y in its double 2B_j:
//   (a) D_y f^m maps S_j into the interior of S_j' for every Xi' box j' whose
//       double can contain f^m(y);
//   (b) |D_y f^m v| >= (1 + lambda/4) |v| for v in S_j;
// and the mirror statements for f^-m.  At the base point x of the frame (a)
// is checked with the margin gamma and (b) with 1 + lambda/2; both extend to
// all of 2B_j because |x - y|_inf <= 4R/2^k < 2^-N < Delta and Q Delta is below
// gamma and lambda/4.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "henon/juliaset.hpp"

namespace henon {

struct ExpansionWitness {
  int m = 1;
  Dyadic lambda;
};

struct ConeFrame {
  BoxKey box = 0;
  std::array<Dyadic, 4> base{};  // certified saddle point approximation
  BoxC2D base_box;               // its enclosure, inside the doubled box
  VecC2D eu;                     // unit eigenvector enclosures at the base point
  VecC2D es;
  Dyadic rho;
  // Per direction (forward, inverse): second-derivative bound over the doubled
  // box, lower bound of |D_x f^+-m b| over unit cone-boundary directions, and
  // lower bound of the expansion |D_x f^+-m v| / |v| over the cone.
  std::array<Dyadic, 2> M2{};
  std::array<Dyadic, 2> mu{};
  std::array<Dyadic, 2> expansion{};

  // The cones use the midpoints of the enclosures as axes.
  [[nodiscard]] VecC2D axis_u() const { return {eu.x.mid_point(), eu.y.mid_point()}; }
  [[nodiscard]] VecC2D axis_s() const { return {es.x.mid_point(), es.y.mid_point()}; }
};

enum class CertStatus { kCertified, kNotYet };

inline const char* to_string(CertStatus s) { return s == CertStatus::kCertified ? "certified" : "not-yet"; }

struct HypCertificate {
  int N = 0;
  int n = 0;
  int k = 0;
  Dyadic R;
  ExpansionWitness witness;
  Dyadic rho;
  Dyadic gamma;
  Dyadic Q;
  Dyadic M2;
  Dyadic mu;
  Dyadic delta;
  bool delta_infinite = false;
  int phase_samples = 16;
  std::vector<ConeFrame> frames;  // sorted by box key
  std::vector<BoxKey> attracting;  // boxes of attracting components, sorted
  std::vector<BoxKey> repelling;   // boxes of repelling components, sorted
  CertStatus status = CertStatus::kNotYet;
  std::string note;  // why the last attempt did not certify

  [[nodiscard]] GridSpec grid() const { return GridSpec(R, k); }
};

inline constexpr long kRhoBits = 64;

namespace detail {

// floor(num / den * 2^bits) / 2^bits for positive integers.
inline Dyadic floor_ratio(const mpz_class& num, const mpz_class& den, long bits) {
  mpz_class q;
  mpz_class scaled = num << static_cast<mp_bitcnt_t>(bits);
  mpz_fdiv_q(q.get_mpz_t(), scaled.get_mpz_t(), den.get_mpz_t());
  return Dyadic(q, -bits);
}

// Integers (p, q) with a / b = p / q for positive dyadics.
inline std::pair<mpz_class, mpz_class> as_fraction(const Dyadic& a, const Dyadic& b) {
  long e = a.exponent() - b.exponent();
  mpz_class p = a.mantissa(), q = b.mantissa();
  if (e >= 0) p <<= static_cast<mp_bitcnt_t>(e);
  else q <<= static_cast<mp_bitcnt_t>(-e);
  return {p, q};
}

inline FastInterval to_fast(const Dyadic& d) { return FastInterval::from_dyadic(d); }

inline double lambda_double(const Dyadic& l) { return l.to_double_down(); }

}  // namespace detail

// rho = (1 + lambda)/(1 + lambda/2) - 1 = lambda / (2 + lambda), rounded down
// to a multiple of 2^-64.
inline Dyadic rho_of_lambda(const Dyadic& lambda) {
  if (lambda.sign() <= 0) throw InvalidInput("lambda must be positive");
  auto [p, q] = detail::as_fraction(lambda, lambda + Dyadic(2));
  Dyadic r = detail::floor_ratio(p, q, kRhoBits);
  if (r.sign() <= 0) throw InvalidInput("lambda too small for the rho grid");
  return r;
}

struct Delta {
  Dyadic value;
  bool infinite = false;
};

// Largest multiple of 2^-bits strictly below min(gamma, lambda/4) / Q.  Q = 0
// gives the +infinity sentinel.
inline Delta compute_delta(const Dyadic& Q, const Dyadic& gamma, const Dyadic& lambda, long bits = 64) {
  if (Q.sign() < 0 || gamma.sign() <= 0 || lambda.sign() <= 0)
    throw InvalidInput("compute_delta needs Q >= 0, gamma > 0, lambda > 0");
  if (Q.is_zero()) return {Dyadic(), true};
  Dyadic a = std::min(gamma, lambda.scaled(-2)).scaled(bits);
  auto [p, q] = detail::as_fraction(a, Q);
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), p.get_mpz_t(), q.get_mpz_t());
  return {Dyadic(c - 1, -bits), false};
}

// Q for one frame and direction, rounded up:
//   Q = max(2 M2 / mu, M2 lambda / (4E - 4 - lambda)).
// The first term bounds the Lipschitz constant of the normalized image
// direction; the second makes Q Delta < lambda/4 imply E - M2 Delta >= 1 + lambda/4.
// With E = 1 + lambda/2 the second term is M2.
inline Dyadic q_from_bounds(const Dyadic& M2, const Dyadic& mu, const Dyadic& E, const Dyadic& lambda) {
  if (M2.is_zero()) return {};
  if (mu.sign() <= 0) throw Inconclusive("no positive lower bound on the image norm");
  Dyadic slack = E.scaled(2) - Dyadic(4) - lambda;
  if (slack.sign() <= 0) throw Inconclusive("expansion does not exceed 1 + lambda/4");
  return std::max(Dyadic::div_up(M2.scaled(1), mu, 64), Dyadic::div_up(M2 * lambda, slack, 64));
}

// Q = max(M2, 2 M2 / mu): the bound above at the minimal expansion 1 + lambda/2.
inline Dyadic q_from_bounds(const Dyadic& M2, const Dyadic& mu) {
  if (M2.is_zero()) return {};
  return q_from_bounds(M2, mu, Dyadic(2), Dyadic(2));
}

// Expansion witness by the diagonal schedule s = 1, 2, ...: lambda = 2^-s and
// m = 1 .. min(s, m_max), first success wins.
inline ExpansionWitness find_witness(const std::vector<PeriodicOrbit>& saddles, const PolyDiffeo& f, int m_max,
                                     int s_max = 24) {
  if (m_max < 1) throw InvalidInput("m_max must be >= 1");
  for (const auto& o : saddles)
    if (o.cls != OrbitClass::kSaddle || o.eigen.size() != o.points.size())
      throw InvalidInput("find_witness needs classified saddle orbits");
  // worst[m-1]: lower bound of min over points and both directions.
  std::vector<double> worst(static_cast<std::size_t>(m_max), INFINITY);
  for (int m = 1; m <= m_max; ++m) {
    double w = INFINITY;
    for (const auto& o : saddles)
      for (std::size_t t = 0; t < o.points.size(); ++t) {
        try {
          MatrixRectD Lu = iterate_jacobian(f, o.boxes[t], m, Direction::kForward);
          MatrixRectD Ls = iterate_jacobian(f, o.boxes[t], m, Direction::kInverse);
          w = std::min({w, euclid_norm(Lu * o.eigen[t].eu).lo(), euclid_norm(Ls * o.eigen[t].es).lo()});
        } catch (const DivisionByIntervalContainingZero&) {
          w = 0;
        }
      }
    worst[static_cast<std::size_t>(m - 1)] = w;
  }
  for (int s = 1; s <= s_max; ++s) {
    double need = 1.0 + std::ldexp(1.0, -s);  // exact
    for (int m = 1; m <= std::min(s, m_max); ++m)
      if (worst[static_cast<std::size_t>(m - 1)] >= need) return {m, Dyadic::pow2(-s)};
  }
  throw BudgetExhausted("no expansion witness with m <= " + std::to_string(m_max));
}

namespace detail {

// Rectangles covering the circle |t| = rho, via t = rho ((1 - s^2) + 2 i s)/(1 + s^2)
// and its negative for s in [-1, 1].
inline std::vector<ComplexRectD> boundary_arcs(const FastInterval& rho, int pieces) {
  int half = std::max(2, pieces / 2);
  std::vector<ComplexRectD> out;
  for (int sign : {1, -1})
    for (int i = 0; i < half; ++i) {
      FastInterval s(-1.0 + 2.0 * i / half, -1.0 + 2.0 * (i + 1) / half);  // exact for power-of-two half
      if (i + 1 == half) s = FastInterval(s.lo(), 1.0);
      FastInterval s2 = sqr(s);
      FastInterval den = FastInterval(1.0) + s2;
      ComplexRectD e((FastInterval(1.0) - s2) / den, s.scaled_pow2(1) / den);
      if (sign < 0) e = -e;
      out.push_back(rho * e);
    }
  return out;
}

// Rectangles covering the disk |t| <= rho.
inline std::vector<ComplexRectD> disk_cells(const FastInterval& rho, int per_side) {
  std::vector<ComplexRectD> out;
  double r = rho.hi();
  for (int i = 0; i < per_side; ++i)
    for (int j = 0; j < per_side; ++j) {
      FastInterval x(-r + 2 * r * i / per_side, i + 1 == per_side ? r : -r + 2 * r * (i + 1) / per_side);
      FastInterval y(-r + 2 * r * j / per_side, j + 1 == per_side ? r : -r + 2 * r * (j + 1) / per_side);
      ComplexRectD c(x, y);
      if (abs(c).lo() <= r) out.push_back(c);
    }
  return out;
}

inline MatrixRectD frame_matrix(const VecC2D& e1, const VecC2D& e2) {
  MatrixRectD G;
  G(0, 0) = e1.x;
  G(1, 0) = e1.y;
  G(0, 1) = e2.x;
  G(1, 1) = e2.y;
  return G;
}

inline VecC2D add_scaled(const VecC2D& a, const ComplexRectD& t, const VecC2D& b) { return a + t * b; }

inline BoxC2D iterate_box(const PolyDiffeo& f, BoxC2D b, int m, Direction dir) {
  for (int i = 0; i < m; ++i) b = eval(f, b, dir);
  return b;
}

struct Gap {
  bool bounded = false;
  double gamma = 0.0;
};

// Lower bound on the distance from L v / |L v|, v = a + t b with t on the arcs,
// to the unit vectors outside the cone of the target frame (a2, b2).
inline Gap image_gap(const MatrixRectD& L, const VecC2D& a, const VecC2D& b, const VecC2D& a2, const VecC2D& b2,
                     const FastInterval& rho, const std::vector<ComplexRectD>& arcs) {
  Gap out;
  FastInterval one(1.0);
  MatrixRectD Ginv = frame_matrix(a2, b2).inverse();
  FastInterval g(Ginv.norm_bound());
  VecC2D c1 = Ginv * (L * a), c2 = Ginv * (L * b);  // (p1, q1), (p2, q2)
  // p1 + t p2 never vanishes on the disk, so the image of the disk is the
  // inside of the image circle
  if (!(abs(c1.x).lo() > (rho * abs(c2.x)).hi())) return out;
  out.bounded = true;
  out.gamma = INFINITY;
  for (const auto& t : arcs) {
    ComplexRectD p = c1.x + t * c2.x, q = c1.y + t * c2.y;
    FastInterval n = euclid_norm(L * add_scaled(a, t, b));
    FastInterval lo = (rho * abs(p) - abs(q)) / (g * (one + rho) * n);
    out.gamma = std::min(out.gamma, lo.lo());
    if (!(out.gamma > 0.0)) return out;
  }
  return out;
}

// Sorted keys with a lookup for doubled boxes meeting a region.
struct FrameIndex {
  ChainModel view;

  FrameIndex(const GridSpec& spec, const std::vector<ConeFrame>& frames) {
    view.spec = spec;
    for (const auto& fr : frames) view.boxes.push_back(fr.box);
  }
  [[nodiscard]] std::vector<std::uint32_t> doubled_meeting(const BoxC2D& region) const {
    std::vector<std::uint32_t> out;
    for (auto i : view.boxes_meeting(inflate(region, view.spec.side() / 2)))
      if (view.spec.doubled(view.boxes[i]).intersects(region)) out.push_back(i);
    return out;
  }
};

struct SideResult {
  bool ok = true;
  std::string reason;
  double gamma = INFINITY;  // lower bound
  double mu = INFINITY;     // lower bound of |L_x b| over unit boundary directions
  double expansion = INFINITY;
  Dyadic M2;                // upper bound over the doubled box
};

// Checks one frame in one direction at its base point.
inline SideResult analyze_side(const PolyDiffeo& f, const GridSpec& spec, const std::vector<ConeFrame>& frames,
                               const FrameIndex& index, std::size_t j, const ExpansionWitness& w,
                               Direction dir, int phase_samples) {
  SideResult out;
  const ConeFrame& fr = frames[j];
  const bool fwd = dir == Direction::kForward;
  VecC2D a = fwd ? fr.axis_u() : fr.axis_s();
  VecC2D b = fwd ? fr.axis_s() : fr.axis_u();
  FastInterval rho = to_fast(fr.rho);
  FastInterval one(1.0);
  FastInterval expand = one + FastInterval(lambda_double(w.lambda)).scaled_pow2(-1);
  try {
    MatrixRectD L = iterate_jacobian(f, fr.base_box, w.m, dir);
    auto arcs = boundary_arcs(rho, phase_samples);
    // mu and the expansion at the base point
    for (const auto& t : arcs) {
      VecC2D v = add_scaled(a, t, b);
      out.mu = std::min(out.mu, (euclid_norm(L * v) / euclid_norm(v)).lo());
    }
    for (const auto& t : disk_cells(rho, 8)) {
      VecC2D v = add_scaled(a, t, b);
      out.expansion = std::min(out.expansion, (euclid_norm(L * v) / euclid_norm(v)).lo());
    }
    if (!(out.expansion >= expand.hi())) {
      out.ok = false;
      out.reason = "expansion below 1 + lambda/2 at a base point";
      return out;
    }
    BoxC2D dbl = spec.doubled(fr.box);
    BoxC2D image = iterate_box(f, dbl, w.m, dir);
    for (auto t_idx : index.doubled_meeting(image)) {
      const ConeFrame& tf = frames[t_idx];
      VecC2D a2 = fwd ? tf.axis_u() : tf.axis_s();
      VecC2D b2 = fwd ? tf.axis_s() : tf.axis_u();
      auto gap = image_gap(L, a, b, a2, b2, rho, arcs);
      if (!gap.bounded || !(gap.gamma > 0.0)) {
        out.ok = false;
        out.reason = gap.bounded ? "cone boundary not mapped strictly inside" : "image cone not bounded in the target frame";
        return out;
      }
      out.gamma = std::min(out.gamma, gap.gamma);
    }
    out.M2 = second_derivative_bound(f, dbl, w.m, dir);
  } catch (const DivisionByIntervalContainingZero&) {
    out.ok = false;
    out.reason = "degenerate frame or derivative enclosure";
  }
  return out;
}

}  // namespace detail

struct FrameAnalysis {
  bool ok = true;
  std::string reason;
  Dyadic gamma;  // lower bound, capped at 2
  Dyadic mu;     // smallest per-frame mu
  Dyadic M2;     // largest per-frame M2
  Dyadic Q;      // largest per-frame Q
};

// Q over the per-frame bounds stored in the frames.
inline Dyadic q_over_frames(const std::vector<ConeFrame>& frames, const Dyadic& lambda) {
  Dyadic q;
  for (const auto& fr : frames)
    for (std::size_t d = 0; d < 2; ++d) q = std::max(q, q_from_bounds(fr.M2[d], fr.mu[d], fr.expansion[d], lambda));
  return q;
}

// Checks every frame in both directions and fills the per-frame bounds;
// reductions run in frame order.
inline FrameAnalysis analyze_frames(const PolyDiffeo& f, const GridSpec& spec, std::vector<ConeFrame>& frames,
                                    const ExpansionWitness& w, int phase_samples, int threads = 1) {
  detail::FrameIndex index(spec, frames);
  std::vector<detail::SideResult> res(2 * frames.size());
  parallel_chunks(frames.size(), threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      res[2 * j] = detail::analyze_side(f, spec, frames, index, j, w, Direction::kForward, phase_samples);
      res[2 * j + 1] = detail::analyze_side(f, spec, frames, index, j, w, Direction::kInverse, phase_samples);
    }
  });
  FrameAnalysis out;
  double gamma = 2.0, mu = INFINITY;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& r = res[i];
    if (!r.ok) {
      out.ok = false;
      out.reason = r.reason + " (box " + std::to_string(frames[i / 2].box) + (i % 2 ? ", f^-m)" : ", f^m)");
      return out;
    }
    auto& fr = frames[i / 2];
    fr.M2[i % 2] = r.M2;
    fr.mu[i % 2] = Dyadic::from_double(r.mu);
    fr.expansion[i % 2] = Dyadic::from_double(r.expansion);
    gamma = std::min(gamma, r.gamma);
    mu = std::min(mu, r.mu);
    out.M2 = std::max(out.M2, r.M2);
  }
  if (frames.empty()) mu = 1.0;
  out.gamma = Dyadic::from_double(gamma);
  out.mu = Dyadic::from_double(mu);
  if (out.mu.sign() <= 0 || out.gamma.sign() <= 0) {
    out.ok = false;
    out.reason = "no positive lower bound on gamma or the image norm";
    return out;
  }
  try {
    out.Q = q_over_frames(frames, w.lambda);
  } catch (const Inconclusive& e) {
    out.ok = false;
    out.reason = e.what();
  }
  return out;
}

// Lower bound gamma over all frames; throws Inconclusive when it does not clear 0.
inline Dyadic compute_gamma(const PolyDiffeo& f, const GridSpec& spec, std::vector<ConeFrame> frames,
                            const ExpansionWitness& w, int phase_samples = 16, int threads = 1) {
  auto a = analyze_frames(f, spec, frames, w, phase_samples, threads);
  if (!a.ok) throw Inconclusive(a.reason);
  return a.gamma;
}

struct QBound {
  Dyadic M2;
  Dyadic mu;
  Dyadic Q;
};

inline QBound compute_Q(const PolyDiffeo& f, const GridSpec& spec, std::vector<ConeFrame> frames,
                        const ExpansionWitness& w, int phase_samples = 16, int threads = 1) {
  auto a = analyze_frames(f, spec, frames, w, phase_samples, threads);
  if (!a.ok) throw Inconclusive(a.reason);
  return {a.M2, a.mu, a.Q};
}

// One frame per box of xi: the first saddle point (by orbit, then point order)
// whose enclosure lies in the doubled box, preferring points in the box itself.
inline std::optional<std::vector<ConeFrame>> assign_frames(const GridSpec& spec, const std::vector<BoxKey>& xi,
                                                           const std::vector<PeriodicOrbit>& orbits,
                                                           const Dyadic& rho) {
  ChainModel view;
  view.spec = spec;
  view.boxes = xi;
  std::sort(view.boxes.begin(), view.boxes.end());
  struct Pick {
    int rank = 3;
    std::size_t orbit = 0, point = 0;
  };
  std::vector<Pick> pick(view.boxes.size());
  for (std::size_t o = 0; o < orbits.size(); ++o) {
    if (orbits[o].cls != OrbitClass::kSaddle) continue;
    for (std::size_t t = 0; t < orbits[o].points.size(); ++t) {
      const BoxC2D& pb = orbits[o].boxes[t];
      for (auto i : view.boxes_meeting(inflate(pb, spec.side() / 2))) {
        if (!spec.doubled(view.boxes[i]).contains(pb)) continue;
        int rank = closed_contains(spec.box(view.boxes[i]), orbits[o].points[t]) ? 0 : 1;
        if (rank < pick[i].rank) pick[i] = {rank, o, t};
      }
    }
  }
  std::vector<ConeFrame> frames;
  for (std::size_t i = 0; i < view.boxes.size(); ++i) {
    if (pick[i].rank > 1) return std::nullopt;
    const auto& o = orbits[pick[i].orbit];
    ConeFrame fr;
    fr.box = view.boxes[i];
    fr.base = o.points[pick[i].point];
    fr.base_box = o.boxes[pick[i].point];
    fr.eu = o.eigen[pick[i].point].eu;
    fr.es = o.eigen[pick[i].point].es;
    fr.rho = rho;
    frames.push_back(std::move(fr));
  }
  return frames;
}

struct CertifyOptions {
  int min_N = 0;
  int max_N = 12;
  int phase_samples = 16;
  int julia_slack = 10;  // loop indices tried past n' for each N
  int max_m = 16;
  int threads = 1;
  std::uint64_t seed = 0x5eed;
  EllSchedule ell = EllSchedule::kLinear;
  HaltingMode halting = HaltingMode::kDoubled;
  std::function<void(const std::string&)> log;
};

// Steps 1 to 6 for one N.  Returns a certificate whose status says whether
// the halting test passed; `note` carries the reason otherwise.
inline HypCertificate certify_at(const PolyDiffeo& f, int N, const CertifyOptions& opt) {
  HypCertificate c;
  c.N = N;
  c.R = filtration_radius(f);
  c.phase_samples = opt.phase_samples;
  JuliaOptions jo;
  jo.N = N;
  jo.max_n = compute_n_prime(N, c.R) + opt.julia_slack;
  jo.ell = opt.ell;
  jo.halting = opt.halting;
  jo.threads = opt.threads;
  jo.seed = opt.seed;
  ApproximationResult r;
  try {
    r = run_julia(f, jo);
  } catch (const BudgetExhausted& e) {
    c.note = std::string("approximation: ") + e.what();
    return c;
  } catch (const PrecisionExhausted& e) {
    c.note = std::string("approximation: ") + e.what();
    return c;
  }
  c.n = r.n;
  c.k = r.k;
  std::vector<PeriodicOrbit> saddles;
  for (const auto& o : r.orbits)
    if (o.cls == OrbitClass::kSaddle) saddles.push_back(o);
  auto xi = r.xi_prime();
  if (xi.empty() || saddles.empty()) {
    c.note = "no saddle part";
    return c;
  }
  int m_max = std::min(opt.max_m, 1 << std::min(N, 20));
  try {
    c.witness = find_witness(saddles, f, m_max);
  } catch (const BudgetExhausted& e) {
    c.note = std::string("witness: ") + e.what();
    return c;
  }
  c.rho = rho_of_lambda(c.witness.lambda);
  auto frames = assign_frames(r.model.spec, xi, r.orbits, c.rho);
  if (!frames) {
    c.note = "a saddle box has no saddle point in its double";
    return c;
  }
  c.frames = std::move(*frames);
  for (std::uint32_t i = 0; i < r.model.size(); ++i) {
    auto cls = r.types[r.model.component[i]].cls;
    if (cls == OrbitClass::kAttracting) c.attracting.push_back(r.model.boxes[i]);
    if (cls == OrbitClass::kRepelling) c.repelling.push_back(r.model.boxes[i]);
  }
  auto a = analyze_frames(f, r.model.spec, c.frames, c.witness, opt.phase_samples, opt.threads);
  if (!a.ok) {
    c.note = a.reason;
    return c;
  }
  c.gamma = a.gamma;
  c.mu = a.mu;
  c.M2 = a.M2;
  c.Q = a.Q;
  Delta d = compute_delta(c.Q, c.gamma, c.witness.lambda, 2L * N);
  c.delta = d.value;
  c.delta_infinite = d.infinite;
  if (d.infinite || Dyadic::pow2(-N) < d.value) c.status = CertStatus::kCertified;
  else c.note = "2^-N >= Delta";
  return c;
}

// The semi-algorithm: N = min_N, min_N + 1, ... up to max_N.  On budget
// exhaustion the last attempt is stored in *partial before BudgetExhausted.
inline HypCertificate run_certifier(const PolyDiffeo& f, const CertifyOptions& opt, HypCertificate* partial = nullptr) {
  if (f.dynamical_degree() < 2) throw InvalidInput("dynamical degree must exceed 1");
  if (opt.phase_samples < 4) throw InvalidInput("phase samples must be >= 4");
  HypCertificate last;
  for (int N = opt.min_N; N <= opt.max_N; ++N) {
    last = certify_at(f, N, opt);
    if (opt.log) {
      std::ostringstream os;
      os << "N = " << N << ": " << to_string(last.status);
      if (!last.frames.empty())
        os << ", m = " << last.witness.m << ", lambda = " << last.witness.lambda.to_double_nearest()
           << ", gamma = " << last.gamma.to_double_down() << ", Q = " << last.Q.to_double_up()
           << ", Delta = " << last.delta.to_double_down() << ", " << last.frames.size() << " frames";
      if (!last.note.empty()) os << " (" << last.note << ")";
      opt.log(os.str());
    }
    if (last.status == CertStatus::kCertified) return last;
  }
  if (partial) *partial = last;
  throw BudgetExhausted("no certificate for N <= " + std::to_string(opt.max_N));
}

struct VerificationReport {
  std::size_t samples = 0;
  std::size_t cone_checks = 0;
  std::size_t violations = 0;
  std::string first_violation;
};

// Exact consistency of the stored constants; throws VerificationFailure.
inline void check_certificate_arithmetic(const HypCertificate& c) {
  auto fail = [](const std::string& s) { throw VerificationFailure(s); };
  if (c.status != CertStatus::kCertified) throw InvalidInput("certificate is not certified");
  if (c.witness.m < 1 || c.witness.lambda.sign() <= 0) fail("witness out of range");
  if (!(c.rho == rho_of_lambda(c.witness.lambda))) fail("rho does not match lambda");
  if (!(c.rho.sign() > 0 && c.rho < Dyadic(1))) fail("rho outside (0, 1)");
  if (c.k < 0 || !(c.R.scaled(2 - c.k) < Dyadic::pow2(-c.N))) fail("doubled boxes not smaller than 2^-N");
  if (c.gamma.sign() <= 0 || c.mu.sign() <= 0) fail("gamma and mu must be positive");
  try {
    if (!(c.Q == q_over_frames(c.frames, c.witness.lambda))) fail("Q does not match the frame bounds");
  } catch (const Inconclusive& e) {
    fail(e.what());
  }
  const Dyadic base_expansion = Dyadic(1) + c.witness.lambda.scaled(-1);
  if (!c.delta_infinite) {
    if (!(c.Q * c.delta < c.gamma)) fail("Q Delta >= gamma");
    if (!(c.Q * c.delta < c.witness.lambda.scaled(-2))) fail("Q Delta >= lambda/4");
    if (!(Dyadic::pow2(-c.N) < c.delta)) fail("2^-N >= Delta");
  } else if (!c.Q.is_zero()) {
    fail("infinite Delta with Q > 0");
  }
  GridSpec g = c.grid();
  if (!std::is_sorted(c.attracting.begin(), c.attracting.end()) || !std::is_sorted(c.repelling.begin(), c.repelling.end()))
    fail("sink or source boxes not sorted");
  for (std::size_t i = 0; i < c.frames.size(); ++i) {
    const auto& fr = c.frames[i];
    if (i > 0 && !(c.frames[i - 1].box < fr.box)) fail("frames not sorted by box");
    if (!(fr.rho == c.rho)) fail("frame rho differs");
    if (!g.doubled(fr.box).contains(fr.base_box)) fail("frame base point outside its doubled box");
    if (std::binary_search(c.attracting.begin(), c.attracting.end(), fr.box) ||
        std::binary_search(c.repelling.begin(), c.repelling.end(), fr.box))
      fail("box is both saddle and non-saddle");
    for (std::size_t d = 0; d < 2; ++d) {
      if (fr.expansion[d] < base_expansion) fail("frame expansion below 1 + lambda/2");
      if (fr.mu[d] < c.mu || c.M2 < fr.M2[d]) fail("frame bounds outside the certificate extremes");
    }
  }
}

// Certified membership of v in {alpha a + beta b : |beta| <= rho |alpha|}.
// The unstable cone of a frame uses (a, b) = (e^u, e^s), the stable one (e^s, e^u).
inline bool in_cone(const VecC2D& a, const VecC2D& b, const FastInterval& rho, const VecC2D& v) {
  VecC2D pq = detail::frame_matrix(a, b).inverse() * v;
  return abs(pq.y).hi() <= (rho * abs(pq.x)).lo();
}

// Independent re-verification: exact arithmetic, the witness inequality on
// every frame axis, and Monte-Carlo cone preservation and expansion.
inline VerificationReport verify_certificate(const HypCertificate& c, const PolyDiffeo& f, std::size_t samples,
                                             std::uint64_t seed = 1) {
  check_certificate_arithmetic(c);
  const int m = c.witness.m;
  const double lam = c.witness.lambda.to_double_down();
  if (!(Dyadic::from_double(lam) == c.witness.lambda)) throw InvalidInput("lambda is not a double");
  for (const auto& fr : c.frames) {
    FastInterval need(1.0 + lam);
    auto nu = euclid_norm(iterate_jacobian(f, fr.base_box, m, Direction::kForward) * fr.eu);
    auto ns = euclid_norm(iterate_jacobian(f, fr.base_box, m, Direction::kInverse) * fr.es);
    if (!(nu.lo() >= need.hi() && ns.lo() >= need.hi()))
      throw VerificationFailure("frame axis at box " + std::to_string(fr.box) + " expands by less than 1 + lambda");
  }
  VerificationReport rep;
  if (c.frames.empty()) return rep;
  GridSpec g = c.grid();
  detail::FrameIndex index(g, c.frames);
  const double rho = c.rho.to_double_down();  // sampled cones sit inside the certified ones
  const FastInterval rho_i(rho);
  const FastInterval expand = FastInterval(1.0) + FastInterval(lam).scaled_pow2(-2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto violation = [&](const std::string& s) {
    if (rep.violations++ == 0) rep.first_violation = s;
  };
  for (std::size_t i = 0; i < samples; ++i) {
    std::size_t j = rng() % c.frames.size();
    const ConeFrame& fr = c.frames[j];
    BoxC2D d = g.doubled(fr.box);
    std::array<double, 4> y{};
    for (int q = 0; q < 4; ++q) {
      const auto& ci = d.coord(q);
      y[static_cast<std::size_t>(q)] = std::clamp(ci.lo() + u01(rng) * (ci.hi() - ci.lo()), ci.lo(), ci.hi());
    }
    double r = rho * std::sqrt(u01(rng)), th = 2 * std::numbers::pi * u01(rng);
    ComplexRectD t = ComplexRectD::point(r * std::cos(th), r * std::sin(th));
    if (!(abs(t).hi() <= rho)) t = ComplexRectD::point(0.0, 0.0);
    BoxC2D yb = BoxC2D::point(y[0], y[1], y[2], y[3]);
    std::ostringstream where;
    where << "sample " << i << " box " << fr.box << " y=(" << y[0] << ", " << y[1] << ", " << y[2] << ", " << y[3]
          << ")";
    for (Direction dir : {Direction::kForward, Direction::kInverse}) {
      const bool fwd = dir == Direction::kForward;
      VecC2D a = fwd ? fr.axis_u() : fr.axis_s(), b = fwd ? fr.axis_s() : fr.axis_u();
      VecC2D v = a + t * b;
      MatrixRectD L = iterate_jacobian(f, yb, m, dir);
      VecC2D w = L * v;
      if (!(euclid_norm(w).lo() >= (expand * euclid_norm(v)).hi()))
        violation(where.str() + (fwd ? " forward" : " inverse") + ": expansion below 1 + lambda/4");
      BoxC2D img = detail::iterate_box(f, yb, m, dir);
      for (auto ti : index.doubled_meeting(img)) {
        const ConeFrame& tf = c.frames[ti];
        VecC2D a2 = fwd ? tf.axis_u() : tf.axis_s(), b2 = fwd ? tf.axis_s() : tf.axis_u();
        ++rep.cone_checks;
        if (!in_cone(a2, b2, rho_i, w))
          violation(where.str() + (fwd ? " forward" : " inverse") + ": image leaves the cone of box " +
                    std::to_string(tf.box));
      }
    }
    ++rep.samples;
  }
  if (rep.violations != 0)
    throw VerificationFailure(std::to_string(rep.violations) + " violations; first: " + rep.first_violation);
  return rep;
}

}  // namespace henon

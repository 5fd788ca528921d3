#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "henon/certify.hpp"

using namespace henon;

namespace {

Dyadic dy(long m, long e) { return Dyadic(mpz_class(m), e); }
ComplexDyadic cd(Dyadic re, Dyadic im = {}) { return {std::move(re), std::move(im)}; }

PolyDiffeo horseshoe() { return PolyDiffeo::quadratic(cd(Dyadic(-6)), cd(dy(1, -4))); }

// Quadratic map with a = 1 whose fixed point z = w = tr/2 has Jacobian trace
// tr and determinant 1, so its multipliers are mu and 1/mu with tr = mu + 1/mu.
PolyDiffeo unit_det_map(double mu) {
  double z = (mu + 1 / mu) / 2;
  // fixed point of (z^2 + c - w, z): z^2 - 2z + c = 0
  return PolyDiffeo::quadratic(cd(Dyadic::from_double(2 * z - z * z)), cd(Dyadic(1)));
}

std::vector<PeriodicOrbit> fixed_saddles(const PolyDiffeo& f) {
  PeriodicOptions o;
  o.max_period = 1;
  o.precision_bits = 30;
  std::vector<PeriodicOrbit> out;
  for (auto& orb : enumerate_periodic(f, o))
    if (orb.cls == OrbitClass::kSaddle) out.push_back(std::move(orb));
  return out;
}

VecC2D point_vec(std::complex<double> x, std::complex<double> y) {
  return {ComplexRectD::point(x.real(), x.imag()), ComplexRectD::point(y.real(), y.imag())};
}

struct HorseshoeCert : ::testing::Test {
  static const HypCertificate& cert() {
    static const HypCertificate c = [] {
      CertifyOptions o;
      o.threads = 4;
      return run_certifier(horseshoe(), o);
    }();
    return c;
  }
};

}  // namespace

TEST(Rho, ExactExamples) {
  EXPECT_EQ(rho_of_lambda(Dyadic(2)), dy(1, -1));
  EXPECT_EQ(rho_of_lambda(Dyadic(6)), dy(3, -2));
}

TEST(Rho, RoundsDownAndIsMonotone) {
  Dyadic prev;
  for (int s = -30; s <= 30; ++s) {
    Dyadic lam = Dyadic::pow2(s);
    Dyadic r = rho_of_lambda(lam);
    // r <= lambda / (2 + lambda) < r + 2^-64
    EXPECT_LE(r * (Dyadic(2) + lam), lam);
    EXPECT_GT((r + Dyadic::pow2(-kRhoBits)) * (Dyadic(2) + lam), lam);
    EXPECT_GT(r, Dyadic());
    EXPECT_LT(r, Dyadic(1));
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_LT(rho_of_lambda(Dyadic::pow2(-30)), Dyadic::pow2(-30));
  EXPECT_GT(rho_of_lambda(Dyadic::pow2(30)), Dyadic(1) - Dyadic::pow2(-29));
  EXPECT_THROW(rho_of_lambda(Dyadic()), InvalidInput);
}

TEST(Delta, Examples) {
  Dyadic just_below = dy(1, -2) - Dyadic::pow2(-64);
  EXPECT_EQ(compute_delta(Dyadic(1), dy(1, -1), Dyadic(1)).value, just_below);
  EXPECT_EQ(compute_delta(Dyadic(4), Dyadic(1), Dyadic(8)).value, just_below);
  EXPECT_TRUE(compute_delta(Dyadic(), dy(1, -1), Dyadic(1)).infinite);
}

TEST(Delta, LargestGridValueStrictlyBelowBound) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    Dyadic Q(mpz_class(static_cast<unsigned long>(1 + rng() % 1000)), -static_cast<long>(rng() % 8));
    Dyadic g(mpz_class(static_cast<unsigned long>(1 + rng() % 1000)), -10);
    Dyadic lam = Dyadic::pow2(-static_cast<long>(rng() % 6));
    long bits = 8 + static_cast<long>(rng() % 50);
    Dyadic d = compute_delta(Q, g, lam, bits).value;
    Dyadic bound = std::min(g, lam.scaled(-2));
    EXPECT_LT(Q * d, bound);
    EXPECT_GE(Q * (d + Dyadic::pow2(-bits)), bound);
    // doubling Q halves the bound: the grid values differ by at most one step
    Dyadic d2 = compute_delta(Q.scaled(1), g, lam, bits).value;
    EXPECT_LT(Q.scaled(1) * d2, bound);
    EXPECT_LE(d2.scaled(1), d + Dyadic::pow2(-bits + 1));
    EXPECT_GE(d2.scaled(1) + Dyadic::pow2(-bits + 1), d);
  }
}

TEST(Witness, MultipliersTwoAndHalf) {
  auto f = unit_det_map(2.0);
  auto saddles = fixed_saddles(f);
  ASSERT_EQ(saddles.size(), 1u);
  auto w = find_witness(saddles, f, 4);
  EXPECT_EQ(w.m, 1);
  EXPECT_EQ(w.lambda, dy(1, -1));
}

TEST(Witness, ScalarOracleForWeakMultipliers) {
  const double mu = 1.1;
  auto f = unit_det_map(mu);
  auto saddles = fixed_saddles(f);
  ASSERT_EQ(saddles.size(), 1u);
  auto w = find_witness(saddles, f, 4);
  // diagonal schedule against the scalar test mu^m >= 1 + 2^-s
  int m_or = 0, s_or = 0;
  for (int s = 1; s <= 24 && m_or == 0; ++s)
    for (int m = 1; m <= std::min(s, 4); ++m)
      if (std::pow(mu, m) >= 1 + std::ldexp(1.0, -s)) {
        m_or = m;
        s_or = s;
        break;
      }
  EXPECT_EQ(m_or, 2);
  EXPECT_EQ(s_or, 3);
  EXPECT_EQ(w.m, m_or);
  EXPECT_EQ(w.lambda, Dyadic::pow2(-s_or));
}

TEST(Witness, HoldsForBothDirectionsAtEveryPoint) {
  auto f = horseshoe();
  PeriodicOptions o;
  o.max_period = 2;
  o.precision_bits = 30;
  std::vector<PeriodicOrbit> saddles;
  for (auto& orb : enumerate_periodic(f, o))
    if (orb.cls == OrbitClass::kSaddle) saddles.push_back(std::move(orb));
  ASSERT_FALSE(saddles.empty());
  auto w = find_witness(saddles, f, 3);
  double need = 1 + w.lambda.to_double_down();
  for (const auto& orb : saddles)
    for (std::size_t t = 0; t < orb.points.size(); ++t) {
      EXPECT_GE(euclid_norm(iterate_jacobian(f, orb.boxes[t], w.m, Direction::kForward) * orb.eigen[t].eu).lo(), need);
      EXPECT_GE(euclid_norm(iterate_jacobian(f, orb.boxes[t], w.m, Direction::kInverse) * orb.eigen[t].es).lo(), need);
    }
}

TEST(Witness, RejectsNonSaddlesAndExhaustsBudget) {
  auto f = horseshoe();
  PeriodicOrbit bogus;
  bogus.points.resize(1);
  EXPECT_THROW(find_witness({bogus}, f, 2), InvalidInput);
  // 1.01^2 < 1 + 2^-4, so no pair on the schedule s <= 4, m <= 2 works
  auto g = unit_det_map(1.01);
  auto saddles = fixed_saddles(g);
  ASSERT_EQ(saddles.size(), 1u);
  EXPECT_THROW(find_witness(saddles, g, 2, 4), BudgetExhausted);
  EXPECT_EQ(find_witness(saddles, g, 2, 8).m, 2);  // 1.0201 >= 1 + 2^-6
}

TEST(Gamma, DiagonalModelAgainstClosedForm) {
  // D f = diag(2, 1/2), frame (e1, e2) at both ends, rho = 1/2
  MatrixRectD L = MatrixRectD::identity();
  L(0, 0) = ComplexRectD::point(2, 0);
  L(1, 1) = ComplexRectD::point(0.5, 0);
  VecC2D e1 = point_vec(1, 0), e2 = point_vec(0, 1);
  FastInterval rho(0.5);
  auto gap = detail::image_gap(L, e1, e2, e1, e2, rho, detail::boundary_arcs(rho, 16));
  ASSERT_TRUE(gap.bounded);
  // Boundary vectors (1, t), |t| = 1/2, map to cone coordinate t/4.  The
  // closest unit vector outside the target cone is at real angle atan(1/2)
  // against atan(1/8), so the true distance is 2 sin of half the difference.
  double exact = 2 * std::sin((std::atan(0.5) - std::atan(1.0 / 8)) / 2);
  EXPECT_GT(gap.gamma, 0.0);
  EXPECT_LE(gap.gamma, exact);
  // the single representative b = (1, 1/2)/|.| maps to (2, 1/4)/|.|
  double n1 = std::hypot(2.0, 0.25), n2 = std::hypot(1.0, 0.5);
  double rep = std::hypot(2 / n1 - 1 / n2, 0.25 / n1 - 0.5 / n2);
  EXPECT_NEAR(rep, exact, 1e-12);
  // an identity map does not move the boundary strictly inside
  auto flat = detail::image_gap(MatrixRectD::identity(), e1, e2, e1, e2, rho, detail::boundary_arcs(rho, 16));
  EXPECT_FALSE(flat.bounded && flat.gamma > 0.0);
}

TEST(Gamma, BoundIsBelowSampledDistances) {
  // random contracting-in-the-cone linear maps; gap must not exceed the
  // distance between the sampled image directions and sampled outside vectors
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  FastInterval rho(0.5);
  auto arcs = detail::boundary_arcs(rho, 16);
  VecC2D e1 = point_vec(1, 0), e2 = point_vec(0, 1);
  int tested = 0;
  for (int it = 0; it < 200; ++it) {
    std::complex<double> a(3 + u(rng), u(rng)), b(0.3 * u(rng), 0.3 * u(rng)), c(0.3 * u(rng), 0.3 * u(rng)),
        d(0.5 * u(rng), 0.5 * u(rng));
    MatrixRectD L;
    L(0, 0) = ComplexRectD::point(a.real(), a.imag());
    L(0, 1) = ComplexRectD::point(b.real(), b.imag());
    L(1, 0) = ComplexRectD::point(c.real(), c.imag());
    L(1, 1) = ComplexRectD::point(d.real(), d.imag());
    auto gap = detail::image_gap(L, e1, e2, e1, e2, rho, arcs);
    if (!gap.bounded || !(gap.gamma > 0)) continue;
    ++tested;
    double best = INFINITY;
    for (int i = 0; i < 64; ++i) {
      std::complex<double> t = 0.5 * std::polar(1.0, 2 * std::numbers::pi * i / 64);
      std::complex<double> p = a + b * t, q = c + d * t;
      double n = std::sqrt(std::norm(p) + std::norm(q));
      p /= n;
      q /= n;
      for (int k = 0; k < 64; ++k) {
        // unit vectors on the boundary of the target cone, phase-aligned with p
        std::complex<double> ph = std::polar(1.0, std::arg(p)), s = std::polar(0.5, 2 * std::numbers::pi * k / 64);
        std::complex<double> x = ph / std::sqrt(1.25), y = ph * s / std::sqrt(1.25);
        best = std::min(best, std::sqrt(std::norm(p - x) + std::norm(q - y)));
      }
    }
    EXPECT_LE(gap.gamma, best);
  }
  EXPECT_GT(tested, 50);
}

TEST(Q, Examples) {
  EXPECT_TRUE(q_from_bounds(Dyadic(), Dyadic(3)).is_zero());
  EXPECT_TRUE(compute_delta(q_from_bounds(Dyadic(), Dyadic(3)), Dyadic(1), Dyadic(1)).infinite);
  EXPECT_EQ(q_from_bounds(Dyadic(8), Dyadic(4)), Dyadic(8));   // max(M2, 2 M2/mu)
  EXPECT_EQ(q_from_bounds(Dyadic(8), dy(1, -1)), Dyadic(32));
  // at the minimal expansion the general form reduces to the two-term one
  EXPECT_EQ(q_from_bounds(Dyadic(8), Dyadic(4), dy(5, -2), dy(1, -1)), Dyadic(8));
  // extra expansion only lowers the second term
  EXPECT_EQ(q_from_bounds(Dyadic(8), Dyadic(4), Dyadic(10), dy(1, -1)), Dyadic(4));
  EXPECT_THROW(q_from_bounds(Dyadic(8), Dyadic()), Inconclusive);
  EXPECT_THROW(q_from_bounds(Dyadic(8), Dyadic(4), Dyadic(1), dy(1, -1)), Inconclusive);
}

TEST(Q, UnitVectorNormalizationInequality) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 10000; ++i) {
    std::array<std::complex<double>, 2> a{{{g(rng), g(rng)}, {g(rng), g(rng)}}};
    double scale = std::ldexp(1.0, static_cast<int>(rng() % 9) - 6);
    std::array<std::complex<double>, 2> b{{a[0] + scale * std::complex<double>(g(rng), g(rng)),
                                           a[1] + scale * std::complex<double>(g(rng), g(rng))}};
    auto nrm = [](const std::array<std::complex<double>, 2>& v) { return std::sqrt(std::norm(v[0]) + std::norm(v[1])); };
    double na = nrm(a), nb = nrm(b);
    std::array<std::complex<double>, 2> diff{{a[0] / na - b[0] / nb, a[1] / na - b[1] / nb}};
    std::array<std::complex<double>, 2> ab{{a[0] - b[0], a[1] - b[1]}};
    EXPECT_LE(nrm(diff), 2 * nrm(ab) / na * (1 + 1e-12));
  }
}

TEST(Q, SecondDerivativeBoundGrowsWithIterate) {
  auto f = horseshoe();
  Dyadic R = filtration_radius(f);
  Dyadic prev;
  for (int m = 1; m <= 3; ++m) {
    Dyadic M2 = second_derivative_bound(f, R, m);
    EXPECT_GE(M2, prev) << "m = " << m;
    // with a fixed mu the resulting Q inherits the order
    EXPECT_GE(q_from_bounds(M2, Dyadic(1)), q_from_bounds(prev, Dyadic(1)));
    prev = M2;
  }
}

TEST(Cones, UnstableAndStableMeetOnlyAtZero) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 2000; ++i) {
    VecC2D eu = point_vec({g(rng), g(rng)}, {g(rng), g(rng)});
    VecC2D es = point_vec({g(rng), g(rng)}, {g(rng), g(rng)});
    double r = std::ldexp(static_cast<double>(1 + rng() % 255), -8);  // rho in (0, 1)
    FastInterval rho(r);
    VecC2D v = point_vec({g(rng), g(rng)}, {g(rng), g(rng)});
    try {
      EXPECT_FALSE(in_cone(eu, es, rho, v) && in_cone(es, eu, rho, v));
    } catch (const DivisionByIntervalContainingZero&) {
    }
  }
  // exact form: |b| <= rho |a| and |a| <= rho |b| force |a| <= rho^2 |a|
  for (int s = 1; s <= 40; ++s) {
    Dyadic r = rho_of_lambda(Dyadic::pow2(s - 20));
    EXPECT_LT(r * r, Dyadic(1));
  }
}

TEST(Cones, MembershipIgnoresCommonScaling) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  int decided = 0;
  for (int i = 0; i < 2000; ++i) {
    std::complex<double> ux(g(rng), g(rng)), uy(g(rng), g(rng)), sx(g(rng), g(rng)), sy(g(rng), g(rng));
    std::complex<double> det = ux * sy - sx * uy;
    if (std::abs(det) < 0.1) continue;
    std::complex<double> al(g(rng), g(rng)), be(g(rng), g(rng));
    double r = 0.5;
    double ratio = std::abs(be) / std::abs(al);
    if (std::abs(ratio - r) < 1e-3) continue;  // stay clear of the boundary
    std::complex<double> k = std::polar(std::exp(g(rng)), g(rng));
    VecC2D v = point_vec(al * ux + be * sx, al * uy + be * sy);
    bool base = in_cone(point_vec(ux, uy), point_vec(sx, sy), FastInterval(r), v);
    bool scaled = in_cone(point_vec(k * ux, k * uy), point_vec(k * sx, k * sy), FastInterval(r), v);
    EXPECT_EQ(base, ratio < r);
    EXPECT_EQ(scaled, base);
    ++decided;
  }
  EXPECT_GT(decided, 1000);
}

TEST_F(HorseshoeCert, CertifiesWithinBudget) {
  const auto& c = cert();
  EXPECT_EQ(c.status, CertStatus::kCertified);
  EXPECT_LE(c.N, 12);
  EXPECT_FALSE(c.frames.empty());
  EXPECT_EQ(c.rho, rho_of_lambda(c.witness.lambda));
  EXPECT_NO_THROW(check_certificate_arithmetic(c));
  // exact inequalities recomputed here
  EXPECT_LT(c.Q * c.delta, c.gamma);
  EXPECT_LT(c.Q * c.delta, c.witness.lambda.scaled(-2));
  EXPECT_LT(Dyadic::pow2(-c.N), c.delta);
  for (std::size_t i = 1; i < c.frames.size(); ++i) EXPECT_LT(c.frames[i - 1].box, c.frames[i].box);
}

TEST_F(HorseshoeCert, MonteCarloVerificationHasNoViolations) {
  auto rep = verify_certificate(cert(), horseshoe(), 10000);
  EXPECT_EQ(rep.samples, 10000u);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_GT(rep.cone_checks, 0u);
}

TEST_F(HorseshoeCert, FrameAxesExpandByOnePlusLambda) {
  const auto& c = cert();
  auto f = horseshoe();
  FastInterval need(1 + c.witness.lambda.to_double_down());
  for (const auto& fr : c.frames) {
    EXPECT_GE(euclid_norm(iterate_jacobian(f, fr.base_box, c.witness.m, Direction::kForward) * fr.eu).lo(), need.hi());
    EXPECT_GE(euclid_norm(iterate_jacobian(f, fr.base_box, c.witness.m, Direction::kInverse) * fr.es).lo(), need.hi());
  }
}

TEST_F(HorseshoeCert, FaultInjection) {
  auto f = horseshoe();
  {
    auto bad = cert();
    bad.witness.lambda = bad.witness.lambda.scaled(1);
    EXPECT_THROW(verify_certificate(bad, f, 100), VerificationFailure);
  }
  {
    auto bad = cert();
    bad.delta = bad.delta.scaled(4);
    EXPECT_THROW(check_certificate_arithmetic(bad), VerificationFailure);
  }
  {
    auto bad = cert();
    bad.N += 10;
    EXPECT_THROW(check_certificate_arithmetic(bad), VerificationFailure);
  }
  {
    // swapping the axes of every frame breaks the cone field itself
    auto bad = cert();
    for (auto& fr : bad.frames) std::swap(fr.eu, fr.es);
    EXPECT_THROW(verify_certificate(bad, f, 200), VerificationFailure);
  }
}

TEST(Certifier, DeterministicAcrossThreadCounts) {
  auto f = horseshoe();
  CertifyOptions o1, o4;
  o1.threads = 1;
  o4.threads = 4;
  auto a = certify_at(f, 3, o1);
  auto b = certify_at(f, 3, o4);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.n, b.n);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ(a.witness.m, b.witness.m);
  EXPECT_EQ(a.witness.lambda, b.witness.lambda);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.Q, b.Q);
  EXPECT_EQ(a.delta, b.delta);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i].box, b.frames[i].box);
    EXPECT_EQ(a.frames[i].M2, b.frames[i].M2);
    EXPECT_EQ(a.frames[i].mu, b.frames[i].mu);
  }
}

TEST(Certifier, BudgetExhaustionKeepsPartialState) {
  CertifyOptions o;
  o.max_N = 1;
  o.threads = 4;
  HypCertificate partial;
  EXPECT_THROW(run_certifier(horseshoe(), o, &partial), BudgetExhausted);
  EXPECT_EQ(partial.status, CertStatus::kNotYet);
  EXPECT_EQ(partial.N, 1);
  EXPECT_FALSE(partial.note.empty());
}

TEST(Certifier, RejectsTooFewPhaseSamples) {
  CertifyOptions o;
  o.phase_samples = 2;
  EXPECT_THROW(run_certifier(horseshoe(), o), InvalidInput);
}

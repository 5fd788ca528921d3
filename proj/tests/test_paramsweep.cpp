#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "henon/paramsweep.hpp"

using namespace henon;
namespace fs = std::filesystem;

namespace {

Dyadic dy(long m, long e) { return Dyadic(mpz_class(m), e); }

ParamPoint horseshoe_point() { return ParamPoint::quadratic({Dyadic(-6), {}}, {dy(1, -4), {}}); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sweep_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path / name).string(); }
};

// Deterministic stand-in for point certification: "certifies" when Re c < -1
// and Re a > 0, with a radius that shrinks with the stage.
struct FakeJob {
  int calls = 0;
  std::vector<ParamPoint> seen;
  CellResult operator()(const ParamPoint& p, int n_max) {
    ++calls;
    seen.push_back(p);
    CellResult r;
    if (p.coord(0) < Dyadic(-1) && p.coord(2).sign() > 0) {
      r.outcome = CellOutcome::kBall;
      r.ball.center = p;
      r.ball.radius = Dyadic::pow2(-n_max - 1);
      r.ball.N = n_max;
    } else {
      r.outcome = p.coord(2).sign() < 0 ? CellOutcome::kZeroRadius : CellOutcome::kRetry;
    }
    return r;
  }
};

SweepConfig small_config(int stages) {
  SweepConfig cfg;
  cfg.header.degree = 2;
  cfg.header.first_stage = 1;
  SweepWindow w;
  w.center = ParamPoint::quadratic({Dyadic(-2), {}}, {dy(1, -2), {}});
  w.half_width = {Dyadic(1), Dyadic(), dy(1, -1), Dyadic()};
  cfg.header.window = w;
  cfg.stages = stages;
  return cfg;
}

std::string run_full(const std::string& path, int stages) {
  FakeJob job;
  SweepLog log(path, small_config(stages).header);
  sweep(log, small_config(stages), std::ref(job));
  return read_file_bytes(path);
}

struct HorseshoeRobust : ::testing::Test {
  static const RobustnessChecker& checker() {
    static const RobustnessChecker rc = [] {
      CertifyOptions o;
      o.threads = 4;
      auto c = run_certifier(horseshoe_point().map(), o);
      RobustnessOptions ro;
      ro.threads = 4;
      return RobustnessChecker(horseshoe_point().map(), c, ro);
    }();
    return rc;
  }
};

}  // namespace

TEST(ParamPoint, QuadraticMatchesHenonFamily) {
  auto p = horseshoe_point();
  EXPECT_EQ(p.dims(), 4u);
  EXPECT_EQ(p.map().canonical_text(), PolyDiffeo::quadratic({Dyadic(-6), {}}, {dy(1, -4), {}}).canonical_text());
  ParamPoint cubic(3, {{Dyadic(1), {}}, {Dyadic(2), Dyadic(3)}, {dy(1, -1), {}}});
  auto f = cubic.map();
  ASSERT_EQ(f.factors().size(), 1u);
  EXPECT_EQ(f.factors()[0].p.degree, 3);
  EXPECT_TRUE(f.factors()[0].p.coeffs[2].is_zero());
  EXPECT_EQ(f.factors()[0].a.re, dy(1, -1));
  EXPECT_THROW(ParamPoint(2, {{Dyadic(1), {}}}), InvalidInput);
}

TEST(StageGrid, DefaultBoxAndNesting) {
  StageGrid g0(2, 0, std::nullopt);
  EXPECT_EQ(g0.size(), 81u);  // offsets -1, 0, 1 in four real coordinates
  StageGrid g1(2, 1, std::nullopt);
  EXPECT_EQ(g1.size(), 9u * 9u * 9u * 9u);  // spacing 1/2 on [-2, 2]
  std::set<std::vector<std::string>> fine;
  auto key = [](const ParamPoint& p) {
    std::vector<std::string> k;
    for (std::size_t i = 0; i < p.dims(); ++i) k.push_back(p.coord(i).to_string());
    return k;
  };
  for (std::uint64_t o = 0; o < g1.size(); ++o) fine.insert(key(g1.point(o)));
  EXPECT_EQ(fine.size(), g1.size());
  for (std::uint64_t o = 0; o < g0.size(); ++o) EXPECT_TRUE(fine.count(key(g0.point(o))));
  // ordinal decoding: last coordinate fastest, first ordinal is the lowest corner
  EXPECT_EQ(g1.point(0).coord(0), Dyadic(-2));
  EXPECT_EQ(g1.point(1).coord(3), dy(-3, -1));
  EXPECT_EQ(n_max_of_stage(0), 0);
  EXPECT_EQ(n_max_of_stage(7), 7);
}

TEST(StageGrid, WindowHoldsZeroWidthCoordinates) {
  auto cfg = small_config(1);
  StageGrid g(2, 2, cfg.header.window);
  EXPECT_EQ(g.size(), 9u * 5u);  // Re c: -2 +- 1 at 1/4, Re a: 1/4 +- 1/2 at 1/4
  for (std::uint64_t o = 0; o < g.size(); ++o) {
    auto p = g.point(o);
    EXPECT_TRUE(p.coord(1).is_zero());
    EXPECT_TRUE(p.coord(3).is_zero());
  }
}

TEST(Ball, ClosedLinfContainment) {
  HypBall b;
  b.center = horseshoe_point();
  b.radius = dy(1, -3);
  auto p = b.center;
  p.coord(0) = p.coord(0) + dy(1, -3);
  p.coord(3) = dy(-1, -3);
  EXPECT_TRUE(b.contains(p));
  p.coord(1) = dy(1, -2);
  EXPECT_FALSE(b.contains(p));
}

TEST(SweepLogTest, EmptyLogStartsAtFirstStage) {
  TempDir d;
  std::string path = d.file("log");
  { std::ofstream touch(path); }
  FakeJob job;
  auto cfg = small_config(1);
  SweepLog log(path, cfg.header);
  EXPECT_EQ(log.state().stage, -1);
  EXPECT_TRUE(log.state().balls.empty());
  auto rep = sweep(log, cfg, std::ref(job));
  EXPECT_TRUE(rep.finished);
  EXPECT_EQ(log.state().stage, 1);
  auto scan = scan_log(read_file_bytes(path));
  EXPECT_TRUE(scan.error.empty()) << scan.error;
  EXPECT_EQ(scan.state.visits.size(), log.state().visits.size());
}

TEST(SweepLogTest, ResumeEqualsUninterruptedRun) {
  TempDir d;
  std::string full = run_full(d.file("full"), 3);
  for (std::size_t budget : {1u, 4u, 9u, 17u}) {
    std::string path = d.file("part" + std::to_string(budget));
    auto cfg = small_config(3);
    cfg.max_cells = budget;
    for (int round = 0; round < 200; ++round) {
      FakeJob job;
      SweepLog log(path, cfg.header);
      if (sweep(log, cfg, std::ref(job)).finished) break;
    }
    EXPECT_EQ(read_file_bytes(path), full) << "budget " << budget;
  }
}

TEST(SweepLogTest, MoreStagesExtendTheLog) {
  TempDir d;
  std::string two = run_full(d.file("two"), 2);
  std::string path = d.file("grow");
  run_full(path, 2);
  {
    FakeJob job;
    SweepLog log(path, small_config(3).header);
    sweep(log, small_config(3), std::ref(job));
  }
  std::string three = read_file_bytes(path);
  EXPECT_EQ(three, run_full(d.file("three"), 3));
  ASSERT_GT(three.size(), two.size());
  EXPECT_EQ(three.substr(0, two.size()), two);  // append-only
}

TEST(SweepLogTest, CoveredCellsAreSkipped) {
  TempDir d;
  FakeJob job;
  auto cfg = small_config(3);
  SweepLog log(d.file("log"), cfg.header);
  auto rep = sweep(log, cfg, std::ref(job));
  EXPECT_GT(rep.skipped_covered, 0u);
  EXPECT_EQ(static_cast<std::size_t>(job.calls), rep.jobs);
  std::vector<HypBall> earlier;
  for (const auto& v : log.state().visits) {
    if (!v.ball) continue;
    earlier.push_back(*v.ball);
  }
  // a job never ran on a point covered by a ball emitted before it
  std::size_t ball_idx = 0;
  std::size_t visit_idx = 0;
  for (const auto& p : job.seen) {
    const auto& v = log.state().visits[visit_idx++];
    for (std::size_t b = 0; b < ball_idx; ++b) EXPECT_FALSE(earlier[b].contains(p));
    if (v.ball) ++ball_idx;
  }
  for (const auto& p : job.seen) EXPECT_FALSE(p.jacobian_coeff().is_zero());
}

TEST(SweepLogTest, CoverageIsNondecreasingAcrossStages) {
  TempDir d;
  std::size_t prev = 0;
  StageGrid probe(2, 5, small_config(1).header.window);
  for (int stages = 1; stages <= 3; ++stages) {
    FakeJob job;
    auto cfg = small_config(stages);
    SweepLog log(d.file("cov"), cfg.header);
    sweep(log, cfg, std::ref(job));
    std::size_t count = 0;
    for (std::uint64_t o = 0; o < probe.size(); ++o) count += log.state().covered(probe.point(o)) ? 1 : 0;
    EXPECT_GE(count, prev);
    prev = count;
  }
  EXPECT_GT(prev, 0u);
}

TEST(SweepLogTest, TruncatedRecordIsDetectedAndRecoverable) {
  TempDir d;
  std::string full = run_full(d.file("full"), 2);
  std::string path = d.file("cut");
  {
    std::ofstream out(path, std::ios::binary);
    out << full.substr(0, full.size() - 3);
  }
  auto cfg = small_config(2);
  EXPECT_THROW(SweepLog(path, cfg.header), CorruptLog);
  auto scan = scan_log(read_file_bytes(path));
  EXPECT_FALSE(scan.error.empty());
  std::size_t kept = recover_log(path);
  EXPECT_LT(kept, full.size());
  EXPECT_EQ(read_file_bytes(path), full.substr(0, kept));
  {
    FakeJob job;
    SweepLog log(path, cfg.header);
    sweep(log, cfg, std::ref(job));
  }
  EXPECT_EQ(read_file_bytes(path), full);
}

TEST(SweepLogTest, BitFlipFailsTheChecksum) {
  TempDir d;
  std::string full = run_full(d.file("full"), 1);
  std::mt19937 rng(2);
  for (int i = 0; i < 20; ++i) {
    std::string bad = full;
    std::size_t at = 12 + rng() % (bad.size() - 12);
    bad[at] = static_cast<char>(bad[at] ^ (1 << (rng() % 8)));
    auto scan = scan_log(bad);
    EXPECT_FALSE(scan.error.empty()) << "flip at " << at;
    EXPECT_LE(scan.valid_bytes, at);
  }
  EXPECT_FALSE(scan_log("NOTALOG!\x01\0\0\0").error.empty());
}

TEST(SweepLogTest, ConfigurationMismatchIsRejected) {
  TempDir d;
  std::string path = d.file("log");
  run_full(path, 1);
  auto other = small_config(1).header;
  other.first_stage = 2;
  EXPECT_THROW(SweepLog(path, other), InvalidInput);
}

TEST(SweepLogTest, ReplayReproducesBalls) {
  TempDir d;
  std::string path = d.file("log");
  std::vector<HypBall> live;
  {
    FakeJob job;
    SweepLog log(path, small_config(2).header);
    sweep(log, small_config(2), std::ref(job));
    live = log.state().balls;
  }
  auto scan = scan_log(read_file_bytes(path));
  ASSERT_EQ(scan.state.balls.size(), live.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    EXPECT_EQ(scan.state.balls[i].center, live[i].center);
    EXPECT_EQ(scan.state.balls[i].radius, live[i].radius);
    EXPECT_EQ(scan.state.balls[i].cert_id, live[i].cert_id);
  }
}

TEST_F(HorseshoeRobust, ZeroRadiusReproducesPointCertificate) {
  const auto& rc = checker();
  const auto& c = rc.certificate();
  auto p = rc.probe(Dyadic());
  ASSERT_TRUE(p.failure.empty()) << p.failure;
  EXPECT_EQ(p.gamma, c.gamma);
  EXPECT_EQ(p.Q, c.Q);
  EXPECT_EQ(p.delta.value, c.delta);
}

TEST_F(HorseshoeRobust, PositiveRadiusAndMonotoneProbes) {
  const auto& rc = checker();
  Dyadic r = rc.radius();
  EXPECT_GT(r, Dyadic());
  for (int j = 0; j <= 3; ++j) EXPECT_EQ(rc.check(r.scaled(-j * 4)), "") << "r / 2^" << 4 * j;
  // a coefficient rectangle reaching a = 0 is refused outright
  EXPECT_EQ(rc.check(dy(1, -4)), "coefficient rectangle of a contains 0");
  EXPECT_NE(rc.check(dy(1, -6)), "");
}

TEST_F(HorseshoeRobust, TinyBudgetGivesZeroRadius) {
  RobustnessOptions ro;
  ro.max_bits = 3;
  ro.threads = 4;
  RobustnessChecker rc(horseshoe_point().map(), checker().certificate(), ro);
  EXPECT_THROW((void)rc.radius(), ZeroRadius);
}

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "henon/io.hpp"
#include "henon/render.hpp"

using namespace henon;
namespace fs = std::filesystem;

namespace {

const char* kHorseshoe =
    "henon-map v1\n"
    "# a = 1/16, c = -6\n"
    "factor degree 2\n"
    "coeff 0 -6 0\n"
    "coeff 1 0 0\n"
    "a 0.0625 0\n";

std::string cli() {
  const char* p = std::getenv("HENON_CLI");
  return p ? p : "henon";
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("henon-cli-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(const std::string& args, const TempDir& t, const std::string& env = "") {
  std::string out = t / "stdout.txt", err = t / "stderr.txt";
  std::string cmd = env + " " + cli() + " " + args + " >" + out + " 2>" + err;
  int st = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

std::string write(const TempDir& t, const std::string& name, const std::string& text) {
  std::string p = t / name;
  write_text_file(p, text);
  return p;
}

Json render_config() {
  return {{"command", "render"}, {"boxset", "x"}, {"plane", {0, 1}}, {"window", Json::array()}, {"size", {8, 8}}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Map files

TEST(MapFile, DecimalAndPairFormsAgree) {
  auto a = parse_map(kHorseshoe);
  auto b = parse_map("henon-map v1\nfactor degree 2\ncoeff 0 -3 1 0 0\ncoeff 1 0 0 0 0\na 1 -4 0 0\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.factors()[0].a.re, Dyadic(mpz_class(1), -4));
}

TEST(MapFile, CanonicalTextRoundTrips) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> m(-5000, 5000), e(-40, 4), ea(-8, 4), deg(2, 4), nf(1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<HenonFactor> fs;
    for (long i = nf(rng); i > 0; --i) {
      HenonFactor f;
      f.p.degree = static_cast<int>(deg(rng));
      for (int j = 0; j < f.p.degree; ++j)
        f.p.coeffs.push_back({Dyadic(mpz_class(m(rng)), e(rng)), Dyadic(mpz_class(m(rng)), e(rng))});
      f.a = {Dyadic(mpz_class(m(rng) | 1), ea(rng)), Dyadic(mpz_class(m(rng)), e(rng))};  // |a| >= 2^-8
      fs.push_back(f);
    }
    PolyDiffeo g(fs, trial % 3 == 0 ? Dyadic(mpz_class(3), -20) : Dyadic());
    auto text = g.canonical_text();
    auto back = parse_map(text);
    EXPECT_EQ(back.canonical_text(), text);
    EXPECT_EQ(io::map(io::map(g)).canonical_text(), text);
  }
}

TEST(MapFile, DiagnosticsNameTheLine) {
  auto line_of = [](const std::string& text) {
    try {
      parse_map(text, "m.map");
    } catch (const InvalidInput& e) {
      std::string w = e.what();
      EXPECT_EQ(w.rfind("m.map:", 0), 0U) << w;
      return std::stoi(w.substr(6));
    }
    ADD_FAILURE() << "accepted: " << text;
    return -1;
  };
  EXPECT_EQ(line_of(""), 1);
  EXPECT_EQ(line_of("henon-map v2\n"), 1);
  EXPECT_EQ(line_of("henon-map v1\n\nfactor degree 1\n"), 3);
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0.1 0\n"), 3);            // 1/10 is not dyadic
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 2 0 0\n"), 3);              // index out of range
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0 0\ncoeff 0 1 0\n"), 4);  // duplicate
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0 0\ncoeff 1 0 0\n"), 2);  // no a
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0 0\na 1 0\n"), 2);        // missing coeff 1
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0 0\ncoeff 1 0 0\na 0 0\n"), 5);
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0 0\ncoeff 1 0 0\na 1 0\nbogus\n"), 6);
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0 0\ncoeff 1 0 0\na 1 0 0\n"), 5);  // 3 tokens
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 1.5 2 0 0\n"), 3);  // decimal mantissa
  EXPECT_EQ(line_of("henon-map v1\nfactor degree 2\ncoeff 0 0 0\ncoeff 1 0 0\na 1 0\nradius -1\n"), 6);
}

TEST(MapFile, CommentsAndBlankLinesIgnored) {
  auto f = parse_map("# leading\n\nhenon-map v1  # header\nfactor degree 2 # q\ncoeff 0 -6 0\ncoeff 1 0 0\n\na 0.0625 0\n");
  EXPECT_EQ(f.hash(), parse_map(kHorseshoe).hash());
}

// ---------------------------------------------------------------------------
// JSON encoding

TEST(Json, DyadicPairsAreExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    double x = u(rng) * std::ldexp(1.0, static_cast<int>(rng() % 200) - 100);
    EXPECT_EQ(io::dbl(io::dbl(x)), x);
    Dyadic d(mpz_class(static_cast<long>(rng() >> 1)), static_cast<long>(rng() % 400) - 200);
    EXPECT_EQ(io::dy(io::dy(d)), d);
    EXPECT_EQ(io::dy(io::dy(-d)), -d);
  }
  EXPECT_THROW(io::dbl(io::dy(Dyadic(mpz_class(1), -2000))), InvalidInput);
  EXPECT_THROW(io::dy(Json::array({"1.5", 0})), InvalidInput);
  EXPECT_THROW(io::dy(Json::array({1, 0})), InvalidInput);
}

TEST(Json, EnvelopeRejectsUnknownKeysAndVersions) {
  Json c = render_config();
  EXPECT_NO_THROW(envelope("boxset", c));
  Json bad = c;
  bad["colour"] = 1;
  EXPECT_THROW(envelope("boxset", bad), InvalidInput);
  Json e = envelope("boxset", c);
  EXPECT_NO_THROW(check_envelope(e, "boxset"));
  EXPECT_THROW(check_envelope(e, "certificate"), InvalidInput);
  Json v = e;
  v["version"] = kFormatVersion + 1;
  EXPECT_THROW(check_envelope(v, "boxset"), InvalidInput);
  Json m = e;
  m["magic"] = "something-else";
  EXPECT_THROW(check_envelope(m, "boxset"), InvalidInput);
  Json k = e;
  k["config"]["threads"] = 4;
  EXPECT_THROW(check_envelope(k, "boxset"), InvalidInput);
  Json u = e;
  u["config"]["command"] = "launch";
  EXPECT_THROW(check_envelope(u, "boxset"), InvalidInput);
}

TEST(Json, BoxSetValidation) {
  BoxSet s;
  s.R = Dyadic(2);
  s.level = 2;
  s.boxes = {pack_box(1, 1, 1, 1), pack_box(2, 2, 2, 2)};
  s.component = {0, 1};
  s.kind = {"saddle", "attracting"};
  Json j = boxset_to_json(s, render_config());
  EXPECT_EQ(dump(boxset_to_json(boxset_from_json(j), render_config())), dump(j));
  Json unsorted = j;
  unsorted["boxes"] = {pack_box(2, 2, 2, 2), pack_box(1, 1, 1, 1)};
  EXPECT_THROW(boxset_from_json(unsorted), InvalidInput);
  Json outside = j;
  outside["boxes"] = {pack_box(1, 1, 1, 1), pack_box(4, 0, 0, 0)};
  EXPECT_THROW(boxset_from_json(outside), InvalidInput);
  Json nokind = j;
  nokind["kind"] = {"saddle"};
  EXPECT_THROW(boxset_from_json(nokind), InvalidInput);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {
BoxSet one_box_at_origin() {
  // level 1 over [-1, 1]: the box [0, 1]^4
  BoxSet s;
  s.R = Dyadic(1);
  s.level = 1;
  s.boxes = {pack_box(1, 1, 1, 1)};
  s.component = {0};
  s.kind = {"saddle"};
  return s;
}
Slice window(int w, int h) {
  Slice s;
  s.lo = {Dyadic(-1), Dyadic(-1)};
  s.hi = {Dyadic(1), Dyadic(1)};
  s.width = w;
  s.height = h;
  return s;
}
}  // namespace

TEST(Render, SingleBoxFillsItsQuadrant) {
  for (auto plane : {std::array<int, 2>{0, 1}, {1, 3}, {2, 0}}) {
    Slice s = window(8, 8);
    s.plane = plane;
    Raster r = render_slice(one_box_at_origin(), s);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        bool inside = x >= 4 && y < 4;  // upper right: row 0 is the top
        EXPECT_EQ(r.pixels[static_cast<std::size_t>(y * 8 + x)] == palette_color(0), inside) << x << ',' << y;
      }
  }
}

TEST(Render, CenteredBoxIsCentered) {
  // level 2 over [-2, 2]: cells of side 1; a window [-1/2, 3/2] puts cell [0, 1] in the middle
  BoxSet s;
  s.R = Dyadic(2);
  s.level = 2;
  s.boxes = {pack_box(2, 2, 2, 2)};
  s.component = {0};
  s.kind = {"saddle"};
  Slice w;
  w.lo = {Dyadic(mpz_class(-1), -1), Dyadic(mpz_class(-1), -1)};
  w.hi = {Dyadic(mpz_class(3), -1), Dyadic(mpz_class(3), -1)};
  w.width = w.height = 16;
  Raster r = render_slice(s, w);
  EXPECT_EQ(r.painted(), 64U);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) EXPECT_FALSE(r.pixels[static_cast<std::size_t>(y * 16 + x)] == kBackground);
}

TEST(Render, ComponentsGetDistinctColors) {
  BoxSet s;
  s.R = Dyadic(1);
  s.level = 1;
  s.boxes = {pack_box(0, 0, 0, 0), pack_box(1, 1, 1, 1)};
  s.component = {0, 1};
  s.kind = {"attracting", "saddle"};
  Raster r = render_slice(s, window(4, 4));
  Rgb lower_left = r.pixels[3 * 4 + 0], upper_right = r.pixels[0 * 4 + 3];
  EXPECT_EQ(lower_left, palette_color(0));
  EXPECT_EQ(upper_right, palette_color(1));
  EXPECT_FALSE(lower_left == upper_right);
  EXPECT_EQ(slice_legend(s).size(), 2U);
}

TEST(Render, InvalidPlaneAndEmptySet) {
  Slice s = window(4, 4);
  s.plane = {1, 1};
  EXPECT_THROW(render_slice(one_box_at_origin(), s), InvalidPlane);
  s.plane = {0, 4};
  EXPECT_THROW(render_slice(one_box_at_origin(), s), InvalidPlane);
  BoxSet empty = one_box_at_origin();
  empty.boxes.clear();
  empty.component.clear();
  Raster r = render_slice(empty, window(5, 3));
  EXPECT_EQ(r.painted(), 0U);
  EXPECT_EQ(r.pixels.size(), 15U);
  EXPECT_EQ(slice_legend(empty), std::vector<std::string>{"empty box set"});
}

TEST(Render, PpmRoundTripAndConfigHash) {
  Raster r = render_slice(one_box_at_origin(), window(7, 5));
  Json c = render_config();
  auto legend = slice_legend(one_box_at_origin());
  std::string bytes = to_ppm(r, c, legend);
  PpmImage img = parse_ppm(bytes);
  EXPECT_EQ(img.config_hash, config_hash(c));
  EXPECT_EQ(img.legend, legend);
  EXPECT_EQ(to_ppm(img.raster, c, img.legend), bytes);
  Json c2 = c;
  c2["size"] = {7, 6};
  EXPECT_NE(config_hash(c2), config_hash(c));
}

TEST(Render, LocusPaintsBallSquares) {
  HypBall b;
  b.center = ParamPoint::quadratic({Dyadic(-1), Dyadic()}, {Dyadic(mpz_class(1), -1), Dyadic()});
  b.radius = Dyadic(mpz_class(1), -1);
  b.N = 3;
  Slice s;
  s.plane = {0, 2};  // Re c, Re a
  s.lo = {Dyadic(-2), Dyadic(-1)};
  s.hi = {Dyadic(0), Dyadic(1)};
  s.width = s.height = 8;
  Raster r = render_locus({b}, 2, s);
  // Re c in [-3/2, -1/2] and Re a in [0, 1]: x in [2, 6), y rows 0..3
  EXPECT_EQ(r.painted(), 16U);
  EXPECT_EQ(r.pixels[0 * 8 + 2], palette_color(3));
  s.plane = {0, 4};
  EXPECT_THROW(render_locus({b}, 2, s), InvalidPlane);
}

// ---------------------------------------------------------------------------
// The binary

TEST(Cli, HelpAndUsageErrors) {
  TempDir t;
  EXPECT_EQ(run("--help", t).code, 0);
  EXPECT_EQ(run("certify-hyp --help", t).code, 0);
  EXPECT_EQ(run("", t).code, 3);
  EXPECT_EQ(run("frobnicate", t).code, 3);
  EXPECT_EQ(run("certify-hyp --map x --no-such-flag", t).code, 3);
  EXPECT_EQ(run("certify-hyp --map " + t / "missing.map", t).code, 3);
}

TEST(Cli, MalformedMapIsLineAnchored) {
  TempDir t;
  std::string m = write(t, "bad.map", "henon-map v1\nfactor degree 2\ncoeff 0 -6 0\ncoeff 1 0 zero\na 1 0\n");
  for (const char* cmd : {"certify-hyp", "julia-approx --N 1"}) {
    CliRun r = run(std::string(cmd) + " --map " + m + " --out " + t / "o", t);
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find(m + ":4:"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(t / "o"));
  }
}

TEST(Cli, BudgetExhaustionPersistsPartialState) {
  TempDir t;
  std::string m = write(t, "hs.map", kHorseshoe);
  CliRun r = run("certify-hyp --map " + m + " --max-N 1 --out " + t / "o", t);
  EXPECT_EQ(r.code, 2) << r.err;
  ASSERT_TRUE(fs::exists(t / "o/certificate.partial.json"));
  EXPECT_FALSE(fs::exists(t / "o/certificate.json"));
  Json j = parse_json_file(t / "o/certificate.partial.json");
  auto lc = certificate_from_json(j);
  EXPECT_EQ(lc.cert.status, CertStatus::kNotYet);
  EXPECT_EQ(lc.cert.N, 1);
  EXPECT_FALSE(lc.cert.note.empty());
  EXPECT_EQ(lc.map.hash(), parse_map(kHorseshoe).hash());
  EXPECT_EQ(dump(certificate_to_json(lc.cert, lc.map, lc.config)), read_text_file(t / "o/certificate.partial.json"));
  // a partial certificate is not accepted by the verifier
  EXPECT_EQ(run("verify-cert --cert " + t / "o/certificate.partial.json" + " --samples 10", t).code, 3);
}

TEST(Cli, JuliaApproxIsThreadIndependentAndRoundTrips) {
  TempDir t;
  std::string m = write(t, "hs.map", kHorseshoe);
  for (int th : {1, 4}) {
    CliRun r = run("julia-approx --map " + m + " --N 2 --threads " + std::to_string(th) + " --out " +
                    t / ("o" + std::to_string(th)),
                t);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(t.path / "o1")) names.push_back(e.path().filename().string());
  ASSERT_GE(names.size(), 2U);
  for (const auto& n : names) {
    std::string a = read_text_file(t / ("o1/" + n)), b = read_text_file(t / ("o4/" + n));
    EXPECT_EQ(a, b) << n;
    Json j = Json::parse(a);
    if (n == "approximation.json") {
      auto af = approximation_from_json(j);
      EXPECT_EQ(dump(approximation_to_json(af, io::map(j.at("map")), j.at("config"))), a);
      EXPECT_FALSE(af.orbits.empty());
    } else {
      EXPECT_EQ(dump(boxset_to_json(boxset_from_json(j), j.at("config"))), a);
    }
  }
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  TempDir t;
  std::string m = write(t, "hs.map", kHorseshoe);
  CliRun r = run("julia-approx --map " + m + " --N 1", t, "HENON_OUT_DIR=" + t / "env");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(t / "env/approximation.json"));
}

TEST(Cli, RenderFromBoxSetFile) {
  TempDir t;
  std::string m = write(t, "hs.map", kHorseshoe);
  ASSERT_EQ(run("julia-approx --map " + m + " --N 1 --out " + t / "o", t).code, 0);
  std::string boxset;
  for (const auto& e : fs::directory_iterator(t.path / "o"))
    if (e.path().filename().string().rfind("boxset-level-", 0) == 0) boxset = e.path().string();
  ASSERT_FALSE(boxset.empty());
  CliRun a = run("render --boxset " + boxset + " --plane 0 2 --size 32 24 --out " + t / "a.ppm", t);
  ASSERT_EQ(a.code, 0) << a.err;
  CliRun b = run("render --boxset " + boxset + " --plane 0 2 --size 32 24 --out " + t / "b.ppm", t);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(read_text_file(t / "a.ppm"), read_text_file(t / "b.ppm"));
  PpmImage img = parse_ppm(read_text_file(t / "a.ppm"));
  EXPECT_EQ(img.raster.width, 32);
  EXPECT_GT(img.raster.painted(), 0U);
  EXPECT_EQ(run("render --boxset " + boxset + " --plane 1 1 --out " + t / "c.ppm", t).code, 3);
  EXPECT_EQ(run("render --boxset " + boxset + " --window 0 0.1 0 1 --out " + t / "c.ppm", t).code, 3);
}

TEST(Cli, SweepBudgetResumeAndLocus) {
  TempDir t;
  std::string log = t / "sweep.log";
  std::string win = " --first-stage 1 --center -6 0 0.0625 0 --half-width 0 0 0 0";
  // zero-width window: one cell per stage; a budget of zero cells stops before it
  CliRun a = run("param-sweep --degree 2 --stages 1 --max-cells 0 --resume " + log + win, t);
  EXPECT_EQ(a.code, 2) << a.err;
  EXPECT_TRUE(fs::exists(log));
  // a different window is refused
  CliRun b = run("param-sweep --degree 2 --stages 1 --resume " + log +
                  " --first-stage 1 --center -5 0 0.0625 0 --half-width 0 0 0 0",
              t);
  EXPECT_EQ(b.code, 3);
  // N <= 1 cannot certify the horseshoe: the one cell is visited with no ball
  CliRun c = run("param-sweep --degree 2 --stages 1 --resume " + log + win, t);
  EXPECT_EQ(c.code, 0) << c.err;
  auto scan = scan_log(read_file_bytes(log));
  EXPECT_TRUE(scan.error.empty());
  EXPECT_EQ(scan.state.visits.size(), 1U);
  EXPECT_TRUE(scan.state.balls.empty());
  CliRun d = run("locus-render --log " + log + " --plane 0 2 --size 16 16 --out " + t / "l.ppm", t);
  EXPECT_EQ(d.code, 0) << d.err;
  PpmImage img = parse_ppm(read_text_file(t / "l.ppm"));
  EXPECT_EQ(img.raster.painted(), 0U);
  EXPECT_EQ(img.legend, std::vector<std::string>{"no balls"});
  // damage the tail: refused without --recover, repaired with it
  {
    std::ofstream f(log, std::ios::binary | std::ios::app);
    f << "junk";
  }
  EXPECT_EQ(run("param-sweep --degree 2 --stages 1 --resume " + log + win, t).code, 3);
  EXPECT_EQ(run("param-sweep --degree 2 --stages 1 --recover --resume " + log + win, t).code, 0);
  EXPECT_TRUE(scan_log(read_file_bytes(log)).error.empty());
}

TEST(Cli, CertifyThenVerify) {
  TempDir t;
  std::string m = write(t, "hs.map", kHorseshoe);
  CliRun r = run("certify-hyp --map " + m + " --out " + t / "o", t);
  ASSERT_EQ(r.code, 0) << r.err;
  std::string cert = t / "o/certificate.json";
  std::string text = read_text_file(cert);
  auto lc = certificate_from_json(Json::parse(text));
  EXPECT_EQ(lc.cert.status, CertStatus::kCertified);
  EXPECT_EQ(dump(certificate_to_json(lc.cert, lc.map, lc.config)), text);
  EXPECT_NE(read_text_file(t / "o/certificate.txt").find("status certified"), std::string::npos);

  CliRun v = run("verify-cert --cert " + cert + " --samples 2000", t);
  EXPECT_EQ(v.code, 0) << v.out << v.err;
  EXPECT_NE(v.out.find("violations 0"), std::string::npos) << v.out;

  // a doubled witness constant no longer matches rho
  Json j = Json::parse(text);
  Dyadic lambda = io::dy(j.at("lambda"));
  j["lambda"] = io::dy(lambda * Dyadic(2));
  write_text_file(t / "tampered.json", dump(j));
  EXPECT_EQ(run("verify-cert --cert " + t / "tampered.json" + " --samples 10", t).code, 4);
  // a Delta that is too large breaks Q Delta < min(gamma, lambda/4)
  j = Json::parse(text);
  j["delta"] = io::dy(io::dy(j.at("delta")) * Dyadic(64));
  write_text_file(t / "tampered.json", dump(j));
  EXPECT_EQ(run("verify-cert --cert " + t / "tampered.json" + " --samples 10", t).code, 4);
  // an unknown config key is rejected as invalid input
  j = Json::parse(text);
  j["config"]["colour"] = "red";
  write_text_file(t / "tampered.json", dump(j));
  EXPECT_EQ(run("verify-cert --cert " + t / "tampered.json" + " --samples 10", t).code, 3);
}

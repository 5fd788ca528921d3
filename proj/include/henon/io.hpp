#pragma once

// Map files, JSON artifacts and the output directory.  Every number is
// written as a [mantissa, exponent] pair with the mantissa as a decimal string;
// every artifact starts with a magic/format/version envelope.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "henon/certify.hpp"
#include "henon/juliaset.hpp"

namespace henon {

using Json = nlohmann::json;

inline constexpr const char* kMagic = "henon-artifact";
inline constexpr int kFormatVersion = 1;
inline constexpr const char* kOutDirEnv = "HENON_OUT_DIR";

// ---------------------------------------------------------------------------
// Map files
//
//   henon-map v1
//   factor degree 2          one block per factor, applied in order
//   coeff 0 <re> <im>        coefficients below the monic leading term
//   coeff 1 <re> <im>
//   a <re> <im>
//   radius <r>               optional parameter radius
//
// A number is either a dyadic pair "M E" (value M * 2^E) or one exact decimal
// token; '#' starts a comment.

namespace detail {

struct MapLexer {
  std::string source;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidInput(source + ":" + std::to_string(line) + ": " + msg);
  }
};

inline bool is_integer_token(const std::string& t) {
  std::size_t i = (!t.empty() && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
  if (i == t.size()) return false;
  for (; i < t.size(); ++i)
    if (t[i] < '0' || t[i] > '9') return false;
  return true;
}

// Exact value of a decimal token, or nullopt when it has no finite binary expansion.
inline std::optional<Dyadic> exact_decimal(const std::string& t) {
  std::size_t i = 0;
  bool neg = false;
  if (i < t.size() && (t[i] == '-' || t[i] == '+')) neg = t[i++] == '-';
  std::string digits;
  long frac = 0;
  bool dot = false, any = false;
  for (; i < t.size(); ++i) {
    if (t[i] == '.' && !dot) {
      dot = true;
    } else if (t[i] >= '0' && t[i] <= '9') {
      digits.push_back(t[i]);
      any = true;
      if (dot) ++frac;
    } else {
      return std::nullopt;
    }
  }
  if (!any) return std::nullopt;
  mpz_class num(digits, 10);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, static_cast<unsigned long>(frac));
  // num / 10^frac = num / (2^frac 5^frac) is dyadic iff 5^frac divides num
  mpz_class five;
  mpz_ui_pow_ui(five.get_mpz_t(), 5, static_cast<unsigned long>(frac));
  if (!mpz_divisible_p(num.get_mpz_t(), five.get_mpz_t())) return std::nullopt;
  mpz_class q = num / five;
  return Dyadic(neg ? mpz_class(-q) : q, -frac);
}

// Parses `count` numbers from the token list starting at `at`.
inline std::vector<Dyadic> parse_numbers(const MapLexer& lx, const std::vector<std::string>& tok, std::size_t at,
                                         std::size_t count) {
  std::size_t rest = tok.size() - at;
  std::vector<Dyadic> out;
  if (rest == 2 * count) {
    for (std::size_t k = 0; k < count; ++k) {
      const auto& m = tok[at + 2 * k];
      const auto& e = tok[at + 2 * k + 1];
      if (!is_integer_token(m) || !is_integer_token(e)) lx.fail("expected a dyadic pair, got '" + m + " " + e + "'");
      long ex = 0;
      try {
        ex = std::stol(e);
      } catch (const std::exception&) {
        lx.fail("exponent out of range: '" + e + "'");
      }
      out.emplace_back(mpz_class(m[0] == '+' ? m.substr(1) : m, 10), ex);
    }
  } else if (rest == count) {
    for (std::size_t k = 0; k < count; ++k) {
      auto d = exact_decimal(tok[at + k]);
      if (!d) lx.fail("'" + tok[at + k] + "' is not an exact dyadic number (use a mantissa/exponent pair)");
      out.push_back(*d);
    }
  } else {
    lx.fail("expected " + std::to_string(count) + " numbers or " + std::to_string(count) + " dyadic pairs");
  }
  return out;
}

}  // namespace detail

inline PolyDiffeo parse_map(const std::string& text, const std::string& source = "<map>") {
  detail::MapLexer lx{source, 0};
  std::istringstream in(text);
  std::string raw;
  bool header = false;
  std::vector<HenonFactor> factors;
  std::vector<char> have_coeff;
  bool have_a = true;
  int block_line = 0;
  Dyadic radius;
  bool have_radius = false;
  auto close_block = [&]() {
    if (factors.empty()) return;
    for (std::size_t j = 0; j < have_coeff.size(); ++j)
      if (!have_coeff[j]) {
        lx.line = block_line;
        lx.fail("factor is missing coeff " + std::to_string(j));
      }
    if (!have_a) {
      lx.line = block_line;
      lx.fail("factor is missing its 'a' line");
    }
  };
  while (std::getline(in, raw)) {
    ++lx.line;
    auto hash = raw.find('#');
    std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 2 || tok[0] != "henon-map" || tok[1] != "v1") lx.fail("expected header 'henon-map v1'");
      header = true;
      continue;
    }
    if (have_radius) lx.fail("nothing may follow the radius line");
    if (tok[0] == "factor") {
      close_block();
      if (tok.size() != 3 || tok[1] != "degree" || !detail::is_integer_token(tok[2]))
        lx.fail("expected 'factor degree <d>'");
      int d = 0;
      try {
        d = std::stoi(tok[2]);
      } catch (const std::exception&) {
        lx.fail("degree out of range");
      }
      if (d < 2 || d > 64) lx.fail("degree must be in [2, 64]");
      HenonFactor f;
      f.p.degree = d;
      f.p.coeffs.resize(static_cast<std::size_t>(d));
      factors.push_back(std::move(f));
      have_coeff.assign(static_cast<std::size_t>(d), 0);
      have_a = false;
      block_line = lx.line;
    } else if (tok[0] == "coeff") {
      if (factors.empty()) lx.fail("'coeff' before any 'factor' line");
      if (tok.size() < 2 || !detail::is_integer_token(tok[1])) lx.fail("expected 'coeff <j> <re> <im>'");
      long j = std::stol(tok[1]);
      if (j < 0 || j >= factors.back().p.degree)
        lx.fail("coefficient index " + tok[1] + " outside [0, " + std::to_string(factors.back().p.degree - 1) + "]");
      if (have_coeff[static_cast<std::size_t>(j)]) lx.fail("coefficient " + tok[1] + " given twice");
      auto v = detail::parse_numbers(lx, tok, 2, 2);
      factors.back().p.coeffs[static_cast<std::size_t>(j)] = {v[0], v[1]};
      have_coeff[static_cast<std::size_t>(j)] = 1;
    } else if (tok[0] == "a") {
      if (factors.empty()) lx.fail("'a' before any 'factor' line");
      if (have_a) lx.fail("'a' given twice");
      auto v = detail::parse_numbers(lx, tok, 1, 2);
      if (v[0].is_zero() && v[1].is_zero()) lx.fail("a must be nonzero");
      factors.back().a = {v[0], v[1]};
      have_a = true;
    } else if (tok[0] == "radius") {
      close_block();
      auto v = detail::parse_numbers(lx, tok, 1, 1);
      if (v[0].sign() < 0) lx.fail("radius must be nonnegative");
      radius = v[0];
      have_radius = true;
    } else {
      lx.fail("unknown keyword '" + tok[0] + "'");
    }
  }
  if (!header) {
    lx.line = std::max(lx.line, 1);
    lx.fail("empty map file (expected header 'henon-map v1')");
  }
  close_block();
  if (factors.empty()) lx.fail("no factors");
  try {
    return PolyDiffeo(std::move(factors), radius);
  } catch (const InvalidInput& e) {
    lx.fail(e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(path + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline PolyDiffeo load_map(const std::string& path) { return parse_map(read_text_file(path), path); }

// Writes via a temporary file and rename, so readers never see half a file.
inline void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput(path + ": cannot write");
    out << text;
    if (!out) throw InvalidInput(path + ": write failed");
  }
  std::filesystem::rename(tmp, p);
}

inline std::string output_dir() {
  const char* d = std::getenv(kOutDirEnv);
  return d && *d ? std::string(d) : std::string(".");
}

// ---------------------------------------------------------------------------
// JSON encoding of numbers and enclosures

namespace io {

inline Json dy(const Dyadic& d) { return Json::array({d.mantissa_string(), d.exponent()}); }

inline Dyadic dy(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_number_integer())
    throw InvalidInput("expected a [mantissa, exponent] pair, got " + j.dump());
  const auto& m = j[0].get_ref<const std::string&>();
  if (!detail::is_integer_token(m)) throw InvalidInput("bad mantissa '" + m + "'");
  return Dyadic(mpz_class(m[0] == '+' ? m.substr(1) : m, 10), j[1].get<long>());
}

inline Json dbl(double x) {
  if (!std::isfinite(x)) throw InvalidInput("non-finite value in output");
  return dy(Dyadic::from_double(x));
}

inline double dbl(const Json& j) {
  Dyadic d = dy(j);
  double x = d.to_double_nearest();
  if (!(Dyadic::from_double(x) == d)) throw InvalidInput("value " + j.dump() + " is not a double");
  return x;
}

inline Json iv(const FastInterval& x) { return Json::array({dbl(x.lo()), dbl(x.hi())}); }
inline FastInterval iv(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected an interval");
  double lo = dbl(j[0]), hi = dbl(j[1]);
  if (!(lo <= hi)) throw InvalidInput("interval with lo > hi");
  return {lo, hi};
}
inline Json cr(const ComplexRectD& c) { return Json::array({iv(c.re), iv(c.im)}); }
inline ComplexRectD cr(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a complex rectangle");
  return {iv(j[0]), iv(j[1])};
}
inline Json vec(const VecC2D& v) { return Json::array({cr(v.x), cr(v.y)}); }
inline VecC2D vec(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a vector");
  return {cr(j[0]), cr(j[1])};
}
inline Json box(const BoxC2D& b) { return Json::array({cr(b.z), cr(b.w)}); }
inline BoxC2D box(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a box");
  return {cr(j[0]), cr(j[1])};
}
inline Json cd(const ComplexDyadic& c) { return Json::array({dy(c.re), dy(c.im)}); }
inline ComplexDyadic cd(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a complex dyadic");
  return {dy(j[0]), dy(j[1])};
}
inline Json point(const std::array<Dyadic, 4>& p) { return Json::array({dy(p[0]), dy(p[1]), dy(p[2]), dy(p[3])}); }
inline std::array<Dyadic, 4> point(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw InvalidInput("expected a point");
  return {dy(j[0]), dy(j[1]), dy(j[2]), dy(j[3])};
}

inline Json map(const PolyDiffeo& f) {
  Json fs = Json::array();
  for (const auto& fac : f.factors()) {
    Json c = Json::array();
    for (const auto& x : fac.p.coeffs) c.push_back(cd(x));
    fs.push_back({{"degree", fac.p.degree}, {"coeffs", c}, {"a", cd(fac.a)}});
  }
  return {{"factors", fs}, {"radius", dy(f.param_radius())}, {"hash", f.hash()}};
}

inline PolyDiffeo map(const Json& j) {
  std::vector<HenonFactor> fs;
  for (const auto& jf : j.at("factors")) {
    HenonFactor f;
    f.p.degree = jf.at("degree").get<int>();
    for (const auto& c : jf.at("coeffs")) f.p.coeffs.push_back(cd(c));
    f.a = cd(jf.at("a"));
    fs.push_back(std::move(f));
  }
  PolyDiffeo f(std::move(fs), dy(j.at("radius")));
  if (j.contains("hash") && j.at("hash").get<std::string>() != f.hash()) throw InvalidInput("map hash mismatch");
  return f;
}

inline OrbitClass orbit_class(const std::string& s) {
  for (auto c : {OrbitClass::kSaddle, OrbitClass::kAttracting, OrbitClass::kRepelling, OrbitClass::kUndetermined})
    if (s == to_string(c)) return c;
  throw InvalidInput("unknown orbit class '" + s + "'");
}

// Rejects keys outside `allowed`.
inline void only_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw InvalidInput(what + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InvalidInput(what + ": unknown key '" + k + "'");
  }
}

}  // namespace io

// ---------------------------------------------------------------------------
// Run configuration
//
// The parameters that determine an artifact, stored in its header.  Thread
// count and output directory do not change any output and are left out.

inline const std::vector<std::string>& config_keys(const std::string& command) {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"julia-approx", {"command", "map", "map_hash", "N", "max_n", "ell_schedule", "max_period", "seed"}},
      {"certify-hyp",
       {"command", "map", "map_hash", "min_N", "max_N", "phase_samples", "julia_slack", "max_m", "ell_schedule",
        "seed"}},
      {"render", {"command", "boxset", "plane", "window", "size"}},
      {"locus-render", {"command", "log", "degree", "plane", "window", "size"}},
  };
  auto it = keys.find(command);
  if (it == keys.end()) throw InvalidInput("config: unknown command '" + command + "'");
  return it->second;
}

inline void validate_config(const Json& c) {
  if (!c.is_object() || !c.contains("command") || !c.at("command").is_string())
    throw InvalidInput("config: missing command");
  const auto& keys = config_keys(c.at("command").get<std::string>());
  for (const auto& [k, v] : c.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw InvalidInput("config: unknown key '" + k + "'");
}

// ---------------------------------------------------------------------------
// Envelope

inline Json envelope(const std::string& format, const Json& config) {
  validate_config(config);
  return {{"magic", kMagic}, {"format", format}, {"version", kFormatVersion}, {"config", config}};
}

inline const Json& check_envelope(const Json& j, const std::string& format) {
  if (!j.is_object() || !j.contains("magic") || j.at("magic") != kMagic) throw InvalidInput("not a henon artifact");
  if (j.at("format") != format)
    throw InvalidInput("expected a " + format + " file, got " + j.at("format").dump());
  if (j.at("version") != kFormatVersion) throw InvalidInput("unsupported version " + j.at("version").dump());
  if (!j.contains("config")) throw InvalidInput("artifact has no config");
  validate_config(j.at("config"));
  return j;
}

inline Json parse_json_file(const std::string& path) {
  std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(1) + "\n"; }

// ---------------------------------------------------------------------------
// Certificates

inline Json certificate_to_json(const HypCertificate& c, const PolyDiffeo& f, const Json& config) {
  Json j = envelope("certificate", config);
  j["map"] = io::map(f);
  j["status"] = to_string(c.status);
  j["note"] = c.note;
  j["N"] = c.N;
  j["n"] = c.n;
  j["k"] = c.k;
  j["R"] = io::dy(c.R);
  j["m"] = c.witness.m;
  j["lambda"] = io::dy(c.witness.lambda);
  j["rho"] = io::dy(c.rho);
  j["gamma"] = io::dy(c.gamma);
  j["Q"] = io::dy(c.Q);
  j["M2"] = io::dy(c.M2);
  j["mu"] = io::dy(c.mu);
  j["delta"] = c.delta_infinite ? Json("infinite") : io::dy(c.delta);
  j["phase_samples"] = c.phase_samples;
  Json fr = Json::array();
  for (const auto& x : c.frames)
    fr.push_back({{"box", x.box},
                  {"base", io::point(x.base)},
                  {"base_box", io::box(x.base_box)},
                  {"eu", io::vec(x.eu)},
                  {"es", io::vec(x.es)},
                  {"rho", io::dy(x.rho)},
                  {"M2", Json::array({io::dy(x.M2[0]), io::dy(x.M2[1])})},
                  {"mu", Json::array({io::dy(x.mu[0]), io::dy(x.mu[1])})},
                  {"expansion", Json::array({io::dy(x.expansion[0]), io::dy(x.expansion[1])})}});
  j["frames"] = fr;
  j["attracting"] = c.attracting;
  j["repelling"] = c.repelling;
  return j;
}

struct LoadedCertificate {
  HypCertificate cert;
  PolyDiffeo map;
  Json config;
};

inline LoadedCertificate certificate_from_json(const Json& j) {
  check_envelope(j, "certificate");
  try {
    LoadedCertificate out;
    out.config = j.at("config");
    out.map = io::map(j.at("map"));
    auto& c = out.cert;
    auto st = j.at("status").get<std::string>();
    if (st == "certified") c.status = CertStatus::kCertified;
    else if (st == "not-yet") c.status = CertStatus::kNotYet;
    else throw InvalidInput("unknown status '" + st + "'");
    c.note = j.at("note").get<std::string>();
    c.N = j.at("N").get<int>();
    c.n = j.at("n").get<int>();
    c.k = j.at("k").get<int>();
    c.R = io::dy(j.at("R"));
    c.witness.m = j.at("m").get<int>();
    c.witness.lambda = io::dy(j.at("lambda"));
    c.rho = io::dy(j.at("rho"));
    c.gamma = io::dy(j.at("gamma"));
    c.Q = io::dy(j.at("Q"));
    c.M2 = io::dy(j.at("M2"));
    c.mu = io::dy(j.at("mu"));
    if (j.at("delta") == "infinite") c.delta_infinite = true;
    else c.delta = io::dy(j.at("delta"));
    c.phase_samples = j.at("phase_samples").get<int>();
    for (const auto& x : j.at("frames")) {
      io::only_keys(x, {"box", "base", "base_box", "eu", "es", "rho", "M2", "mu", "expansion"}, "frame");
      ConeFrame f;
      f.box = x.at("box").get<BoxKey>();
      f.base = io::point(x.at("base"));
      f.base_box = io::box(x.at("base_box"));
      f.eu = io::vec(x.at("eu"));
      f.es = io::vec(x.at("es"));
      f.rho = io::dy(x.at("rho"));
      for (std::size_t d = 0; d < 2; ++d) {
        f.M2[d] = io::dy(x.at("M2").at(d));
        f.mu[d] = io::dy(x.at("mu").at(d));
        f.expansion[d] = io::dy(x.at("expansion").at(d));
      }
      c.frames.push_back(std::move(f));
    }
    c.attracting = j.at("attracting").get<std::vector<BoxKey>>();
    c.repelling = j.at("repelling").get<std::vector<BoxKey>>();
    return out;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed certificate: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Box sets and approximation results

struct BoxSet {
  Dyadic R;
  int level = 0;
  std::vector<BoxKey> boxes;           // sorted
  std::vector<std::uint32_t> component;  // per box
  std::vector<std::string> kind;       // per component: orbit class or "untyped"

  static BoxSet from_model(const ChainModel& m, const std::vector<ComponentType>* types = nullptr) {
    BoxSet s;
    s.R = m.spec.R;
    s.level = m.spec.level;
    s.boxes = m.boxes;
    s.component = m.component;
    s.kind.assign(m.component_count, "untyped");
    if (types)
      for (std::size_t c = 0; c < types->size(); ++c) s.kind[c] = to_string((*types)[c].cls);
    return s;
  }
  [[nodiscard]] GridSpec grid() const { return {R, level}; }
};

inline Json boxset_to_json(const BoxSet& s, const Json& config) {
  Json j = envelope("boxset", config);
  j["R"] = io::dy(s.R);
  j["level"] = s.level;
  j["boxes"] = s.boxes;
  j["component"] = s.component;
  j["kind"] = s.kind;
  return j;
}

inline BoxSet boxset_from_json(const Json& j) {
  check_envelope(j, "boxset");
  try {
    BoxSet s;
    s.R = io::dy(j.at("R"));
    s.level = j.at("level").get<int>();
    s.boxes = j.at("boxes").get<std::vector<BoxKey>>();
    s.component = j.at("component").get<std::vector<std::uint32_t>>();
    s.kind = j.at("kind").get<std::vector<std::string>>();
    GridSpec g(s.R, s.level);
    if (s.component.size() != s.boxes.size()) throw InvalidInput("component list length differs from box list");
    if (!std::is_sorted(s.boxes.begin(), s.boxes.end())) throw InvalidInput("boxes not sorted");
    for (auto b : s.boxes)
      for (auto i : unpack_box(b))
        if (i >= g.cells()) throw InvalidInput("box index outside the grid");
    for (auto c : s.component)
      if (c >= s.kind.size()) throw InvalidInput("component id without a kind");
    return s;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed box set: ") + e.what());
  }
}

inline Json orbit_to_json(const PeriodicOrbit& o) {
  Json pts = Json::array(), bxs = Json::array(), seq = Json::array(), eig = Json::array();
  for (const auto& p : o.points) pts.push_back(io::point(p));
  for (const auto& b : o.boxes) bxs.push_back(io::box(b));
  for (const auto& s : o.sequence) seq.push_back(io::cr(s));
  for (const auto& e : o.eigen)
    eig.push_back({{"lambda_u", io::cr(e.lambda_u)}, {"lambda_s", io::cr(e.lambda_s)}, {"eu", io::vec(e.eu)},
                   {"es", io::vec(e.es)}});
  return {{"period", o.period}, {"class", to_string(o.cls)}, {"precision", io::dy(o.precision)},
          {"points", pts},      {"boxes", bxs},              {"sequence", seq},
          {"eigen", eig}};
}

inline PeriodicOrbit orbit_from_json(const Json& j) {
  PeriodicOrbit o;
  o.period = j.at("period").get<int>();
  o.cls = io::orbit_class(j.at("class").get<std::string>());
  o.precision = io::dy(j.at("precision"));
  for (const auto& p : j.at("points")) o.points.push_back(io::point(p));
  for (const auto& b : j.at("boxes")) o.boxes.push_back(io::box(b));
  for (const auto& s : j.at("sequence")) o.sequence.push_back(io::cr(s));
  for (const auto& e : j.at("eigen"))
    o.eigen.push_back({io::cr(e.at("lambda_u")), io::cr(e.at("lambda_s")), io::vec(e.at("eu")), io::vec(e.at("es"))});
  return o;
}

// Everything in an approximation result except the edge lists.
struct ApproximationFile {
  int N = 0, n = 0, k = 0, n_prime = 0, ell = 0;
  BoxSet boxes;
  std::vector<PeriodicOrbit> orbits;
  std::vector<int> component_orbit;  // per component, -1 if none
};

inline ApproximationFile approximation_file(const ApproximationResult& r) {
  ApproximationFile a;
  a.N = r.N;
  a.n = r.n;
  a.k = r.k;
  a.n_prime = r.n_prime;
  a.ell = r.ell;
  a.boxes = BoxSet::from_model(r.model, &r.types);
  a.orbits = r.orbits;
  for (const auto& t : r.types) a.component_orbit.push_back(t.orbit);
  return a;
}

inline Json approximation_to_json(const ApproximationFile& a, const PolyDiffeo& f, const Json& config) {
  Json j = envelope("approximation", config);
  j["map"] = io::map(f);
  j["N"] = a.N;
  j["n"] = a.n;
  j["k"] = a.k;
  j["n_prime"] = a.n_prime;
  j["ell"] = a.ell;
  Json b = boxset_to_json(a.boxes, config);
  j["R"] = b["R"];
  j["level"] = b["level"];
  j["boxes"] = b["boxes"];
  j["component"] = b["component"];
  j["kind"] = b["kind"];
  j["component_orbit"] = a.component_orbit;
  Json orbs = Json::array();
  for (const auto& o : a.orbits) orbs.push_back(orbit_to_json(o));
  j["orbits"] = orbs;
  return j;
}

inline ApproximationFile approximation_from_json(const Json& j) {
  check_envelope(j, "approximation");
  try {
    ApproximationFile a;
    a.N = j.at("N").get<int>();
    a.n = j.at("n").get<int>();
    a.k = j.at("k").get<int>();
    a.n_prime = j.at("n_prime").get<int>();
    a.ell = j.at("ell").get<int>();
    Json b = envelope("boxset", j.at("config"));
    for (const char* key : {"R", "level", "boxes", "component", "kind"}) b[key] = j.at(key);
    a.boxes = boxset_from_json(b);
    a.component_orbit = j.at("component_orbit").get<std::vector<int>>();
    for (const auto& o : j.at("orbits")) a.orbits.push_back(orbit_from_json(o));
    return a;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed approximation: ") + e.what());
  }
}

}  // namespace henon

#pragma once

// Sweeps over the family (z^d + a_{d-2} z^{d-2} + ... + a_0 - a w, z): point
// certification, robustness radii by inflated-coefficient re-verification, and
// an append-only checksummed log that can be resumed.

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <unistd.h>

#include "henon/certify.hpp"

namespace henon {

// Coefficients (a_0, ..., a_{d-2}, a).
struct ParamPoint {
  int degree = 2;
  std::vector<ComplexDyadic> coeffs;

  ParamPoint() = default;
  ParamPoint(int d, std::vector<ComplexDyadic> c) : degree(d), coeffs(std::move(c)) {
    if (degree < 2) throw InvalidInput("degree must be >= 2");
    if (static_cast<int>(coeffs.size()) != degree) throw InvalidInput("expected degree coefficients");
  }
  static ParamPoint zero(int d) { return ParamPoint(d, std::vector<ComplexDyadic>(static_cast<std::size_t>(d))); }
  static ParamPoint quadratic(const ComplexDyadic& c, const ComplexDyadic& a) { return ParamPoint(2, {c, a}); }

  // Real coordinates: Re a_0, Im a_0, ..., Re a, Im a.
  [[nodiscard]] std::size_t dims() const { return 2 * coeffs.size(); }
  [[nodiscard]] const Dyadic& coord(std::size_t i) const { return i % 2 ? coeffs[i / 2].im : coeffs[i / 2].re; }
  Dyadic& coord(std::size_t i) { return i % 2 ? coeffs[i / 2].im : coeffs[i / 2].re; }
  [[nodiscard]] const ComplexDyadic& jacobian_coeff() const { return coeffs.back(); }

  [[nodiscard]] PolyDiffeo map(const Dyadic& radius = {}) const {
    HenonFactor f;
    f.p.degree = degree;
    f.p.coeffs.assign(coeffs.begin(), coeffs.end() - 1);
    f.p.coeffs.emplace_back();  // centered: no z^{d-1} term
    f.a = coeffs.back();
    return PolyDiffeo({f}, radius);
  }
  friend bool operator==(const ParamPoint&, const ParamPoint&) = default;
};

// Closed L-infinity ball in the real coordinates.
struct HypBall {
  ParamPoint center;
  Dyadic radius;
  std::uint64_t cert_id = 0;  // ordinal of the visit record that emitted it
  int N = 0;
  int n = 0;
  int k = 0;
  int m = 0;
  Dyadic lambda;
  Dyadic delta;

  [[nodiscard]] bool contains(const ParamPoint& p) const {
    if (p.degree != center.degree) return false;
    for (std::size_t i = 0; i < p.dims(); ++i)
      if ((p.coord(i) - center.coord(i)).abs() > radius) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Robustness radius

struct RobustnessOptions {
  int max_bits = 40;    // smallest probe is 2^-max_bits
  int refine_bits = 3;  // bisection steps below the first passing power of two
  int growth = 8;       // a probe fails once a model level exceeds this many times the center's
  int threads = 1;
  std::function<void(const std::string&)> log;
};

namespace detail {

inline std::set<BoxKey> ancestors(const std::vector<BoxKey>& boxes, int shift) {
  std::set<BoxKey> out;
  for (BoxKey b : boxes) {
    auto i = unpack_box(b);
    out.insert(pack_box(i[0] >> shift, i[1] >> shift, i[2] >> shift, i[3] >> shift));
  }
  return out;
}

// Does g (or its inverse) map every box of the union strictly inside the
// union?  Then the union lies in a basin and misses the Julia set.
inline bool traps(const PolyDiffeo& g, const GridSpec& spec, const std::vector<BoxKey>& boxes, Direction dir) {
  if (boxes.empty()) return true;
  BoxC2D whole = spec.whole();
  for (BoxKey b : boxes) {
    BoxC2D img = eval(g, spec.box(b), dir);
    if (!whole.interior_contains(img)) return false;
    std::array<std::pair<long, long>, 4> r;
    long count = 1;
    for (int j = 0; j < 4; ++j) {
      r[static_cast<std::size_t>(j)] = spec.index_range(img.coord(j));
      count *= r[static_cast<std::size_t>(j)].second - r[static_cast<std::size_t>(j)].first + 1;
    }
    if (count > 4096) return false;
    // every cell touching the image belongs to the union, so the image sits in its interior
    for (long a = r[0].first; a <= r[0].second; ++a)
      for (long c = r[1].first; c <= r[1].second; ++c)
        for (long d = r[2].first; d <= r[2].second; ++d)
          for (long e = r[3].first; e <= r[3].second; ++e) {
            BoxKey k = pack_box(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(c),
                                static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(e));
            if (!std::binary_search(boxes.begin(), boxes.end(), k)) return false;
          }
  }
  return true;
}

}  // namespace detail

// Re-verification of a point certificate for every map in the coefficient
// ball of radius r.  The center's model sizes bound the work per level.
class RobustnessChecker {
 public:
  RobustnessChecker(PolyDiffeo f, HypCertificate cert, RobustnessOptions opt = {})
      : f_(std::move(f)), c_(std::move(cert)), opt_(std::move(opt)) {
    if (c_.status != CertStatus::kCertified) throw InvalidInput("robustness needs a certified center");
    if (!f_.param_radius().is_zero()) throw InvalidInput("center map must have exact coefficients");
    int start = std::min(2, c_.n);
    for (const auto& m : build_model_levels(f_, c_.R, start, c_.n, opt_.threads)) sizes_.push_back(m.size());
    for (const auto& fr : c_.frames) allowed_.push_back(fr.box);
    allowed_.insert(allowed_.end(), c_.attracting.begin(), c_.attracting.end());
    allowed_.insert(allowed_.end(), c_.repelling.begin(), c_.repelling.end());
    std::sort(allowed_.begin(), allowed_.end());
  }

  [[nodiscard]] const HypCertificate& certificate() const { return c_; }

  struct Probe {
    std::string failure;  // empty when every check passes
    Dyadic gamma;
    Dyadic Q;
    Delta delta;
  };

  // Empty string when every check passes at radius r, else the first failure.
  [[nodiscard]] std::string check(const Dyadic& r) const { return probe(r).failure; }

  [[nodiscard]] Probe probe(const Dyadic& r) const {
    auto fail = [](std::string why) { return Probe{std::move(why), {}, {}, {}}; };
    if (r.sign() < 0) throw InvalidInput("radius must be nonnegative");
    for (const auto& fac : f_.factors())
      if (!(std::max(fac.a.re.abs(), fac.a.im.abs()) > r)) return fail("coefficient rectangle of a contains 0");
    PolyDiffeo g = f_.with_param_radius(r);
    if (!filtration_holds(g, c_.R)) return fail("filtration radius fails");
    // box chain recurrent model of the inflated map, built as in the approximation loop
    int start = std::min(2, c_.n);
    ChainModel model = initial_model(g, GridSpec(c_.R, start), opt_.threads);
    for (std::size_t li = 0;; ++li) {
      if (model.size() > sizes_[li] * static_cast<std::size_t>(opt_.growth) + 64) return fail("model grows");
      if (model.spec.level >= c_.n) break;
      model = refine(model, g, opt_.threads);
    }
    for (BoxKey b : detail::ancestors(model.boxes, c_.n - c_.k))
      if (!std::binary_search(allowed_.begin(), allowed_.end(), b)) return fail("model leaves the certified boxes");
    GridSpec spec = c_.grid();
    if (!detail::traps(g, spec, c_.attracting, Direction::kForward)) return fail("sink boxes do not trap");
    if (!detail::traps(g, spec, c_.repelling, Direction::kInverse)) return fail("source boxes do not trap");
    const int m = c_.witness.m;
    FastInterval need(1.0 + c_.witness.lambda.to_double_down());
    try {
      for (const auto& fr : c_.frames) {
        auto nu = euclid_norm(iterate_jacobian(g, fr.base_box, m, Direction::kForward) * fr.eu);
        auto ns = euclid_norm(iterate_jacobian(g, fr.base_box, m, Direction::kInverse) * fr.es);
        if (!(nu.lo() >= need.hi() && ns.lo() >= need.hi())) return fail("witness inequality fails");
      }
    } catch (const DivisionByIntervalContainingZero&) {
      return fail("degenerate derivative enclosure");
    }
    std::vector<ConeFrame> frames = c_.frames;
    auto a = analyze_frames(g, spec, frames, c_.witness, c_.phase_samples, opt_.threads);
    if (!a.ok) return fail(a.reason);
    Delta d = compute_delta(a.Q, a.gamma, c_.witness.lambda, 2L * c_.N);
    if (!d.infinite && !(Dyadic::pow2(-c_.N) < d.value)) return fail("2^-N >= Delta");
    return {{}, a.gamma, a.Q, d};
  }

  // Largest passing radius on the grid 2^-e (e <= max_bits), refined by bisection.
  [[nodiscard]] Dyadic radius() const {
    auto pass = [&](const Dyadic& r) {
      std::string why = check(r);
      if (opt_.log) opt_.log("radius " + r.to_string() + ": " + (why.empty() ? "ok" : why));
      return why.empty();
    };
    long lo = 1, hi = opt_.max_bits;  // search the smallest passing exponent
    if (!pass(Dyadic::pow2(-hi))) throw ZeroRadius("no radius down to 2^-" + std::to_string(hi) + " passes");
    while (lo < hi) {
      long mid = (lo + hi) / 2;
      if (pass(Dyadic::pow2(-mid))) hi = mid;
      else lo = mid + 1;
    }
    Dyadic good = Dyadic::pow2(-hi), bad = Dyadic::pow2(-hi + 1);
    if (hi == 1 && pass(bad)) return bad;
    for (int i = 0; i < opt_.refine_bits; ++i) {
      Dyadic mid = (good + bad).scaled(-1);
      if (pass(mid)) good = mid;
      else bad = mid;
    }
    return good;
  }

 private:
  PolyDiffeo f_;
  HypCertificate c_;
  RobustnessOptions opt_;
  std::vector<std::size_t> sizes_;
  std::vector<BoxKey> allowed_;
};

inline Dyadic robustness_radius(const ParamPoint& center, const HypCertificate& cert, RobustnessOptions opt = {}) {
  return RobustnessChecker(center.map(), cert, std::move(opt)).radius();
}

// ---------------------------------------------------------------------------
// Sweep grid

// Per real coordinate half-widths around a center; zero holds a coordinate fixed.
struct SweepWindow {
  ParamPoint center;
  std::vector<Dyadic> half_width;
};

// Stage s grid: spacing 2^-s, inside the window (default: the box of radius 2^s at 0).
struct StageGrid {
  int stage = 0;
  ParamPoint center;
  std::vector<long> reach;  // offsets -reach..reach per coordinate

  StageGrid(int degree, int s, const std::optional<SweepWindow>& w) : stage(s) {
    if (s < 0 || s > 40) throw InvalidInput("stage out of range");
    center = w ? w->center : ParamPoint::zero(degree);
    if (center.degree != degree) throw InvalidInput("window degree mismatch");
    for (std::size_t i = 0; i < center.dims(); ++i) {
      Dyadic h = w ? w->half_width.at(i) : Dyadic::pow2(s);
      if (h.sign() < 0) throw InvalidInput("negative half-width");
      mpz_class j = h.scaled(s).floor_int();
      if (j > 1000000) throw InvalidInput("stage grid too large");
      reach.push_back(j.get_si());
    }
  }
  [[nodiscard]] std::uint64_t size() const {
    std::uint64_t n = 1;
    for (long r : reach) {
      auto m = static_cast<std::uint64_t>(2 * r + 1);
      if (n > std::numeric_limits<std::uint64_t>::max() / m) throw InvalidInput("stage grid too large");
      n *= m;
    }
    return n;
  }
  // Mixed-radix decoding, last coordinate fastest.
  [[nodiscard]] std::vector<long> offsets(std::uint64_t ordinal) const {
    std::vector<long> j(reach.size());
    for (std::size_t i = reach.size(); i-- > 0;) {
      auto m = static_cast<std::uint64_t>(2 * reach[i] + 1);
      j[i] = static_cast<long>(ordinal % m) - reach[i];
      ordinal /= m;
    }
    return j;
  }
  [[nodiscard]] ParamPoint point(std::uint64_t ordinal) const {
    ParamPoint p = center;
    auto j = offsets(ordinal);
    for (std::size_t i = 0; i < j.size(); ++i) p.coord(i) = p.coord(i) + Dyadic(mpz_class(j[i]), -stage);
    return p;
  }
};

// Budget schedule: certifier runs with N <= s at stage s.
inline int n_max_of_stage(int s) { return s; }

enum class CellOutcome { kBall = 0, kRetry = 1, kZeroRadius = 2, kInvalid = 3 };

inline const char* to_string(CellOutcome o) {
  switch (o) {
    case CellOutcome::kBall: return "ball";
    case CellOutcome::kRetry: return "retry";
    case CellOutcome::kZeroRadius: return "zero-radius";
    default: return "invalid";
  }
}

struct CellResult {
  CellOutcome outcome = CellOutcome::kRetry;
  HypBall ball;  // filled for kBall; cert_id set by the sweep
  std::string note;
};

using CellJob = std::function<CellResult(const ParamPoint&, int n_max)>;

// Point certification with N <= n_max, then the robustness radius.
inline CellResult certify_cell(const ParamPoint& p, int n_max, CertifyOptions copt, RobustnessOptions ropt) {
  CellResult out;
  copt.max_N = n_max;
  copt.log = nullptr;
  try {
    PolyDiffeo f = p.map();
    HypCertificate c = run_certifier(f, copt);
    Dyadic r = RobustnessChecker(f, c, ropt).radius();
    out.outcome = CellOutcome::kBall;
    out.ball = {p, r, 0, c.N, c.n, c.k, c.witness.m, c.witness.lambda, c.delta};
  } catch (const ZeroRadius& e) {
    out.outcome = CellOutcome::kZeroRadius;
    out.note = e.what();
  } catch (const BudgetExhausted& e) {
    out.outcome = CellOutcome::kRetry;
    out.note = e.what();
  } catch (const InvalidInput& e) {
    out.outcome = CellOutcome::kInvalid;
    out.note = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Log

inline constexpr char kSweepMagic[8] = {'H', 'N', 'S', 'W', 'E', 'E', 'P', '\n'};
inline constexpr std::uint32_t kSweepVersion = 1;

enum class RecordType : std::uint8_t { kConfig = 1, kStage = 2, kVisit = 3 };

struct SweepHeader {
  int degree = 2;
  int first_stage = 0;
  std::optional<SweepWindow> window;
  friend bool operator==(const SweepHeader& a, const SweepHeader& b) {
    if (a.degree != b.degree || a.first_stage != b.first_stage || a.window.has_value() != b.window.has_value())
      return false;
    return !a.window || (a.window->center == b.window->center && a.window->half_width == b.window->half_width);
  }
};

struct Visit {
  int stage = 0;
  std::uint64_t ordinal = 0;
  CellOutcome outcome = CellOutcome::kRetry;
  std::optional<HypBall> ball;
};

struct SweepState {
  SweepHeader header;
  int stage = -1;                 // last stage begun
  std::optional<std::uint64_t> last_ordinal;  // last visited cell of that stage
  std::vector<Visit> visits;
  std::vector<HypBall> balls;     // append-only

  [[nodiscard]] bool covered(const ParamPoint& p) const {
    return std::any_of(balls.begin(), balls.end(), [&](const HypBall& b) { return b.contains(p); });
  }
};

namespace detail {

inline void put_dyadic(std::ostream& os, const Dyadic& d) { os << ' ' << d.mantissa_string() << ' ' << d.exponent(); }

inline Dyadic get_dyadic(std::istream& is) {
  std::string m;
  long e = 0;
  if (!(is >> m >> e)) throw CorruptLog("truncated dyadic");
  try {
    return Dyadic(mpz_class(m, 10), e);
  } catch (const std::invalid_argument&) {
    throw CorruptLog("bad mantissa '" + m + "'");
  }
}

inline void put_point(std::ostream& os, const ParamPoint& p) {
  os << ' ' << p.degree;
  for (std::size_t i = 0; i < p.dims(); ++i) put_dyadic(os, p.coord(i));
}

inline ParamPoint get_point(std::istream& is) {
  int d = 0;
  if (!(is >> d) || d < 2 || d > 64) throw CorruptLog("bad degree");
  ParamPoint p = ParamPoint::zero(d);
  for (std::size_t i = 0; i < p.dims(); ++i) p.coord(i) = get_dyadic(is);
  return p;
}

inline std::string encode(const SweepHeader& h) {
  std::ostringstream os;
  os << h.degree << ' ' << h.first_stage << ' ' << (h.window ? 1 : 0);
  if (h.window) {
    put_point(os, h.window->center);
    for (const auto& w : h.window->half_width) put_dyadic(os, w);
  }
  return os.str();
}

inline SweepHeader decode_header(const std::string& s) {
  std::istringstream is(s);
  SweepHeader h;
  int has = 0;
  if (!(is >> h.degree >> h.first_stage >> has)) throw CorruptLog("bad config record");
  if (has) {
    SweepWindow w;
    w.center = get_point(is);
    for (std::size_t i = 0; i < w.center.dims(); ++i) w.half_width.push_back(get_dyadic(is));
    h.window = std::move(w);
  }
  return h;
}

inline std::string encode(const Visit& v) {
  std::ostringstream os;
  os << v.stage << ' ' << v.ordinal << ' ' << static_cast<int>(v.outcome);
  if (v.ball) {
    const auto& b = *v.ball;
    put_point(os, b.center);
    put_dyadic(os, b.radius);
    os << ' ' << b.cert_id << ' ' << b.N << ' ' << b.n << ' ' << b.k << ' ' << b.m;
    put_dyadic(os, b.lambda);
    put_dyadic(os, b.delta);
  }
  return os.str();
}

inline Visit decode_visit(const std::string& s) {
  std::istringstream is(s);
  Visit v;
  int o = 0;
  if (!(is >> v.stage >> v.ordinal >> o) || o < 0 || o > 3) throw CorruptLog("bad visit record");
  v.outcome = static_cast<CellOutcome>(o);
  if (v.outcome == CellOutcome::kBall) {
    HypBall b;
    b.center = get_point(is);
    b.radius = get_dyadic(is);
    if (!(is >> b.cert_id >> b.N >> b.n >> b.k >> b.m)) throw CorruptLog("bad ball record");
    b.lambda = get_dyadic(is);
    b.delta = get_dyadic(is);
    v.ball = std::move(b);
  }
  return v;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)]);
  return v;
}

inline std::uint32_t crc(const std::string& s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace detail

struct LogScan {
  SweepState state;
  std::size_t valid_bytes = 0;  // length of the longest well-formed prefix
  std::string error;            // empty when the whole file is well-formed
};

// Parses a log image; never throws on corruption, reports the valid prefix instead.
inline LogScan scan_log(const std::string& bytes) {
  LogScan out;
  if (bytes.empty()) return out;
  if (bytes.size() < 12 || bytes.compare(0, 8, std::string(kSweepMagic, 8)) != 0) {
    out.error = "not a sweep log (bad magic)";
    return out;
  }
  if (detail::get_u32(bytes, 8) != kSweepVersion) {
    out.error = "unsupported sweep log version " + std::to_string(detail::get_u32(bytes, 8));
    return out;
  }
  std::size_t at = 12;
  out.valid_bytes = at;
  bool have_config = false;
  while (at < bytes.size()) {
    if (bytes.size() - at < 8) {
      out.error = "truncated record at byte " + std::to_string(at);
      return out;
    }
    std::uint32_t len = detail::get_u32(bytes, at);
    if (len == 0 || len > (1U << 24) || bytes.size() - at - 8 < len) {
      out.error = "truncated record at byte " + std::to_string(at);
      return out;
    }
    std::string body = bytes.substr(at + 4, len);
    if (detail::crc(body) != detail::get_u32(bytes, at + 4 + len)) {
      out.error = "checksum mismatch at byte " + std::to_string(at);
      return out;
    }
    try {
      auto type = static_cast<RecordType>(static_cast<unsigned char>(body[0]));
      std::string payload = body.substr(1);
      if (!have_config && type != RecordType::kConfig) throw CorruptLog("first record is not the configuration");
      switch (type) {
        case RecordType::kConfig:
          if (have_config) throw CorruptLog("second configuration record");
          out.state.header = detail::decode_header(payload);
          have_config = true;
          break;
        case RecordType::kStage: {
          int s = std::stoi(payload);
          if (s <= out.state.stage && out.state.stage >= 0) throw CorruptLog("stages out of order");
          out.state.stage = s;
          out.state.last_ordinal.reset();
          break;
        }
        case RecordType::kVisit: {
          Visit v = detail::decode_visit(payload);
          if (v.stage != out.state.stage) throw CorruptLog("visit outside the current stage");
          if (out.state.last_ordinal && v.ordinal <= *out.state.last_ordinal) throw CorruptLog("visits out of order");
          out.state.last_ordinal = v.ordinal;
          if (v.ball) out.state.balls.push_back(*v.ball);
          out.state.visits.push_back(std::move(v));
          break;
        }
        default: throw CorruptLog("unknown record type");
      }
    } catch (const std::exception& e) {
      out.error = std::string("bad record at byte ") + std::to_string(at) + ": " + e.what();
      return out;
    }
    at += 8 + len;
    out.valid_bytes = at;
  }
  return out;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Truncates a damaged log to its last valid record; returns the kept byte count.
inline std::size_t recover_log(const std::string& path) {
  LogScan s = scan_log(read_file_bytes(path));
  if (s.valid_bytes < 12 && !s.error.empty()) throw CorruptLog(s.error + "; nothing to recover");
  if (truncate(path.c_str(), static_cast<off_t>(s.valid_bytes)) != 0) throw InvalidInput("cannot truncate " + path);
  return s.valid_bytes;
}

// Append-only writer; every record is flushed and synced before returning.
class SweepLog {
 public:
  // Opens or creates the log.  A non-empty log must carry the same header.
  SweepLog(const std::string& path, const SweepHeader& header) : path_(path) {
    LogScan s = scan_log(read_file_bytes(path));
    if (!s.error.empty())
      throw CorruptLog(path + ": " + s.error + " (valid prefix " + std::to_string(s.valid_bytes) + " bytes)");
    file_ = std::fopen(path.c_str(), "ab");
    if (!file_) throw InvalidInput("cannot open " + path);
    if (s.valid_bytes == 0) {
      std::string head(kSweepMagic, 8);
      detail::put_u32(head, kSweepVersion);
      write_raw(head);
      state_.header = header;
      append(RecordType::kConfig, detail::encode(header));
    } else {
      if (!(s.state.header == header)) throw InvalidInput(path + ": sweep configuration differs from the log");
      state_ = std::move(s.state);
    }
  }
  SweepLog(const SweepLog&) = delete;
  SweepLog& operator=(const SweepLog&) = delete;
  ~SweepLog() {
    if (file_) std::fclose(file_);
  }

  [[nodiscard]] const SweepState& state() const { return state_; }

  void begin_stage(int s) {
    append(RecordType::kStage, std::to_string(s));
    state_.stage = s;
    state_.last_ordinal.reset();
  }
  void visit(const Visit& v) {
    append(RecordType::kVisit, detail::encode(v));
    state_.last_ordinal = v.ordinal;
    if (v.ball) state_.balls.push_back(*v.ball);
    state_.visits.push_back(v);
  }

 private:
  void append(RecordType t, const std::string& payload) {
    std::string body(1, static_cast<char>(t));
    body += payload;
    std::string rec;
    detail::put_u32(rec, static_cast<std::uint32_t>(body.size()));
    rec += body;
    detail::put_u32(rec, detail::crc(body));
    write_raw(rec);
  }
  void write_raw(const std::string& s) {
    if (std::fwrite(s.data(), 1, s.size(), file_) != s.size() || std::fflush(file_) != 0)
      throw InvalidInput("write failed: " + path_);
    fsync(fileno(file_));
  }

  std::string path_;
  std::FILE* file_ = nullptr;
  SweepState state_;
};

struct SweepConfig {
  SweepHeader header;
  int stages = 1;  // stages first_stage .. first_stage + stages - 1
  std::size_t max_cells = std::numeric_limits<std::size_t>::max();  // jobs run by this call
  std::function<void(const std::string&)> log;
};

struct SweepReport {
  std::size_t jobs = 0;
  std::size_t skipped_covered = 0;
  std::size_t new_balls = 0;
  bool finished = false;  // all requested stages done
};

// Runs (or resumes) the sweep.  Cells are visited in ordinal order; a cell is
// skipped when a = 0 or an earlier ball covers it.
inline SweepReport sweep(SweepLog& log, const SweepConfig& cfg, const CellJob& job) {
  const auto& h = cfg.header;
  SweepReport rep;
  int last = h.first_stage + cfg.stages - 1;
  int s = log.state().stage < 0 ? h.first_stage : log.state().stage;
  bool fresh = log.state().stage < 0;
  for (; s <= last; ++s, fresh = true) {
    StageGrid grid(h.degree, s, h.window);
    if (fresh) log.begin_stage(s);
    std::uint64_t from = log.state().last_ordinal ? *log.state().last_ordinal + 1 : 0;
    if (cfg.log && from == 0)
      cfg.log("stage " + std::to_string(s) + ": " + std::to_string(grid.size()) + " cells, N <= " +
              std::to_string(n_max_of_stage(s)));
    for (std::uint64_t o = from; o < grid.size(); ++o) {
      ParamPoint p = grid.point(o);
      if (p.jacobian_coeff().is_zero()) continue;
      if (log.state().covered(p)) {
        ++rep.skipped_covered;
        continue;
      }
      if (rep.jobs == cfg.max_cells) return rep;
      ++rep.jobs;
      CellResult r = job(p, n_max_of_stage(s));
      Visit v{s, o, r.outcome, std::nullopt};
      if (r.outcome == CellOutcome::kBall) {
        r.ball.cert_id = log.state().visits.size();
        v.ball = r.ball;
        ++rep.new_balls;
      }
      log.visit(v);
      if (cfg.log)
        cfg.log("  cell " + std::to_string(o) + ": " + to_string(r.outcome) +
                (r.outcome == CellOutcome::kBall ? " radius " + r.ball.radius.to_string() : "") +
                (r.note.empty() ? "" : " (" + r.note + ")"));
    }
  }
  rep.finished = true;
  return rep;
}

}  // namespace henon

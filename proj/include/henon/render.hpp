#pragma once

// Raster slices of box sets and of the certified parameter locus, written as
// binary PPM with the format version and config hash in header comments.

#include <array>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "henon/io.hpp"
#include "henon/paramsweep.hpp"

namespace henon {

inline constexpr const char* kRenderMagic = "henon-render v1";

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBackground{255, 255, 255};

namespace detail {
inline mpq_class to_mpq(const Dyadic& d) {
  mpq_class q(d.mantissa());
  if (d.exponent() >= 0) mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(d.exponent()));
  else mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-d.exponent()));
  return q;
}
}  // namespace detail

inline const std::array<Rgb, 12>& palette() {
  static const std::array<Rgb, 12> p{{{31, 119, 180},
                                      {255, 127, 14},
                                      {44, 160, 44},
                                      {214, 39, 40},
                                      {148, 103, 189},
                                      {140, 86, 75},
                                      {227, 119, 194},
                                      {127, 127, 127},
                                      {188, 189, 34},
                                      {23, 190, 207},
                                      {0, 0, 128},
                                      {128, 0, 0}}};
  return p;
}

inline Rgb palette_color(std::uint64_t id) { return palette()[id % palette().size()]; }

// Two coordinate indices out of `dims`, plus the rectangle shown.
struct Slice {
  std::array<int, 2> plane{0, 1};
  std::array<Dyadic, 2> lo;
  std::array<Dyadic, 2> hi;
  int width = 256;
  int height = 256;
};

inline void validate_slice(const Slice& s, int dims) {
  for (int c : s.plane)
    if (c < 0 || c >= dims)
      throw InvalidPlane("plane coordinate " + std::to_string(c) + " outside [0, " + std::to_string(dims - 1) + "]");
  if (s.plane[0] == s.plane[1]) throw InvalidPlane("plane coordinates must differ");
  for (int k = 0; k < 2; ++k)
    if (!(s.lo[k] < s.hi[k])) throw InvalidInput("empty render window");
  if (s.width < 1 || s.height < 1 || s.width > 8192 || s.height > 8192)
    throw InvalidInput("resolution must be in [1, 8192]");
}

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major, row 0 at the top

  Raster(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, kBackground) {}

  // Fills pixels whose centers lie in [x0, x1) x [y0, y1), given in window coordinates.
  void fill(const Slice& s, const std::array<Dyadic, 2>& a, const std::array<Dyadic, 2>& b, Rgb c) {
    // pixel i has center lo + (i + 1/2) * (hi - lo) / n; solve for the index range exactly
    auto range = [&](int k, int n) -> std::pair<long, long> {
      Dyadic span = s.hi[k] - s.lo[k];
      auto first = [&](const Dyadic& v) {
        // smallest i with lo + (i + 1/2) span / n >= v  <=>  i >= (v - lo) n / span - 1/2
        Dyadic t = (v - s.lo[k]) * Dyadic(n) * Dyadic(2) - span;
        // i >= t / (2 span); ceil of an exact rational
        mpq_class q(detail::to_mpq(t) / detail::to_mpq(Dyadic(2) * span));
        mpz_class fl;
        mpz_fdiv_q(fl.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
        if (mpq_class(fl) < q) fl += 1;
        return fl;
      };
      mpz_class i0 = first(a[k]);  // first center >= a
      mpz_class i1 = first(b[k]);  // first center >= b, excluded
      if (i0 < 0) i0 = 0;
      if (i1 > n) i1 = n;
      if (i0 >= i1) return {0, 0};
      return {i0.get_si(), i1.get_si()};
    };
    auto [x0, x1] = range(0, width);
    auto [y0, y1] = range(1, height);
    for (long y = y0; y < y1; ++y)
      for (long x = x0; x < x1; ++x)
        pixels[static_cast<std::size_t>(height - 1 - y) * width + static_cast<std::size_t>(x)] = c;
  }

  [[nodiscard]] std::size_t painted() const {
    std::size_t n = 0;
    for (const auto& p : pixels) n += !(p == kBackground);
    return n;
  }
};

inline std::string config_hash(const Json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 15];
  return s;
}

// Legend lines are stored as header comments, one per palette entry used.
inline std::string to_ppm(const Raster& r, const Json& config, const std::vector<std::string>& legend = {}) {
  std::string out = "P6\n# " + std::string(kRenderMagic) + "\n# config " + config_hash(config) + "\n";
  for (const auto& l : legend) {
    if (l.find('\n') != std::string::npos) throw InvalidInput("legend line contains a newline");
    out += "# legend " + l + "\n";
  }
  out += std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  out.reserve(out.size() + r.pixels.size() * 3);
  for (const auto& p : r.pixels) {
    out.push_back(static_cast<char>(p.r));
    out.push_back(static_cast<char>(p.g));
    out.push_back(static_cast<char>(p.b));
  }
  return out;
}

struct PpmImage {
  Raster raster{0, 0};
  std::string version;
  std::string config_hash;
  std::vector<std::string> legend;
};

inline PpmImage parse_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto line = [&]() {
    auto e = bytes.find('\n', pos);
    if (e == std::string::npos) throw InvalidInput("truncated PPM header");
    std::string l = bytes.substr(pos, e - pos);
    pos = e + 1;
    return l;
  };
  if (line() != "P6") throw InvalidInput("not a binary PPM");
  PpmImage img;
  std::string l = line();
  if (l != "# " + std::string(kRenderMagic)) throw InvalidInput("missing render version comment");
  img.version = kRenderMagic;
  l = line();
  if (l.rfind("# config ", 0) != 0) throw InvalidInput("missing config hash comment");
  img.config_hash = l.substr(9);
  for (l = line(); l.rfind("# legend ", 0) == 0; l = line()) img.legend.push_back(l.substr(9));
  int w = 0, h = 0;
  if (std::sscanf(l.c_str(), "%d %d", &w, &h) != 2 || w < 1 || h < 1) throw InvalidInput("bad PPM size");
  if (line() != "255") throw InvalidInput("bad PPM depth");
  if (bytes.size() - pos != static_cast<std::size_t>(w) * h * 3) throw InvalidInput("PPM pixel data has wrong length");
  img.raster = Raster(w, h);
  for (std::size_t i = 0; i < img.raster.pixels.size(); ++i)
    img.raster.pixels[i] = {static_cast<std::uint8_t>(bytes[pos + 3 * i]), static_cast<std::uint8_t>(bytes[pos + 3 * i + 1]),
                            static_cast<std::uint8_t>(bytes[pos + 3 * i + 2])};
  return img;
}

// Boxes painted by component id; an empty set gives a blank canvas.
inline Raster render_slice(const BoxSet& set, const Slice& s) {
  validate_slice(s, 4);
  Raster r(s.width, s.height);
  if (set.boxes.empty()) return r;
  GridSpec g = set.grid();
  Dyadic side = g.side_exact();
  for (std::size_t i = 0; i < set.boxes.size(); ++i) {
    auto idx = unpack_box(set.boxes[i]);
    std::array<Dyadic, 2> a, b;
    for (int k = 0; k < 2; ++k) {
      a[k] = -g.R + side * Dyadic(static_cast<long>(idx[static_cast<std::size_t>(s.plane[k])]));
      b[k] = a[k] + side;
    }
    r.fill(s, a, b, palette_color(set.component[i]));
  }
  return r;
}

inline std::string legend_entry(std::uint64_t id, const std::string& label) {
  Rgb c = palette_color(id);
  return std::to_string(id) + " " + label + " " + std::to_string(c.r) + " " + std::to_string(c.g) + " " +
         std::to_string(c.b);
}

inline std::vector<std::string> slice_legend(const BoxSet& set) {
  if (set.boxes.empty()) return {"empty box set"};
  std::vector<std::string> out;
  for (std::size_t c = 0; c < set.kind.size(); ++c) out.push_back(legend_entry(c, "component " + set.kind[c]));
  return out;
}

inline std::vector<std::string> locus_legend(const std::vector<HypBall>& balls) {
  std::set<int> ns;
  for (const auto& b : balls) ns.insert(b.N);
  if (ns.empty()) return {"no balls"};
  std::vector<std::string> out;
  for (int n : ns) out.push_back(legend_entry(static_cast<std::uint64_t>(n), "N=" + std::to_string(n)));
  return out;
}

// Certified balls in a 2D slice of parameter space, colored by the N that certified them.
inline Raster render_locus(const std::vector<HypBall>& balls, int degree, const Slice& s) {
  validate_slice(s, 2 * degree);
  Raster r(s.width, s.height);
  for (const auto& ball : balls) {
    if (ball.center.degree != degree) continue;
    std::array<Dyadic, 2> a, b;
    for (int k = 0; k < 2; ++k) {
      Dyadic c = ball.center.coord(static_cast<std::size_t>(s.plane[k]));
      a[k] = c - ball.radius;
      b[k] = c + ball.radius;
    }
    r.fill(s, a, b, palette_color(static_cast<std::uint64_t>(ball.N)));
  }
  return r;
}

}  // namespace henon

#pragma once

// 2^-N approximations of the chain recurrent set and of J from box chain
// recurrent models and certified periodic points.

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "henon/boxmodel.hpp"
#include "henon/periodic.hpp"

namespace henon {

enum class EllSchedule { kLinear, kCustom };

// Period bound used at loop index n.  linear: n - n' + 1; custom: 2 (n - n' + 1).
inline int ell_of(EllSchedule s, int n, int n_prime) {
  int step = n - n_prime + 1;
  return s == EllSchedule::kLinear ? step : 2 * step;
}

// Smallest n' with 2^n' > max(2^(N+2) R, 2/R), by exact dyadic comparison.
inline int compute_n_prime(int N, const Dyadic& R) {
  if (R.sign() <= 0) throw InvalidInput("filtration radius must be positive");
  if (N < 0) throw InvalidInput("N must be >= 0");
  Dyadic a = R.scaled(N + 2);
  // 2/R < 2^n  <=>  2 < R 2^n
  int n = 0;
  while (!(Dyadic::pow2(n) > a)) ++n;
  while (!(R.scaled(n) > Dyadic(2))) ++n;
  return n;
}

inline bool closed_contains(const BoxC2D& b, const std::array<Dyadic, 4>& p) {
  for (int j = 0; j < 4; ++j) {
    double x = p[static_cast<std::size_t>(j)].to_double_nearest();  // exact: points are doubles
    if (x < b.coord(j).lo() || x > b.coord(j).hi()) return false;
  }
  return true;
}

// Ideal point at precision 2^-bits: each coordinate rounded to the nearest
// multiple of 2^-(bits+1).  Points of a real map land exactly on the real slice.
inline std::array<Dyadic, 4> ideal_point(const std::array<Dyadic, 4>& p, int bits) {
  std::array<Dyadic, 4> q;
  for (std::size_t j = 0; j < 4; ++j) q[j] = (p[j] + Dyadic::pow2(-bits - 2)).floor_to(-bits - 1);
  return q;
}

// Marks, for every box of the list, whether it contains one of the points.
inline std::vector<char> boxes_hit(const ChainModel& m, const std::vector<std::array<Dyadic, 4>>& points) {
  std::vector<char> hit(m.size(), 0);
  for (const auto& p : points) {
    BoxC2D pb = BoxC2D::point(p[0].to_double_nearest(), p[1].to_double_nearest(), p[2].to_double_nearest(),
                              p[3].to_double_nearest());
    for (auto i : m.boxes_meeting(pb))
      if (closed_contains(m.spec.box(m.boxes[i]), p)) hit[i] = 1;
  }
  return hit;
}

// True iff every retained box contains at least one of the points (closed boxes).
inline bool halting_test(const ChainModel& m, const std::vector<std::array<Dyadic, 4>>& points) {
  auto hit = boxes_hit(m, points);
  return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

// Marks the boxes whose double contains one of the enclosures.
inline std::vector<char> doubles_hit(const ChainModel& m, const std::vector<BoxC2D>& enclosures) {
  std::vector<char> hit(m.size(), 0);
  for (const auto& b : enclosures)
    for (auto i : m.boxes_meeting(inflate(b, m.spec.side() / 2)))
      if (m.spec.doubled(m.boxes[i]).contains(b)) hit[i] = 1;
  return hit;
}

// kBox: every box contains an approximate periodic point.  kDoubled: every
// doubled box contains a certified periodic point enclosure, the property the
// box test is used to establish.
enum class HaltingMode { kBox, kDoubled };

struct ComponentType {
  OrbitClass cls = OrbitClass::kUndetermined;
  int orbit = -1;      // index into ApproximationResult::orbits
  std::uint32_t box = 0;  // smallest box of the component
};

struct ApproximationResult {
  int N = 0;
  int n = 0;
  int k = 0;
  int n_prime = 0;
  int ell = 0;
  Dyadic R;
  ChainModel model;  // level-k model; Xi_N is the union of the doubles of its boxes
  std::vector<ComponentType> types;
  std::vector<PeriodicOrbit> orbits;  // P_n

  [[nodiscard]] bool is_saddle_box(std::uint32_t i) const {
    return types[model.component[i]].cls == OrbitClass::kSaddle;
  }
  // Xi'_N: boxes of saddle-type components.
  [[nodiscard]] std::vector<BoxKey> xi_prime() const {
    std::vector<BoxKey> out;
    for (std::uint32_t i = 0; i < model.size(); ++i)
      if (is_saddle_box(i)) out.push_back(model.boxes[i]);
    return out;
  }
  // The remaining boxes, whose doubles approximate the attracting cycles.
  [[nodiscard]] std::vector<BoxKey> attracting() const {
    std::vector<BoxKey> out;
    for (std::uint32_t i = 0; i < model.size(); ++i)
      if (!is_saddle_box(i)) out.push_back(model.boxes[i]);
    return out;
  }
};

struct JuliaOptions {
  int N = 0;
  int max_n = 12;  // budget: last loop index tried
  EllSchedule ell = EllSchedule::kLinear;
  HaltingMode halting = HaltingMode::kBox;
  int max_period = 14;  // hard cap on l_n
  int threads = 1;
  std::uint64_t seed = 0x5eed;
  std::function<void(const std::string&)> log;  // progress lines, optional
};

// Types each component by one periodic orbit met by the double of its smallest
// box, choosing the lowest period.
inline std::vector<ComponentType> type_components(const ChainModel& m, const std::vector<PeriodicOrbit>& orbits) {
  std::vector<ComponentType> types(m.component_count);
  std::vector<char> seen(m.component_count, 0);
  for (std::uint32_t i = 0; i < m.size(); ++i) {
    auto c = m.component[i];
    if (seen[c]) continue;
    seen[c] = 1;
    types[c].box = i;
    BoxC2D dbl = m.spec.doubled(m.boxes[i]);
    for (std::size_t o = 0; o < orbits.size() && types[c].orbit < 0; ++o)
      for (const auto& p : orbits[o].points)
        if (closed_contains(dbl, p)) {
          types[c].orbit = static_cast<int>(o);
          types[c].cls = orbits[o].cls;
          break;
        }
  }
  return types;
}

// The loop over n >= n'.  Throws BudgetExhausted when max_n is passed.
inline ApproximationResult run_julia(const PolyDiffeo& f, const JuliaOptions& opt) {
  if (f.dynamical_degree() < 2) throw InvalidInput("dynamical degree must exceed 1");
  auto say = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };
  Dyadic R = filtration_radius(f);
  int n_prime = compute_n_prime(opt.N, R);
  if (n_prime > kMaxLevel) throw InvalidInput("N too large for the grid");
  say("R = " + R.to_string() + ", n' = " + std::to_string(n_prime));

  int start = std::min(2, n_prime);
  ChainModel model = initial_model(f, GridSpec(R, start), opt.threads);
  while (model.spec.level < n_prime) model = refine(model, f, opt.threads);

  std::map<int, std::vector<PeriodicOrbit>> cache;
  for (int n = n_prime; n <= std::min(opt.max_n, kMaxLevel); ++n) {
    if (model.spec.level < n) model = refine(model, f, opt.threads);
    int ell = std::min(ell_of(opt.ell, n, n_prime), opt.max_period);
    PeriodicOptions po;
    po.precision_bits = 2 * n;
    po.seed = opt.seed;
    po.threads = opt.threads;
    bool complete = true;
    for (int m = 1; m <= ell; ++m) {
      if (cache.count(m)) continue;
      try {
        cache[m] = enumerate_prime_period(f, m, po);
      } catch (const Inconclusive& e) {
        say(std::string("period enumeration inconclusive: ") + e.what());
        complete = false;
        break;
      }
    }
    std::vector<PeriodicOrbit> orbits;
    std::vector<std::array<Dyadic, 4>> points;
    std::vector<BoxC2D> enclosures;
    for (int m = 1; m <= ell && cache.count(m); ++m)
      for (const auto& o : cache[m]) {
        if (o.precision > Dyadic::pow2(-2 * n)) throw PrecisionExhausted("orbit precision below 2^-2n");
        orbits.push_back(o);
        // the enclosures are far below 2^-(2n+1), so each rounded point stays
        // within 2^-2n of its periodic point
        for (const auto& p : o.points) points.push_back(ideal_point(p, 2 * n));
        enclosures.insert(enclosures.end(), o.boxes.begin(), o.boxes.end());
      }
    say("n = " + std::to_string(n) + ": " + std::to_string(model.size()) + " boxes, " +
        std::to_string(model.component_count) + " components, l = " + std::to_string(ell) + ", " +
        std::to_string(points.size()) + " periodic points");
    if (!complete) continue;
    for (int k = n_prime; k <= n; ++k) {
      ChainModel mk = k == n ? model : coarsen(model, k, f, opt.threads);
      auto hit = opt.halting == HaltingMode::kBox ? boxes_hit(mk, points) : doubles_hit(mk, enclosures);
      auto missing = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 0));
      say("  k = " + std::to_string(k) + ": " + std::to_string(mk.size()) + " boxes, " + std::to_string(missing) +
          " without a periodic point");
      if (missing != 0) continue;
      auto types = type_components(mk, orbits);
      bool decided = std::all_of(types.begin(), types.end(), [](const ComponentType& t) {
        return t.cls == OrbitClass::kSaddle || t.cls == OrbitClass::kAttracting || t.cls == OrbitClass::kRepelling;
      });
      if (!decided) {
        say("  component typing undetermined, escalating n");
        break;
      }
      ApproximationResult r;
      r.N = opt.N;
      r.n = n;
      r.k = k;
      r.n_prime = n_prime;
      r.ell = ell;
      r.R = R;
      r.model = std::move(mk);
      r.types = std::move(types);
      r.orbits = std::move(orbits);
      return r;
    }
  }
  throw BudgetExhausted("no halting level found for n <= " + std::to_string(opt.max_n));
}

struct Disconnection {
  bool disconnected = false;
  std::uint32_t count = 0;
  std::vector<BoxKey> boxes;  // sorted input
  std::vector<std::uint32_t> component;  // per box
};

// Connected components of the union of closed doubled boxes.  Doubles of two
// level-k cells overlap iff their indices differ by at most 2 in every coordinate.
inline Disconnection detect_disconnected(std::vector<BoxKey> boxes) {
  std::sort(boxes.begin(), boxes.end());
  Disconnection d;
  const auto n = boxes.size();
  d.component.assign(n, 0xffffffffU);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (d.component[s] != 0xffffffffU) continue;
    std::uint32_t c = d.count++;
    d.component[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      auto i = unpack_box(boxes[v]);
      for (long a = static_cast<long>(i[0]) - 2; a <= static_cast<long>(i[0]) + 2; ++a) {
        if (a < 0) continue;
        for (long b = static_cast<long>(i[1]) - 2; b <= static_cast<long>(i[1]) + 2; ++b) {
          if (b < 0) continue;
          auto lo = std::lower_bound(boxes.begin(), boxes.end(),
                                     pack_box(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), 0, 0));
          for (auto it = lo; it != boxes.end(); ++it) {
            auto j = unpack_box(*it);
            if (j[0] != static_cast<std::uint32_t>(a) || j[1] != static_cast<std::uint32_t>(b)) break;
            if (std::labs(static_cast<long>(j[2]) - static_cast<long>(i[2])) > 2 ||
                std::labs(static_cast<long>(j[3]) - static_cast<long>(i[3])) > 2)
              continue;
            auto u = static_cast<std::uint32_t>(it - boxes.begin());
            if (d.component[u] == 0xffffffffU) {
              d.component[u] = c;
              stack.push_back(u);
            }
          }
        }
      }
    }
  }
  d.disconnected = d.count >= 2;
  d.boxes = std::move(boxes);
  return d;
}

}  // namespace henon

#pragma once

// Box chain recurrent models on the uniform (2^n)^4 grid over V_R = [-R, R]^4.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <concepts>
#include <optional>
#include <vector>

#include "henon/henon_map.hpp"
#include "henon/parallel.hpp"

namespace henon {

using BoxKey = std::uint64_t;
inline constexpr int kMaxLevel = 16;

// Packs (z_re, z_im, w_re, w_im) cell indices so that integer order is
// lexicographic order of the tuple.
inline BoxKey pack_box(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
  return (static_cast<BoxKey>(a) << 48) | (static_cast<BoxKey>(b) << 32) | (static_cast<BoxKey>(c) << 16) |
         static_cast<BoxKey>(d);
}
inline BoxKey pack_box(const std::array<std::uint32_t, 4>& i) { return pack_box(i[0], i[1], i[2], i[3]); }
inline std::array<std::uint32_t, 4> unpack_box(BoxKey k) {
  return {static_cast<std::uint32_t>(k >> 48) & 0xffffU, static_cast<std::uint32_t>(k >> 32) & 0xffffU,
          static_cast<std::uint32_t>(k >> 16) & 0xffffU, static_cast<std::uint32_t>(k) & 0xffffU};
}
// Same cell with the w coordinates first; used to find targets by w-slab.
inline BoxKey w_major(BoxKey k) { return (k << 32) | (k >> 32); }

struct GridSpec {
  Dyadic R;
  int level = 1;

  GridSpec() = default;
  GridSpec(Dyadic r, int n) : R(std::move(r)), level(n) {
    if (R.sign() <= 0) throw InvalidInput("grid radius must be positive");
    if (level < 0 || level > kMaxLevel) throw InvalidInput("grid level out of range [0, 16]");
    if (static_cast<long>(mpz_sizeinbase(R.mantissa().get_mpz_t(), 2)) > 30)
      throw InvalidInput("grid radius needs at most 30 significant bits");
  }

  [[nodiscard]] std::uint32_t cells() const { return 1U << level; }
  [[nodiscard]] double radius() const { return R.to_double_nearest(); }  // exact by construction
  [[nodiscard]] double side() const { return std::ldexp(2.0 * radius(), -level); }
  [[nodiscard]] Dyadic side_exact() const { return R.scaled(1 - level); }

  [[nodiscard]] FastInterval cell(std::uint32_t i) const {
    double s = side(), r = radius();
    return {-r + s * i, -r + s * (i + 1)};
  }
  [[nodiscard]] BoxC2D box(BoxKey k) const {
    auto i = unpack_box(k);
    return BoxC2D::from_coords({cell(i[0]), cell(i[1]), cell(i[2]), cell(i[3])});
  }
  // Same center, twice the side length.
  [[nodiscard]] BoxC2D doubled(BoxKey k) const {
    auto i = unpack_box(k);
    double h = side() / 2;
    std::array<FastInterval, 4> c;
    for (int j = 0; j < 4; ++j) {
      FastInterval b = cell(i[static_cast<std::size_t>(j)]);
      c[static_cast<std::size_t>(j)] = FastInterval(b.lo() - h, b.hi() + h);  // exact: dyadic grid values
    }
    return BoxC2D::from_coords(c);
  }
  [[nodiscard]] BoxC2D whole() const {
    double r = radius();
    FastInterval s(-r, r);
    return BoxC2D::from_coords({s, s, s, s});
  }

  // Closed-overlap index range of cells meeting [lo, hi]; empty when lo > hi after clipping.
  [[nodiscard]] std::pair<long, long> index_range(const FastInterval& x) const {
    using Rd = Rounding<double>;
    double r = radius(), s = side();
    double n = static_cast<double>(cells());
    double tlo = Rd::div(Rd::add(x.lo(), r, false), s, false);
    double thi = Rd::div(Rd::add(x.hi(), r, true), s, true);
    if (std::isnan(tlo) || std::isnan(thi)) return {0, static_cast<long>(cells()) - 1};
    tlo = std::clamp(tlo, -2.0, n + 2.0);
    thi = std::clamp(thi, -2.0, n + 2.0);
    long a = static_cast<long>(std::ceil(tlo)) - 1;
    long b = static_cast<long>(std::floor(thi));
    a = std::max(a, 0L);
    b = std::min(b, static_cast<long>(cells()) - 1);
    return {a, b};
  }
};

// Directed graph over a sorted box list, in compressed-row form.
struct EdgeGraph {
  std::vector<BoxKey> boxes;
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> targets;

  [[nodiscard]] std::size_t size() const { return boxes.size(); }
  [[nodiscard]] std::size_t edge_count() const { return targets.size(); }
};

struct ChainModel {
  GridSpec spec;
  std::vector<BoxKey> boxes;  // sorted
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> targets;
  std::vector<std::uint32_t> component;  // per box
  std::uint32_t component_count = 0;

  [[nodiscard]] std::size_t size() const { return boxes.size(); }
  [[nodiscard]] std::optional<std::uint32_t> index_of(BoxKey k) const {
    auto it = std::lower_bound(boxes.begin(), boxes.end(), k);
    if (it == boxes.end() || *it != k) return std::nullopt;
    return static_cast<std::uint32_t>(it - boxes.begin());
  }
  [[nodiscard]] std::vector<std::vector<std::uint32_t>> members() const {
    std::vector<std::vector<std::uint32_t>> m(component_count);
    for (std::uint32_t i = 0; i < boxes.size(); ++i) m[component[i]].push_back(i);
    return m;
  }
  // Index of the retained box containing the point, if any (closed boxes; first in order).
  [[nodiscard]] std::vector<std::uint32_t> boxes_meeting(const BoxC2D& b) const {
    std::vector<std::uint32_t> out;
    std::array<std::pair<long, long>, 4> r;
    for (int j = 0; j < 4; ++j) {
      r[static_cast<std::size_t>(j)] = spec.index_range(b.coord(j));
      if (r[static_cast<std::size_t>(j)].first > r[static_cast<std::size_t>(j)].second) return out;
    }
    for (long a = r[0].first; a <= r[0].second; ++a)
      for (long c = r[1].first; c <= r[1].second; ++c) {
        auto lo = std::lower_bound(boxes.begin(), boxes.end(),
                                   pack_box(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(c), 0, 0));
        for (auto it = lo; it != boxes.end(); ++it) {
          auto i = unpack_box(*it);
          if (i[0] != static_cast<std::uint32_t>(a) || i[1] != static_cast<std::uint32_t>(c)) break;
          if (static_cast<long>(i[2]) >= r[2].first && static_cast<long>(i[2]) <= r[2].second &&
              static_cast<long>(i[3]) >= r[3].first && static_cast<long>(i[3]) <= r[3].second)
            out.push_back(static_cast<std::uint32_t>(it - boxes.begin()));
        }
      }
    std::sort(out.begin(), out.end());
    return out;
  }
};

namespace detail {

// Boxes re-sorted with w coordinates first, so that all boxes in a (w_re, w_im)
// slab form one contiguous run ordered by z_re.
struct SlabIndex {
  std::vector<std::pair<BoxKey, std::uint32_t>> by_w;

  explicit SlabIndex(const std::vector<BoxKey>& boxes) {
    by_w.reserve(boxes.size());
    for (std::uint32_t i = 0; i < boxes.size(); ++i) by_w.emplace_back(w_major(boxes[i]), i);
    std::sort(by_w.begin(), by_w.end());
  }

  template <class Out>
  void query(const std::array<std::pair<long, long>, 4>& r, Out& out) const {
    for (long wr = r[2].first; wr <= r[2].second; ++wr)
      for (long wi = r[3].first; wi <= r[3].second; ++wi) {
        BoxKey start = pack_box(static_cast<std::uint32_t>(wr), static_cast<std::uint32_t>(wi),
                                static_cast<std::uint32_t>(r[0].first), 0);
        BoxKey stop = pack_box(static_cast<std::uint32_t>(wr), static_cast<std::uint32_t>(wi),
                               static_cast<std::uint32_t>(r[0].second), 0xffffU);
        auto it = std::lower_bound(by_w.begin(), by_w.end(), std::make_pair(start, std::uint32_t{0}));
        for (; it != by_w.end() && it->first <= stop; ++it) {
          auto zi = static_cast<long>(it->first & 0xffffU);
          if (zi >= r[1].first && zi <= r[1].second) out.push_back(it->second);
        }
      }
  }
};

}  // namespace detail

// Edges k -> j whenever the image enclosure of B_k meets B_j (closed boxes),
// restricted to V_R.  `image` maps a box to an enclosure of its image.
template <class ImageFn>
  requires std::invocable<ImageFn, const BoxC2D&>
EdgeGraph build_edges(const GridSpec& spec, std::vector<BoxKey> boxes, ImageFn&& image, int threads = 1) {
  std::sort(boxes.begin(), boxes.end());
  boxes.erase(std::unique(boxes.begin(), boxes.end()), boxes.end());
  detail::SlabIndex index(boxes);
  int chunks = chunk_count(boxes.size(), threads);
  std::vector<std::vector<std::uint32_t>> chunk_targets(static_cast<std::size_t>(chunks));
  std::vector<std::vector<std::uint32_t>> chunk_counts(static_cast<std::size_t>(chunks));
  parallel_chunks(boxes.size(), threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    auto& tg = chunk_targets[c];
    auto& ct = chunk_counts[c];
    std::vector<std::uint32_t> local;
    for (std::size_t i = b; i < e; ++i) {
      local.clear();
      BoxC2D img = image(spec.box(boxes[i]));
      std::array<std::pair<long, long>, 4> r;
      bool empty = false;
      for (int j = 0; j < 4; ++j) {
        r[static_cast<std::size_t>(j)] = spec.index_range(img.coord(j));
        if (r[static_cast<std::size_t>(j)].first > r[static_cast<std::size_t>(j)].second) empty = true;
      }
      if (!empty) index.query(r, local);
      std::sort(local.begin(), local.end());
      tg.insert(tg.end(), local.begin(), local.end());
      ct.push_back(static_cast<std::uint32_t>(local.size()));
    }
  });
  EdgeGraph g;
  g.boxes = std::move(boxes);
  g.offsets.reserve(g.boxes.size() + 1);
  std::size_t total = 0;
  for (const auto& t : chunk_targets) total += t.size();
  g.targets.reserve(total);
  for (std::size_t c = 0; c < chunk_targets.size(); ++c) {
    for (auto n : chunk_counts[c]) g.offsets.push_back(g.offsets.back() + n);
    g.targets.insert(g.targets.end(), chunk_targets[c].begin(), chunk_targets[c].end());
    std::vector<std::uint32_t>().swap(chunk_targets[c]);
  }
  return g;
}

inline EdgeGraph build_edges(const PolyDiffeo& f, const GridSpec& spec, std::vector<BoxKey> boxes, int threads = 1) {
  return build_edges(
      spec, std::move(boxes), [&f](const BoxC2D& b) { return eval(f, b, Direction::kForward); }, threads);
}

// Strongly connected components by iterative Tarjan.  Returns the component
// id of every vertex; ids are in order of completion.
inline std::vector<std::uint32_t> tarjan_scc(const std::vector<std::uint64_t>& offsets,
                                             const std::vector<std::uint32_t>& targets, std::uint32_t& count) {
  const auto n = static_cast<std::uint32_t>(offsets.size() - 1);
  constexpr std::uint32_t kUnset = 0xffffffffU;
  std::vector<std::uint32_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<std::uint32_t> stack;
  std::vector<char> on_stack(n, 0);
  std::vector<std::pair<std::uint32_t, std::uint64_t>> call;
  std::uint32_t next = 0;
  count = 0;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.emplace_back(root, offsets[root]);
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < offsets[v + 1]) {
        std::uint32_t w = targets[pos++];
        if (index[w] == kUnset) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, offsets[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      std::uint32_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        std::uint32_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != done);
        ++count;
      }
    }
  }
  return comp;
}

// Keeps exactly the boxes lying on a directed cycle and labels the surviving
// strongly connected components in order of their smallest box.
inline ChainModel prune_and_decompose(const GridSpec& spec, const EdgeGraph& g) {
  std::uint32_t scc_count = 0;
  auto scc = tarjan_scc(g.offsets, g.targets, scc_count);
  const auto n = static_cast<std::uint32_t>(g.size());
  std::vector<std::uint32_t> scc_size(scc_count, 0);
  for (auto c : scc) ++scc_size[c];
  std::vector<char> keep(n, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (scc_size[scc[v]] >= 2) {
      keep[v] = 1;
      continue;
    }
    for (auto p = g.offsets[v]; p < g.offsets[v + 1]; ++p)
      if (g.targets[p] == v) keep[v] = 1;
  }
  constexpr std::uint32_t kUnset = 0xffffffffU;
  std::vector<std::uint32_t> remap(n, kUnset);
  ChainModel m;
  m.spec = spec;
  for (std::uint32_t v = 0; v < n; ++v)
    if (keep[v]) {
      remap[v] = static_cast<std::uint32_t>(m.boxes.size());
      m.boxes.push_back(g.boxes[v]);
    }
  m.offsets.reserve(m.boxes.size() + 1);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (!keep[v]) continue;
    for (auto p = g.offsets[v]; p < g.offsets[v + 1]; ++p)
      if (remap[g.targets[p]] != kUnset) m.targets.push_back(remap[g.targets[p]]);
    m.offsets.push_back(m.targets.size());
  }
  // Boxes are sorted, so the first box met in each SCC is its minimum.
  std::vector<std::uint32_t> label(scc_count, kUnset);
  m.component.resize(m.boxes.size());
  for (std::uint32_t v = 0; v < n; ++v) {
    if (!keep[v]) continue;
    auto& l = label[scc[v]];
    if (l == kUnset) l = m.component_count++;
    m.component[remap[v]] = l;
  }
  return m;
}

inline std::vector<BoxKey> all_boxes(const GridSpec& spec) {
  std::vector<BoxKey> out;
  std::uint32_t c = spec.cells();
  out.reserve(static_cast<std::size_t>(c) * c * c * c);
  for (std::uint32_t a = 0; a < c; ++a)
    for (std::uint32_t b = 0; b < c; ++b)
      for (std::uint32_t d = 0; d < c; ++d)
        for (std::uint32_t e = 0; e < c; ++e) out.push_back(pack_box(a, b, d, e));
  return out;
}

template <class ImageFn>
  requires std::invocable<ImageFn, const BoxC2D&>
ChainModel initial_model(const GridSpec& spec, ImageFn&& image, int threads = 1) {
  return prune_and_decompose(spec, build_edges(spec, all_boxes(spec), image, threads));
}

inline ChainModel initial_model(const PolyDiffeo& f, const GridSpec& spec, int threads = 1) {
  return prune_and_decompose(spec, build_edges(f, spec, all_boxes(spec), threads));
}

inline std::vector<BoxKey> children_of(const std::vector<BoxKey>& boxes) {
  std::vector<BoxKey> out;
  out.reserve(boxes.size() * 16);
  for (BoxKey k : boxes) {
    auto i = unpack_box(k);
    for (std::uint32_t b = 0; b < 16; ++b)
      out.push_back(pack_box(2 * i[0] + ((b >> 3) & 1U), 2 * i[1] + ((b >> 2) & 1U), 2 * i[2] + ((b >> 1) & 1U),
                             2 * i[3] + (b & 1U)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <class ImageFn>
  requires std::invocable<ImageFn, const BoxC2D&>
ChainModel refine(const ChainModel& m, ImageFn&& image, int threads = 1) {
  if (m.spec.level >= kMaxLevel) throw InvalidInput("grid level limit reached");
  GridSpec next(m.spec.R, m.spec.level + 1);
  return prune_and_decompose(next, build_edges(next, children_of(m.boxes), image, threads));
}

inline ChainModel refine(const ChainModel& m, const PolyDiffeo& f, int threads = 1) {
  return refine(m, [&f](const BoxC2D& b) { return eval(f, b, Direction::kForward); }, threads);
}

// The level-k boxes containing retained boxes of m, with their own edges and
// pruning.  The result is again a box chain recurrent model and covers m.
inline ChainModel coarsen(const ChainModel& m, int k, const PolyDiffeo& f, int threads = 1) {
  if (k > m.spec.level) throw InvalidInput("coarsen target level exceeds model level");
  int s = m.spec.level - k;
  std::vector<BoxKey> parents;
  parents.reserve(m.boxes.size());
  for (BoxKey b : m.boxes) {
    auto i = unpack_box(b);
    parents.push_back(pack_box(i[0] >> s, i[1] >> s, i[2] >> s, i[3] >> s));
  }
  std::sort(parents.begin(), parents.end());
  parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
  GridSpec spec(m.spec.R, k);
  return prune_and_decompose(spec, build_edges(f, spec, std::move(parents), threads));
}

// Builds models from `start_level` up to `level`, refining once per level.
inline std::vector<ChainModel> build_model_levels(const PolyDiffeo& f, const Dyadic& R, int start_level, int level,
                                                  int threads = 1) {
  std::vector<ChainModel> out;
  out.push_back(initial_model(f, GridSpec(R, start_level), threads));
  while (out.back().spec.level < level) out.push_back(refine(out.back(), f, threads));
  return out;
}

}  // namespace henon

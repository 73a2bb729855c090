#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "psipm/io.hpp"

namespace psipm {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ValidationError("Rng::below needs a positive bound");
  // Draws below 2^64 mod bound are rejected so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r < threshold);
  return r % bound;
}

std::string_view to_string(GraphFamily f) {
  switch (f) {
    case GraphFamily::uniform: return "uniform";
    case GraphFamily::erdrey: return "erdrey";
    case GraphFamily::pref: return "pref";
    case GraphFamily::smallw: return "smallw";
    case GraphFamily::kleinberg: return "kleinberg";
  }
  return "?";
}

GraphFamily parse_family(std::string_view name) {
  for (auto f : {GraphFamily::uniform, GraphFamily::erdrey, GraphFamily::pref, GraphFamily::smallw,
                 GraphFamily::kleinberg}) {
    if (name == to_string(f)) return f;
  }
  throw ValidationError("unknown graph family '" + std::string(name) + "'");
}

void GeneratorSpec::validate() const {
  if (node_count < 2) throw ValidationError("generator needs at least 2 nodes");
  if (!(degree_min >= 1 && static_cast<double>(degree_min) <= degree_avg_target &&
        degree_avg_target <= static_cast<double>(degree_max))) {
    throw ValidationError("generator needs 1 <= degree_min <= degree_avg_target <= degree_max");
  }
  if (degree_min > node_count - 1) {
    throw ValidationError("degree_min " + std::to_string(degree_min) + " is impossible with " +
                          std::to_string(node_count) + " nodes");
  }
  if (family == GraphFamily::uniform && degree_max < 2 && node_count > 2) {
    throw ValidationError("a connected graph on more than 2 nodes needs degree_max >= 2");
  }
}

namespace {

class EdgeBuilder {
 public:
  explicit EdgeBuilder(Index m) : m_(m), degree_(static_cast<std::size_t>(m), 0) {}

  bool has(Index u, Index v) const { return keys_.count(key(u, v)) != 0; }

  bool add(Index u, Index v) {
    if (u == v || !keys_.insert(key(u, v)).second) return false;
    edges_.push_back({std::min(u, v), std::max(u, v)});
    ++degree_[u];
    ++degree_[v];
    return true;
  }

  void replace(std::size_t pos, Index u, Index v) {
    Edge old = edges_[pos];
    keys_.erase(key(old.tail, old.head));
    --degree_[old.tail];
    --degree_[old.head];
    edges_[pos] = {std::min(u, v), std::max(u, v)};
    keys_.insert(key(u, v));
    ++degree_[u];
    ++degree_[v];
  }

  Index degree(Index v) const { return degree_[v]; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  // Joins the components in a chain through one random node of each.
  void stitch(Rng& rng) {
    Components comp = connected_components(m_, edges_);
    if (comp.count <= 1) return;
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(comp.count));
    for (Index v = 0; v < m_; ++v) members[comp.label[v]].push_back(v);
    Index prev = members[0][rng.below(members[0].size())];
    for (std::size_t c = 1; c < members.size(); ++c) {
      Index cur = members[c][rng.below(members[c].size())];
      add(prev, cur);
      prev = cur;
    }
  }

  Graph finish() {
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return a.tail != b.tail ? a.tail < b.tail : a.head < b.head;
    });
    return Graph::with_unit_costs(m_, edges_);
  }

 private:
  std::uint64_t key(Index u, Index v) const {
    if (u > v) std::swap(u, v);
    return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(m_) + static_cast<std::uint64_t>(v);
  }

  Index m_;
  std::vector<Index> degree_;
  std::vector<Edge> edges_;
  std::unordered_set<std::uint64_t> keys_;
};

Index target_edges(const GeneratorSpec& spec) {
  const Index m = spec.node_count;
  const Index max_edges = m * (m - 1) / 2;
  return std::min(max_edges, static_cast<Index>(std::llround(spec.degree_avg_target * static_cast<double>(m) / 2.0)));
}

std::vector<Index> random_permutation(Index m, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  return perm;
}

Graph uniform_graph(const GeneratorSpec& spec, Rng& rng) {
  const Index m = spec.node_count;
  const Index cap = spec.degree_max;
  EdgeBuilder b(m);

  // Random recursive spanning tree under the degree cap.
  std::vector<Index> perm = random_permutation(m, rng);
  for (Index i = 1; i < m; ++i) {
    Index parent = -1;
    for (int t = 0; t < 64 && parent < 0; ++t) {
      Index cand = perm[rng.below(static_cast<std::uint64_t>(i))];
      if (b.degree(cand) < cap) parent = cand;
    }
    if (parent < 0) {
      const Index start = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i)));
      for (Index t = 0; t < i && parent < 0; ++t) {
        Index cand = perm[(start + t) % i];
        if (b.degree(cand) < cap) parent = cand;
      }
    }
    if (parent < 0) throw ValidationError("degree cap too small to build a spanning tree");
    b.add(parent, perm[i]);
  }

  const Index target = std::min(target_edges(spec), cap * m / 2);
  Index attempts = 50 * target + 1000;
  while (b.edge_count() < target && attempts-- > 0) {
    Index u = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    Index v = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    if (u == v || b.degree(u) >= cap || b.degree(v) >= cap) continue;
    b.add(u, v);
  }

  for (Index v = 0; v < m; ++v) {
    Index tries = 64 * m;
    while (b.degree(v) < spec.degree_min && tries-- > 0) {
      Index w = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
      if (w != v && b.degree(w) < cap) b.add(v, w);
    }
    if (b.degree(v) < spec.degree_min) {
      throw ValidationError("could not satisfy degree_min " + std::to_string(spec.degree_min));
    }
  }
  return b.finish();
}

Graph erdrey_graph(const GeneratorSpec& spec, Rng& rng) {
  const Index m = spec.node_count;
  EdgeBuilder b(m);
  const Index target = target_edges(spec);
  while (b.edge_count() < target) {
    Index u = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    Index v = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    b.add(u, v);
  }
  b.stitch(rng);
  return b.finish();
}

Graph pref_graph(const GeneratorSpec& spec, Rng& rng) {
  const Index m = spec.node_count;
  const Index k = std::max<Index>(1, std::llround(spec.degree_avg_target / 2.0));
  EdgeBuilder b(m);
  const Index seed_nodes = std::min(m, k + 1);
  std::vector<Index> endpoints;
  for (Index u = 0; u < seed_nodes; ++u) {
    for (Index v = u + 1; v < seed_nodes; ++v) {
      b.add(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  for (Index v = seed_nodes; v < m; ++v) {
    const Index want = std::min(k, v);
    Index added = 0;
    while (added < want) {
      Index w = endpoints[rng.below(endpoints.size())];
      if (b.add(v, w)) {
        endpoints.push_back(w);
        ++added;
      }
    }
    for (Index t = 0; t < added; ++t) endpoints.push_back(v);
  }
  return b.finish();
}

Graph smallw_graph(const GeneratorSpec& spec, Rng& rng) {
  const Index m = spec.node_count;
  const Index k = std::max<Index>(1, std::llround(spec.degree_avg_target / 2.0));
  EdgeBuilder b(m);
  for (Index u = 0; u < m; ++u) {
    for (Index j = 1; j <= k; ++j) b.add(u, (u + j) % m);
  }
  // Rewire each lattice edge with probability 1/10.
  const auto count = static_cast<std::size_t>(b.edge_count());
  for (std::size_t pos = 0; pos < count; ++pos) {
    if (!rng.chance(1, 10)) continue;
    const Index u = b.edges()[pos].tail;
    const Index w = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    if (w == u || b.has(u, w)) continue;
    b.replace(pos, u, w);
  }
  b.stitch(rng);
  return b.finish();
}

Graph kleinberg_graph(const GeneratorSpec& spec, Rng& rng) {
  const Index m = spec.node_count;
  const auto side = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(m))));
  EdgeBuilder b(m);
  for (Index v = 0; v < m; ++v) {
    const Index r = v / side, c = v % side;
    if (c + 1 < side && v + 1 < m) b.add(v, v + 1);
    if (r + 1 < side && v + side < m) b.add(v, v + side);
  }
  const double grid_avg = 2.0 * static_cast<double>(b.edge_count()) / static_cast<double>(m);
  const double q = std::clamp((spec.degree_avg_target - grid_avg) / 2.0, 0.0, 1.0);
  const auto q_num = static_cast<std::uint64_t>(std::llround(q * 1e6));

  // Long-range contacts: lattice distance d with probability proportional to
  // d^-2, i.e. (about 4d nodes at distance d) proportional to 1/d.
  const Index dmax = std::max<Index>(1, 2 * (side - 1));
  std::vector<double> cdf(static_cast<std::size_t>(dmax));
  double acc = 0.0;
  for (Index d = 1; d <= dmax; ++d) cdf[d - 1] = (acc += 1.0 / static_cast<double>(d));
  for (Index u = 0; u < m; ++u) {
    if (!rng.chance(q_num, 1000000)) continue;
    for (int t = 0; t < 32; ++t) {
      const double pick = static_cast<double>(rng.next() >> 11) * 0x1.0p-53 * acc;
      const Index d = 1 + static_cast<Index>(std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin());
      const Index off = static_cast<Index>(rng.below(static_cast<std::uint64_t>(4 * d)));
      const Index quad = off / d, s = off % d;
      Index dr = 0, dc = 0;
      switch (quad) {
        case 0: dr = d - s; dc = s; break;
        case 1: dr = -s; dc = d - s; break;
        case 2: dr = -(d - s); dc = -s; break;
        default: dr = s; dc = -(d - s); break;
      }
      const Index r = u / side + dr, c = u % side + dc;
      if (r < 0 || c < 0 || r >= side || c >= side) continue;
      const Index w = r * side + c;
      if (w >= m) continue;
      if (b.add(u, w)) break;
    }
  }
  b.stitch(rng);
  return b.finish();
}

}  // namespace

Graph generate_graph(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  switch (spec.family) {
    case GraphFamily::uniform: return uniform_graph(spec, rng);
    case GraphFamily::erdrey: return erdrey_graph(spec, rng);
    case GraphFamily::pref: return pref_graph(spec, rng);
    case GraphFamily::smallw: return smallw_graph(spec, rng);
    case GraphFamily::kleinberg: return kleinberg_graph(spec, rng);
  }
  throw ValidationError("unknown graph family");
}

Graph bidirect(const Graph& g) {
  std::vector<Edge> arcs;
  Vector cost;
  arcs.reserve(2 * static_cast<std::size_t>(g.edge_count()));
  cost.reserve(arcs.capacity());
  const auto c = g.cost();
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const Edge& ed = g.edges()[e];
    arcs.push_back({ed.tail, ed.head});
    arcs.push_back({ed.head, ed.tail});
    cost.push_back(c[e]);
    cost.push_back(c[e]);
  }
  return Graph(g.node_count(), std::move(arcs), std::move(cost));
}

void LoadSpec::validate() const {
  if (!(nonzero_fraction > 0.0 && nonzero_fraction <= 1.0)) {
    throw ValidationError("load nonzero fraction must lie in (0, 1]");
  }
  if (magnitude_max < 1) throw ValidationError("load magnitude_max must be at least 1");
}

ExactSupply generate_load(Index node_count, const LoadSpec& spec) {
  spec.validate();
  if (node_count < 2) throw ValidationError("load needs at least 2 nodes");
  const double raw = spec.nonzero_fraction * static_cast<double>(node_count);
  Index k = static_cast<Index>(std::ceil(raw - 1e-9 * raw));
  k = std::clamp<Index>(k, 2, node_count);

  Rng rng(spec.seed);
  std::vector<Index> perm = random_permutation(node_count, rng);
  ExactSupply out;
  out.numerators.assign(static_cast<std::size_t>(node_count), 0);
  std::int64_t sum = 0;
  for (Index i = 0; i + 1 < k; ++i) {
    auto mag = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(spec.magnitude_max)));
    const std::int64_t v = i % 2 == 0 ? mag : -mag;
    out.numerators[perm[i]] = v;
    sum += v;
  }
  out.numerators[perm[k - 1]] = -sum;

  std::int64_t positive = 0;
  for (std::int64_t v : out.numerators) positive += std::max<std::int64_t>(v, 0);
  out.denominator = std::max<std::int64_t>(positive, 1);
  return out;
}

Problem make_instance(const GeneratorSpec& gspec, const LoadSpec& lspec) {
  Graph g = bidirect(generate_graph(gspec));
  ExactSupply load = generate_load(g.node_count(), lspec);
  return Problem(std::move(g), std::move(load));
}

}  // namespace psipm

#include "psipm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>

namespace psipm {

EdgeWeights::EdgeWeights(Vector w) : w_(std::move(w)) {
  for (double v : w_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("edge weights must be finite and nonnegative");
    }
  }
}

double EdgeWeights::max() const {
  double m = 0.0;
  for (double v : w_) m = std::max(m, v);
  return m;
}

Index EdgeWeights::nonzero_count() const {
  return static_cast<Index>(std::count_if(w_.begin(), w_.end(), [](double v) { return v != 0.0; }));
}

namespace {

struct UnionFind {
  std::vector<Index> parent;
  std::vector<Index> rank;

  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)), rank(static_cast<std::size_t>(n), 0) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }

  Index find(Index v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }

  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank[a] < rank[b]) std::swap(a, b);
    parent[b] = a;
    if (rank[a] == rank[b]) ++rank[a];
  }
};

}  // namespace

Components connected_components(Index node_count, std::span<const Edge> edges) {
  UnionFind uf(node_count);
  for (const Edge& e : edges) uf.unite(e.tail, e.head);
  Components c;
  c.label.assign(static_cast<std::size_t>(node_count), -1);
  std::vector<Index> root_label(static_cast<std::size_t>(node_count), -1);
  for (Index v = 0; v < node_count; ++v) {
    Index r = uf.find(v);
    if (root_label[r] < 0) root_label[r] = c.count++;
    c.label[v] = root_label[r];
  }
  return c;
}

struct Graph::PatternCache {
  std::once_flag once;
  LaplacianPattern pattern;
};

Graph::Graph(Index node_count, std::vector<Edge> edges, Vector cost) : m_(node_count) {
  if (node_count < 1) throw ValidationError("graph needs at least one node");
  if (cost.size() != edges.size()) {
    throw DimensionError("cost vector length " + std::to_string(cost.size()) +
                         " does not match edge count " + std::to_string(edges.size()));
  }
  auto degrees = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(node_count), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& ed = edges[e];
    if (ed.tail < 0 || ed.tail >= node_count || ed.head < 0 || ed.head >= node_count) {
      throw ValidationError("edge " + std::to_string(e) + " has a node index outside [0, " +
                            std::to_string(node_count) + ")");
    }
    if (ed.tail == ed.head) {
      throw ValidationError("edge " + std::to_string(e) + " is a self-loop");
    }
    if (!std::isfinite(cost[e]) || cost[e] < 0.0) {
      throw ValidationError("edge " + std::to_string(e) + " has a negative or non-finite cost");
    }
    ++(*degrees)[ed.tail];
    ++(*degrees)[ed.head];
  }
  if (connected_components(node_count, edges).count != 1) {
    throw ValidationError("graph is not connected");
  }
  max_degree_ = degrees->empty() ? 0 : *std::max_element(degrees->begin(), degrees->end());
  edges_ = std::make_shared<const std::vector<Edge>>(std::move(edges));
  cost_ = std::make_shared<const Vector>(std::move(cost));
  degrees_ = std::move(degrees);
  cache_ = std::make_shared<PatternCache>();
}

Graph Graph::with_unit_costs(Index node_count, std::vector<Edge> edges) {
  Vector cost(edges.size(), 1.0);
  return Graph(node_count, std::move(edges), std::move(cost));
}

const LaplacianPattern& Graph::laplacian_pattern() const {
  std::call_once(cache_->once, [this] {
    LaplacianPattern& lp = cache_->pattern;
    const auto& edges = *edges_;
    const std::size_t n = edges.size();
    // Sort edges by (column, row) of their lower-triangular slot.
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    auto key = [&](Index e) {
      Index r = std::max(edges[e].tail, edges[e].head);
      Index c = std::min(edges[e].tail, edges[e].head);
      return std::pair{c, r};
    };
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return key(a) < key(b); });

    SparseSymmetric& S = lp.pattern;
    S.dim = m_;
    S.col_ptr.assign(static_cast<std::size_t>(m_) + 1, 0);
    lp.edge_slot.assign(n, -1);
    S.row_idx.reserve(static_cast<std::size_t>(m_) + n);
    std::size_t p = 0;
    for (Index j = 0; j < m_; ++j) {
      S.col_ptr[j] = static_cast<Index>(S.row_idx.size());
      S.row_idx.push_back(j);
      lp.slot_edge_count.push_back(0);
      Index last_row = -1;
      while (p < n && key(order[p]).first == j) {
        Index e = order[p];
        Index r = key(e).second;
        if (r != last_row) {
          S.row_idx.push_back(r);
          lp.slot_edge_count.push_back(0);
          last_row = r;
        }
        Index slot = static_cast<Index>(S.row_idx.size()) - 1;
        lp.edge_slot[e] = slot;
        ++lp.slot_edge_count[slot];
        ++p;
      }
    }
    S.col_ptr[m_] = static_cast<Index>(S.row_idx.size());
    S.values.assign(S.row_idx.size(), 0.0);
  });
  return cache_->pattern;
}

void incidence_matvec(const Graph& g, std::span<const double> x, std::span<double> out) {
  require_size(x, g.edge_count(), "incidence_matvec input");
  if (static_cast<Index>(out.size()) != g.node_count()) {
    throw DimensionError("incidence_matvec output has wrong length");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out[edges[e].tail] -= x[e];
    out[edges[e].head] += x[e];
  }
}

Vector incidence_matvec(const Graph& g, std::span<const double> x) {
  Vector out(static_cast<std::size_t>(g.node_count()));
  incidence_matvec(g, x, out);
  return out;
}

void incidence_rmatvec(const Graph& g, std::span<const double> y, std::span<double> out) {
  require_size(y, g.node_count(), "incidence_rmatvec input");
  if (static_cast<Index>(out.size()) != g.edge_count()) {
    throw DimensionError("incidence_rmatvec output has wrong length");
  }
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out[e] = y[edges[e].head] - y[edges[e].tail];
  }
}

Vector incidence_rmatvec(const Graph& g, std::span<const double> y) {
  Vector out(static_cast<std::size_t>(g.edge_count()));
  incidence_rmatvec(g, y, out);
  return out;
}

SparseSymmetric weighted_laplacian(const Graph& g, const EdgeWeights& w, double delta) {
  if (w.size() != g.edge_count()) {
    throw DimensionError("weighted_laplacian: weight vector length does not match edge count");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ValidationError("weighted_laplacian: delta must be finite and nonnegative");
  }
  const LaplacianPattern& lp = g.laplacian_pattern();
  const SparseSymmetric& full = lp.pattern;
  const auto edges = g.edges();
  const auto wv = w.values();

  Vector slot_value(full.row_idx.size(), 0.0);
  std::vector<char> slot_used(full.row_idx.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double we = wv[e];
    if (we == 0.0) continue;
    slot_value[full.col_ptr[edges[e].tail]] += we;
    slot_value[full.col_ptr[edges[e].head]] += we;
    Index slot = lp.edge_slot[e];
    slot_value[slot] -= we;
    slot_used[slot] = 1;
  }

  SparseSymmetric S;
  S.dim = g.node_count();
  S.col_ptr.assign(static_cast<std::size_t>(S.dim) + 1, 0);
  S.row_idx.reserve(full.row_idx.size());
  S.values.reserve(full.row_idx.size());
  for (Index j = 0; j < S.dim; ++j) {
    S.col_ptr[j] = static_cast<Index>(S.row_idx.size());
    Index d = full.col_ptr[j];
    S.row_idx.push_back(j);
    S.values.push_back(slot_value[d] + delta);
    for (Index p = d + 1; p < full.col_ptr[j + 1]; ++p) {
      if (!slot_used[p]) continue;
      S.row_idx.push_back(full.row_idx[p]);
      S.values.push_back(slot_value[p]);
    }
  }
  S.col_ptr[S.dim] = static_cast<Index>(S.row_idx.size());
  return S;
}

void weighted_laplacian_apply(const Graph& g, std::span<const double> w, double delta,
                              std::span<const double> x, std::span<double> out) {
  const auto edges = g.edges();
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = delta * x[v];
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double flow = w[e] * (x[edges[e].head] - x[edges[e].tail]);
    out[edges[e].tail] -= flow;
    out[edges[e].head] += flow;
  }
}

}  // namespace psipm

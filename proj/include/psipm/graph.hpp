#pragma once

#include <memory>
#include <span>
#include <vector>

#include "psipm/sparse.hpp"
#include "psipm/vector_ops.hpp"

namespace psipm {

struct Edge {
  Index tail = 0;
  Index head = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Nonnegative per-edge weights; a zero entry means the edge is dropped.
class EdgeWeights {
 public:
  EdgeWeights() = default;
  explicit EdgeWeights(Vector w);

  Index size() const { return static_cast<Index>(w_.size()); }
  std::span<const double> values() const { return w_; }
  double operator[](Index i) const { return w_[static_cast<std::size_t>(i)]; }
  double max() const;
  Index nonzero_count() const;

 private:
  Vector w_;
};

/// Lower-triangular pattern of the unweighted Laplacian plus, for every edge,
/// the slot its off-diagonal contribution lands in. Parallel edges and
/// antiparallel pairs share one slot.
struct LaplacianPattern {
  SparseSymmetric pattern;           // values all zero
  std::vector<Index> edge_slot;      // per edge, index into pattern.row_idx
  std::vector<Index> slot_edge_count;
};

/// Directed graph with nonnegative edge costs and a connected underlying
/// undirected graph. Immutable; cheap to copy (shared cached structure).
class Graph {
 public:
  Graph(Index node_count, std::vector<Edge> edges, Vector cost);
  static Graph with_unit_costs(Index node_count, std::vector<Edge> edges);

  Index node_count() const { return m_; }
  Index edge_count() const { return static_cast<Index>(edges_->size()); }
  std::span<const Edge> edges() const { return *edges_; }
  std::span<const double> cost() const { return *cost_; }

  /// Number of edges incident to each node (in- plus out-edges).
  std::span<const Index> degrees() const { return *degrees_; }
  Index max_degree() const { return max_degree_; }

  /// Built on first use; safe to call from several threads.
  const LaplacianPattern& laplacian_pattern() const;

 private:
  struct PatternCache;

  Index m_ = 0;
  std::shared_ptr<const std::vector<Edge>> edges_;
  std::shared_ptr<const Vector> cost_;
  std::shared_ptr<const std::vector<Index>> degrees_;
  Index max_degree_ = 0;
  std::shared_ptr<PatternCache> cache_;
};

/// Index of the connected component of every node (union-find over the
/// underlying undirected graph) and the number of components.
struct Components {
  std::vector<Index> label;
  Index count = 0;
};
Components connected_components(Index node_count, std::span<const Edge> edges);

/// A x, where A is the node-by-edge incidence matrix (-1 at the tail, +1 at
/// the head of every edge).
Vector incidence_matvec(const Graph& g, std::span<const double> x);
void incidence_matvec(const Graph& g, std::span<const double> x, std::span<double> out);

/// A^T y: the entry of edge (v, w) is y_w - y_v.
Vector incidence_rmatvec(const Graph& g, std::span<const double> y);
void incidence_rmatvec(const Graph& g, std::span<const double> y, std::span<double> out);

/// A diag(w) A^T + delta I in lower compressed-column form. Edges with zero
/// weight contribute no structural nonzeros; parallel edges are merged.
/// delta must be nonnegative (the IPM always passes delta > 0).
SparseSymmetric weighted_laplacian(const Graph& g, const EdgeWeights& w, double delta);

/// Matrix-free A diag(w) A^T x + delta x.
void weighted_laplacian_apply(const Graph& g, std::span<const double> w, double delta,
                              std::span<const double> x, std::span<double> out);

/// Maximum undirected degree over the nodes.
inline Index max_degree(const Graph& g) { return g.max_degree(); }

}  // namespace psipm

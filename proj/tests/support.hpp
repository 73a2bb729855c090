#pragma once

// Dense reference helpers shared by the test suites.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "psipm/graph.hpp"
#include "psipm/io.hpp"
#include "psipm/problem.hpp"
#include "psipm/sparse.hpp"

namespace psipm::test {

inline Eigen::MatrixXd dense(const SparseSymmetric& S) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(S.dim, S.dim);
  for (Index j = 0; j < S.dim; ++j) {
    for (Index p = S.col_ptr[j]; p < S.col_ptr[j + 1]; ++p) {
      const Index i = S.row_idx[p];
      D(i, j) += S.values[p];
      if (i != j) D(j, i) += S.values[p];
    }
  }
  return D;
}

inline Eigen::MatrixXd dense_lower(const CholeskyFactor& L) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(L.dim(), L.dim());
  for (Index j = 0; j < L.dim(); ++j) {
    for (Index p = L.col_ptr()[j]; p < L.col_ptr()[j + 1]; ++p) D(L.row_idx()[p], j) = L.values()[p];
  }
  return D;
}

/// Node-by-edge incidence matrix built straight from the edge list.
inline Eigen::MatrixXd dense_incidence(const Graph& g) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.node_count(), g.edge_count());
  const auto edges = g.edges();
  for (Index e = 0; e < g.edge_count(); ++e) {
    A(edges[e].tail, e) -= 1.0;
    A(edges[e].head, e) += 1.0;
  }
  return A;
}

inline Eigen::VectorXd vec(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector stdvec(const Eigen::VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

inline Graph path_graph(Index nodes) {
  std::vector<Edge> edges;
  for (Index v = 0; v + 1 < nodes; ++v) edges.push_back({v, v + 1});
  return Graph::with_unit_costs(nodes, std::move(edges));
}

inline Graph star_graph(Index leaves) {
  std::vector<Edge> edges;
  for (Index v = 1; v <= leaves; ++v) edges.push_back({0, v});
  return Graph::with_unit_costs(leaves + 1, std::move(edges));
}

/// 3-node path, unit costs, one unit of mass from node 0 to node 2.
inline Problem path_problem() { return Problem(path_graph(3), Vector{-1.0, 0.0, 1.0}); }

/// Small generated instance (bidirected, unit costs, exact unit-mass load).
inline Problem small_instance(Index nodes, std::uint64_t seed, double load_fraction = 0.3) {
  GeneratorSpec gs;
  gs.node_count = nodes;
  gs.seed = seed;
  gs.degree_avg_target = std::min(5.0, static_cast<double>(nodes - 1));
  gs.degree_max = std::max<Index>(static_cast<Index>(gs.degree_avg_target) + 1, std::min<Index>(10, nodes - 1));
  LoadSpec ls;
  ls.seed = seed * 7 + 3;
  ls.nonzero_fraction = load_fraction;
  return make_instance(gs, ls);
}

/// Random connected graph with random integer costs in [1, 9], edges in random
/// directions; used where unit costs would make ties everywhere.
inline Graph random_cost_graph(Index nodes, Index extra_edges, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  Vector cost;
  auto pick = [&](Index n) { return static_cast<Index>(rng() % static_cast<std::uint64_t>(n)); };
  for (Index v = 1; v < nodes; ++v) {
    const Index u = pick(v);
    if (rng() & 1) edges.push_back({u, v});
    else edges.push_back({v, u});
    cost.push_back(static_cast<double>(1 + pick(9)));
  }
  for (Index k = 0; k < extra_edges; ++k) {
    const Index u = pick(nodes);
    Index v = pick(nodes);
    if (v == u) v = (u + 1) % nodes;
    edges.push_back({u, v});
    cost.push_back(static_cast<double>(1 + pick(9)));
  }
  return Graph(nodes, std::move(edges), std::move(cost));
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace psipm::test

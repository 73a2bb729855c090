#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "psipm/graph.hpp"

namespace psipm {

/// Load vector held exactly as integer numerators over a common positive
/// denominator: b = numerators / denominator.
struct ExactSupply {
  std::vector<std::int64_t> numerators;
  std::int64_t denominator = 1;
};

/// Transport instance: min c^T x  s.t.  A x = b, x >= 0.
/// b is the node balance (inflow minus outflow): positive where mass arrives.
class Problem {
 public:
  /// Validates length and balance (|1^T b| within round-off of ||b||_1).
  Problem(Graph graph, Vector b);
  /// Exact form; balance is checked in integer arithmetic.
  Problem(Graph graph, ExactSupply supply);

  const Graph& graph() const { return graph_; }
  std::span<const double> b() const { return b_; }
  const std::optional<ExactSupply>& exact_supply() const { return exact_; }

  Index node_count() const { return graph_.node_count(); }
  Index edge_count() const { return graph_.edge_count(); }

  /// Total mass moved, ||b||_1 / 2.
  double mass() const;
  /// c^T x.
  double objective(std::span<const double> x) const;
  /// Objective divided by the moved mass (the unit-mass transport cost);
  /// 0 when nothing moves.
  double normalized_objective(std::span<const double> x) const;

 private:
  Graph graph_;
  Vector b_;
  std::optional<ExactSupply> exact_;
};

}  // namespace psipm

#include "psipm/problem.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace psipm {

Problem::Problem(Graph graph, Vector b) : graph_(std::move(graph)), b_(std::move(b)) {
  require_size(b_, graph_.node_count(), "load vector");
  if (!all_finite(b_)) throw ValidationError("load vector has non-finite entries");
  double sum = 0.0;
  for (double v : b_) sum += v;
  const double scale = norm1(b_);
  if (std::abs(sum) > 1e-12 * std::max(scale, 1.0)) {
    throw ValidationError("load vector is not balanced: entries sum to " + std::to_string(sum));
  }
}

Problem::Problem(Graph graph, ExactSupply supply) : graph_(std::move(graph)) {
  if (static_cast<Index>(supply.numerators.size()) != graph_.node_count()) {
    throw DimensionError("exact supply length does not match node count");
  }
  if (supply.denominator <= 0) throw ValidationError("supply denominator must be positive");
  __int128 sum = 0;
  for (std::int64_t v : supply.numerators) sum += v;
  if (sum != 0) throw ValidationError("load vector is not balanced");
  b_.resize(supply.numerators.size());
  const double den = static_cast<double>(supply.denominator);
  for (std::size_t i = 0; i < b_.size(); ++i) b_[i] = static_cast<double>(supply.numerators[i]) / den;
  exact_ = std::move(supply);
}

double Problem::mass() const { return 0.5 * norm1(b_); }

double Problem::objective(std::span<const double> x) const {
  require_size(x, graph_.edge_count(), "flow vector");
  return dot(graph_.cost(), x);
}

double Problem::normalized_objective(std::span<const double> x) const {
  const double m = mass();
  return m > 0.0 ? objective(x) / m : 0.0;
}

}  // namespace psipm

#pragma once

// Exact uncapacitated min-cost flow by successive shortest paths with node
// potentials, used as the reference solution for the interior point solver.

#include <cstdint>
#include <span>
#include <vector>

#include "psipm/problem.hpp"

namespace psipm {

/// Flow and potentials in exact integer form: flow_e = flow_num[e] / denominator,
/// with potentials y satisfying y_head - y_tail <= c_e (equality on used arcs).
struct FlowSolution {
  std::vector<std::int64_t> flow_num;
  std::int64_t denominator = 1;
  std::vector<std::int64_t> potential;
  double objective = 0.0;  // c^T flow
  Index augmentations = 0;
  Index shortest_path_rounds = 0;

  Vector flow() const;
  Vector potentials() const;
};

/// Needs integral costs and an exact (or integral) load. Throws
/// InfeasibleError for unbalanced loads and ValidationError otherwise.
FlowSolution solve_mcf_exact(const Problem& prob);

/// Conservation, nonnegativity and reduced-cost optimality, all in integers.
bool verify_certificate(const Problem& prob, const FlowSolution& sol);

/// Floating-point certificate for an arbitrary (x, y) pair.
struct ApproxCertificate {
  double primal_residual = 0.0;  // ||A x - b||_1
  double negativity = 0.0;       // max(0, -min x)
  double dual_violation = 0.0;   // max(0, max_e (A^T y - c)_e)
  double gap = 0.0;              // |c^T x - b^T y| / max(1, |c^T x|)
  bool ok(double tol) const {
    return primal_residual <= tol && negativity <= tol && dual_violation <= tol && gap <= tol;
  }
};
ApproxCertificate certify_approximate(const Problem& prob, std::span<const double> x,
                                      std::span<const double> y);

}  // namespace psipm

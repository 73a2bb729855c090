#pragma once

// Inner primal-dual interior point solver for the proximally regularized
// subproblem around the anchor (x_k, y_k), whose optimality conditions are
//   rho (x - x_k) - A^T y - s + c = 0,  A x + delta (y - y_k) - b = 0,  X S e = 0.

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "psipm/problem.hpp"
#include "psipm/sparsifier.hpp"

namespace psipm {

struct RegParams {
  double rho = 1e-4;
  double delta = 1e-6;
  void validate() const;
};

struct IpmIterate {
  Vector x;  // edges, > 0
  Vector y;  // nodes, free
  Vector s;  // edges, > 0
  double mu() const { return x.empty() ? 0.0 : dot(x, s) / static_cast<double>(x.size()); }
};

/// Proximal center (x_k, y_k) of outer iteration k.
struct Anchor {
  Vector x;
  Vector y;
  Index k = 0;
};

struct NeighborhoodParams {
  double gamma_hi = 1e4;
  double gamma_lo = 1e-4;
  double gamma_p = 1.0;
  double gamma_d = 1.0;
  double sigma = 0.1;
  double sigma_bar = 0.9;
  double c_inexact = 0.05;
  /// Throws ValidationError unless gamma_hi > 1 > gamma_lo > 0,
  /// 0 < sigma < sigma_bar < 1, 0 < c_inexact < 1 and gamma_p c_inexact < sigma.
  void validate() const;
};

/// gamma_p, gamma_d set so `it` meets both infeasibility conditions with a
/// factor-2 slack (capped at 1e4), and c_inexact = min(0.5, sigma / (2 gamma_p)).
NeighborhoodParams calibrate_neighborhood(const IpmIterate& it, const Anchor& anchor,
                                          const Problem& prob, const RegParams& reg,
                                          NeighborhoodParams base = {});

struct Residuals {
  Vector xi_d;   // -(rho (x - x_k) - A^T y - s + c)
  Vector xi_p;   // -(A x + delta (y - y_k) - b)
  Vector xi_mu;  // sigma mu e - X S e
};

Residuals residuals(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                    const RegParams& reg, double sigma);

/// (Theta^{-1} + rho I)^{-1}: x_i / (s_i + rho x_i).
EdgeWeights normal_weights(const IpmIterate& it, const RegParams& reg);

/// xi_p - A (Theta^{-1} + rho I)^{-1} (X^{-1} xi_mu + xi_d).
Vector assemble_normal_rhs(const Residuals& res, const IpmIterate& it, const Graph& g,
                           const RegParams& reg);

/// Loads the iterate's normal weights into the solver. Must precede
/// newton_step / predictor_corrector_step for that iterate.
void prepare_solver(NormalSolver& solver, const IpmIterate& it, const RegParams& reg);

struct Direction {
  Vector dx;
  Vector dy;
  Vector ds;
  NormalSolveStats stats;
  bool zeta_bound_ok = true;
};

/// Solves the normal equations for dy (inexactly, within zeta_budget), then
/// dx = D (A^T dy + xi_d + X^{-1} xi_mu) and ds = X^{-1} (xi_mu - S dx).
Direction newton_step(const IpmIterate& it, const Residuals& res, const Problem& prob,
                      const RegParams& reg, NormalSolver& solver, double zeta_budget,
                      double pcg_tol);

/// Largest step keeping v + alpha dv >= 0; +inf when dv >= 0.
double max_step(std::span<const double> v, std::span<const double> dv);

/// alpha^* = min(primal, dual) ratio-test bound.
double boundary_step(const IpmIterate& it, const Direction& d);

double primal_infeasibility(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                            const RegParams& reg);  // ||A x + delta (y - y_k) - b||
double dual_infeasibility(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                          const RegParams& reg);  // ||rho (x - x_k) - A^T y - s + c||

bool neighborhood_check(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                        const RegParams& reg, const NeighborhoodParams& nb);

IpmIterate step_to(const IpmIterate& it, const Direction& d, double alpha);

/// Backtracks from min(1, 0.995 alpha^*) by 0.9 (at most 60 trials) until the
/// trial point is in the neighbourhood and x^T s has dropped by the factor
/// 1 - (1 - sigma_bar) alpha. Throws StallError when no such alpha >= 1e-10
/// is found.
double step_search(const IpmIterate& it, const Direction& d, const Anchor& anchor,
                   const Problem& prob, const RegParams& reg, const NeighborhoodParams& nb);

struct PredictorCorrector {
  Direction direction;
  Residuals corrector_res;  // right-hand side of the combined solve
  double sigma_used = 0.0;
  double alpha_affine = 0.0;
  double mu_affine = 0.0;
  Index pcg_iterations = 0;  // both solves
};

/// Affine predictor (sigma = 0), sigma = (mu_aff / mu)^3, and a corrector with
/// xi_mu = sigma mu e - X S e - dX_aff dS_aff e solved with the same factor.
PredictorCorrector predictor_corrector_step(const IpmIterate& it, const Anchor& anchor,
                                            const Problem& prob, const RegParams& reg,
                                            NormalSolver& solver, double zeta_budget,
                                            double pcg_tol);

enum class IpmMode { theory, practical };
std::string_view to_string(IpmMode m);
IpmMode parse_mode(std::string_view name);

enum class StopVerdict { proceed, subproblem_solved, converged };
using InnerStop = std::function<StopVerdict(const IpmIterate&)>;

struct IpmOptions {
  IpmMode mode = IpmMode::practical;
  Index max_iterations = 500;
  /// Recalibrate gamma_p, gamma_d and c_inexact from the starting point.
  bool calibrate = true;
  /// Escalate practical-mode solves that miss the budget (theory mode always
  /// escalates). Off by default: on expander-like graphs the direct fallback
  /// costs more than the whole PCG solve. Without it a miss gets PCG
  /// refinement against the full matrix.
  bool practical_escalation = false;
};

struct IterationRecord {
  Index outer = 0;  // anchor index k
  Index iteration = 0;
  double mu = 0.0;       // before the step
  double mu_next = 0.0;  // after the step
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  Index pcg_iterations = 0;
  double zeta_norm = 0.0;
  double zeta_budget = 0.0;
  double zeta_ratio = 0.0;  // ||zeta|| / x^T s
  bool zeta_bound_ok = true;
  Backend backend_used = Backend::full_cholesky;
  Index escalations = 0;
};

/// Everything a test needs to audit one accepted step.
struct StepSnapshot {
  const IpmIterate& before;
  const IpmIterate& after;
  const Residuals& res;  // right-hand side of the final solve
  const Direction& direction;
  double alpha;
  const Anchor& anchor;
  const NeighborhoodParams& nb;
  NormalSolver& solver;
};
using StepObserver = std::function<void(const StepSnapshot&)>;

enum class InnerExit { stop_callback, converged, boundary_solution };

struct InnerReport {
  Index iterations = 0;
  InnerExit exit = InnerExit::stop_callback;
  NeighborhoodParams nb;
  std::vector<IterationRecord> trace;
};

struct InnerResult {
  IpmIterate iterate;
  InnerReport report;
};

/// Runs IPM iterations from `start` until `stop` says otherwise. In theory
/// mode every iterate stays in the neighbourhood; in practical mode steps are
/// predictor-corrector with a 0.995 fraction to the boundary.
/// Throws ConvergenceError after opts.max_iterations.
InnerResult inner_solve(const Anchor& anchor, const Problem& prob, const RegParams& reg,
                        const NeighborhoodParams& nb, IpmIterate start, NormalSolver& solver,
                        const InnerStop& stop, const IpmOptions& opts,
                        const StepObserver& observer = {});

}  // namespace psipm

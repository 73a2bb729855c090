#pragma once

// Outer proximal point loop: anchor updates, the natural-residual test that
// ends each subproblem, and the global LP stopping rule.

#include <functional>
#include <string>
#include <vector>

#include "psipm/ipm.hpp"

namespace psipm {

struct PpmParams {
  double sigma_r = 0.7;
  double tau_1 = 1e-4;
  double tol = 1e-10;
  Index max_outer = 200;
  /// Use tau_1 = 1 (the unrelaxed inexactness test).
  bool strict = false;

  double effective_tau() const { return strict ? 1.0 : tau_1; }
  void validate() const;
};

/// || [x; y] - Pi([x; y] - [rho (x - x_k) + c - A^T y; A x - b + delta (y - y_k)]) ||_2,
/// where Pi clamps the x block at zero.
double natural_residual(std::span<const double> x, std::span<const double> y, const Anchor& anchor,
                        const Problem& prob, const RegParams& reg);

/// res_nat < (sigma_r^k / tau) min(1, step_norm).
bool ppm_stop_test(double res_nat, double step_norm, Index k, const PpmParams& p);

struct StopMeasures {
  double dual = 0.0;             // ||c - A^T y - s||_inf
  double primal = 0.0;           // ||b - A x||_1
  double complementarity = 0.0;  // max_i min(|x_i s_i|, |x_i|, |s_i|)
  double scale = 0.0;            // R = max(||A||_inf, ||b||_1, ||c||_1)

  bool satisfied(double tol) const {
    return dual <= scale * tol && primal <= scale * tol && complementarity <= tol;
  }
};

/// R = max(max degree, ||b||_1, ||c||_1); ||A||_inf of an incidence matrix is
/// its maximum degree.
double stop_scale(const Problem& prob);
StopMeasures stop_measures(std::span<const double> x, std::span<const double> y,
                           std::span<const double> s, const Problem& prob);
bool global_stop_test(std::span<const double> x, std::span<const double> y,
                      std::span<const double> s, const Problem& prob, double tol);

struct OuterRecord {
  Index k = 0;
  Index inner_iterations = 0;
  double natural_residual = 0.0;
  double step_norm = 0.0;  // ||(x, y) - (x_k, y_k)|| at the inner exit
  InnerExit exit = InnerExit::stop_callback;
};

struct SolveOptions {
  IpmOptions ipm{};
  NeighborhoodParams nb{};
  NormalSolverOptions solver{};
  StepObserver observer{};
  /// When false, stalls and iteration caps end the solve with
  /// report.converged = false and report.failure set instead of throwing.
  bool throw_on_failure = true;
};

struct SolveReport {
  bool converged = false;
  std::string failure;
  Index outer_iterations = 0;
  Index ipm_iterations = 0;
  Index pcg_iterations = 0;
  double time_s = 0.0;
  double objective = 0.0;
  double zeta_ratio_max = 0.0;
  Index budget_misses = 0;  // steps whose final zeta exceeded the budget
  Index escalations = 0;
  Backend backend = Backend::full_cholesky;
  IpmMode mode = IpmMode::practical;
  StopMeasures final_measures;
  std::vector<OuterRecord> outer;
  std::vector<IterationRecord> trace;
};

struct SolveResult {
  Vector x;
  Vector y;
  Vector s;
  SolveReport report;
};

/// Proximal-stabilized IPM. Starts from the anchor (1, 0) with the inner point
/// x = x0 = max(1, ||b||_1 / n), s_e = max(x0, c_e); each later subproblem is warm-started from the
/// previous inner exit. Throws ConvergenceError when max_outer is reached
/// (see SolveOptions::throw_on_failure).
SolveResult ps_ipm_solve(const Problem& prob, const RegParams& reg, const PpmParams& ppm,
                         const SolveOptions& opts = {});

}  // namespace psipm

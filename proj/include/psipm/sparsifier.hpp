#pragma once

// mu-threshold sparsification of the regularized normal matrix and the solver
// front end that switches between direct and iterative backends.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "psipm/graph.hpp"
#include "psipm/sparse.hpp"

namespace psipm {

struct SparsifyParams {
  double c_t = 0.4;
  bool enabled = true;
};

/// C_t mu / (1 + rho mu): scaled weights strictly below this are dropped.
double sparsification_threshold(double mu, double rho, double c_t);

/// Keeps w_i when w_i >= C_t mu / (1 + rho mu), else sets it to exactly 0.
/// Disabled params return the input unchanged.
EdgeWeights sparsify_weights(const EdgeWeights& theta_inv_reg, double mu, double rho,
                             const SparsifyParams& p);

/// A diag(w_sparse) A^T + delta I; dropped edges leave no structural entries.
SparseSymmetric build_sparsified_normal(const Graph& g, const EdgeWeights& w_sparse, double delta);

struct SparsificationGap {
  double gap = 0.0;    // power-iteration estimate of ||S_full - S_sparse||_2
  double bound = 0.0;  // (C_t mu / (1 + rho mu)) * 2 * max_degree
};

SparsificationGap sparsification_gap(const SparseSymmetric& S_full, const SparseSymmetric& S_sparse,
                                     const Graph& g, double mu, double rho, double c_t);

enum class Backend { full_cholesky, sparsified_cholesky, sparsified_pcg };

std::string_view to_string(Backend b);
/// Accepts "full", "sparse-chol", "sparse-pcg" (and the enum spellings).
Backend parse_backend(std::string_view name);
/// sparsified_pcg above 2e5 edges, sparsified_cholesky otherwise.
Backend auto_backend(Index edge_count);

struct NormalSolverOptions {
  Backend backend = Backend::sparsified_cholesky;
  SparsifyParams sparsify{};
  double ichol_droptol = 1e-3;
  Index pcg_max_iterations = 0;  // 0: default_pcg_max_iterations(m)
  double ichol_rebuild_pattern_change = 0.05;
  double ichol_rebuild_iteration_ratio = 2.0;
};

struct NormalSolveStats {
  Backend requested = Backend::full_cholesky;
  Backend used = Backend::full_cholesky;
  Index pcg_iterations = 0;
  Index escalations = 0;
  Index refinements = 0;
  double zeta_norm = 0.0;
  double zeta_budget = 0.0;
  bool within_budget = true;
};

/// Solves S_{rho,delta} dy = rhs with the configured backend, always measuring
/// the residual against the full (unsparsified) normal matrix.
class NormalSolver {
 public:
  NormalSolver(const Graph& g, double delta, NormalSolverOptions opts);

  /// Installs the scaled weights (Theta^{-1} + rho I)^{-1} of the current
  /// iterate. Factorizations are built lazily by the next solve.
  void update(const EdgeWeights& weights, double mu, double rho);

  struct Result {
    Vector dy;
    NormalSolveStats stats;
  };

  /// Backend solve followed by zeta = S_full dy - rhs. While ||zeta|| exceeds
  /// the budget the solve escalates: PCG at tol/10, then the sparsified
  /// factorization, then the full factorization with one refinement step.
  /// `within_budget` reports whether the final residual met the budget.
  /// With escalation off a miss is repaired by PCG on the full matrix,
  /// preconditioned with the backend's own factor and started from the backend
  /// result; no new factorization is built.
  /// `solution_mean`, when given, replaces the mean of every candidate dy. The
  /// mean of the exact solution is 1^T rhs / (m delta), and callers that know
  /// 1^T rhs more accurately than the rounded entries of rhs carry it pass it here.
  Result solve_with_accounting(std::span<const double> rhs, double zeta_budget, double pcg_tol,
                               std::optional<double> solution_mean = std::nullopt);

  /// S_{rho,delta} v, matrix-free.
  void apply_full(std::span<const double> v, std::span<double> out) const;

  const Graph& graph() const { return graph_; }
  double delta() const { return delta_; }
  double mu() const { return mu_; }
  double rho() const { return rho_; }
  Backend backend() const { return opts_.backend; }
  const NormalSolverOptions& options() const { return opts_; }
  const EdgeWeights& weights() const { return weights_; }
  const EdgeWeights& sparse_weights() const { return sparse_weights_; }

  /// The assembled matrix the backend factors (S_full for full_cholesky).
  const SparseSymmetric& backend_matrix();
  const SparseSymmetric& full_matrix();

  void set_escalation(bool on) { escalate_ = on; }
  bool escalation() const { return escalate_; }

  Index ichol_builds() const { return ichol_builds_; }
  Index ordering_count() const { return ordering_count_; }

 private:
  Vector solve_direct(bool sparsified, std::span<const double> rhs);
  Vector solve_pcg(std::span<const double> rhs, double tol, Index& iterations);
  Vector refine_full(Vector dy, std::span<const double> rhs, double target, Index& iterations);
  double zeta_norm(std::span<const double> dy, std::span<const double> rhs) const;
  void ensure_preconditioner();

  Graph graph_;
  double delta_;
  NormalSolverOptions opts_;
  double mu_ = 0.0;
  double rho_ = 0.0;
  EdgeWeights weights_;
  EdgeWeights sparse_weights_;

  std::optional<SparseSymmetric> full_matrix_;
  std::optional<SparseSymmetric> sparse_matrix_;
  std::optional<CholeskySymbolic> full_symbolic_;
  std::optional<CholeskySymbolic> sparse_symbolic_;
  std::optional<CholeskyFactor> full_factor_;
  std::optional<CholeskyFactor> sparse_factor_;

  std::optional<CholeskyFactor> ichol_;
  std::vector<char> ichol_kept_;
  Index ichol_kept_count_ = 0;
  std::vector<Index> pcg_history_;
  bool last_pcg_converged_ = true;
  Index ichol_builds_ = 0;
  Index ordering_count_ = 0;
  bool escalate_ = true;
};

}  // namespace psipm

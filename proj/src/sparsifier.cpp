#include "psipm/sparsifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace psipm {

double sparsification_threshold(double mu, double rho, double c_t) {
  return c_t * mu / (1.0 + rho * mu);
}

EdgeWeights sparsify_weights(const EdgeWeights& theta_inv_reg, double mu, double rho,
                             const SparsifyParams& p) {
  if (!p.enabled) return theta_inv_reg;
  if (!(p.c_t > 0.0)) throw ValidationError("sparsification constant C_t must be positive");
  if (!(mu > 0.0)) throw ValidationError("sparsify_weights: mu must be positive");
  const double threshold = sparsification_threshold(mu, rho, p.c_t);
  Vector w(theta_inv_reg.values().begin(), theta_inv_reg.values().end());
  for (double& v : w) {
    if (v < threshold) v = 0.0;
  }
  return EdgeWeights(std::move(w));
}

SparseSymmetric build_sparsified_normal(const Graph& g, const EdgeWeights& w_sparse, double delta) {
  return weighted_laplacian(g, w_sparse, delta);
}

SparsificationGap sparsification_gap(const SparseSymmetric& S_full, const SparseSymmetric& S_sparse,
                                     const Graph& g, double mu, double rho, double c_t) {
  if (S_full.dim != S_sparse.dim) throw DimensionError("sparsification_gap: dimension mismatch");
  SparsificationGap out;
  out.bound = sparsification_threshold(mu, rho, c_t) * 2.0 * static_cast<double>(g.max_degree());
  Vector tmp(static_cast<std::size_t>(S_full.dim));
  LinearOperator diff = [&](std::span<const double> v, std::span<double> y) {
    S_full.multiply(v, y);
    S_sparse.multiply(v, tmp);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= tmp[i];
  };
  out.gap = power_iteration_norm(diff, S_full.dim);
  return out;
}

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::full_cholesky: return "full";
    case Backend::sparsified_cholesky: return "sparse-chol";
    case Backend::sparsified_pcg: return "sparse-pcg";
  }
  return "?";
}

Backend parse_backend(std::string_view name) {
  if (name == "full" || name == "full_cholesky") return Backend::full_cholesky;
  if (name == "sparse-chol" || name == "sparsified_cholesky") return Backend::sparsified_cholesky;
  if (name == "sparse-pcg" || name == "sparsified_pcg") return Backend::sparsified_pcg;
  throw ValidationError("unknown backend '" + std::string(name) + "'");
}

Backend auto_backend(Index edge_count) {
  return edge_count > 200000 ? Backend::sparsified_pcg : Backend::sparsified_cholesky;
}

NormalSolver::NormalSolver(const Graph& g, double delta, NormalSolverOptions opts)
    : graph_(g), delta_(delta), opts_(opts) {
  if (!(delta > 0.0)) throw ValidationError("normal solver needs delta > 0");
  if (opts_.backend == Backend::full_cholesky) opts_.sparsify.enabled = false;
}

void NormalSolver::update(const EdgeWeights& weights, double mu, double rho) {
  if (weights.size() != graph_.edge_count()) throw DimensionError("normal solver weight length");
  weights_ = weights;
  mu_ = mu;
  rho_ = rho;
  sparse_weights_ = sparsify_weights(weights_, mu, rho, opts_.sparsify);
  full_matrix_.reset();
  sparse_matrix_.reset();
  full_factor_.reset();
  sparse_factor_.reset();
}

const SparseSymmetric& NormalSolver::full_matrix() {
  if (!full_matrix_) full_matrix_ = weighted_laplacian(graph_, weights_, delta_);
  return *full_matrix_;
}

const SparseSymmetric& NormalSolver::backend_matrix() {
  if (opts_.backend == Backend::full_cholesky) return full_matrix();
  if (!sparse_matrix_) sparse_matrix_ = build_sparsified_normal(graph_, sparse_weights_, delta_);
  return *sparse_matrix_;
}

void NormalSolver::apply_full(std::span<const double> v, std::span<double> out) const {
  weighted_laplacian_apply(graph_, weights_.values(), delta_, v, out);
}

double NormalSolver::zeta_norm(std::span<const double> dy, std::span<const double> rhs) const {
  Vector r(rhs.size());
  apply_full(dy, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rhs[i];
  return norm2(r);
}

Vector NormalSolver::solve_direct(bool sparsified, std::span<const double> rhs) {
  const bool use_full = !sparsified || opts_.backend == Backend::full_cholesky;
  const SparseSymmetric& M = use_full ? full_matrix() : backend_matrix();
  auto& symbolic = use_full ? full_symbolic_ : sparse_symbolic_;
  auto& factor = use_full ? full_factor_ : sparse_factor_;
  if (!factor) {
    // The ordering is recomputed only when the pattern changed.
    if (!symbolic || !symbolic->matches(M)) {
      symbolic.emplace(M, analyze_order(M));
      ++ordering_count_;
    }
    factor = factorize(*symbolic, M);
  }
  // Any L + delta I maps e to delta e, so the mean is taken in closed form and
  // the factor only sees the centred part.
  const double mean = std::accumulate(rhs.begin(), rhs.end(), 0.0) / static_cast<double>(rhs.size());
  Vector centred(rhs.begin(), rhs.end());
  for (double& v : centred) v -= mean;
  Vector dy = factor->solve(centred);
  const double drift = std::accumulate(dy.begin(), dy.end(), 0.0) / static_cast<double>(dy.size());
  for (double& v : dy) v += mean / delta_ - drift;
  return dy;
}

void NormalSolver::ensure_preconditioner() {
  const auto w = sparse_weights_.values();
  bool rebuild = !ichol_;
  if (!rebuild) {
    Index changed = 0;
    for (std::size_t e = 0; e < w.size(); ++e) {
      if ((w[e] != 0.0) != (ichol_kept_[e] != 0)) ++changed;
    }
    rebuild = static_cast<double>(changed) >
              opts_.ichol_rebuild_pattern_change * static_cast<double>(std::max<Index>(1, ichol_kept_count_));
  }
  // A solve that hit the iteration cap always forces a fresh factor.
  if (!rebuild && !last_pcg_converged_) rebuild = true;
  if (!rebuild && pcg_history_.size() >= 2) {
    std::vector<Index> prev(pcg_history_.begin(), pcg_history_.end() - 1);
    auto mid = prev.begin() + static_cast<std::ptrdiff_t>(prev.size() / 2);
    std::nth_element(prev.begin(), mid, prev.end());
    rebuild = static_cast<double>(pcg_history_.back()) >
              opts_.ichol_rebuild_iteration_ratio * static_cast<double>(std::max<Index>(1, *mid));
  }
  if (!rebuild) return;
  const SparseSymmetric& M = backend_matrix();
  const Permutation order = analyze_order(M);
  ichol_ = incomplete_cholesky(M, opts_.ichol_droptol, &order);
  ++ichol_builds_;
  last_pcg_converged_ = true;
  ichol_kept_.assign(w.size(), 0);
  ichol_kept_count_ = 0;
  for (std::size_t e = 0; e < w.size(); ++e) {
    if (w[e] != 0.0) {
      ichol_kept_[e] = 1;
      ++ichol_kept_count_;
    }
  }
}

Vector NormalSolver::solve_pcg(std::span<const double> rhs, double tol, Index& iterations) {
  ensure_preconditioner();
  const SparseSymmetric& M = backend_matrix();
  LinearOperator op = [&M](std::span<const double> v, std::span<double> out) { M.multiply(v, out); };
  const Index maxit = opts_.pcg_max_iterations > 0 ? opts_.pcg_max_iterations
                                                   : default_pcg_max_iterations(M.dim);
  CgResult r = pcg(op, rhs, &*ichol_, tol, maxit);
  iterations += r.iterations;
  pcg_history_.push_back(r.iterations);
  last_pcg_converged_ = r.converged;
  return std::move(r.x);
}

Vector NormalSolver::refine_full(Vector dy, std::span<const double> rhs, double target,
                                 Index& iterations) {
  const CholeskyFactor* pre = opts_.backend == Backend::sparsified_pcg ? &*ichol_ : &*sparse_factor_;
  Vector r(rhs.size());
  apply_full(dy, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
  const double rn = norm2(r);
  if (rn <= target) return dy;
  LinearOperator op = [this](std::span<const double> v, std::span<double> out) { apply_full(v, out); };
  const Index maxit = opts_.pcg_max_iterations > 0 ? opts_.pcg_max_iterations
                                                   : default_pcg_max_iterations(graph_.node_count());
  CgResult c = pcg(op, r, pre, target / rn, maxit);
  iterations += c.iterations;
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] += c.x[i];
  return dy;
}

NormalSolver::Result NormalSolver::solve_with_accounting(std::span<const double> rhs,
                                                         double zeta_budget, double pcg_tol,
                                                         std::optional<double> solution_mean) {
  require_size(rhs, graph_.node_count(), "normal equations right-hand side");
  Result out;
  out.stats.requested = opts_.backend;
  out.stats.used = opts_.backend;
  out.stats.zeta_budget = zeta_budget;
  if (norm2(rhs) == 0.0) {
    out.dy.assign(rhs.size(), 0.0);
    return out;
  }

  auto accept = [&](Vector dy, Backend used) {
    if (solution_mean) {
      long double sum = 0.0L;
      for (double v : dy) sum += v;
      const double shift = *solution_mean - static_cast<double>(sum / static_cast<long double>(dy.size()));
      for (double& v : dy) v += shift;
    }
    out.stats.zeta_norm = zeta_norm(dy, rhs);
    out.stats.used = used;
    out.dy = std::move(dy);
    return out.stats.zeta_norm <= zeta_budget;
  };

  bool ok = false;
  if (opts_.backend == Backend::sparsified_pcg) {
    ok = accept(solve_pcg(rhs, pcg_tol, out.stats.pcg_iterations), Backend::sparsified_pcg);
    if (!escalate_) {
      if (!ok) {
        ++out.stats.refinements;
        ok = accept(refine_full(std::move(out.dy), rhs, 0.5 * zeta_budget, out.stats.pcg_iterations),
                    Backend::sparsified_pcg);
      }
      out.stats.within_budget = ok;
      return out;
    }
    if (!ok) {
      ++out.stats.escalations;
      ok = accept(solve_pcg(rhs, pcg_tol / 10.0, out.stats.pcg_iterations), Backend::sparsified_pcg);
    }
    if (!ok) {
      ++out.stats.escalations;
      ok = accept(solve_direct(true, rhs), Backend::sparsified_cholesky);
    }
  } else if (opts_.backend == Backend::sparsified_cholesky) {
    ok = accept(solve_direct(true, rhs), Backend::sparsified_cholesky);
    if (!ok && !escalate_) {
      ++out.stats.refinements;
      ok = accept(refine_full(std::move(out.dy), rhs, 0.5 * zeta_budget, out.stats.pcg_iterations),
                  Backend::sparsified_cholesky);
    }
  }
  if (!ok && (escalate_ || opts_.backend == Backend::full_cholesky)) {
    if (opts_.backend != Backend::full_cholesky) ++out.stats.escalations;
    ok = accept(solve_direct(false, rhs), Backend::full_cholesky);
    if (!ok) {
      // One step of iterative refinement against the full matrix.
      Vector r(rhs.size());
      apply_full(out.dy, r);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
      Vector corr = full_factor_->solve(r);
      for (std::size_t i = 0; i < corr.size(); ++i) out.dy[i] += corr[i];
      ok = accept(std::move(out.dy), Backend::full_cholesky);
    }
  }
  out.stats.within_budget = ok;
  return out;
}

}  // namespace psipm

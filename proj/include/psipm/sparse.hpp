#pragma once

// Sparse symmetric positive-definite linear algebra: minimum-degree ordering,
// complete and threshold-incomplete Cholesky, and preconditioned CG.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "psipm/vector_ops.hpp"

namespace psipm {

/// Symmetric matrix stored as its lower triangle in compressed-column form.
/// Every column starts with its diagonal entry; the remaining row indices of a
/// column are strictly increasing.
struct SparseSymmetric {
  Index dim = 0;
  std::vector<Index> col_ptr;  // size dim + 1
  std::vector<Index> row_idx;
  Vector values;

  Index nnz() const { return static_cast<Index>(row_idx.size()); }

  /// y = S x using both triangles.
  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector multiply(std::span<const double> x) const;

  Vector diagonal() const;

  /// Throws ValidationError when the structural invariants do not hold.
  void validate() const;

  bool same_pattern(const SparseSymmetric& other) const {
    return dim == other.dim && col_ptr == other.col_ptr && row_idx == other.row_idx;
  }
};

/// perm[new_index] = old_index.
using Permutation = std::vector<Index>;

Permutation identity_permutation(Index n);
Permutation inverse_permutation(const Permutation& perm);

/// Fill-reducing symmetric ordering (approximate minimum degree).
/// Deterministic for a given pattern.
Permutation analyze_order(const SparseSymmetric& S);

/// Returns P S P^T (lower triangle, diagonal first) for perm[new] = old.
SparseSymmetric permute_symmetric(const SparseSymmetric& S, const Permutation& perm);

/// Pattern-only analysis of a complete factorization. Reusable across
/// matrices that share the same sparsity pattern.
class CholeskyFactor;

class CholeskySymbolic {
 public:
  CholeskySymbolic() = default;
  CholeskySymbolic(const SparseSymmetric& S, Permutation order);

  Index dim() const { return dim_; }
  /// Structural nonzeros of L, diagonal included.
  Index factor_nnz() const { return l_col_ptr_.empty() ? 0 : l_col_ptr_.back(); }
  const Permutation& permutation() const { return perm_; }
  const std::vector<Index>& elimination_tree() const { return parent_; }
  bool matches(const SparseSymmetric& S) const { return pattern_.same_pattern(S); }

 private:
  friend class CholeskyFactor;
  friend CholeskyFactor factorize(const CholeskySymbolic&, const SparseSymmetric&);

  Index dim_ = 0;
  Permutation perm_;
  Permutation pinv_;
  SparseSymmetric pattern_;  // the analysed matrix' pattern (values unused)
  // Upper triangle of P S P^T in compressed columns, plus where each value
  // comes from in S.values.
  std::vector<Index> upper_col_ptr_;
  std::vector<Index> upper_row_idx_;
  std::vector<Index> upper_source_;
  std::vector<Index> parent_;
  std::vector<Index> l_col_ptr_;
};

enum class FactorKind { complete, incomplete };

/// Lower-triangular factor L with P S P^T ~= L L^T.
class CholeskyFactor {
 public:
  FactorKind kind() const { return kind_; }
  double drop_tolerance() const { return drop_tol_; }
  /// Relative diagonal shift applied by the breakdown retry (0 if none).
  double diagonal_shift() const { return shift_; }
  Index dim() const { return dim_; }
  Index nnz() const { return static_cast<Index>(row_idx_.size()); }
  const Permutation& permutation() const { return perm_; }
  const std::vector<Index>& col_ptr() const { return col_ptr_; }
  const std::vector<Index>& row_idx() const { return row_idx_; }
  const Vector& values() const { return values_; }

  /// x = (P^T L L^T P)^{-1} b. Safe to call concurrently.
  void solve(std::span<const double> b, std::span<double> x) const;
  Vector solve(std::span<const double> b) const;

 private:
  friend CholeskyFactor factorize(const CholeskySymbolic&, const SparseSymmetric&);
  friend CholeskyFactor incomplete_cholesky(const SparseSymmetric&, double,
                                            const Permutation*);

  FactorKind kind_ = FactorKind::complete;
  double drop_tol_ = 0.0;
  double shift_ = 0.0;
  Index dim_ = 0;
  Permutation perm_;
  Permutation pinv_;
  std::vector<Index> col_ptr_;
  std::vector<Index> row_idx_;
  Vector values_;
};

/// Numeric complete factorization. `S` must have the analysed pattern.
/// Throws DefinitenessError on a non-positive pivot.
CholeskyFactor factorize(const CholeskySymbolic& symbolic, const SparseSymmetric& S);

/// Complete factorization in the given ordering.
CholeskyFactor cholesky(const SparseSymmetric& S, const Permutation& order);

/// Threshold incomplete Cholesky. Off-diagonal L_ij is dropped when
/// |L_ij| < drop_tol * ||S(:, j)||_2; the diagonal is always kept. Natural
/// ordering unless `order` is given. On a non-positive pivot the
/// factorization is retried once on S + 1e-8 diag(S); a second failure throws
/// BreakdownError.
CholeskyFactor incomplete_cholesky(const SparseSymmetric& S, double drop_tol,
                                   const Permutation* order = nullptr);

/// y = A x for an SPD operator of known dimension.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct CgResult {
  Vector x;
  Index iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// 10 sqrt(m), capped at m.
Index default_pcg_max_iterations(Index m);

/// Preconditioned conjugate gradients from the zero vector. The residual
/// recurrence is replaced by a true residual every `refresh` iterations and
/// convergence is confirmed on a true residual. Throws NumericalError on NaN
/// or when the operator is found not to be positive definite.
CgResult pcg(const LinearOperator& op, std::span<const double> b,
             const CholeskyFactor* preconditioner, double tol, Index max_iterations,
             Index refresh = 50);

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration from a deterministic start. Never overestimates (up to round-off).
double power_iteration_norm(const LinearOperator& op, Index dim, Index max_iterations = 300,
                            double rel_tol = 1e-12, std::uint64_t seed = 0x5eed);

}  // namespace psipm

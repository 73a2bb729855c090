#include <algorithm>
#include <cmath>
#include <string>

#include "psipm/sparse.hpp"

namespace psipm {

namespace {

// Nonzero pattern of row k of L, in topological order, written to
// stack[top..n). `mark` holds the last row that visited each node.
Index ereach(Index k, const std::vector<Index>& col_ptr, const std::vector<Index>& row_idx,
             const std::vector<Index>& parent, std::vector<Index>& mark, std::vector<Index>& stack,
             std::vector<Index>& path) {
  const Index n = static_cast<Index>(parent.size());
  Index top = n;
  mark[k] = k;
  for (Index p = col_ptr[k]; p < col_ptr[k + 1]; ++p) {
    Index i = row_idx[p];
    if (i >= k) continue;
    Index len = 0;
    for (; mark[i] != k; i = parent[i]) {
      path[len++] = i;
      mark[i] = k;
    }
    while (len > 0) stack[--top] = path[--len];
  }
  return top;
}

}  // namespace

CholeskySymbolic::CholeskySymbolic(const SparseSymmetric& S, Permutation order)
    : dim_(S.dim), perm_(std::move(order)) {
  if (static_cast<Index>(perm_.size()) != S.dim) {
    throw DimensionError("ordering size does not match matrix dimension");
  }
  pinv_ = inverse_permutation(perm_);
  pattern_.dim = S.dim;
  pattern_.col_ptr = S.col_ptr;
  pattern_.row_idx = S.row_idx;

  const Index n = S.dim;
  // Upper triangle of C = P S P^T by columns.
  std::vector<Index> count(static_cast<std::size_t>(n), 0);
  for (Index j = 0; j < n; ++j) {
    for (Index p = S.col_ptr[j]; p < S.col_ptr[j + 1]; ++p) {
      ++count[std::max(pinv_[S.row_idx[p]], pinv_[j])];
    }
  }
  upper_col_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (Index j = 0; j < n; ++j) upper_col_ptr_[j + 1] = upper_col_ptr_[j] + count[j];
  upper_row_idx_.assign(static_cast<std::size_t>(S.nnz()), 0);
  upper_source_.assign(static_cast<std::size_t>(S.nnz()), 0);
  std::vector<Index> next(upper_col_ptr_.begin(), upper_col_ptr_.end() - 1);
  for (Index j = 0; j < n; ++j) {
    for (Index p = S.col_ptr[j]; p < S.col_ptr[j + 1]; ++p) {
      Index a = pinv_[S.row_idx[p]];
      Index b = pinv_[j];
      Index q = next[std::max(a, b)]++;
      upper_row_idx_[q] = std::min(a, b);
      upper_source_[q] = p;
    }
  }

  // Elimination tree.
  parent_.assign(static_cast<std::size_t>(n), -1);
  std::vector<Index> ancestor(static_cast<std::size_t>(n), -1);
  for (Index k = 0; k < n; ++k) {
    for (Index p = upper_col_ptr_[k]; p < upper_col_ptr_[k + 1]; ++p) {
      Index i = upper_row_idx_[p];
      while (i != -1 && i < k) {
        Index inext = ancestor[i];
        ancestor[i] = k;
        if (inext == -1) parent_[i] = k;
        i = inext;
      }
    }
  }

  // Column counts of L from the row patterns.
  std::vector<Index> col_count(static_cast<std::size_t>(n), 1);
  std::vector<Index> mark(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack(static_cast<std::size_t>(n)), path(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    Index top = ereach(k, upper_col_ptr_, upper_row_idx_, parent_, mark, stack, path);
    for (Index t = top; t < n; ++t) ++col_count[stack[t]];
  }
  l_col_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (Index j = 0; j < n; ++j) l_col_ptr_[j + 1] = l_col_ptr_[j] + col_count[j];
}

CholeskyFactor factorize(const CholeskySymbolic& sym, const SparseSymmetric& S) {
  if (!sym.matches(S)) {
    throw DimensionError("matrix pattern differs from the analysed pattern");
  }
  const Index n = sym.dim_;
  CholeskyFactor F;
  F.kind_ = FactorKind::complete;
  F.dim_ = n;
  F.perm_ = sym.perm_;
  F.pinv_ = sym.pinv_;
  F.col_ptr_ = sym.l_col_ptr_;
  F.row_idx_.assign(static_cast<std::size_t>(sym.factor_nnz()), 0);
  F.values_.assign(static_cast<std::size_t>(sym.factor_nnz()), 0.0);

  std::vector<Index> next(F.col_ptr_.begin(), F.col_ptr_.end() - 1);
  std::vector<Index> mark(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack(static_cast<std::size_t>(n)), path(static_cast<std::size_t>(n));
  Vector x(static_cast<std::size_t>(n), 0.0);

  for (Index k = 0; k < n; ++k) {
    Index top = ereach(k, sym.upper_col_ptr_, sym.upper_row_idx_, sym.parent_, mark, stack, path);
    x[k] = 0.0;
    for (Index p = sym.upper_col_ptr_[k]; p < sym.upper_col_ptr_[k + 1]; ++p) {
      x[sym.upper_row_idx_[p]] = S.values[sym.upper_source_[p]];
    }
    double d = x[k];
    x[k] = 0.0;
    for (Index t = top; t < n; ++t) {
      Index i = stack[t];
      double lki = x[i] / F.values_[F.col_ptr_[i]];
      x[i] = 0.0;
      for (Index p = F.col_ptr_[i] + 1; p < next[i]; ++p) {
        x[F.row_idx_[p]] -= F.values_[p] * lki;
      }
      d -= lki * lki;
      Index p = next[i]++;
      F.row_idx_[p] = k;
      F.values_[p] = lki;
    }
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw DefinitenessError("non-positive pivot " + std::to_string(d) + " in column " +
                              std::to_string(k) + " of the complete Cholesky factorization");
    }
    Index p = next[k]++;
    F.row_idx_[p] = k;
    F.values_[p] = std::sqrt(d);
  }
  return F;
}

CholeskyFactor cholesky(const SparseSymmetric& S, const Permutation& order) {
  return factorize(CholeskySymbolic(S, order), S);
}

void CholeskyFactor::solve(std::span<const double> b, std::span<double> x) const {
  require_size(b, dim_, "CholeskyFactor::solve rhs");
  Vector z(static_cast<std::size_t>(dim_));
  for (Index k = 0; k < dim_; ++k) z[k] = b[perm_[k]];
  for (Index j = 0; j < dim_; ++j) {
    z[j] /= values_[col_ptr_[j]];
    const double zj = z[j];
    for (Index p = col_ptr_[j] + 1; p < col_ptr_[j + 1]; ++p) z[row_idx_[p]] -= values_[p] * zj;
  }
  for (Index j = dim_ - 1; j >= 0; --j) {
    double acc = z[j];
    for (Index p = col_ptr_[j] + 1; p < col_ptr_[j + 1]; ++p) acc -= values_[p] * z[row_idx_[p]];
    z[j] = acc / values_[col_ptr_[j]];
  }
  for (Index k = 0; k < dim_; ++k) x[perm_[k]] = z[k];
}

Vector CholeskyFactor::solve(std::span<const double> b) const {
  Vector x(static_cast<std::size_t>(dim_));
  solve(b, x);
  return x;
}

}  // namespace psipm

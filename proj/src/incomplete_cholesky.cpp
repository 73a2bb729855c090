#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "psipm/sparse.hpp"

namespace psipm {

namespace {

struct IcholResult {
  std::vector<Index> col_ptr;
  std::vector<Index> row_idx;
  Vector values;
};

// Left-looking threshold factorization of a lower CSC matrix. Columns of L
// that still have rows >= j are chained in per-row linked lists so the
// updates to column j are found without a row-oriented copy of L.
// Returns nullopt on a non-positive pivot.
std::optional<IcholResult> ichol_attempt(const SparseSymmetric& C, double drop_tol,
                                         double shift) {
  const Index n = C.dim;

  Vector col_norm(static_cast<std::size_t>(n), 0.0);
  for (Index j = 0; j < n; ++j) {
    for (Index p = C.col_ptr[j]; p < C.col_ptr[j + 1]; ++p) {
      Index i = C.row_idx[p];
      double v = C.values[p];
      if (i == j) v *= 1.0 + shift;
      col_norm[j] += v * v;
      if (i != j) col_norm[i] += v * v;
    }
  }
  for (double& v : col_norm) v = std::sqrt(v);

  IcholResult L;
  L.col_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  L.row_idx.reserve(static_cast<std::size_t>(C.nnz()));
  L.values.reserve(static_cast<std::size_t>(C.nnz()));

  Vector work(static_cast<std::size_t>(n), 0.0);
  std::vector<Index> mark(static_cast<std::size_t>(n), -1);
  std::vector<Index> head(static_cast<std::size_t>(n), -1);
  std::vector<Index> link(static_cast<std::size_t>(n), -1);
  std::vector<Index> cursor(static_cast<std::size_t>(n), 0);
  std::vector<Index> nz;

  for (Index j = 0; j < n; ++j) {
    nz.clear();
    for (Index p = C.col_ptr[j]; p < C.col_ptr[j + 1]; ++p) {
      Index i = C.row_idx[p];
      double v = C.values[p];
      if (i == j) v *= 1.0 + shift;
      work[i] = v;
      mark[i] = j;
      nz.push_back(i);
    }

    Index k = head[j];
    head[j] = -1;
    while (k != -1) {
      Index knext = link[k];
      Index p0 = cursor[k];
      const double ljk = L.values[p0];
      const Index end = L.col_ptr[k + 1];
      for (Index p = p0; p < end; ++p) {
        Index i = L.row_idx[p];
        if (mark[i] != j) {
          mark[i] = j;
          work[i] = 0.0;
          nz.push_back(i);
        }
        work[i] -= L.values[p] * ljk;
      }
      cursor[k] = p0 + 1;
      if (cursor[k] < end) {
        Index r = L.row_idx[cursor[k]];
        link[k] = head[r];
        head[r] = k;
      }
      k = knext;
    }

    const double d = work[j];
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);

    L.col_ptr[j] = static_cast<Index>(L.row_idx.size());
    L.row_idx.push_back(j);
    L.values.push_back(ljj);
    std::sort(nz.begin(), nz.end());
    const double threshold = drop_tol * col_norm[j];
    for (Index i : nz) {
      if (i == j) continue;
      double v = work[i] / ljj;
      if (drop_tol > 0.0 && std::abs(v) < threshold) continue;
      L.row_idx.push_back(i);
      L.values.push_back(v);
    }
    L.col_ptr[j + 1] = static_cast<Index>(L.row_idx.size());
    if (L.col_ptr[j + 1] - L.col_ptr[j] > 1) {
      cursor[j] = L.col_ptr[j] + 1;
      Index r = L.row_idx[cursor[j]];
      link[j] = head[r];
      head[r] = j;
    }
  }
  return L;
}

}  // namespace

CholeskyFactor incomplete_cholesky(const SparseSymmetric& S, double drop_tol,
                                   const Permutation* order) {
  if (!(drop_tol >= 0.0) || !std::isfinite(drop_tol)) {
    throw ValidationError("drop tolerance must be finite and nonnegative");
  }
  Permutation perm = order ? *order : identity_permutation(S.dim);
  if (static_cast<Index>(perm.size()) != S.dim) throw DimensionError("ordering size mismatch");
  SparseSymmetric C = order ? permute_symmetric(S, perm) : S;

  constexpr double kRetryShift = 1e-8;
  double shift = 0.0;
  auto result = ichol_attempt(C, drop_tol, 0.0);
  if (!result) {
    shift = kRetryShift;
    result = ichol_attempt(C, drop_tol, shift);
  }
  if (!result) {
    throw BreakdownError(
        "incomplete Cholesky broke down (non-positive pivot) even after a diagonal shift of "
        "1e-8 diag(S); the matrix is not a diagonally dominant M-matrix");
  }

  CholeskyFactor F;
  F.kind_ = FactorKind::incomplete;
  F.drop_tol_ = drop_tol;
  F.shift_ = shift;
  F.dim_ = S.dim;
  F.pinv_ = inverse_permutation(perm);
  F.perm_ = std::move(perm);
  F.col_ptr_ = std::move(result->col_ptr);
  F.row_idx_ = std::move(result->row_idx);
  F.values_ = std::move(result->values);
  return F;
}

}  // namespace psipm

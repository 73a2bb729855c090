#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "psipm/sparse.hpp"

namespace psipm {

void SparseSymmetric::multiply(std::span<const double> x, std::span<double> y) const {
  require_size(x, dim, "SparseSymmetric::multiply input");
  std::fill(y.begin(), y.end(), 0.0);
  for (Index j = 0; j < dim; ++j) {
    const double xj = x[j];
    double acc = 0.0;
    for (Index p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
      Index i = row_idx[p];
      double v = values[p];
      if (i == j) {
        acc += v * xj;
      } else {
        y[i] += v * xj;
        acc += v * x[i];
      }
    }
    y[j] += acc;
  }
}

Vector SparseSymmetric::multiply(std::span<const double> x) const {
  Vector y(static_cast<std::size_t>(dim));
  multiply(x, y);
  return y;
}

Vector SparseSymmetric::diagonal() const {
  Vector d(static_cast<std::size_t>(dim));
  for (Index j = 0; j < dim; ++j) d[j] = values[col_ptr[j]];
  return d;
}

void SparseSymmetric::validate() const {
  if (dim < 1) throw ValidationError("sparse matrix dimension must be at least 1");
  if (static_cast<Index>(col_ptr.size()) != dim + 1 || col_ptr[0] != 0 ||
      col_ptr[dim] != nnz() || values.size() != row_idx.size()) {
    throw ValidationError("sparse matrix arrays are inconsistent");
  }
  for (Index j = 0; j < dim; ++j) {
    if (col_ptr[j] >= col_ptr[j + 1] || row_idx[col_ptr[j]] != j) {
      throw ValidationError("column " + std::to_string(j) + " lacks a leading diagonal entry");
    }
    for (Index p = col_ptr[j] + 1; p < col_ptr[j + 1]; ++p) {
      if (row_idx[p] <= row_idx[p - 1] || row_idx[p] >= dim) {
        throw ValidationError("column " + std::to_string(j) + " has unsorted or out-of-range rows");
      }
    }
  }
  if (!all_finite(values)) throw ValidationError("sparse matrix has non-finite values");
}

Permutation identity_permutation(Index n) {
  Permutation p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  return p;
}

Permutation inverse_permutation(const Permutation& perm) {
  Permutation inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = static_cast<Index>(k);
  return inv;
}

SparseSymmetric permute_symmetric(const SparseSymmetric& S, const Permutation& perm) {
  if (static_cast<Index>(perm.size()) != S.dim) throw DimensionError("permutation size mismatch");
  const Permutation pinv = inverse_permutation(perm);
  SparseSymmetric C;
  C.dim = S.dim;
  std::vector<Index> count(static_cast<std::size_t>(S.dim), 0);
  for (Index j = 0; j < S.dim; ++j) {
    for (Index p = S.col_ptr[j]; p < S.col_ptr[j + 1]; ++p) {
      ++count[std::min(pinv[S.row_idx[p]], pinv[j])];
    }
  }
  C.col_ptr.assign(static_cast<std::size_t>(S.dim) + 1, 0);
  for (Index j = 0; j < S.dim; ++j) C.col_ptr[j + 1] = C.col_ptr[j] + count[j];
  C.row_idx.assign(static_cast<std::size_t>(S.nnz()), 0);
  C.values.assign(static_cast<std::size_t>(S.nnz()), 0.0);
  std::vector<Index> next(C.col_ptr.begin(), C.col_ptr.end() - 1);
  for (Index j = 0; j < S.dim; ++j) {
    for (Index p = S.col_ptr[j]; p < S.col_ptr[j + 1]; ++p) {
      Index a = pinv[S.row_idx[p]];
      Index b = pinv[j];
      Index col = std::min(a, b);
      Index q = next[col]++;
      C.row_idx[q] = std::max(a, b);
      C.values[q] = S.values[p];
    }
  }
  // Sort every column by row; the diagonal (row == col) then comes first.
  std::vector<std::pair<Index, double>> buf;
  for (Index j = 0; j < C.dim; ++j) {
    buf.clear();
    for (Index p = C.col_ptr[j]; p < C.col_ptr[j + 1]; ++p) buf.emplace_back(C.row_idx[p], C.values[p]);
    std::sort(buf.begin(), buf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < buf.size(); ++k) {
      C.row_idx[C.col_ptr[j] + static_cast<Index>(k)] = buf[k].first;
      C.values[C.col_ptr[j] + static_cast<Index>(k)] = buf[k].second;
    }
  }
  return C;
}

}  // namespace psipm

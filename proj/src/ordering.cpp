#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <vector>

#include "psipm/sparse.hpp"

namespace psipm {

Permutation analyze_order(const SparseSymmetric& S) {
  using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(S.nnz()));
  for (Index j = 0; j < S.dim; ++j) {
    for (Index p = S.col_ptr[j]; p < S.col_ptr[j + 1]; ++p) {
      triplets.emplace_back(static_cast<int>(S.row_idx[p]), static_cast<int>(j), 1.0);
    }
  }
  SpMat lower(static_cast<int>(S.dim), static_cast<int>(S.dim));
  lower.setFromTriplets(triplets.begin(), triplets.end());

  // AMDOrdering symmetrizes the pattern itself; indices()[new] = old.
  Eigen::AMDOrdering<int> amd;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
  amd(lower, perm);

  Permutation out(static_cast<std::size_t>(S.dim));
  for (Index k = 0; k < S.dim; ++k) out[k] = perm.indices()[k];
  return out;
}

}  // namespace psipm

#include <algorithm>
#include <cmath>
#include <random>

#include "psipm/sparse.hpp"

namespace psipm {

Index default_pcg_max_iterations(Index m) {
  auto cap = static_cast<Index>(std::ceil(10.0 * std::sqrt(static_cast<double>(m))));
  return std::max<Index>(1, std::min(m, cap));
}

CgResult pcg(const LinearOperator& op, std::span<const double> b,
             const CholeskyFactor* preconditioner, double tol, Index max_iterations,
             Index refresh) {
  if (!(tol > 0.0)) throw ValidationError("pcg tolerance must be positive");
  const auto n = static_cast<std::size_t>(b.size());
  CgResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (!std::isfinite(bnorm)) throw NumericalError("pcg: right-hand side is not finite");
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }

  Vector r(b.begin(), b.end());
  Vector z(n), p(n), q(n);
  auto precondition = [&](const Vector& in, Vector& res) {
    if (preconditioner) {
      preconditioner->solve(in, res);
    } else {
      std::copy(in.begin(), in.end(), res.begin());
    }
  };
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;

  for (Index it = 1; it <= max_iterations; ++it) {
    op(p, q);
    const double pq = dot(p, q);
    if (!std::isfinite(pq)) throw NumericalError("pcg: NaN encountered");
    if (!(pq > 0.0)) throw NumericalError("pcg: operator is not positive definite");
    const double a = rz / pq;
    axpy(a, p, out.x);
    const bool refresh_now = refresh > 0 && it % refresh == 0;
    if (refresh_now) {
      op(out.x, q);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    } else {
      axpy(-a, q, r);
    }
    rel = norm2(r) / bnorm;
    if (!std::isfinite(rel)) throw NumericalError("pcg: NaN encountered");
    out.iterations = it;
    if (rel <= tol) {
      // Confirm on the true residual before declaring convergence.
      op(out.x, q);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
      rel = norm2(r) / bnorm;
      if (rel <= tol) {
        out.relative_residual = rel;
        out.converged = true;
        return out;
      }
    }
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  op(out.x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  out.relative_residual = norm2(r) / bnorm;
  out.converged = out.relative_residual <= tol;
  return out;
}

double power_iteration_norm(const LinearOperator& op, Index dim, Index max_iterations,
                            double rel_tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector v(static_cast<std::size_t>(dim)), w(static_cast<std::size_t>(dim));
  for (double& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  double nv = norm2(v);
  if (nv == 0.0) return 0.0;
  for (double& x : v) x /= nv;
  double lambda = 0.0;
  for (Index it = 0; it < max_iterations; ++it) {
    op(v, w);
    const double rq = dot(v, w);  // Rayleigh quotient of a unit vector
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    const bool done = it > 0 && std::abs(rq - lambda) <= rel_tol * std::abs(rq);
    lambda = std::max(lambda, rq);
    if (done) break;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
  }
  return lambda;
}

}  // namespace psipm

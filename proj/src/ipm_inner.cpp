#include "psipm/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <string>

namespace psipm {

void RegParams::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("rho must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("delta must be positive");
}

void NeighborhoodParams::validate() const {
  if (!(gamma_hi > 1.0)) throw ValidationError("neighbourhood needs gamma_hi > 1");
  if (!(gamma_lo > 0.0 && gamma_lo < 1.0)) throw ValidationError("neighbourhood needs 0 < gamma_lo < 1");
  if (!(gamma_p > 0.0) || !(gamma_d > 0.0)) throw ValidationError("gamma_p and gamma_d must be positive");
  if (!(sigma > 0.0 && sigma < sigma_bar && sigma_bar < 1.0)) {
    throw ValidationError("need 0 < sigma < sigma_bar < 1");
  }
  if (!(c_inexact > 0.0 && c_inexact < 1.0)) throw ValidationError("c_inexact must lie in (0, 1)");
  if (!(gamma_p * c_inexact < sigma)) throw ValidationError("need gamma_p * c_inexact < sigma");
}

namespace {

// rho (x - x_k) - A^T y - s + c
Vector dual_map(const IpmIterate& it, const Anchor& anchor, const Problem& prob, const RegParams& reg) {
  const Graph& g = prob.graph();
  Vector r = incidence_rmatvec(g, it.y);
  const auto c = g.cost();
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = reg.rho * (it.x[i] - anchor.x[i]) - r[i] - it.s[i] + c[i];
  }
  return r;
}

// A x + delta (y - y_k) - b
Vector primal_map(const IpmIterate& it, const Anchor& anchor, const Problem& prob, const RegParams& reg) {
  Vector r = incidence_matvec(prob.graph(), it.x);
  const auto b = prob.b();
  for (std::size_t v = 0; v < r.size(); ++v) r[v] += reg.delta * (it.y[v] - anchor.y[v]) - b[v];
  return r;
}

void check_shapes(const IpmIterate& it, const Anchor& anchor, const Problem& prob) {
  const Index n = prob.edge_count();
  const Index m = prob.node_count();
  require_size(it.x, n, "iterate x");
  require_size(it.s, n, "iterate s");
  require_size(it.y, m, "iterate y");
  require_size(anchor.x, n, "anchor x");
  require_size(anchor.y, m, "anchor y");
}

constexpr double kCalibrationCap = 1e4;

}  // namespace

NeighborhoodParams calibrate_neighborhood(const IpmIterate& it, const Anchor& anchor,
                                          const Problem& prob, const RegParams& reg,
                                          NeighborhoodParams base) {
  const double xs = dot(it.x, it.s);
  auto pick = [&](double infeas) {
    if (infeas == 0.0) return kCalibrationCap;
    return std::min(kCalibrationCap, xs / (2.0 * infeas));
  };
  base.gamma_p = pick(primal_infeasibility(it, anchor, prob, reg));
  base.gamma_d = pick(dual_infeasibility(it, anchor, prob, reg));
  base.c_inexact = std::min(0.5, base.sigma / (2.0 * base.gamma_p));
  return base;
}

Residuals residuals(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                    const RegParams& reg, double sigma) {
  check_shapes(it, anchor, prob);
  Residuals r;
  r.xi_d = dual_map(it, anchor, prob, reg);
  for (double& v : r.xi_d) v = -v;
  r.xi_p = primal_map(it, anchor, prob, reg);
  for (double& v : r.xi_p) v = -v;
  const double target = sigma * it.mu();
  r.xi_mu.resize(it.x.size());
  for (std::size_t i = 0; i < it.x.size(); ++i) r.xi_mu[i] = target - it.x[i] * it.s[i];
  return r;
}

EdgeWeights normal_weights(const IpmIterate& it, const RegParams& reg) {
  Vector w(it.x.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = it.x[i] / (it.s[i] + reg.rho * it.x[i]);
  return EdgeWeights(std::move(w));
}

Vector assemble_normal_rhs(const Residuals& res, const IpmIterate& it, const Graph& g,
                           const RegParams& reg) {
  Vector t(it.x.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = it.x[i] / (it.s[i] + reg.rho * it.x[i]);
    t[i] = d * (res.xi_mu[i] / it.x[i] + res.xi_d[i]);
  }
  Vector out = incidence_matvec(g, t);
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = res.xi_p[v] - out[v];
  return out;
}

void prepare_solver(NormalSolver& solver, const IpmIterate& it, const RegParams& reg) {
  solver.update(normal_weights(it, reg), it.mu(), reg.rho);
}

Direction newton_step(const IpmIterate& it, const Residuals& res, const Problem& prob,
                      const RegParams& reg, NormalSolver& solver, double zeta_budget,
                      double pcg_tol) {
  const Graph& g = prob.graph();
  Vector rhs = assemble_normal_rhs(res, it, g, reg);
  // 1^T A = 0, so 1^T rhs = 1^T xi_p; summing xi_p directly keeps the mean of
  // dy (which is divided by delta) free of the rounding in A D (...).
  long double xi_p_sum = 0.0L;
  for (double v : res.xi_p) xi_p_sum += v;
  const double dy_mean = static_cast<double>(
      xi_p_sum / (static_cast<long double>(res.xi_p.size()) * static_cast<long double>(reg.delta)));
  auto solved = solver.solve_with_accounting(rhs, zeta_budget, pcg_tol, dy_mean);

  Direction d;
  d.dy = std::move(solved.dy);
  d.stats = solved.stats;
  d.zeta_bound_ok = solved.stats.within_budget;
  d.dx = incidence_rmatvec(g, d.dy);
  d.ds.resize(it.x.size());
  for (std::size_t i = 0; i < d.dx.size(); ++i) {
    const double x = it.x[i];
    const double dw = x / (it.s[i] + reg.rho * x);
    d.dx[i] = dw * (d.dx[i] + res.xi_d[i] + res.xi_mu[i] / x);
    d.ds[i] = (res.xi_mu[i] - it.s[i] * d.dx[i]) / x;
  }
  return d;
}

double max_step(std::span<const double> v, std::span<const double> dv) {
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  }
  return a;
}

double boundary_step(const IpmIterate& it, const Direction& d) {
  return std::min(max_step(it.x, d.dx), max_step(it.s, d.ds));
}

double primal_infeasibility(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                            const RegParams& reg) {
  check_shapes(it, anchor, prob);
  return norm2(primal_map(it, anchor, prob, reg));
}

double dual_infeasibility(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                          const RegParams& reg) {
  check_shapes(it, anchor, prob);
  return norm2(dual_map(it, anchor, prob, reg));
}

bool neighborhood_check(const IpmIterate& it, const Anchor& anchor, const Problem& prob,
                        const RegParams& reg, const NeighborhoodParams& nb) {
  const double xs = dot(it.x, it.s);
  const double mean = xs / static_cast<double>(it.x.size());
  for (std::size_t i = 0; i < it.x.size(); ++i) {
    const double p = it.x[i] * it.s[i];
    if (!(p <= nb.gamma_hi * mean) || !(p >= nb.gamma_lo * mean)) return false;
  }
  if (!(xs >= nb.gamma_p * primal_infeasibility(it, anchor, prob, reg))) return false;
  return xs >= nb.gamma_d * dual_infeasibility(it, anchor, prob, reg);
}

IpmIterate step_to(const IpmIterate& it, const Direction& d, double alpha) {
  IpmIterate out = it;
  axpy(alpha, d.dx, out.x);
  axpy(alpha, d.dy, out.y);
  axpy(alpha, d.ds, out.s);
  return out;
}

double step_search(const IpmIterate& it, const Direction& d, const Anchor& anchor,
                   const Problem& prob, const RegParams& reg, const NeighborhoodParams& nb) {
  constexpr int kMaxTrials = 60;
  constexpr double kMinStep = 1e-10;
  const double xs = dot(it.x, it.s);
  double alpha = std::min(1.0, 0.995 * boundary_step(it, d));
  for (int trial = 0; trial < kMaxTrials && alpha >= kMinStep; ++trial) {
    IpmIterate t = step_to(it, d, alpha);
    const bool positive = std::all_of(t.x.begin(), t.x.end(), [](double v) { return v > 0.0; }) &&
                          std::all_of(t.s.begin(), t.s.end(), [](double v) { return v > 0.0; });
    if (positive && dot(t.x, t.s) <= (1.0 - (1.0 - nb.sigma_bar) * alpha) * xs &&
        neighborhood_check(t, anchor, prob, reg, nb)) {
      return alpha;
    }
    alpha *= 0.9;
  }
  throw StallError("step search found no admissible step (last trial alpha " +
                   std::to_string(alpha) + ", mu " + std::to_string(it.mu()) + ")");
}

PredictorCorrector predictor_corrector_step(const IpmIterate& it, const Anchor& anchor,
                                            const Problem& prob, const RegParams& reg,
                                            NormalSolver& solver, double zeta_budget,
                                            double pcg_tol) {
  PredictorCorrector pc;
  const double mu = it.mu();
  Residuals res = residuals(it, anchor, prob, reg, 0.0);
  Direction aff = newton_step(it, res, prob, reg, solver, zeta_budget, pcg_tol);
  pc.pcg_iterations = aff.stats.pcg_iterations;

  pc.alpha_affine = std::min(1.0, boundary_step(it, aff));
  double xs_aff = 0.0;
  for (std::size_t i = 0; i < it.x.size(); ++i) {
    xs_aff += (it.x[i] + pc.alpha_affine * aff.dx[i]) * (it.s[i] + pc.alpha_affine * aff.ds[i]);
  }
  pc.mu_affine = std::max(0.0, xs_aff / static_cast<double>(it.x.size()));
  pc.sigma_used = mu > 0.0 ? std::clamp(std::pow(pc.mu_affine / mu, 3.0), 0.0, 1.0) : 0.0;

  const double target = pc.sigma_used * mu;
  for (std::size_t i = 0; i < res.xi_mu.size(); ++i) {
    res.xi_mu[i] = target - it.x[i] * it.s[i] - aff.dx[i] * aff.ds[i];
  }
  pc.direction = newton_step(it, res, prob, reg, solver, zeta_budget, pcg_tol);
  pc.pcg_iterations += pc.direction.stats.pcg_iterations;
  pc.direction.stats.pcg_iterations = pc.pcg_iterations;
  pc.corrector_res = std::move(res);
  return pc;
}

std::string_view to_string(IpmMode m) { return m == IpmMode::theory ? "theory" : "practical"; }

IpmMode parse_mode(std::string_view name) {
  if (name == "theory") return IpmMode::theory;
  if (name == "practical") return IpmMode::practical;
  throw ValidationError("unknown mode '" + std::string(name) + "' (expected theory or practical)");
}

namespace {

// Does the point reached at the boundary step solve the subproblem exactly
// (up to round-off)? Negative round-off is clamped first.
bool boundary_point_solves(const IpmIterate& it, const Direction& d, double alpha_star,
                           const Anchor& anchor, const Problem& prob, const RegParams& reg) {
  if (!std::isfinite(alpha_star)) return false;
  IpmIterate p = step_to(it, d, alpha_star);
  for (double& v : p.x) v = std::max(v, 0.0);
  for (double& v : p.s) v = std::max(v, 0.0);
  const auto c = prob.graph().cost();
  const double scale = 1.0 + norm_inf(prob.b()) + norm_inf(c);
  constexpr double kTol = 1e-13;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (p.x[i] * p.s[i] > kTol * scale) return false;
  }
  return norm_inf(primal_map(p, anchor, prob, reg)) <= kTol * scale &&
         norm_inf(dual_map(p, anchor, prob, reg)) <= kTol * scale;
}

}  // namespace

InnerResult inner_solve(const Anchor& anchor, const Problem& prob, const RegParams& reg,
                        const NeighborhoodParams& nb_in, IpmIterate start, NormalSolver& solver,
                        const InnerStop& stop, const IpmOptions& opts,
                        const StepObserver& observer) {
  reg.validate();
  check_shapes(start, anchor, prob);
  for (std::size_t i = 0; i < start.x.size(); ++i) {
    if (!(start.x[i] > 0.0) || !(start.s[i] > 0.0)) {
      throw ValidationError("inner_solve needs a strictly positive starting point");
    }
  }
  InnerResult out;
  out.report.nb = opts.calibrate ? calibrate_neighborhood(start, anchor, prob, reg, nb_in) : nb_in;
  const NeighborhoodParams& nb = out.report.nb;
  nb.validate();
  if (opts.mode == IpmMode::theory && !neighborhood_check(start, anchor, prob, reg, nb)) {
    throw ValidationError("theory mode: starting point lies outside the neighbourhood");
  }

  solver.set_escalation(opts.mode == IpmMode::theory || opts.practical_escalation);
  IpmIterate it = std::move(start);
  for (Index j = 0;; ++j) {
    const StopVerdict verdict = stop(it);
    if (verdict != StopVerdict::proceed) {
      out.report.exit = verdict == StopVerdict::converged ? InnerExit::converged : InnerExit::stop_callback;
      break;
    }
    if (j >= opts.max_iterations) {
      throw ConvergenceError("inner IPM hit its cap of " + std::to_string(opts.max_iterations) +
                             " iterations (mu " + std::to_string(it.mu()) + ")");
    }

    prepare_solver(solver, it, reg);
    const double mu = it.mu();
    const double budget = nb.c_inexact * dot(it.x, it.s);
    IterationRecord rec;
    rec.outer = anchor.k;
    rec.iteration = j;
    rec.mu = mu;
    rec.primal_infeasibility = primal_infeasibility(it, anchor, prob, reg);
    rec.dual_infeasibility = dual_infeasibility(it, anchor, prob, reg);

    Direction d;
    Residuals res;
    double alpha = 0.0;
    // Relative PCG tolerance 0.1 mu, capped for badly scaled data where mu
    // starts far above 1.
    const double pcg_tol = std::min(0.1 * mu, 0.1);
    if (opts.mode == IpmMode::theory) {
      res = residuals(it, anchor, prob, reg, nb.sigma);
      const double rhs_norm = norm2(assemble_normal_rhs(res, it, prob.graph(), reg));
      double tol = pcg_tol;
      if (rhs_norm > 0.0) tol = std::min(tol, 0.5 * budget / rhs_norm);
      d = newton_step(it, res, prob, reg, solver, budget, tol);
      rec.sigma = nb.sigma;
    } else {
      PredictorCorrector pc = predictor_corrector_step(it, anchor, prob, reg, solver, budget, pcg_tol);
      d = std::move(pc.direction);
      res = std::move(pc.corrector_res);
      rec.sigma = pc.sigma_used;
    }

    const double alpha_star = boundary_step(it, d);
    if (boundary_point_solves(it, d, alpha_star, anchor, prob, reg)) {
      it = step_to(it, d, alpha_star);
      for (double& v : it.x) v = std::max(v, 0.0);
      for (double& v : it.s) v = std::max(v, 0.0);
      out.report.exit = InnerExit::boundary_solution;
      ++out.report.iterations;
      break;
    }
    if (opts.mode == IpmMode::theory) {
      alpha = step_search(it, d, anchor, prob, reg, nb);
    } else {
      alpha = std::min(1.0, 0.995 * alpha_star);
      if (!(alpha >= 1e-10)) {
        throw StallError("predictor-corrector step collapsed (alpha " + std::to_string(alpha) +
                         ", mu " + std::to_string(mu) + ")");
      }
    }

    IpmIterate next = step_to(it, d, alpha);
    rec.alpha = alpha;
    rec.mu_next = next.mu();
    rec.pcg_iterations = d.stats.pcg_iterations;
    rec.zeta_norm = d.stats.zeta_norm;
    rec.zeta_budget = budget;
    rec.zeta_ratio = d.stats.zeta_norm / dot(it.x, it.s);
    rec.zeta_bound_ok = d.zeta_bound_ok;
    rec.backend_used = d.stats.used;
    rec.escalations = d.stats.escalations;
    out.report.trace.push_back(rec);
    ++out.report.iterations;
    if (observer) observer(StepSnapshot{it, next, res, d, alpha, anchor, nb, solver});
    it = std::move(next);
  }
  out.iterate = std::move(it);
  return out;
}

}  // namespace psipm

#include "psipm/ppm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace psipm {

void PpmParams::validate() const {
  if (!(sigma_r > 0.0 && sigma_r < 1.0)) throw ValidationError("sigma_r must lie in (0, 1)");
  if (!(tau_1 > 0.0)) throw ValidationError("tau_1 must be positive");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (max_outer < 1) throw ValidationError("max_outer must be at least 1");
}

double natural_residual(std::span<const double> x, std::span<const double> y, const Anchor& anchor,
                        const Problem& prob, const RegParams& reg) {
  const Graph& g = prob.graph();
  require_size(x, g.edge_count(), "natural_residual x");
  require_size(y, g.node_count(), "natural_residual y");
  const auto c = g.cost();
  const auto b = prob.b();
  Vector aty = incidence_rmatvec(g, y);
  Vector ax = incidence_matvec(g, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double grad = reg.rho * (x[i] - anchor.x[i]) + c[i] - aty[i];
    const double r = x[i] - std::max(0.0, x[i] - grad);
    sum += r * r;
  }
  for (std::size_t v = 0; v < y.size(); ++v) {
    const double r = ax[v] - b[v] + reg.delta * (y[v] - anchor.y[v]);
    sum += r * r;
  }
  return std::sqrt(sum);
}

bool ppm_stop_test(double res_nat, double step_norm, Index k, const PpmParams& p) {
  const double threshold =
      std::pow(p.sigma_r, static_cast<double>(k)) / p.effective_tau() * std::min(1.0, step_norm);
  return res_nat < threshold;
}

double stop_scale(const Problem& prob) {
  const Graph& g = prob.graph();
  return std::max({static_cast<double>(g.max_degree()), norm1(prob.b()), norm1(g.cost())});
}

StopMeasures stop_measures(std::span<const double> x, std::span<const double> y,
                           std::span<const double> s, const Problem& prob) {
  const Graph& g = prob.graph();
  require_size(x, g.edge_count(), "stop_measures x");
  require_size(s, g.edge_count(), "stop_measures s");
  require_size(y, g.node_count(), "stop_measures y");
  StopMeasures m;
  m.scale = stop_scale(prob);
  const auto c = g.cost();
  Vector aty = incidence_rmatvec(g, y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.dual = std::max(m.dual, std::abs(c[i] - aty[i] - s[i]));
    m.complementarity =
        std::max(m.complementarity, std::min({std::abs(x[i] * s[i]), std::abs(x[i]), std::abs(s[i])}));
  }
  Vector ax = incidence_matvec(g, x);
  const auto b = prob.b();
  for (std::size_t v = 0; v < ax.size(); ++v) m.primal += std::abs(b[v] - ax[v]);
  return m;
}

bool global_stop_test(std::span<const double> x, std::span<const double> y,
                      std::span<const double> s, const Problem& prob, double tol) {
  return stop_measures(x, y, s, prob).satisfied(tol);
}

namespace {

double step_distance(const IpmIterate& it, const Anchor& anchor) {
  double sum = 0.0;
  for (std::size_t i = 0; i < it.x.size(); ++i) sum += (it.x[i] - anchor.x[i]) * (it.x[i] - anchor.x[i]);
  for (std::size_t v = 0; v < it.y.size(); ++v) sum += (it.y[v] - anchor.y[v]) * (it.y[v] - anchor.y[v]);
  return std::sqrt(sum);
}

}  // namespace

SolveResult ps_ipm_solve(const Problem& prob, const RegParams& reg, const PpmParams& ppm,
                         const SolveOptions& opts) {
  reg.validate();
  ppm.validate();
  const auto b = prob.b();
  double balance = 0.0;
  for (double v : b) balance += v;
  if (std::abs(balance) > 1e-12 * std::max(1.0, norm1(b))) {
    throw InfeasibleError("load vector does not sum to zero");
  }

  const Graph& g = prob.graph();
  const auto n = static_cast<std::size_t>(g.edge_count());
  const auto m = static_cast<std::size_t>(g.node_count());
  const auto t0 = std::chrono::steady_clock::now();

  SolveResult out;
  SolveReport& rep = out.report;
  rep.backend = opts.solver.backend;
  rep.mode = opts.ipm.mode;

  Anchor anchor{Vector(n, 1.0), Vector(m, 0.0), 0};
  const double start_value = std::max(1.0, norm1(b) / static_cast<double>(n));
  // With y = 0 this start has no dual residual on edges with c_e >= x0.
  IpmIterate it{Vector(n, start_value), anchor.y, Vector(n, start_value)};
  for (std::size_t e = 0; e < n; ++e) it.s[e] = std::max(start_value, g.cost()[e]);
  NormalSolver solver(g, reg.delta, opts.solver);

  for (Index k = 0; k < ppm.max_outer; ++k) {
    anchor.k = k;
    OuterRecord rec;
    rec.k = k;
    InnerStop stop = [&](const IpmIterate& cur) {
      if (global_stop_test(cur.x, cur.y, cur.s, prob, ppm.tol)) return StopVerdict::converged;
      rec.natural_residual = natural_residual(cur.x, cur.y, anchor, prob, reg);
      rec.step_norm = step_distance(cur, anchor);
      return ppm_stop_test(rec.natural_residual, rec.step_norm, k, ppm) ? StopVerdict::subproblem_solved
                                                                        : StopVerdict::proceed;
    };
    InnerResult inner;
    try {
      inner = inner_solve(anchor, prob, reg, opts.nb, it, solver, stop, opts.ipm, opts.observer);
    } catch (const Error& e) {
      if (opts.throw_on_failure) throw;
      rep.failure = e.what();
      break;
    }
    rec.inner_iterations = inner.report.iterations;
    rec.exit = inner.report.exit;
    rep.outer.push_back(rec);
    rep.ipm_iterations += inner.report.iterations;
    for (const IterationRecord& r : inner.report.trace) {
      rep.pcg_iterations += r.pcg_iterations;
      rep.zeta_ratio_max = std::max(rep.zeta_ratio_max, r.zeta_ratio);
      rep.escalations += r.escalations;
      if (!r.zeta_bound_ok) ++rep.budget_misses;
      rep.trace.push_back(r);
    }
    it = std::move(inner.iterate);
    rep.outer_iterations = k + 1;

    bool done = inner.report.exit == InnerExit::converged;
    if (inner.report.exit == InnerExit::boundary_solution) {
      done = global_stop_test(it.x, it.y, it.s, prob, ppm.tol);
    }
    if (done) {
      rep.converged = true;
      break;
    }
    anchor.x = it.x;
    anchor.y = it.y;
    // A boundary exit can leave exact zeros; the next inner solve needs a
    // strictly positive start.
    for (double& v : it.x) v = std::max(v, 1e-14);
    for (double& v : it.s) v = std::max(v, 1e-14);
  }

  rep.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!rep.converged && rep.failure.empty()) {
    rep.failure = "proximal point loop hit its cap of " + std::to_string(ppm.max_outer) + " outer iterations";
    if (opts.throw_on_failure) throw ConvergenceError(rep.failure);
  }
  rep.objective = prob.objective(it.x);
  rep.final_measures = stop_measures(it.x, it.y, it.s, prob);
  out.x = std::move(it.x);
  out.y = std::move(it.y);
  out.s = std::move(it.s);
  return out;
}

}  // namespace psipm

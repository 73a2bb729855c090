// psipm: generate, solve, verify and benchmark optimal transport instances.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "psipm/bench.hpp"
#include "psipm/io.hpp"
#include "psipm/oracle.hpp"
#include "psipm/ppm.hpp"

namespace {

using namespace psipm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitVerifyFailed = 3;

struct SolverFlags {
  double rho = 1e-4;
  double delta = 1e-6;
  double ct = 0.4;
  double tol = 1e-10;
  double droptol = 1e-3;
  double sigma_r = 0.7;
  double tau1 = 1e-4;
  bool strict = false;
  Index max_outer = 200;
  Index max_inner = 500;
  std::string backend = "auto";
  std::string mode = "practical";
  bool no_sparsify = false;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f, const std::string& default_backend) {
  f.backend = default_backend;
  cmd->add_option("--rho", f.rho, "Primal proximal regularization")->default_str("1e-4");
  cmd->add_option("--delta", f.delta, "Dual proximal regularization")->default_str("1e-6");
  cmd->add_option("--ct", f.ct, "Sparsification constant C_t")->default_str("0.4");
  cmd->add_option("--tol", f.tol, "Global stopping tolerance")->default_str("1e-10");
  cmd->add_option("--ichol-droptol", f.droptol, "Incomplete Cholesky drop tolerance")->default_str("1e-3");
  cmd->add_option("--sigma-r", f.sigma_r, "Decay of the proximal inexactness threshold")->default_str("0.7");
  cmd->add_option("--tau1", f.tau1, "Relaxation of the proximal inexactness threshold")->default_str("1e-4");
  cmd->add_flag("--strict-ppm", f.strict, "Use the unrelaxed proximal inexactness test (tau1 = 1)");
  cmd->add_option("--max-outer", f.max_outer, "Outer iteration cap")->default_str("200");
  cmd->add_option("--max-inner", f.max_inner, "Inner iteration cap per subproblem")->default_str("500");
  cmd->add_option("--backend", f.backend, "auto | full | sparse-chol | sparse-pcg")->default_str(default_backend);
  cmd->add_option("--mode", f.mode, "practical | theory")->default_str("practical");
  cmd->add_flag("--no-sparsify", f.no_sparsify, "Keep every edge in the normal matrix");
}

struct Configured {
  RegParams reg;
  PpmParams ppm;
  SolveOptions opts;
};

Configured configure(const SolverFlags& f, Index edge_count) {
  Configured c;
  c.reg = {f.rho, f.delta};
  c.ppm.sigma_r = f.sigma_r;
  c.ppm.tau_1 = f.tau1;
  c.ppm.strict = f.strict;
  c.ppm.tol = f.tol;
  c.ppm.max_outer = f.max_outer;
  c.opts.ipm.mode = parse_mode(f.mode);
  c.opts.ipm.max_iterations = f.max_inner;
  c.opts.solver.backend = f.backend == "auto" ? auto_backend(edge_count) : parse_backend(f.backend);
  c.opts.solver.sparsify.c_t = f.ct;
  c.opts.solver.sparsify.enabled = !f.no_sparsify;
  c.opts.solver.ichol_droptol = f.droptol;
  c.opts.throw_on_failure = false;
  return c;
}

struct InstanceFlags {
  std::string path;
  bool mtx = false;
  bool largest_component = false;
  std::uint64_t load_seed = 1;
  double load_fraction = 0.1;
};

void add_instance_flags(CLI::App* cmd, InstanceFlags& f) {
  cmd->add_option("instance", f.path, "DIMACS min-cost-flow file (or matrix-market with --mtx)")->required();
  cmd->add_flag("--mtx", f.mtx, "Read a symmetric matrix-market graph and generate a load for it");
  cmd->add_flag("--largest-component", f.largest_component, "Keep only the largest component (--mtx)");
  cmd->add_option("--load-seed", f.load_seed, "Load seed for --mtx instances")->default_str("1");
  cmd->add_option("--load-fraction", f.load_fraction, "Nonzero fraction of the load (--mtx)")->default_str("0.1");
}

Problem load_instance(const InstanceFlags& f) {
  if (!f.mtx) {
    ReadWarnings warnings;
    Problem p = read_dimacs_mcf(f.path, &warnings);
    for (const auto& w : warnings.messages) std::cerr << "warning: " << w << '\n';
    return p;
  }
  MatrixMarketGraph mm = read_matrix_market_edges(f.path, f.largest_component);
  if (mm.self_loops_dropped > 0) std::cerr << "warning: dropped " << mm.self_loops_dropped << " diagonal entries\n";
  Graph g = bidirect(mm.graph);
  LoadSpec ls;
  ls.seed = f.load_seed;
  ls.nonzero_fraction = f.load_fraction;
  ExactSupply b = generate_load(g.node_count(), ls);
  return Problem(std::move(g), std::move(b));
}

void dump_trace(const SolveReport& rep, std::ostream& out) {
  out << "# outer,iter,mu,mu_next,primal_inf,dual_inf,alpha,sigma,pcg_iters,zeta_ratio,backend\n";
  char buf[256];
  for (const IterationRecord& r : rep.trace) {
    std::snprintf(buf, sizeof buf, "# %lld,%lld,%.3e,%.3e,%.3e,%.3e,%.4f,%.3e,%lld,%.3e,%s\n",
                  static_cast<long long>(r.outer), static_cast<long long>(r.iteration), r.mu, r.mu_next, r.primal_infeasibility,
                  r.dual_infeasibility, r.alpha, r.sigma, static_cast<long long>(r.pcg_iterations), r.zeta_ratio,
                  std::string(to_string(r.backend_used)).c_str());
    out << buf;
  }
}

int cmd_generate(Index nodes, std::uint64_t seed, const std::string& family, Index dmin, Index dmax, double avg,
                 double density, double load_fraction, std::uint64_t load_seed, bool load_seed_set,
                 const std::string& output) {
  GeneratorSpec gs;
  gs.node_count = nodes;
  gs.seed = seed;
  gs.family = parse_family(family);
  gs.degree_min = dmin;
  gs.degree_max = dmax;
  gs.degree_avg_target = density > 0.0 ? 2.0 * density : avg;
  if (gs.family != GraphFamily::uniform) gs.degree_max = std::max<Index>(dmax, std::llround(std::ceil(gs.degree_avg_target)));
  LoadSpec ls;
  ls.nonzero_fraction = load_fraction;
  ls.seed = load_seed_set ? load_seed : seed;
  Problem p = make_instance(gs, ls);
  write_dimacs_mcf(p, output);
  std::cout << "wrote " << output << ": " << p.node_count() << " nodes, " << p.edge_count() << " arcs, seed "
            << seed << ", load seed " << ls.seed << '\n';
  return kExitOk;
}

int cmd_solve(const InstanceFlags& inst, const SolverFlags& sf, const std::string& solution_path,
              const std::string& csv_path, bool trace) {
  Problem prob = load_instance(inst);
  Configured c = configure(sf, prob.edge_count());
  SolveResult res = ps_ipm_solve(prob, c.reg, c.ppm, c.opts);
  const SolveReport& rep = res.report;

  BenchRecord rec;
  rec.instance = inst.path;
  rec.m = prob.node_count();
  rec.n = prob.edge_count();
  rec.backend = std::string(to_string(rep.backend));
  rec.mode = std::string(to_string(rep.mode));
  rec.outer_iters = rep.outer_iterations;
  rec.ipm_iters = rep.ipm_iterations;
  rec.pcg_iters = rep.pcg_iterations;
  rec.time_s = rep.time_s;
  rec.objective = rep.objective;
  rec.zeta_ratio_max = rep.zeta_ratio_max;
  rec.converged = rep.converged;

  if (!csv_path.empty()) {
    const bool fresh = !std::ifstream(csv_path).good();
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw Error("cannot open '" + csv_path + "' for appending");
    if (fresh) csv << csv_header() << '\n';
    csv << csv_row(rec) << '\n';
  }
  std::cout << csv_header() << '\n' << csv_row(rec) << '\n';
  const StopMeasures& sm = rep.final_measures;
  std::printf("objective %.12g  normalized %.12g  dual %.2e  primal %.2e  complementarity %.2e  R %.3g\n",
              rep.objective, prob.mass() > 0 ? rep.objective / prob.mass() : 0.0, sm.dual, sm.primal,
              sm.complementarity, sm.scale);
  if (trace || !rep.converged) dump_trace(rep, std::cout);
  if (!rep.converged) {
    std::cerr << "error: did not converge: " << rep.failure << '\n';
    return kExitNoConvergence;
  }
  if (!solution_path.empty()) {
    write_solution(SolutionFile{prob.edge_count(), rep.objective, res.x, res.y}, solution_path);
  }
  return kExitOk;
}

int cmd_verify(const InstanceFlags& inst, const std::string& solution_path, double threshold, Index oracle_cap) {
  Problem prob = load_instance(inst);
  SolutionFile sol = read_solution(solution_path, prob.node_count());
  if (sol.edge_count != prob.edge_count()) {
    std::cerr << "error: solution has " << sol.edge_count << " edges, instance has " << prob.edge_count() << '\n';
    return kExitVerifyFailed;
  }
  const double objective = prob.objective(sol.flow);
  const ApproxCertificate cert = certify_approximate(prob, sol.flow, sol.potential);
  const double feas_scale = std::max(1.0, norm1(prob.b()));
  const bool feasible = cert.primal_residual <= threshold * feas_scale && cert.negativity <= threshold * feas_scale;

  double gap = 0.0;
  if (prob.edge_count() <= oracle_cap) {
    const double exact = solve_mcf_exact(prob).objective;
    gap = exact == 0.0 ? std::abs(objective) : std::abs(objective - exact) / std::abs(exact);
    std::printf("objective %.15g  oracle %.15g  relative gap %.3e\n", objective, exact, gap);
  } else {
    gap = cert.gap;
    std::printf("objective %.15g  certificate duality gap %.3e (oracle skipped above %lld edges)\n", objective, gap,
                static_cast<long long>(oracle_cap));
  }
  std::printf("primal residual %.3e  negativity %.3e\n", cert.primal_residual, cert.negativity);
  if (!feasible || !(gap <= threshold)) {
    std::cerr << "verification failed\n";
    return kExitVerifyFailed;
  }
  std::cout << "verified\n";
  return kExitOk;
}

std::vector<Index> parse_sizes(const std::string& text) {
  std::vector<Index> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = std::stod(item);
    if (!(v >= 2) || v != std::floor(v)) throw ValidationError("bad size '" + item + "'");
    sizes.push_back(static_cast<Index>(v));
  }
  if (sizes.empty()) throw ValidationError("empty size grid");
  return sizes;
}

int cmd_bench(const std::string& sizes, Index reps, std::uint64_t seed, const std::string& family, double avg,
              const SolverFlags& sf, const std::string& csv_path, Index oracle_cap, unsigned workers_flag) {
  BenchConfig cfg;
  cfg.sizes = parse_sizes(sizes);
  cfg.repetitions = reps;
  cfg.seed = seed;
  cfg.graph.family = parse_family(family);
  cfg.graph.degree_avg_target = avg;
  Configured c = configure(sf, 0);
  if (sf.backend == "auto") c.opts.solver.backend = Backend::sparsified_pcg;
  cfg.reg = c.reg;
  cfg.ppm = c.ppm;
  cfg.solve = c.opts;
  cfg.oracle_edge_cap = oracle_cap;
  cfg.workers = workers_flag > 0 ? workers_flag : bench_workers_from_env();

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!csv_path.empty()) {
    file.open(csv_path);
    if (!file) throw Error("cannot open '" + csv_path + "' for writing");
    out = &file;
  }
  auto records = run_bench(cfg, [](const BenchRecord& r) {
    std::cerr << "done " << r.instance << " in " << r.time_s << " s\n";
  });
  *out << csv_header() << '\n';
  for (const auto& r : records) *out << csv_row(r) << '\n';
  write_bench_summary(std::cout, records);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal-stabilized interior point solver for optimal transport on graphs"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a random instance in DIMACS format");
  Index nodes = 1000;
  std::uint64_t seed = 1;
  std::string family = "uniform";
  Index dmin = 1, dmax = 10;
  double avg = 5.0, density = 0.0, load_fraction = 0.1;
  std::uint64_t load_seed = 0;
  std::string output;
  gen->add_option("--nodes", nodes, "Number of nodes")->default_str("1000");
  gen->add_option("--seed", seed, "Graph seed")->default_str("1");
  gen->add_option("--family", family, "uniform | erdrey | pref | smallw | kleinberg")->default_str("uniform");
  gen->add_option("--degree-min", dmin, "Minimum degree")->default_str("1");
  gen->add_option("--degree-max", dmax, "Maximum degree (uniform family)")->default_str("10");
  gen->add_option("--degree-avg", avg, "Target mean degree")->default_str("5");
  gen->add_option("--density", density, "Edges per node (sets the mean degree to twice this)");
  gen->add_option("--load-fraction", load_fraction, "Fraction of nodes with nonzero load")->default_str("0.1");
  auto* load_seed_opt = gen->add_option("--load-seed", load_seed, "Load seed (defaults to --seed)");
  gen->add_option("-o,--output", output, "Output DIMACS file")->required();

  auto* solve = app.add_subcommand("solve", "Solve an instance");
  InstanceFlags solve_inst;
  SolverFlags solve_flags;
  std::string solution_path, csv_path;
  bool trace = false;
  add_instance_flags(solve, solve_inst);
  add_solver_flags(solve, solve_flags, "auto");
  solve->add_option("--solution", solution_path, "Write flows and potentials here");
  solve->add_option("--csv", csv_path, "Append the result row to this CSV file");
  solve->add_flag("--trace", trace, "Print the per-iteration trace");

  auto* verify = app.add_subcommand("verify", "Check a solution against the exact oracle");
  InstanceFlags verify_inst;
  std::string verify_solution;
  double threshold = 1e-6;
  Index oracle_cap = 1000000;
  add_instance_flags(verify, verify_inst);
  verify->add_option("solution", verify_solution, "Solution file written by solve")->required();
  verify->add_option("--threshold", threshold, "Largest accepted relative objective gap")->default_str("1e-6");
  verify->add_option("--oracle-cap", oracle_cap, "Largest edge count handed to the exact oracle")
      ->default_str("1000000");

  auto* bench = app.add_subcommand("bench", "Time the solver over a grid of generated instances");
  std::string sizes = "1000,3000";
  Index reps = 1;
  std::uint64_t bench_seed = 1;
  std::string bench_family = "uniform";
  double bench_avg = 5.0;
  SolverFlags bench_flags;
  std::string bench_csv;
  Index bench_oracle_cap = 1000000;
  unsigned workers = 0;
  bench->add_option("--sizes", sizes, "Comma-separated node counts")->default_str("1000,3000");
  bench->add_option("--reps", reps, "Instances per size")->default_str("1");
  bench->add_option("--seed", bench_seed, "Base seed")->default_str("1");
  bench->add_option("--family", bench_family, "Graph family")->default_str("uniform");
  bench->add_option("--degree-avg", bench_avg, "Target mean degree")->default_str("5");
  add_solver_flags(bench, bench_flags, "sparse-pcg");
  bench->add_option("--csv", bench_csv, "Write the CSV here instead of stdout");
  bench->add_option("--oracle-cap", bench_oracle_cap, "Skip the oracle above this many edges")->default_str("1000000");
  bench->add_option("--workers", workers, "Worker threads (default: PSIPM_WORKERS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      return cmd_generate(nodes, seed, family, dmin, dmax, avg, density, load_fraction, load_seed,
                          load_seed_opt->count() > 0, output);
    }
    if (*solve) return cmd_solve(solve_inst, solve_flags, solution_path, csv_path, trace);
    if (*verify) return cmd_verify(verify_inst, verify_solution, threshold, oracle_cap);
    if (*bench) {
      return cmd_bench(sizes, reps, bench_seed, bench_family, bench_avg, bench_flags, bench_csv, bench_oracle_cap,
                       workers);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

#include "psipm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "psipm/oracle.hpp"

namespace psipm {

std::string_view csv_header() {
  return "instance,m,n,backend,mode,outer_iters,ipm_iters,pcg_iters,time_s,objective,oracle_objective,"
         "zeta_ratio_max";
}

std::string csv_row(const BenchRecord& r) {
  char buf[512];
  std::string oracle;
  if (r.oracle_objective) {
    char ob[40];
    std::snprintf(ob, sizeof ob, "%.15g", *r.oracle_objective);
    oracle = ob;
  }
  std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%s,%s,%lld,%lld,%lld,%.6f,%.15g,%s,%.6g", r.instance.c_str(),
                static_cast<long long>(r.m), static_cast<long long>(r.n), r.backend.c_str(), r.mode.c_str(),
                static_cast<long long>(r.outer_iters), static_cast<long long>(r.ipm_iters),
                static_cast<long long>(r.pcg_iters), r.time_s,
                r.converged ? r.objective : std::numeric_limits<double>::quiet_NaN(), oracle.c_str(),
                r.zeta_ratio_max);
  return buf;
}

SpreadStats spread(std::vector<double> values) {
  SpreadStats s;
  s.count = static_cast<Index>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

Regression loglog_regression(std::span<const double> edges, std::span<const double> times) {
  if (edges.size() != times.size()) throw DimensionError("regression inputs differ in length");
  Regression r;
  r.points = static_cast<Index>(edges.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.ci_low = r.ci_high = nan;
  if (r.points < 2) {
    r.slope = r.intercept = nan;
    return r;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    lx.push_back(std::log(edges[i]));
    ly.push_back(std::log(std::max(times[i], 1e-9)));
  }
  const double n = static_cast<double>(r.points);
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    r.slope = r.intercept = nan;
    return r;
  }
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  if (r.points >= 3) {
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double e = ly[i] - (r.intercept + r.slope * lx[i]);
      sse += e * e;
    }
    const double se = std::sqrt(sse / (n - 2.0) / sxx);
    boost::math::students_t dist(n - 2.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    r.ci_low = r.slope - t * se;
    r.ci_high = r.slope + t * se;
  }
  return r;
}

unsigned bench_workers_from_env() {
  const char* v = std::getenv("PSIPM_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ValidationError("PSIPM_WORKERS must be a positive integer");
  return static_cast<unsigned>(n);
}

namespace {

std::uint64_t run_seed(std::uint64_t base, Index size, Index rep) {
  // splitmix64 finalizer over the grid coordinates.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(size) * 1000003ULL +
                                                    static_cast<std::uint64_t>(rep) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

BenchRecord run_one(const BenchConfig& cfg, Index size, Index rep) {
  GeneratorSpec gs = cfg.graph;
  gs.node_count = size;
  gs.seed = run_seed(cfg.seed, size, rep);
  LoadSpec ls = cfg.load;
  ls.seed = gs.seed ^ 0x5A5A5A5A5A5A5A5AULL;
  Problem prob = make_instance(gs, ls);

  BenchRecord r;
  r.instance = std::string(to_string(gs.family)) + "-" + std::to_string(size) + "-r" + std::to_string(rep);
  r.m = prob.node_count();
  r.n = prob.edge_count();
  r.backend = std::string(to_string(cfg.solve.solver.backend));
  r.mode = std::string(to_string(cfg.solve.ipm.mode));

  SolveOptions opts = cfg.solve;
  opts.throw_on_failure = false;
  SolveResult res = ps_ipm_solve(prob, cfg.reg, cfg.ppm, opts);
  r.converged = res.report.converged;
  r.outer_iters = res.report.outer_iterations;
  r.ipm_iters = res.report.ipm_iterations;
  r.pcg_iters = res.report.pcg_iterations;
  r.time_s = res.report.time_s;
  r.objective = res.report.objective;
  r.zeta_ratio_max = res.report.zeta_ratio_max;
  if (r.n <= cfg.oracle_edge_cap) r.oracle_objective = solve_mcf_exact(prob).objective;
  return r;
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchConfig& cfg,
                                   const std::function<void(const BenchRecord&)>& progress) {
  if (cfg.repetitions < 1) throw ValidationError("bench needs at least one repetition");
  std::vector<std::pair<Index, Index>> jobs;
  for (Index size : cfg.sizes) {
    for (Index rep = 0; rep < cfg.repetitions; ++rep) jobs.emplace_back(size, rep);
  }
  std::vector<BenchRecord> records(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        records[i] = run_one(cfg, jobs[i].first, jobs[i].second);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        continue;
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(records[i]);
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw Error("bench run (size " + std::to_string(jobs[i].first) + ", rep " +
                  std::to_string(jobs[i].second) + ") failed: " + errors[i]);
    }
  }
  return records;
}

void write_bench_summary(std::ostream& out, const std::vector<BenchRecord>& records) {
  std::map<Index, std::vector<double>> by_size;
  std::map<Index, std::vector<double>> edges_by_size;
  std::vector<double> edges, times;
  Index failed = 0;
  for (const BenchRecord& r : records) {
    if (!r.converged) {
      ++failed;
      continue;
    }
    by_size[r.m].push_back(r.time_s);
    edges_by_size[r.m].push_back(static_cast<double>(r.n));
    edges.push_back(static_cast<double>(r.n));
    times.push_back(r.time_s);
  }
  char buf[256];
  out << "# size,runs,mean_edges,time_min,time_q1,time_median,time_q3,time_max,time_mean\n";
  for (const auto& [m, t] : by_size) {
    const SpreadStats s = spread(t);
    const SpreadStats e = spread(edges_by_size[m]);
    std::snprintf(buf, sizeof buf, "# %lld,%lld,%.1f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", static_cast<long long>(m),
                  static_cast<long long>(s.count), e.mean, s.min, s.q1, s.median, s.q3, s.max, s.mean);
    out << buf;
  }
  const Regression reg = loglog_regression(edges, times);
  std::snprintf(buf, sizeof buf, "# loglog slope %.4f (95%% CI %.4f .. %.4f) over %lld runs",
                reg.slope, reg.ci_low, reg.ci_high, static_cast<long long>(reg.points));
  out << buf;
  if (failed > 0) out << ", " << failed << " runs did not converge";
  out << '\n';
}

}  // namespace psipm

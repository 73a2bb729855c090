#pragma once

// Benchmark harness: generated instance grids, CSV rows, spread statistics
// and the log-log time regression.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "psipm/io.hpp"
#include "psipm/ppm.hpp"

namespace psipm {

struct BenchRecord {
  std::string instance;
  Index m = 0;  // nodes
  Index n = 0;  // edges
  std::string backend;
  std::string mode;
  Index outer_iters = 0;
  Index ipm_iters = 0;
  Index pcg_iters = 0;
  double time_s = 0.0;
  double objective = 0.0;
  std::optional<double> oracle_objective;
  double zeta_ratio_max = 0.0;
  bool converged = false;
};

/// instance,m,n,backend,mode,outer_iters,ipm_iters,pcg_iters,time_s,objective,oracle_objective,zeta_ratio_max
std::string_view csv_header();
std::string csv_row(const BenchRecord& r);

struct SpreadStats {
  Index count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};
/// Quartiles by linear interpolation between order statistics.
SpreadStats spread(std::vector<double> values);

struct Regression {
  Index points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;  // 95% interval for the slope (NaN below 3 points)
  double ci_high = 0.0;
};
/// Least squares fit of log(time) against log(edges).
Regression loglog_regression(std::span<const double> edges, std::span<const double> times);

struct BenchConfig {
  std::vector<Index> sizes;
  Index repetitions = 1;
  std::uint64_t seed = 1;
  GeneratorSpec graph{};  // node_count and seed are overridden per run
  LoadSpec load{};
  RegParams reg{};
  PpmParams ppm{};
  SolveOptions solve{};
  Index oracle_edge_cap = 1000000;  // skip the oracle above this many edges
  unsigned workers = 1;
};

/// Worker count from PSIPM_WORKERS, defaulting to 1.
unsigned bench_workers_from_env();

/// Runs every (size, repetition) pair; records come back in grid order no
/// matter how many workers ran them.
std::vector<BenchRecord> run_bench(const BenchConfig& cfg,
                                   const std::function<void(const BenchRecord&)>& progress = {});

/// Per-size spread of time_s and the regression over all converged runs.
void write_bench_summary(std::ostream& out, const std::vector<BenchRecord>& records);

}  // namespace psipm

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "psipm/bench.hpp"
#include "support.hpp"

namespace psipm {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const std::string cmd = std::string(PSIPM_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("psipm-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// The row that follows the header in solve's stdout.
std::vector<std::string> solve_row(const std::string& out) {
  std::stringstream ss(out);
  std::string line;
  while (std::getline(ss, line)) {
    if (line == csv_header()) {
      std::getline(ss, line);
      return split_csv(line);
    }
  }
  return {};
}

TEST(Csv, HeaderIsFixed) {
  EXPECT_EQ(csv_header(),
            "instance,m,n,backend,mode,outer_iters,ipm_iters,pcg_iters,time_s,objective,oracle_objective,"
            "zeta_ratio_max");
}

TEST(Csv, RowFormatting) {
  BenchRecord r;
  r.instance = "uniform-100-r0";
  r.m = 100;
  r.n = 496;
  r.backend = "sparse-pcg";
  r.mode = "practical";
  r.outer_iters = 12;
  r.ipm_iters = 14;
  r.pcg_iters = 300;
  r.time_s = 0.25;
  r.objective = 1.5;
  r.oracle_objective = 1.5;
  r.zeta_ratio_max = 1e-3;
  r.converged = true;
  EXPECT_EQ(csv_row(r), "uniform-100-r0,100,496,sparse-pcg,practical,12,14,300,0.250000,1.5,1.5,0.001");
  r.oracle_objective.reset();
  r.converged = false;
  const auto cols = split_csv(csv_row(r));
  ASSERT_EQ(cols.size(), 12u);
  EXPECT_EQ(cols[9], "nan");
  EXPECT_EQ(cols[10], "");
}

TEST(Spread, KnownQuartiles) {
  // Sorted: 1 1 2 3 4 5 6 9; positions 1.75, 3.5, 5.25 between order statistics.
  const SpreadStats s = spread({3, 1, 4, 1, 5, 9, 2, 6});
  EXPECT_EQ(s.count, 8);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.q1, 1.75);
  EXPECT_DOUBLE_EQ(s.median, 3.5);
  EXPECT_DOUBLE_EQ(s.q3, 5.25);
  EXPECT_DOUBLE_EQ(s.max, 9.0);
  EXPECT_DOUBLE_EQ(s.mean, 31.0 / 8.0);
  const SpreadStats one = spread({2.5});
  EXPECT_EQ(one.q1, 2.5);
  EXPECT_EQ(one.q3, 2.5);
  EXPECT_EQ(spread({}).count, 0);
}

TEST(Spread, QuartilesAreOrdered) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v = test::random_vector(1 + trial, rng);
    const SpreadStats s = spread(v);
    EXPECT_LE(s.min, s.q1);
    EXPECT_LE(s.q1, s.median);
    EXPECT_LE(s.median, s.q3);
    EXPECT_LE(s.q3, s.max);
    EXPECT_GE(s.mean, s.min);
    EXPECT_LE(s.mean, s.max);
  }
}

TEST(Regression, ExactPowerLaw) {
  const std::vector<double> edges{1e3, 3e3, 1e4, 3e4, 1e5};
  std::vector<double> times;
  for (double e : edges) times.push_back(2e-4 * std::pow(e, 1.28));
  const Regression r = loglog_regression(edges, times);
  EXPECT_EQ(r.points, 5);
  EXPECT_NEAR(r.slope, 1.28, 1e-12);
  EXPECT_NEAR(r.intercept, std::log(2e-4), 1e-10);
  EXPECT_NEAR(r.ci_low, 1.28, 1e-6);
  EXPECT_NEAR(r.ci_high, 1.28, 1e-6);
}

TEST(Regression, MatchesLeastSquaresAndTInterval) {
  const std::vector<double> edges{500, 1000, 2000, 4000, 8000};
  const std::vector<double> times{0.11, 0.19, 0.47, 0.80, 2.10};
  const Regression r = loglog_regression(edges, times);
  Eigen::MatrixXd X(5, 2);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::log(edges[i]);
    y[i] = std::log(times[i]);
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  EXPECT_NEAR(r.intercept, beta[0], 1e-12);
  EXPECT_NEAR(r.slope, beta[1], 1e-12);
  const double sse = (y - X * beta).squaredNorm();
  const Eigen::Matrix2d cov = (sse / 3.0) * (X.transpose() * X).inverse();
  // Two-sided 95% quantile of Student's t with 3 degrees of freedom.
  const double t = 3.182446305284263;
  EXPECT_NEAR(r.ci_low, beta[1] - t * std::sqrt(cov(1, 1)), 1e-9);
  EXPECT_NEAR(r.ci_high, beta[1] + t * std::sqrt(cov(1, 1)), 1e-9);
}

TEST(Regression, DegenerateInputs) {
  const std::vector<double> one{1000}, t1{0.5};
  EXPECT_TRUE(std::isnan(loglog_regression(one, t1).slope));
  const std::vector<double> two{1000, 2000}, t2{0.5, 1.0};
  const Regression r = loglog_regression(two, t2);
  EXPECT_NEAR(r.slope, 1.0, 1e-12);
  EXPECT_TRUE(std::isnan(r.ci_low));
  const std::vector<double> same{1000, 1000, 1000}, t3{0.5, 0.6, 0.7};
  EXPECT_TRUE(std::isnan(loglog_regression(same, t3).slope));
  EXPECT_THROW(loglog_regression(two, t1), DimensionError);
}

TEST(Workers, FromEnvironment) {
  ::unsetenv("PSIPM_WORKERS");
  EXPECT_EQ(bench_workers_from_env(), 1u);
  ::setenv("PSIPM_WORKERS", "3", 1);
  EXPECT_EQ(bench_workers_from_env(), 3u);
  ::setenv("PSIPM_WORKERS", "0", 1);
  EXPECT_THROW(bench_workers_from_env(), ValidationError);
  ::setenv("PSIPM_WORKERS", "two", 1);
  EXPECT_THROW(bench_workers_from_env(), ValidationError);
  ::unsetenv("PSIPM_WORKERS");
}

BenchConfig smoke_config() {
  BenchConfig cfg;
  cfg.sizes = {100, 200};
  cfg.repetitions = 2;
  cfg.seed = 11;
  cfg.solve.solver.backend = Backend::sparsified_pcg;
  return cfg;
}

std::string without_time(const BenchRecord& r) {
  BenchRecord c = r;
  c.time_s = 0.0;
  return csv_row(c);
}

TEST(Bench, GridOrderOracleAndDeterminism) {
  const BenchConfig cfg = smoke_config();
  const auto a = run_bench(cfg);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].instance, "uniform-100-r0");
  EXPECT_EQ(a[1].instance, "uniform-100-r1");
  EXPECT_EQ(a[2].instance, "uniform-200-r0");
  EXPECT_EQ(a[3].instance, "uniform-200-r1");
  for (const BenchRecord& r : a) {
    EXPECT_TRUE(r.converged) << r.instance;
    EXPECT_GE(r.time_s, 0.0);
    EXPECT_TRUE(std::isfinite(r.objective));
    ASSERT_TRUE(r.oracle_objective.has_value());
    EXPECT_NEAR(r.objective, *r.oracle_objective, 1e-6 * std::abs(*r.oracle_objective)) << r.instance;
  }
  // Repetitions of one size are different instances.
  EXPECT_NE(a[0].objective, a[1].objective);

  BenchConfig par = cfg;
  par.workers = 3;
  const auto b = run_bench(par);
  ASSERT_EQ(b.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(without_time(a[i]), without_time(b[i]));
}

TEST(Bench, OracleCapSkipsOracle) {
  BenchConfig cfg = smoke_config();
  cfg.sizes = {100};
  cfg.repetitions = 1;
  cfg.oracle_edge_cap = 10;
  const auto r = run_bench(cfg);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_FALSE(r[0].oracle_objective.has_value());
}

TEST(Bench, SummaryListsSpreadAndSlope) {
  std::vector<BenchRecord> recs;
  for (Index m : {1000, 3000}) {
    for (int k = 0; k < 3; ++k) {
      BenchRecord r;
      r.m = m;
      r.n = 5 * m;
      r.time_s = 1e-4 * static_cast<double>(m) * (1.0 + 0.1 * k);
      r.converged = true;
      recs.push_back(r);
    }
  }
  BenchRecord failed;
  failed.m = 1000;
  recs.push_back(failed);
  std::ostringstream out;
  write_bench_summary(out, recs);
  const std::string s = out.str();
  EXPECT_NE(s.find("# 1000,3,5000.0,0.1000,0.1050,0.1100,0.1150,0.1200,0.1100"), std::string::npos) << s;
  EXPECT_NE(s.find("# 3000,3,15000.0,"), std::string::npos);
  EXPECT_NE(s.find("# loglog slope 1.0000"), std::string::npos);
  EXPECT_NE(s.find("over 6 runs, 1 runs did not converge"), std::string::npos);
}

TEST(Bench, RejectsEmptyRepetitions) {
  BenchConfig cfg = smoke_config();
  cfg.repetitions = 0;
  EXPECT_THROW(run_bench(cfg), ValidationError);
}

const std::string kPath3 = std::string(PSIPM_TEST_DATA) + "/path3.min";

TEST(Cli, HelpShowsDefaults) {
  const CliRun r = run_cli("solve --help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--rho", "--delta", "--ct", "--tol", "--ichol-droptol", "--backend", "--mode"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  for (const char* value : {"1e-4", "1e-6", "0.4", "1e-10", "1e-3"}) {
    EXPECT_NE(r.out.find(value), std::string::npos) << value;
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("solve").code, 1);
  EXPECT_EQ(run_cli("solve " + kPath3 + " --backend lu").code, 1);
  EXPECT_EQ(run_cli("solve /nonexistent/instance.min").code, 1);
  TempDir dir;
  EXPECT_EQ(run_cli("generate --nodes 1 -o " + dir / "x.min").code, 1);
}

TEST(Cli, GenerateIsReproducible) {
  TempDir dir;
  ASSERT_EQ(run_cli("generate --nodes 1000 --seed 7 -o " + dir / "a.min").code, 0);
  const CliRun r = run_cli("generate --nodes 1000 --seed 7 -o " + dir / "b.min");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("seed 7"), std::string::npos);
  EXPECT_EQ(slurp(dir / "a.min"), slurp(dir / "b.min"));
  ASSERT_EQ(run_cli("generate --nodes 1000 --seed 8 -o " + dir / "c.min").code, 0);
  EXPECT_NE(slurp(dir / "a.min"), slurp(dir / "c.min"));
}

TEST(Cli, GenerateFamilyWithDensity) {
  TempDir dir;
  ASSERT_EQ(run_cli("generate --family erdrey --nodes 2000 --density 4 -o " + dir / "e.min").code, 0);
  const Problem p = read_dimacs_mcf(dir / "e.min");
  EXPECT_EQ(p.node_count(), 2000);
  // Four undirected edges per node, each bidirected.
  EXPECT_NEAR(static_cast<double>(p.edge_count()) / 2000.0, 8.0, 0.8);
}

TEST(Cli, SolvePathFixture) {
  TempDir dir;
  const CliRun r = run_cli("solve " + kPath3 + " --csv " + dir / "out.csv");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto row = solve_row(r.out);
  ASSERT_EQ(row.size(), 12u);
  EXPECT_NEAR(std::stod(row[9]), 2.0, 1e-9);
  // Appending twice keeps a single header.
  ASSERT_EQ(run_cli("solve " + kPath3 + " --csv " + dir / "out.csv").code, 0);
  std::ifstream csv(dir / "out.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], csv_header());
}

TEST(Cli, BackendsAgree) {
  TempDir dir;
  ASSERT_EQ(run_cli("generate --nodes 500 --seed 3 -o " + dir / "g.min").code, 0);
  std::vector<double> obj;
  for (const char* b : {"full", "sparse-chol", "sparse-pcg"}) {
    const CliRun r = run_cli("solve " + dir / "g.min" + " --backend " + b);
    ASSERT_EQ(r.code, 0) << b << "\n" << r.out;
    const auto row = solve_row(r.out);
    ASSERT_EQ(row.size(), 12u);
    EXPECT_EQ(row[3], b);
    obj.push_back(std::stod(row[9]));
  }
  EXPECT_NEAR(obj[1], obj[0], 1e-8 * obj[0]);
  EXPECT_NEAR(obj[2], obj[0], 1e-8 * obj[0]);
}

TEST(Cli, NonConvergenceExitsTwoWithTrace) {
  TempDir dir;
  ASSERT_EQ(run_cli("generate --nodes 300 --seed 2 -o " + dir / "g.min").code, 0);
  const CliRun r = run_cli("solve " + dir / "g.min" + " --max-outer 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("# outer,iter,mu"), std::string::npos);
  EXPECT_NE(r.out.find("did not converge"), std::string::npos);
}

TEST(Cli, SolveThenVerify) {
  TempDir dir;
  ASSERT_EQ(run_cli("generate --nodes 400 --seed 5 -o " + dir / "g.min").code, 0);
  ASSERT_EQ(run_cli("solve " + dir / "g.min" + " --solution " + dir / "g.sol").code, 0);
  const CliRun ok = run_cli("verify " + dir / "g.min " + dir / "g.sol");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("verified"), std::string::npos);

  // Doubling every flow breaks feasibility and the objective.
  const Problem p = read_dimacs_mcf(dir / "g.min");
  SolutionFile sol = read_solution(dir / "g.sol", p.node_count());
  for (double& f : sol.flow) f *= 2.0;
  write_solution(sol, dir / "bad.sol");
  EXPECT_EQ(run_cli("verify " + dir / "g.min " + dir / "bad.sol").code, 3);

  // A solution for another instance has the wrong length.
  ASSERT_EQ(run_cli("solve " + kPath3 + " --solution " + dir / "p.sol").code, 0);
  EXPECT_EQ(run_cli("verify " + dir / "g.min " + dir / "p.sol").code, 3);
}

TEST(Cli, ZeroLoadHasZeroGap) {
  TempDir dir;
  {
    std::ofstream f(dir / "z.min");
    f << "p min 3 2\na 1 2 0 10 1\na 2 3 0 10 1\n";
  }
  ASSERT_EQ(run_cli("solve " + dir / "z.min" + " --solution " + dir / "z.sol").code, 0);
  const CliRun r = run_cli("verify " + dir / "z.min " + dir / "z.sol");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("relative gap 0.000e+00"), std::string::npos) << r.out;
}

TEST(Cli, BenchSmokeGrid) {
  TempDir dir;
  const CliRun r = run_cli("bench --sizes 100,200 --reps 1 --seed 4 --csv " + dir / "b.csv");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("# loglog slope"), std::string::npos);
  EXPECT_EQ(r.out.find("slope nan"), std::string::npos);
  std::ifstream csv(dir / "b.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], csv_header());

  // Same seed, same rows apart from the time column.
  ASSERT_EQ(run_cli("bench --sizes 100,200 --reps 1 --seed 4 --csv " + dir / "c.csv").code, 0);
  std::ifstream again(dir / "c.csv");
  std::vector<std::string> second;
  while (std::getline(again, line)) second.push_back(line);
  ASSERT_EQ(second.size(), lines.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto a = split_csv(lines[i]), b = split_csv(second[i]);
    a[8] = b[8] = "";
    EXPECT_EQ(a, b);
  }
}

}  // namespace
}  // namespace psipm

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "psipm/oracle.hpp"
#include "psipm/ppm.hpp"
#include "support.hpp"

namespace psipm {
namespace {

using test::vec;

TEST(PpmParams, Validation) {
  EXPECT_NO_THROW(PpmParams{}.validate());
  PpmParams p;
  p.sigma_r = 1.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.tau_1 = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.max_outer = 0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.strict = true;
  EXPECT_EQ(p.effective_tau(), 1.0);
}

// Straight evaluation of || z - Pi(z - F(z)) || with z = (x, y).
double natural_residual_reference(const Vector& x, const Vector& y, const Anchor& a, const Problem& p,
                                  const RegParams& reg) {
  const Eigen::MatrixXd A = test::dense_incidence(p.graph());
  const Eigen::VectorXd ex = vec(x), ey = vec(y);
  const Eigen::VectorXd fx = reg.rho * (ex - vec(a.x)) + vec(p.graph().cost()) - A.transpose() * ey;
  const Eigen::VectorXd fy = A * ex - vec(p.b()) + reg.delta * (ey - vec(a.y));
  const Eigen::VectorXd px = ex - (ex - fx).cwiseMax(0.0);
  return std::sqrt(px.squaredNorm() + fy.squaredNorm());
}

TEST(NaturalResidual, TwoNodeToy) {
  // Two opposite arcs between two nodes, hand-set violation.
  Graph g(2, {{0, 1}, {1, 0}}, Vector{1.0, 2.0});
  Problem p(g, Vector{-1.0, 1.0});
  Anchor a{{0.0, 0.0}, {0.0, 0.0}, 0};
  RegParams reg{0.5, 0.25};
  Vector x{2.0, 0.5};
  Vector y{0.0, 3.0};
  // F_x = rho x + c - A^T y = (1 + 1 - 3, 0.25 + 2 + 3) = (-1, 5.25)
  // x - max(0, x - F_x) = (2 - 3, 0.5 - 0) = (-1, 0.5)
  // F_y = A x - b + delta y = (-1.5 + 1, 1.5 - 1 + 0.75) = (-0.5, 1.25)
  const double expected = std::sqrt(1.0 + 0.25 + 0.25 + 1.5625);
  EXPECT_NEAR(natural_residual(x, y, a, p, reg), expected, 1e-14);
  EXPECT_NEAR(natural_residual_reference(x, y, a, p, reg), expected, 1e-14);
}

TEST(NaturalResidual, MatchesProjectionFormula) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Problem p = test::small_instance(15, seed);
    std::mt19937_64 rng(seed);
    Vector x = test::random_vector(static_cast<std::size_t>(p.edge_count()), rng, -1.0, 2.0);
    Vector y = test::random_vector(static_cast<std::size_t>(p.node_count()), rng);
    Anchor a{test::random_vector(x.size(), rng, 0.0, 1.0), test::random_vector(y.size(), rng), 3};
    RegParams reg{1e-2, 1e-3};
    const double ref = natural_residual_reference(x, y, a, p, reg);
    EXPECT_NEAR(natural_residual(x, y, a, p, reg), ref, 1e-12 * (1.0 + ref));
  }
}

TEST(NaturalResidual, FreeBlockIsNeverClamped) {
  // With x far inside the orthant the x-block is just F_x, so the squared
  // residual splits into ||F_x||^2 + ||F_y||^2.
  Problem p = test::path_problem();
  Anchor a{{0.0, 0.0}, {0.0, 0.0, 0.0}, 0};
  RegParams reg;
  Vector x{100.0, 100.0};
  Vector y{-5.0, 3.0, 7.0};
  const Eigen::MatrixXd A = test::dense_incidence(p.graph());
  const Eigen::VectorXd fx = reg.rho * vec(x) + vec(p.graph().cost()) - A.transpose() * vec(y);
  const Eigen::VectorXd fy = A * vec(x) - vec(p.b()) + reg.delta * vec(y);
  EXPECT_NEAR(natural_residual(x, y, a, p, reg), std::sqrt(fx.squaredNorm() + fy.squaredNorm()), 1e-12);
}

TEST(PpmStopTest, Examples) {
  PpmParams p;
  EXPECT_TRUE(ppm_stop_test(0.0, 0.3, 0, p));
  EXPECT_TRUE(ppm_stop_test(0.0, 1.0, 50, p));
  // k = 0, step >= 1: threshold 1e4.
  EXPECT_TRUE(ppm_stop_test(9999.0, 1.0, 0, p));
  EXPECT_TRUE(ppm_stop_test(9999.0, 5.0, 0, p));
  EXPECT_FALSE(ppm_stop_test(1e4, 1.0, 0, p));
  // k = 20: 0.7^20 * 1e4 = 7.979...
  const double thr20 = std::pow(0.7, 20) * 1e4;
  EXPECT_NEAR(thr20, 7.979, 1e-3);
  EXPECT_FALSE(ppm_stop_test(10.0, 1.0, 20, p));
  EXPECT_TRUE(ppm_stop_test(7.9, 1.0, 20, p));
  // A short step scales the threshold down.
  EXPECT_FALSE(ppm_stop_test(7.9, 0.5, 20, p));
  EXPECT_TRUE(ppm_stop_test(3.9, 0.5, 20, p));
  p.strict = true;
  EXPECT_FALSE(ppm_stop_test(0.5, 1.0, 2, p));
  EXPECT_TRUE(ppm_stop_test(0.48, 1.0, 2, p));
}

TEST(StopMeasures, ScaleIsMaxOfDegreeAndNorms) {
  Problem path = test::path_problem();
  EXPECT_EQ(stop_scale(path), 2.0);
  // ||A||_inf from the dense matrix equals the maximum degree.
  Graph star(6, {{0, 1}, {0, 2}, {0, 3}, {4, 0}, {0, 5}}, Vector(5, 0.1));
  Problem p(star, Vector{-1.0, 1.0, 0.0, 0.0, 0.0, 0.0});
  const double row_max = test::dense_incidence(star).cwiseAbs().rowwise().sum().maxCoeff();
  EXPECT_EQ(row_max, 5.0);
  EXPECT_EQ(stop_scale(p), 5.0);
  Problem heavy(star, Vector{-4.0, 1.0, 1.0, 1.0, 1.0, 0.0});
  EXPECT_EQ(stop_scale(heavy), 8.0);
}

TEST(GlobalStop, ExactOptimumPasses) {
  Problem p = test::path_problem();
  Vector x{1.0, 1.0}, y{0.0, 1.0, 2.0}, s{0.0, 0.0};
  StopMeasures m = stop_measures(x, y, s, p);
  EXPECT_EQ(m.dual, 0.0);
  EXPECT_EQ(m.primal, 0.0);
  EXPECT_EQ(m.complementarity, 0.0);
  EXPECT_TRUE(global_stop_test(x, y, s, p, 1e-10));
}

TEST(GlobalStop, ComplementarityAloneFails) {
  const double tol = 1e-10;
  const double eps = 10.0 * tol;
  // The dual slack eps on edge 0 is consistent with its cost, so only the
  // complementarity measure is violated.
  Graph g(3, {{0, 1}, {1, 2}}, Vector{1.0 + eps, 1.0});
  Problem p(g, Vector{-1.0, 0.0, 1.0});
  Vector x{1.0, 1.0}, y{0.0, 1.0, 2.0}, s{eps, 0.0};
  StopMeasures m = stop_measures(x, y, s, p);
  EXPECT_LE(m.dual, 1e-16);
  EXPECT_EQ(m.primal, 0.0);
  EXPECT_NEAR(m.complementarity, eps, 1e-20);
  EXPECT_FALSE(global_stop_test(x, y, s, p, tol));
  EXPECT_TRUE(global_stop_test(x, y, s, p, 2.0 * eps));
}

TEST(GlobalStop, PrimalAndDualViolations) {
  Problem p = test::path_problem();
  Vector y{0.0, 1.0, 2.0}, s{0.0, 0.0};
  StopMeasures m = stop_measures(Vector{1.0, 0.9}, y, s, p);
  EXPECT_NEAR(m.primal, 0.2, 1e-15);
  EXPECT_FALSE(m.satisfied(1e-10));
  StopMeasures d = stop_measures(Vector{1.0, 1.0}, Vector{0.0, 1.0, 2.5}, s, p);
  EXPECT_NEAR(d.dual, 0.5, 1e-15);
  EXPECT_FALSE(d.satisfied(1e-10));
}

TEST(Solve, ZeroLoadHasZeroObjective) {
  Problem p(test::path_graph(4), Vector(4, 0.0));
  SolveResult r = ps_ipm_solve(p, RegParams{}, PpmParams{});
  EXPECT_TRUE(r.report.converged);
  EXPECT_NEAR(r.report.objective, 0.0, 1e-9);
  for (double v : r.x) EXPECT_LE(std::abs(v), 1e-9);
}

TEST(Solve, PathUnitInstance) {
  for (IpmMode mode : {IpmMode::practical, IpmMode::theory}) {
    SolveOptions o;
    o.ipm.mode = mode;
    SolveResult r = ps_ipm_solve(test::path_problem(), RegParams{}, PpmParams{}, o);
    EXPECT_TRUE(r.report.converged) << to_string(mode);
    EXPECT_NEAR(r.report.objective, 2.0, 1e-8) << to_string(mode);
    EXPECT_NEAR(r.x[0], 1.0, 1e-8);
    EXPECT_NEAR(r.x[1], 1.0, 1e-8);
    EXPECT_TRUE(r.report.final_measures.satisfied(PpmParams{}.tol));
  }
}

TEST(Solve, UnbalancedLoadRejected) {
  EXPECT_THROW(Problem(test::path_graph(3), Vector{-1.0, 0.0, 2.0}), ValidationError);
}

TEST(Solve, OuterCapReported) {
  Problem p = test::small_instance(60, 5);
  PpmParams pp;
  pp.max_outer = 1;
  EXPECT_THROW(ps_ipm_solve(p, RegParams{}, pp), ConvergenceError);
  SolveOptions o;
  o.throw_on_failure = false;
  SolveResult r = ps_ipm_solve(p, RegParams{}, pp, o);
  EXPECT_FALSE(r.report.converged);
  EXPECT_FALSE(r.report.failure.empty());
  EXPECT_EQ(r.report.outer_iterations, 1);
}

class SolveAgainstOracle : public ::testing::TestWithParam<std::tuple<std::uint64_t, IpmMode>> {};

TEST_P(SolveAgainstOracle, ObjectiveAndExitContract) {
  const auto [seed, mode] = GetParam();
  Problem p = test::small_instance(100, seed);
  const FlowSolution exact = solve_mcf_exact(p);
  SolveOptions o;
  o.ipm.mode = mode;
  PpmParams pp;
  SolveResult r = ps_ipm_solve(p, RegParams{}, pp, o);
  ASSERT_TRUE(r.report.converged);
  EXPECT_LE(std::abs(r.report.objective - exact.objective), 1e-6 * std::abs(exact.objective));
  EXPECT_LE(std::abs(r.report.objective - exact.objective),
            pp.tol * stop_scale(p) * static_cast<double>(p.edge_count()));
  EXPECT_TRUE(r.report.final_measures.satisfied(pp.tol));

  // Every subproblem that ended on the inexactness test met its threshold.
  ASSERT_FALSE(r.report.outer.empty());
  for (const OuterRecord& rec : r.report.outer) {
    if (rec.exit == InnerExit::stop_callback) {
      EXPECT_TRUE(ppm_stop_test(rec.natural_residual, rec.step_norm, rec.k, pp)) << "k = " << rec.k;
    }
  }
  // Anchor movement shrinks over the run.
  const auto& outer = r.report.outer;
  if (outer.size() >= 4) {
    EXPECT_LT(outer.back().step_norm, outer.front().step_norm);
  }
}

INSTANTIATE_TEST_SUITE_P(Instances, SolveAgainstOracle,
                         ::testing::Combine(::testing::Values(1u, 2u, 3u),
                                            ::testing::Values(IpmMode::practical, IpmMode::theory)));

TEST(Solve, BackendsAgree) {
  Problem p = test::small_instance(200, 11);
  const double opt = solve_mcf_exact(p).objective;
  for (Backend b : {Backend::full_cholesky, Backend::sparsified_cholesky, Backend::sparsified_pcg}) {
    SolveOptions o;
    o.solver.backend = b;
    SolveResult r = ps_ipm_solve(p, RegParams{}, PpmParams{}, o);
    EXPECT_TRUE(r.report.converged) << to_string(b);
    EXPECT_LE(std::abs(r.report.objective - opt), 1e-6 * opt) << to_string(b);
    EXPECT_EQ(r.report.backend, b);
  }
}

}  // namespace
}  // namespace psipm

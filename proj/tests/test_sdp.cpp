#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "qdisc/qops.hpp"
#include "qdisc/rng.hpp"
#include "qdisc/sdp.hpp"

namespace qdisc {
namespace {

Mat random_hermitian(int d, Rng& rng) {
  Mat g = random_gaussian(d, d, rng);
  return (g + g.adjoint()) / 2.0;
}

// sum_b tr(X_b) = rhs
EqualityRow trace_row_over(const std::vector<int>& blocks, int side,
                           double rhs) {
  EqualityRow row;
  for (int b : blocks) {
    BlockCoeff bc;
    bc.block = b;
    for (int i = 0; i < side; ++i) bc.entries.push_back({i, i, 1.0});
    row.terms.push_back(std::move(bc));
  }
  row.rhs = rhs;
  return row;
}

// Rows pinning sum_b X_b = target entrywise.
void add_sum_rows(ConicProblem& p, const std::vector<int>& blocks,
                  const Mat& target) {
  const int s = static_cast<int>(target.rows());
  for (int i = 0; i < s; ++i)
    for (int j = i; j < s; ++j) {
      if (i == j) {
        EqualityRow row;
        for (int b : blocks) row.terms.push_back({b, {{i, i, 1.0}}});
        row.rhs = target(i, i).real();
        p.equalities.push_back(std::move(row));
      } else {
        EqualityRow re;
        for (int b : blocks) re.terms.push_back({b, {{i, j, 1.0}}});
        re.rhs = 2.0 * target(i, j).real();
        p.equalities.push_back(std::move(re));
        EqualityRow im;
        for (int b : blocks) im.terms.push_back({b, {{i, j, cxd(0.0, 1.0)}}});
        im.rhs = 2.0 * target(i, j).imag();
        p.equalities.push_back(std::move(im));
      }
    }
}

TEST(RealEmbeddingTest, DoublesSpectrumAndPreservesProducts) {
  Rng rng(11);
  Mat h = random_hermitian(4, rng);
  Eigen::MatrixXd e = real_embedding(h);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(e);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(er.eigenvalues()(2 * i), es.eigenvalues()(i), 1e-12);
    EXPECT_NEAR(er.eigenvalues()(2 * i + 1), es.eigenvalues()(i), 1e-12);
  }
  Mat a = random_gaussian(4, 4, rng), b = random_gaussian(4, 4, rng);
  Eigen::MatrixXd lhs = real_embedding(a * b);
  Eigen::MatrixXd rhs = real_embedding(a) * real_embedding(b);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(real_embedding(h).trace(), 2.0 * h.trace().real(), 1e-12);
}

TEST(SdpSolveTest, LargestEigenvalue) {
  Rng rng(5);
  Mat h = random_hermitian(4, rng);
  const double lmax = -min_eig_herm(-h);
  ConicProblem p;
  p.blocks = {{"X", 4}};
  p.objective = {h};
  p.equalities.push_back(trace_row_over({0}, 4, 1.0));
  p.trace_row = 0;
  Solution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_EQ(s.backend, "dense-ipm");
  EXPECT_NEAR(s.primal_value, lmax, 1e-7);
  ASSERT_TRUE(s.dual_certified);
  EXPECT_GE(s.dual_value, lmax - 1e-7);       // certified upper bound
  EXPECT_LE(s.dual_value, lmax + 1e-6);       // and tight
  // Recovered primal block is a density matrix.
  ASSERT_EQ(s.block_values.size(), 1u);
  EXPECT_NEAR(s.block_values[0].trace().real(), 1.0, 1e-7);
  EXPECT_GT(min_eig_herm(s.block_values[0]), -1e-8);
}

TEST(SdpSolveTest, MinimizeGivesSmallestEigenvalue) {
  Rng rng(7);
  Mat h = random_hermitian(3, rng);
  ConicProblem p;
  p.blocks = {{"X", 3}};
  p.objective = {h};
  p.maximize = false;
  p.equalities.push_back(trace_row_over({0}, 3, 1.0));
  p.trace_row = 0;
  Solution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_value, min_eig_herm(h), 1e-7);
  ASSERT_TRUE(s.dual_certified);
  EXPECT_LE(s.dual_value, min_eig_herm(h) + 1e-7);  // certified lower bound
}

TEST(SdpSolveTest, ScalarEquality) {
  ConicProblem p;
  p.blocks = {{"x", 1}};
  p.objective = {Mat::Identity(1, 1)};
  p.equalities.push_back({{{0, {{0, 0, 2.0}}}}, 3.0});
  p.trace_row = 0;
  Solution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_value, 1.5, 1e-8);
  EXPECT_TRUE(s.dual_certified);
}

// Two-outcome state discrimination: the optimum is the Helstrom value
// 1/2 + ||p0 rho0 - p1 rho1||_1 / 2.
TEST(SdpSolveTest, BinaryDiscrimination) {
  Mat rho0 = Mat::Zero(2, 2), rho1 = Mat::Zero(2, 2);
  rho0(0, 0) = 1.0;
  rho1 << 0.5, 0.5, 0.5, 0.5;
  ConicProblem p;
  p.blocks = {{"E0", 2}, {"E1", 2}};
  p.objective = {0.5 * rho0, 0.5 * rho1};
  add_sum_rows(p, {0, 1}, Mat::Identity(2, 2));
  p.equalities.push_back(trace_row_over({0, 1}, 2, 2.0));
  p.trace_row = static_cast<int>(p.equalities.size()) - 1;
  const double helstrom = 0.5 * (1.0 + 1.0 / std::sqrt(2.0));
  for (Backend be : {Backend::Dense, Backend::Splitting}) {
    SolveOptions opts;
    opts.backend = be;
    opts.tol = {1e-9, 1e-9};
    Solution s = solve(p, opts);
    ASSERT_EQ(s.status, SolveStatus::Optimal) << "backend " << s.backend;
    EXPECT_NEAR(s.primal_value, helstrom, 2e-6) << s.backend;
    ASSERT_TRUE(s.dual_certified);
    EXPECT_GE(s.dual_value, helstrom - 2e-6) << s.backend;
    EXPECT_LE(s.dual_value, helstrom + 2e-6) << s.backend;
    Mat sum = s.block_values[0] + s.block_values[1];
    EXPECT_LT((sum - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

// Max overlap with a maximally entangled state over PPT states is 1/d.
TEST(SdpSolveTest, PptConstraintCutsEntangledOverlap) {
  Mat phi = max_entangled(2) / std::sqrt(2.0);
  Mat proj = phi * phi.adjoint();
  ConicProblem p;
  p.blocks = {{"X", 4}};
  p.objective = {proj};
  p.equalities.push_back(trace_row_over({0}, 4, 1.0));
  p.trace_row = 0;
  p.lifts.push_back({0, Mat(), 2, 2});
  for (Backend be : {Backend::Dense, Backend::Splitting}) {
    SolveOptions opts;
    opts.backend = be;
    opts.tol = {1e-9, 1e-9};
    Solution s = solve(p, opts);
    ASSERT_EQ(s.status, SolveStatus::Optimal) << "backend " << s.backend;
    EXPECT_NEAR(s.primal_value, 0.5, 1e-5) << s.backend;
    ASSERT_TRUE(s.dual_certified) << s.backend;
    EXPECT_GE(s.dual_value, 0.5 - 1e-5) << s.backend;
    EXPECT_LE(s.dual_value, 0.5 + 1e-5) << s.backend;
  }
}

// A lift through a nontrivial isometry gives the same optimum on both
// backends, and the certified dual bounds the primal.
TEST(SdpSolveTest, IsometryLiftBackendsAgree) {
  Rng rng(23);
  Mat v = symmetric_isometry(2, 2);  // 4 x 3
  Mat h = random_hermitian(3, rng);
  ConicProblem p;
  p.blocks = {{"X", 3}};
  p.objective = {h};
  p.equalities.push_back(trace_row_over({0}, 3, 1.0));
  p.trace_row = 0;
  p.lifts.push_back({0, v, 2, 2});
  SolveOptions dense_opts;
  dense_opts.backend = Backend::Dense;
  Solution sd = solve(p, dense_opts);
  SolveOptions split_opts;
  split_opts.backend = Backend::Splitting;
  split_opts.tol = {1e-9, 1e-9};
  Solution ss = solve(p, split_opts);
  ASSERT_EQ(sd.status, SolveStatus::Optimal);
  ASSERT_EQ(ss.status, SolveStatus::Optimal);
  EXPECT_NEAR(sd.primal_value, ss.primal_value, 2e-5);
  ASSERT_TRUE(sd.dual_certified);
  ASSERT_TRUE(ss.dual_certified);
  EXPECT_GE(sd.dual_value + 1e-7, sd.primal_value);
  EXPECT_GE(ss.dual_value + 1e-6, ss.primal_value);
  EXPECT_NEAR(sd.dual_value, ss.dual_value, 2e-5);
}

TEST(SdpSolveTest, InconsistentTracesAreInfeasible) {
  ConicProblem p;
  p.blocks = {{"X", 2}};
  p.equalities.push_back(trace_row_over({0}, 2, 1.0));
  p.equalities.push_back(trace_row_over({0}, 2, 2.0));
  Solution s = check_feasibility(p);
  EXPECT_EQ(s.status, SolveStatus::Infeasible);
  Solution s2 = solve(p);
  EXPECT_EQ(s2.status, SolveStatus::Infeasible);
}

TEST(SdpSolveTest, FeasibilityOfDensityMatrices) {
  ConicProblem p;
  p.blocks = {{"X", 2}};
  p.equalities.push_back(trace_row_over({0}, 2, 1.0));
  Solution s = check_feasibility(p);
  EXPECT_EQ(s.status, SolveStatus::Optimal);
}

TEST(SdpSolveTest, EmptyRowWithNonzeroRhsIsInfeasible) {
  ConicProblem p;
  p.blocks = {{"X", 2}};
  p.equalities.push_back({{}, 1.0});
  Solution s = solve(p);
  EXPECT_EQ(s.status, SolveStatus::Infeasible);
}

TEST(SdpSolveTest, UnconstrainedPositiveObjectiveIsUnbounded) {
  ConicProblem p;
  p.blocks = {{"X", 2}};
  p.objective = {Mat::Identity(2, 2)};
  Solution s = solve(p);
  EXPECT_EQ(s.status, SolveStatus::Unbounded);
}

TEST(SdpSolveTest, UnconstrainedNegativeObjectiveIsZero) {
  ConicProblem p;
  p.blocks = {{"X", 2}};
  p.objective = {-Mat::Identity(2, 2)};
  Solution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_value, 0.0, 1e-9);
}

TEST(SdpValidateTest, RejectsBadInput) {
  ConicProblem empty;
  EXPECT_THROW(empty.validate(), BadParameter);
  ConicProblem p;
  p.blocks = {{"X", 2}};
  p.objective = {Mat::Identity(3, 3)};
  EXPECT_THROW(p.validate(), DimMismatch);
  p.objective = {Mat::Identity(2, 2) * cxd(0, 1)};
  EXPECT_THROW(p.validate(), BadParameter);  // not hermitian
  p.objective.clear();
  p.equalities.push_back({{{0, {{0, 5, 1.0}}}}, 0.0});
  EXPECT_THROW(p.validate(), BadIndex);
  p.equalities.clear();
  p.equalities.push_back({{{0, {{0, 0, cxd(0.0, 1.0)}}}}, 0.0});
  EXPECT_THROW(p.validate(), BadParameter);  // imaginary diagonal
  p.equalities.clear();
  p.lifts.push_back({0, Mat(), 2, 2});  // 2*2 != block side 2
  EXPECT_THROW(p.validate(), DimMismatch);
  p.lifts.clear();
  Mat bad = Mat::Ones(4, 2);
  p.lifts.push_back({0, bad, 2, 2});
  EXPECT_THROW(p.validate(), BadParameter);  // not an isometry
}

TEST(SdpDumpTest, WritesParsableSparseFile) {
  Mat phi = max_entangled(2);
  ConicProblem p;
  p.blocks = {{"X", 4}};
  p.objective = {phi * phi.adjoint()};
  p.equalities.push_back(trace_row_over({0}, 4, 1.0));
  p.trace_row = 0;
  p.lifts.push_back({0, Mat(), 2, 2});
  const std::string path = "dump_test.dat-s";
  dump_problem(p, path);
  std::ifstream f(path);
  ASSERT_TRUE(f.good());
  std::string comment;
  std::getline(f, comment);
  EXPECT_EQ(comment[0], '"');
  int m = 0, nblocks = 0;
  f >> m >> nblocks;
  // 1 real row + one identification row per entry of the 8x8 lift copy.
  EXPECT_EQ(m, 1 + 8 * 9 / 2);
  ASSERT_EQ(nblocks, 2);
  int s1 = 0, s2 = 0;
  f >> s1 >> s2;
  EXPECT_EQ(s1, 8);
  EXPECT_EQ(s2, 8);
  std::vector<double> rhs(m);
  for (int i = 0; i < m; ++i) f >> rhs[i];
  EXPECT_NEAR(rhs[0], 2.0, 1e-15);  // doubled by the real embedding
  int mat = -1, blk = 0, ii = 0, jj = 0;
  double v = 0.0;
  int count = 0;
  while (f >> mat >> blk >> ii >> jj >> v) {
    EXPECT_GE(mat, 0);
    EXPECT_LE(mat, m);
    EXPECT_GE(blk, 1);
    EXPECT_LE(blk, nblocks);
    EXPECT_LE(ii, jj);
    ++count;
  }
  EXPECT_GT(count, 40);
}

}  // namespace
}  // namespace qdisc

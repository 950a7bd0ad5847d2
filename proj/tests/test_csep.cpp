#include "qdisc/csep.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qdisc/errors.hpp"
#include "qdisc/rng.hpp"

namespace qdisc {
namespace {

Mat pauli(int which) {
  Mat m(2, 2);
  switch (which) {
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, cxd(0, -1), cxd(0, 1), 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1; break;
  }
  return m;
}

Mat bloch_state(double x, double y, double z) {
  return 0.5 * (pauli(0) + x * pauli(1) + y * pauli(2) + z * pauli(3));
}

ConstrainedSepProblem bell_problem() {
  ConstrainedSepProblem p;
  Vec phi = max_entangled(2) / std::sqrt(2.0);
  p.f = LabeledOperator({{"a", 2}, {"b", 2}}, Mat(phi * phi.adjoint()));
  p.parties = {Party{2, {}, {}, 0}, Party{2, {}, {}, 0}};
  return p;
}

TEST(CsepAffine, PartialTraceRowsMatchMarginal) {
  Rng rng(11);
  Mat w = random_psd(6, rng);
  AffineMap m = affine_partial_trace_equals({2, 3}, {0}, ptrace(w, {2, 3}, {0}));
  EXPECT_LT(m.residual(w), 1e-12);
  AffineMap bad =
      affine_partial_trace_equals({2, 3}, {0}, Mat(Mat::Identity(3, 3)));
  EXPECT_GT(bad.residual(w), 1e-3);
}

TEST(CsepRadius, OctahedronQubit) {
  Polytope v;
  for (int s : {1, 2, 3}) {
    double e[3] = {0, 0, 0};
    e[s - 1] = 1.0;
    v.vertices.push_back(bloch_state(e[0], e[1], e[2]));
    v.vertices.push_back(bloch_state(-e[0], -e[1], -e[2]));
  }
  v.reference = bloch_state(0, 0, 0);
  double l = approximation_radius(v, Party{2, {}, {}, 0});
  EXPECT_NEAR(l, 1.0 / std::sqrt(3.0), 1e-9);
}

TEST(CsepRadius, CubeQubit) {
  Polytope v;
  const double s = 1.0 / std::sqrt(3.0);
  for (int a : {-1, 1})
    for (int b : {-1, 1})
      for (int c : {-1, 1}) v.vertices.push_back(bloch_state(a * s, b * s, c * s));
  v.reference = bloch_state(0, 0, 0);
  double l = approximation_radius(v, Party{2, {}, {}, 0});
  EXPECT_NEAR(l, 1.0 / std::sqrt(3.0), 1e-9);
}

TEST(CsepRadius, TetrahedronQubit) {
  Polytope v;
  const double s = 1.0 / std::sqrt(3.0);
  v.vertices.push_back(bloch_state(s, s, s));
  v.vertices.push_back(bloch_state(s, -s, -s));
  v.vertices.push_back(bloch_state(-s, s, -s));
  v.vertices.push_back(bloch_state(-s, -s, s));
  v.reference = bloch_state(0, 0, 0);
  double l = approximation_radius(v, Party{2, {}, {}, 0});
  EXPECT_NEAR(l, 1.0 / 3.0, 1e-9);
}

TEST(CsepRadius, DegenerateReferences) {
  Polytope v;
  v.vertices = {bloch_state(1, 0, 0), bloch_state(-1, 0, 0),
                bloch_state(0, 1, 0), bloch_state(0, -1, 0)};
  v.reference = v.vertices[0];  // on the boundary
  EXPECT_THROW(approximation_radius(v, Party{2, {}, {}, 0}),
               DegenerateReference);
  v.reference = bloch_state(0, 0, 0.5);  // outside the vertex span
  EXPECT_THROW(approximation_radius(v, Party{2, {}, {}, 0}),
               DegenerateReference);
}

TEST(CsepRadius, PolytopeValidation) {
  Polytope v;
  v.vertices = {bloch_state(1, 0, 0), Mat(2.0 * bloch_state(-1, 0, 0))};
  v.reference = bloch_state(0, 0, 0);
  EXPECT_THROW(approximation_radius(v, Party{2, {}, {}, 0}), BadParameter);
}

TEST(CsepHierarchy, BellCappedAtHalfWithTranspositionCut) {
  ConstrainedSepProblem p = bell_problem();
  UpperBoundOptions o;
  o.k = 1;
  o.ppt = true;
  UpperBoundResult r = upper_bound(p, o);
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(r.value, 0.5, 2e-6);

  o.k = 2;
  UpperBoundResult r2 = upper_bound(p, o);
  EXPECT_LE(r2.value, r.value + 1e-6);  // monotone in the extension level
}

TEST(CsepHierarchy, BosonicMatchesPermutationInvariantMode) {
  ConstrainedSepProblem p = bell_problem();
  UpperBoundOptions o;
  o.k = 2;
  o.ppt = true;
  o.bosonic = true;
  double b = upper_bound(p, o).value;
  o.bosonic = false;
  double perm = upper_bound(p, o).value;
  EXPECT_LE(b, perm + 1e-6);
  EXPECT_NEAR(b, perm, 5e-5);
}

TEST(CsepHierarchy, SectorReductionMatchesDense) {
  // Objective diagonal in a 2+2 sector split of the spectator party.
  Rng rng(5);
  Mat g0 = random_psd(4, rng), g1 = random_psd(4, rng);
  g0 /= g0.trace().real() * 2.0;
  g1 /= g1.trace().real() * 2.0;
  Mat f = Mat::Zero(8, 8);
  // f = |0><0|_X (x) diag(g0 blocks) + |1><1|_X (x) diag(g1 blocks), with the
  // party-Y blocks placed on its {2,2} sectors.
  for (int x = 0; x < 2; ++x) {
    const Mat& g = x == 0 ? g0 : g1;
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < 2; ++m)
        for (int mp = 0; mp < 2; ++mp)
          f(x * 4 + 2 * s + m, x * 4 + 2 * s + mp) = g(2 * s + m, 2 * s + mp);
  }
  ConstrainedSepProblem p;
  p.f = LabeledOperator({{"x", 2}, {"y", 4}}, f);
  p.parties = {Party{2, {}, {}, 0}, Party{4, {}, {2, 2}, 0}};
  UpperBoundOptions o;
  o.k = 2;
  UpperBoundResult with_sectors = upper_bound(p, o);
  p.parties[1].sectors.clear();
  UpperBoundResult dense = upper_bound(p, o);
  EXPECT_NEAR(with_sectors.value, dense.value, 2e-5);
  EXPECT_LE(with_sectors.value, dense.value + 1e-6);
}

TEST(CsepSeesaw, BellProductOptimumReached) {
  ConstrainedSepProblem p = bell_problem();
  SeesawOptions o;
  o.restarts = 4;
  o.seed = 17;
  o.workers = 2;
  SeesawResult r = seesaw(p, o);
  EXPECT_NEAR(r.value, 0.5, 1e-7);
  ASSERT_EQ(r.factors.size(), 2u);
  for (const Mat& w : r.factors) {
    EXPECT_NEAR(w.trace().real(), 1.0, 1e-7);
    Eigen::SelfAdjointEigenSolver<Mat> es(w, Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(CsepSeesaw, DeterministicUnderSeedAndBelowUpperBound) {
  ConstrainedSepProblem p = bell_problem();
  SeesawOptions o;
  o.restarts = 3;
  o.seed = 99;
  SeesawResult a = seesaw(p, o);
  SeesawResult b = seesaw(p, o);
  EXPECT_EQ(a.best_restart, b.best_restart);
  EXPECT_DOUBLE_EQ(a.value, b.value);
  UpperBoundOptions uo;
  uo.k = 1;
  EXPECT_LE(a.value, upper_bound(p, uo).value + 1e-6);
}

TEST(CsepSeesaw, SuppliedInitsAreUsed) {
  ConstrainedSepProblem p = bell_problem();
  SeesawOptions o;
  o.restarts = 1;
  o.seed = 1;
  o.inits = {{bloch_state(0, 0, 1)}, {bloch_state(0, 0, 1)}};
  SeesawResult r = seesaw(p, o);
  EXPECT_NEAR(r.value, 0.5, 1e-7);
}

TEST(CsepSeesaw, InfeasiblePartyThrows) {
  ConstrainedSepProblem p = bell_problem();
  // Demand trace 2 on a unit-trace party.
  p.parties[0].constraint.add_trace_row(Mat(Mat::Identity(2, 2)), 2.0);
  EXPECT_THROW(seesaw(p, {}), InfeasibleParty);
  UpperBoundOptions o;
  EXPECT_THROW(upper_bound(p, o), InfeasibleParty);
}

TEST(CsepThreeParty, MergedRelaxationDominatesSeesaw) {
  // GHZ overlap: best product value is 1/2.
  Vec ghz = Vec::Zero(8);
  ghz(0) = ghz(7) = 1.0 / std::sqrt(2.0);
  ConstrainedSepProblem p;
  p.f = LabeledOperator({{"a", 2}, {"b", 2}, {"c", 2}},
                        Mat(ghz * ghz.adjoint()));
  p.parties = {Party{2, {}, {}, 0}, Party{2, {}, {}, 0}, Party{2, {}, {}, 0}};
  SeesawOptions so;
  so.restarts = 6;
  so.seed = 3;
  SeesawResult lower = seesaw(p, so);
  EXPECT_NEAR(lower.value, 0.5, 1e-6);
  UpperBoundOptions uo;
  uo.k = 1;
  UpperBoundResult upper = upper_bound(p, uo);
  EXPECT_GE(upper.value + 1e-6, lower.value);
  EXPECT_LE(upper.value, 1.0 + 1e-9);
}

TEST(CsepInterval, ErrorBoundArithmetic) {
  auto [lo, hi] = seesaw_error_bound(0.5, 1.0, 0.3);
  EXPECT_DOUBLE_EQ(lo, 0.5);
  EXPECT_NEAR(hi, 0.5, 1e-12);
  auto [lo2, hi2] = seesaw_error_bound(0.5, 0.5, 0.2);
  EXPECT_DOUBLE_EQ(lo2, 0.5);
  EXPECT_NEAR(hi2, 0.8, 1e-12);
  EXPECT_THROW(seesaw_error_bound(0.5, 0.0, 0.1), BadRadius);
  EXPECT_THROW(seesaw_error_bound(0.5, 1.2, 0.1), BadRadius);
}

TEST(CsepCertificate, QubitInstanceEnclosesSeparableValue) {
  ConstrainedSepProblem p = bell_problem();
  Polytope v;
  for (int s : {1, 2, 3}) {
    double e[3] = {0, 0, 0};
    e[s - 1] = 1.0;
    v.vertices.push_back(bloch_state(e[0], e[1], e[2]));
    v.vertices.push_back(bloch_state(-e[0], -e[1], -e[2]));
  }
  v.reference = bloch_state(0, 0, 0);
  SeesawCertificate cert = seesaw_certificate(p, v, 0);
  EXPECT_NEAR(cert.l_tau, 1.0 / std::sqrt(3.0), 1e-8);
  EXPECT_GT(cert.r_v, 0.0);
  EXPECT_LE(cert.r_v, cert.upper_from_bound + 1e-9);
  // The separable optimum (1/2) must land inside the enclosure.
  EXPECT_LE(cert.r_v, 0.5 + 1e-8);
  EXPECT_GE(cert.upper_from_bound, 0.5 - 1e-8);
}

TEST(CsepValidation, RejectsMalformedProblems) {
  ConstrainedSepProblem p = bell_problem();
  p.parties.pop_back();
  EXPECT_THROW(p.validate(), BadParameter);

  p = bell_problem();
  p.parties[0].dim = 3;
  EXPECT_THROW(p.validate(), DimMismatch);

  p = bell_problem();
  p.parties[1].sectors = {1, 2};
  EXPECT_THROW(p.validate(), BadParameter);

  p = bell_problem();
  p.parties[1].internal_cut = 3;
  EXPECT_THROW(p.validate(), BadParameter);

  p = bell_problem();
  p.f = LabeledOperator({{"a", 2}, {"b", 2}},
                        Mat(Mat::Identity(4, 4) +
                            cxd(0, 1) * Mat::Ones(4, 4)));
  EXPECT_THROW(p.validate(), BadParameter);

  ConstrainedSepProblem q = bell_problem();
  UpperBoundOptions o;
  o.k = 0;
  EXPECT_THROW(upper_bound(q, o), BadParameter);
  o.k = 3;
  o.side_cap = 4;
  EXPECT_THROW(upper_bound(q, o), SizeOverflow);
}

}  // namespace
}  // namespace qdisc

#include "qdisc/qops.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "qdisc/rng.hpp"

using namespace qdisc;

namespace {

constexpr double kTol = 1e-10;

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

LabeledOperator op(const std::string& name, const Mat& m) {
  return LabeledOperator({{name, static_cast<int>(m.rows())}}, m);
}

// Trace-preserving channel with `env` Kraus operators carved out of a Haar
// unitary on dim*env.
KrausChannel random_channel(int dim, int env, Rng& rng) {
  Mat u = random_unitary(dim * env, rng);
  KrausChannel ch{{"in", dim}, {"out", dim}, {}};
  for (int e = 0; e < env; ++e) ch.kraus_ops.push_back(u.block(e * dim, 0, dim, dim));
  return ch;
}

Mat apply_kraus(const KrausChannel& ch, const Mat& rho) {
  Mat out = Mat::Zero(ch.output.dim, ch.output.dim);
  for (const auto& k : ch.kraus_ops) out += k * rho * k.adjoint();
  return out;
}

Mat bell_state() {
  Vec v = max_entangled(2) / std::sqrt(2.0);
  return v * v.adjoint();
}

}  // namespace

TEST(LabeledOperatorTest, ValidatesShapeAndNames) {
  EXPECT_THROW(LabeledOperator({{"A", 2}, {"A", 3}}, Mat::Identity(6, 6)),
               DuplicateSystem);
  EXPECT_THROW(LabeledOperator({{"A", 2}, {"B", 2}}, Mat::Identity(3, 3)),
               DimMismatch);
  EXPECT_THROW(LabeledOperator({{"A", 0}}, Mat::Identity(1, 1)), BadParameter);
  LabeledOperator x({{"A", 2}, {"B", 3}}, Mat::Identity(6, 6));
  EXPECT_EQ(x.dim_of("B"), 3);
  EXPECT_THROW(x.index_of("C"), UnknownSystem);
  EXPECT_TRUE(x.is_hermitian());
  EXPECT_TRUE(x.is_psd());
  LabeledOperator y = x.relabeled("B", "C");
  EXPECT_TRUE(y.has_system("C"));
  EXPECT_FALSE(y.has_system("B"));
}

TEST(TensorTest, IdentityAndDiagonal) {
  LabeledOperator ia = op("A", Mat::Identity(2, 2));
  LabeledOperator ib = op("B", Mat::Identity(3, 3));
  LabeledOperator t = tensor(ia, ib);
  EXPECT_EQ(t.mat().rows(), 6);
  EXPECT_NEAR(max_abs(t.mat() - Mat::Identity(6, 6)), 0.0, kTol);

  LabeledOperator zz = tensor(op("A", pauli_z()), op("B", pauli_z()));
  Eigen::Vector4d diag(1, -1, -1, 1);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(zz.mat()(i, i).real(), diag(i), kTol);

  EXPECT_THROW(tensor(ia, op("A", Mat::Identity(2, 2))), DuplicateSystem);
}

TEST(PartialTraceTest, ProductAndBellMarginals) {
  Rng rng(11);
  Mat a = random_psd(2, rng), b = random_psd(3, rng);
  LabeledOperator ab = tensor(op("A", a), op("B", b));
  LabeledOperator ta = partial_trace(ab, {"B"});
  EXPECT_NEAR(max_abs(ta.mat() - b.trace() * a), 0.0, 1e-9);
  // Full trace preserved.
  EXPECT_NEAR(std::abs(ta.mat().trace() - ab.mat().trace()), 0.0, 1e-9);

  LabeledOperator bell({{"A", 2}, {"B", 2}}, bell_state());
  Mat marg = partial_trace(bell, {"B"}).mat();
  EXPECT_NEAR(max_abs(marg - 0.5 * Mat::Identity(2, 2)), 0.0, kTol);

  EXPECT_THROW(partial_trace(ab, {"Z"}), UnknownSystem);
}

TEST(PartialTraceTest, MultiSystemMatchesSequential) {
  Rng rng(12);
  LabeledOperator x = tensor(tensor(op("A", random_psd(2, rng)),
                                    op("B", random_psd(3, rng))),
                             op("C", random_psd(2, rng)));
  Mat both = partial_trace(x, {"A", "C"}).mat();
  Mat seq = partial_trace(partial_trace(x, {"A"}), {"C"}).mat();
  EXPECT_NEAR(max_abs(both - seq), 0.0, kTol);
}

TEST(PartialTransposeTest, ProductBellAndInvolution) {
  Rng rng(13);
  Mat a = random_gaussian(2, 2, rng), b = random_gaussian(3, 3, rng);
  LabeledOperator ab = tensor(op("A", a), op("B", b));
  Mat ptb = partial_transpose(ab, {"B"}).mat();
  EXPECT_NEAR(max_abs(ptb - kron(a, b.transpose())), 0.0, kTol);

  LabeledOperator bell({{"A", 2}, {"B", 2}}, bell_state());
  LabeledOperator bt = partial_transpose(bell, {"B"});
  EXPECT_NEAR(min_eig_herm(bt.mat()), -0.5, kTol);
  // Involution.
  EXPECT_NEAR(max_abs(partial_transpose(bt, {"B"}).mat() - bell.mat()), 0.0,
              kTol);
  // Trace and hermiticity preserved.
  EXPECT_NEAR(std::abs(bt.mat().trace() - bell.mat().trace()), 0.0, kTol);
  EXPECT_TRUE(bt.is_hermitian());

  // Separable mixtures stay PSD under partial transpose.
  Mat sep = Mat::Zero(4, 4);
  for (int i = 0; i < 3; ++i)
    sep += kron(random_pure_state(2, rng), random_pure_state(2, rng)) / 3.0;
  LabeledOperator sop({{"A", 2}, {"B", 2}}, sep);
  EXPECT_TRUE(partial_transpose(sop, {"B"}).is_psd(1e-9));
}

TEST(PermuteSystemsTest, ReordersFactors) {
  Rng rng(14);
  Mat a = random_gaussian(2, 2, rng), b = random_gaussian(3, 3, rng),
      c = random_gaussian(4, 4, rng);
  LabeledOperator x = tensor(tensor(op("A", a), op("B", b)), op("C", c));
  LabeledOperator y = permute_systems(x, {"C", "A", "B"});
  EXPECT_NEAR(max_abs(y.mat() - kron(kron(c, a), b)), 0.0, kTol);
  EXPECT_EQ(y.systems()[0].name, "C");
  // Spectrum-preserving: conjugation by a permutation keeps the trace.
  EXPECT_NEAR(std::abs(y.mat().trace() - x.mat().trace()), 0.0, kTol);
  // Round trip.
  LabeledOperator z = permute_systems(y, {"A", "B", "C"});
  EXPECT_NEAR(max_abs(z.mat() - x.mat()), 0.0, kTol);

  EXPECT_THROW(permute_systems(x, {"A", "B"}), BadPermutation);
  EXPECT_THROW(permute_systems(x, {"A", "B", "B"}), BadPermutation);
}

TEST(ChoiTest, IdentityPauliAndTracePreservation) {
  KrausChannel id{{"I", 2}, {"O", 2}, {Mat::Identity(2, 2)}};
  LabeledOperator d = choi(id);
  Vec phi = max_entangled(2);
  EXPECT_NEAR(max_abs(d.mat() - phi * phi.adjoint()), 0.0, kTol);
  EXPECT_NEAR(d.mat().trace().real(), 2.0, kTol);

  // Conjugation by sigma_x gives twice the projector onto (|01>+|10>)/sqrt(2).
  KrausChannel xch{{"I", 2}, {"O", 2}, {pauli_x()}};
  Vec psi = Vec::Zero(4);
  psi(1) = psi(2) = 1.0;
  EXPECT_NEAR(max_abs(choi(xch).mat() - psi * psi.adjoint()), 0.0, kTol);

  // Amplitude damping p=2/3: Choi marginal over the output is the identity.
  double p = 2.0 / 3.0;
  Mat b0(2, 2), b1(2, 2);
  b0 << 1, 0, 0, std::sqrt(1 - p);
  b1 << 0, std::sqrt(p), 0, 0;
  KrausChannel adc{{"I", 2}, {"O", 2}, {b0, b1}};
  EXPECT_TRUE(adc.is_trace_preserving());
  Mat ti = partial_trace(choi(adc), {"O"}).mat();
  EXPECT_NEAR(max_abs(ti - Mat::Identity(2, 2)), 0.0, kTol);
}

TEST(ChoiTest, ActionMatchesKraus) {
  Rng rng(15);
  KrausChannel ch = random_channel(3, 2, rng);
  LabeledOperator d = choi(ch);
  for (int t = 0; t < 5; ++t) {
    Mat rho = random_psd(3, rng);
    rho /= rho.trace().real();
    EXPECT_NEAR(max_abs(apply_choi(d, rho) - apply_kraus(ch, rho)), 0.0, kTol);
  }
}

TEST(LinkProductTest, DisjointReducesToTensor) {
  Rng rng(16);
  LabeledOperator x = op("A", random_psd(2, rng));
  LabeledOperator y = op("B", random_psd(3, rng));
  Mat z = link_product(x, y).mat();
  EXPECT_NEAR(max_abs(z - kron(x.mat(), y.mat())), 0.0, kTol);
}

TEST(LinkProductTest, LinkWithIdentityTracesOut) {
  Rng rng(17);
  // rho_IE * 1_EO = Tr_E(rho_IE) (x) 1_O.
  LabeledOperator rho({{"I", 2}, {"E", 3}}, random_psd(6, rng));
  LabeledOperator one({{"E", 3}, {"O", 2}}, Mat::Identity(6, 6));
  Mat z = link_product(rho, one).mat();
  Mat expect = kron(partial_trace(rho, {"E"}).mat(), Mat::Identity(2, 2));
  EXPECT_NEAR(max_abs(z - expect), 0.0, kTol);

  LabeledOperator bad({{"E", 2}, {"O", 2}}, Mat::Identity(4, 4));
  EXPECT_THROW(link_product(rho, bad), DimMismatch);
}

TEST(LinkProductTest, ComposesChoiMatrices) {
  Rng rng(18);
  KrausChannel f = random_channel(2, 2, rng);
  KrausChannel g = random_channel(2, 3, rng);
  // Name the middle system consistently: f: A->B, g: B->C.
  LabeledOperator df = choi(f).relabeled("in", "A").relabeled("out", "B");
  LabeledOperator dg = choi(g).relabeled("in", "B").relabeled("out", "C");
  LabeledOperator composed = link_product(df, dg);

  KrausChannel gf{{"A", 2}, {"C", 2}, {}};
  for (const auto& kg : g.kraus_ops)
    for (const auto& kf : f.kraus_ops) gf.kraus_ops.push_back(kg * kf);
  Mat expect = choi(gf).mat();
  EXPECT_NEAR(max_abs(composed.mat() - expect), 0.0, kTol);
  EXPECT_EQ(composed.systems()[0].name, "A");
  EXPECT_EQ(composed.systems()[1].name, "C");
}

TEST(LinkProductTest, AssociativeOnCompatibleTriple) {
  Rng rng(19);
  LabeledOperator x({{"A", 2}, {"B", 2}}, random_gaussian(4, 4, rng));
  LabeledOperator y({{"B", 2}, {"C", 3}}, random_gaussian(6, 6, rng));
  LabeledOperator z({{"C", 3}, {"D", 2}}, random_gaussian(6, 6, rng));
  Mat left = link_product(link_product(x, y), z).mat();
  Mat right = link_product(x, link_product(y, z)).mat();
  EXPECT_NEAR(max_abs(left - right), 0.0, 1e-9);
}

TEST(TraceAndReplaceTest, KernelLinearityIdempotence) {
  Rng rng(20);
  // Kernel case: anything of the form Y (x) 1_O/d_O maps to zero.
  Mat y = random_psd(3, rng);
  LabeledOperator x =
      tensor(op("A", y), op("O", Mat::Identity(2, 2) / 2.0));
  EXPECT_NEAR(max_abs(trace_and_replace(x, "O").mat()), 0.0, kTol);

  // Traceless O-factor is a fixed point.
  LabeledOperator w = tensor(op("A", y), op("O", pauli_z()));
  EXPECT_NEAR(max_abs(trace_and_replace(w, "O").mat() - w.mat()), 0.0, kTol);

  // Omega composed with partial trace over O is zero; Omega is idempotent.
  LabeledOperator r({{"A", 3}, {"O", 2}, {"B", 2}}, random_gaussian(12, 12, rng));
  LabeledOperator o1 = trace_and_replace(r, "O");
  EXPECT_NEAR(max_abs(partial_trace(o1, {"O"}).mat()), 0.0, kTol);
  EXPECT_NEAR(max_abs(trace_and_replace(o1, "O").mat() - o1.mat()), 0.0, kTol);
  // Linearity.
  LabeledOperator s({{"A", 3}, {"O", 2}, {"B", 2}}, random_gaussian(12, 12, rng));
  Mat lhs = trace_and_replace(
                LabeledOperator(r.systems(), r.mat() + 2.0 * s.mat()), "O")
                .mat();
  Mat rhs = trace_and_replace(r, "O").mat() + 2.0 * trace_and_replace(s, "O").mat();
  EXPECT_NEAR(max_abs(lhs - rhs), 0.0, kTol);
}

TEST(SymmetricSubspaceTest, DimensionsAndProjector) {
  EXPECT_EQ(symmetric_dim(2, 2), 3);
  EXPECT_EQ(symmetric_dim(3, 4), 15);
  EXPECT_EQ(symmetric_dim(4, 1), 4);
  EXPECT_THROW(symmetric_dim(50, 30), SizeOverflow);

  for (auto [d, k] : {std::pair{2, 2}, {2, 3}, {3, 2}}) {
    Mat v = symmetric_isometry(d, k);
    EXPECT_EQ(v.cols(), symmetric_dim(d, k));
    EXPECT_NEAR(max_abs(v.adjoint() * v -
                        Mat::Identity(v.cols(), v.cols())),
                0.0, kTol);
    // VV+ equals the average of all permutation unitaries.
    std::vector<int> sigma(k);
    for (int i = 0; i < k; ++i) sigma[i] = i;
    Mat avg = Mat::Zero(v.rows(), v.rows());
    int count = 0;
    do {
      avg += permutation_unitary(d, k, sigma);
      ++count;
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    avg /= count;
    EXPECT_NEAR(max_abs(v * v.adjoint() - avg), 0.0, kTol);
    // Projector commutes with every permutation unitary.
    do {
      Mat u = permutation_unitary(d, k, sigma);
      EXPECT_NEAR(max_abs(u * v * v.adjoint() - v * v.adjoint() * u), 0.0,
                  kTol);
    } while (std::next_permutation(sigma.begin(), sigma.end()));
  }
}

TEST(PermutationUnitaryTest, SwapFactorsAndHomomorphism) {
  EXPECT_NEAR(max_abs(permutation_unitary(2, 2, {0, 1}) - Mat::Identity(4, 4)),
              0.0, kTol);
  Mat swap = permutation_unitary(2, 2, {1, 0});
  Eigen::SelfAdjointEigenSolver<Mat> es(swap);
  Eigen::Vector4d expect(-1, 1, 1, 1);
  EXPECT_NEAR((es.eigenvalues() - expect).cwiseAbs().maxCoeff(), 0.0, kTol);

  // Factor placement: U_sigma (v0 (x) v1 (x) v2) puts v_{sigma^-1(j)} in slot j.
  Rng rng(21);
  int d = 2;
  Vec v0 = random_gaussian(d, 1, rng).col(0), v1 = random_gaussian(d, 1, rng).col(0),
      v2 = random_gaussian(d, 1, rng).col(0);
  std::vector<int> sigma = {2, 0, 1};  // sigma(0)=2, sigma(1)=0, sigma(2)=1
  Mat u = permutation_unitary(d, 3, sigma);
  Vec in = kron(kron(v0, v1), v2);
  // sigma^-1 = {1, 2, 0}: slot 0 gets v1, slot 1 gets v2, slot 2 gets v0.
  Vec expect_v = kron(kron(v1, v2), v0);
  EXPECT_NEAR(max_abs(u * in - expect_v), 0.0, kTol);

  // Composition homomorphism.
  std::vector<int> tau = {1, 2, 0};
  std::vector<int> comp(3);
  for (int i = 0; i < 3; ++i) comp[i] = sigma[tau[i]];
  EXPECT_NEAR(max_abs(permutation_unitary(d, 3, sigma) *
                          permutation_unitary(d, 3, tau) -
                      permutation_unitary(d, 3, comp)),
              0.0, kTol);

  EXPECT_THROW(permutation_unitary(2, 3, {0, 0, 1}), BadPermutation);
}

TEST(SplitIsometryTest, OrthonormalColumnsAndEmbedding) {
  for (auto [d, k, l] : {std::tuple{2, 2, 1}, {2, 3, 1}, {2, 3, 2}, {3, 2, 1}}) {
    Mat s = split_isometry(d, k, l);
    EXPECT_EQ(s.rows(), symmetric_dim(d, l) * symmetric_dim(d, k - l));
    EXPECT_EQ(s.cols(), symmetric_dim(d, k));
    EXPECT_NEAR(max_abs(s.adjoint() * s -
                        Mat::Identity(s.cols(), s.cols())),
                0.0, kTol);
  }
  // Consistency: (V_l (x) V_{k-l}) S = V_k.
  int d = 2, k = 3, l = 1;
  Mat vk = symmetric_isometry(d, k);
  Mat emb = kron(symmetric_isometry(d, l), symmetric_isometry(d, k - l)) *
            split_isometry(d, k, l);
  EXPECT_NEAR(max_abs(emb - vk), 0.0, kTol);
}

TEST(MatrixFunctionTest, SqrtInverseKernel) {
  Rng rng(22);
  Mat a = random_psd(4, rng);
  Mat r = sqrtm_psd(a);
  EXPECT_NEAR(max_abs(r * r - a), 0.0, 1e-9);

  // Singular PSD: a (+) 0 block.
  Mat s = Mat::Zero(5, 5);
  s.topLeftCorner(3, 3) = random_psd(3, rng);
  Mat is = inv_sqrtm_psd(s);
  Mat proj = is * s * is;  // support projector
  EXPECT_NEAR(max_abs(proj * proj - proj), 0.0, 1e-8);
  EXPECT_NEAR(proj.trace().real(), 3.0, 1e-8);
  Mat ker = kernel_projector(s);
  EXPECT_NEAR(max_abs(proj + ker - Mat::Identity(5, 5)), 0.0, 1e-8);

  EXPECT_NEAR(min_eig_herm(pauli_z()), -1.0, kTol);
}

TEST(RngTest, DeterministicAndUnitary) {
  Rng a(7), b(7), c(8);
  Mat ua = random_unitary(4, a), ub = random_unitary(4, b),
      uc = random_unitary(4, c);
  EXPECT_NEAR(max_abs(ua - ub), 0.0, 0.0);
  EXPECT_GT(max_abs(ua - uc), 1e-3);
  EXPECT_NEAR(max_abs(ua.adjoint() * ua - Mat::Identity(4, 4)), 0.0, kTol);

  Rng root(9);
  Rng f1 = root.fork(1), f2 = root.fork(2), f1b = Rng(9).fork(1);
  EXPECT_EQ(f1.next_u64(), f1b.next_u64());
  EXPECT_NE(f1.next_u64(), f2.next_u64());

  Mat rho = random_pure_state(3, a);
  EXPECT_NEAR(rho.trace().real(), 1.0, kTol);
  EXPECT_NEAR(max_abs(rho * rho - rho), 0.0, kTol);
}

TEST(KrausChannelTest, TracePreservationCheck) {
  KrausChannel good{{"I", 2}, {"O", 2}, {pauli_x()}};
  EXPECT_TRUE(good.is_trace_preserving());
  KrausChannel bad{{"I", 2}, {"O", 2}, {0.5 * pauli_x()}};
  EXPECT_FALSE(bad.is_trace_preserving());
}

#include "qdisc/channels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace qdisc;

namespace {

constexpr double kTol = 1e-10;

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(ClockShiftTest, PauliCaseAndRelations) {
  Mat sx(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  EXPECT_NEAR(max_abs(clock_shift(2, 0, 0) - Mat::Identity(2, 2)), 0.0, kTol);
  EXPECT_NEAR(max_abs(clock_shift(2, 1, 0) - sx), 0.0, kTol);
  EXPECT_NEAR(max_abs(clock_shift(2, 0, 1) - sz), 0.0, kTol);
  EXPECT_NEAR(max_abs(clock_shift(2, 1, 1) - sx * sz), 0.0, kTol);

  // X^d = 1 (cyclic of order d).
  for (int d : {2, 3, 4}) {
    Mat x = clock_shift(d, 1, 0);
    Mat p = Mat::Identity(d, d);
    for (int t = 0; t < d; ++t) p = x * p;
    EXPECT_NEAR(max_abs(p - Mat::Identity(d, d)), 0.0, kTol);
  }

  // Z X = omega X Z for d=3.
  Mat x = clock_shift(3, 1, 0), z = clock_shift(3, 0, 1);
  cxd omega = std::polar(1.0, 2.0 * std::numbers::pi / 3);
  EXPECT_NEAR(max_abs(z * x - omega * (x * z)), 0.0, kTol);

  EXPECT_THROW(clock_shift(3, 3, 0), BadIndex);
  EXPECT_THROW(clock_shift(3, 0, -1), BadIndex);
}

TEST(ClockShiftTest, TracelessAndSchurOrthogonal) {
  for (int d : {2, 3, 4, 5}) {
    double sum = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        cxd tr = clock_shift(d, i, j).trace();
        if (i != 0 || j != 0) EXPECT_NEAR(std::abs(tr), 0.0, 1e-9);
        sum += std::norm(tr);
      }
    EXPECT_NEAR(sum / (d * d), 1.0, 1e-9);
  }
}

TEST(PrincipalSqrtTest, BranchConvention) {
  EXPECT_NEAR(max_abs(principal_sqrt(Mat::Identity(3, 3)) -
                      Mat::Identity(3, 3)),
              0.0, kTol);

  // Half-phases in (-pi/2, pi/2]: sqrt(sigma_x) = e^{i pi/4}/sqrt(2) *
  // [[1, -i], [-i, 1]].
  Mat sx(2, 2);
  sx << 0, 1, 1, 0;
  Mat r = principal_sqrt(sx);
  cxd c = std::polar(1.0 / std::sqrt(2.0), std::numbers::pi / 4);
  Mat expect(2, 2);
  expect << c, -c * cxd(0, 1), -c * cxd(0, 1), c;
  EXPECT_NEAR(max_abs(r - expect), 0.0, kTol);
  EXPECT_NEAR(max_abs(r * r - sx), 0.0, kTol);

  Mat u = clock_shift(3, 1, 1);
  Mat s = principal_sqrt(u);
  EXPECT_NEAR(max_abs(s * s - u), 0.0, kTol);
  EXPECT_NEAR(max_abs(s.adjoint() * s - Mat::Identity(3, 3)), 0.0, kTol);

  EXPECT_THROW(principal_sqrt(2.0 * Mat::Identity(2, 2)), NotUnitary);
}

TEST(KrausFamiliesTest, BitFlipAndAmplitudeDamping) {
  // bit_flip(1) keeps only the identity term.
  KrausChannel bf1 = bit_flip(1.0);
  Mat rho(2, 2);
  rho << 0.7, cxd(0.1, 0.2), cxd(0.1, -0.2), 0.3;
  Mat out = Mat::Zero(2, 2);
  for (const auto& k : bf1.kraus_ops) out += k * rho * k.adjoint();
  EXPECT_NEAR(max_abs(out - rho), 0.0, kTol);

  KrausChannel adc0 = amplitude_damping(0.0);
  out.setZero();
  for (const auto& k : adc0.kraus_ops) out += k * rho * k.adjoint();
  EXPECT_NEAR(max_abs(out - rho), 0.0, kTol);

  KrausChannel adc = amplitude_damping(2.0 / 3.0);
  Mat b1(2, 2);
  b1 << 0, std::sqrt(2.0 / 3.0), 0, 0;
  EXPECT_NEAR(max_abs(adc.kraus_ops[1] - b1), 0.0, kTol);
  EXPECT_TRUE(adc.is_trace_preserving());

  EXPECT_THROW(bit_flip(1.5), BadParameter);
  EXPECT_THROW(amplitude_damping(-0.1), BadParameter);
}

TEST(WernerHolevoTest, ProjectorChois) {
  // d=2 antisymmetric: Choi = 2 |psi-><psi-|.
  Vec psim = Vec::Zero(4);
  psim(1) = 1.0 / std::sqrt(2.0);
  psim(2) = -1.0 / std::sqrt(2.0);
  EXPECT_NEAR(max_abs(werner_holevo(2, false).mat() -
                      2.0 * psim * psim.adjoint()),
              0.0, kTol);

  for (int d : {2, 3}) {
    LabeledOperator cs = werner_holevo(d, true), ca = werner_holevo(d, false);
    EXPECT_NEAR(max_abs(partial_trace(cs, {"O"}).mat() -
                        Mat::Identity(d, d)),
                0.0, kTol);
    EXPECT_NEAR(max_abs(partial_trace(ca, {"O"}).mat() -
                        Mat::Identity(d, d)),
                0.0, kTol);
    EXPECT_NEAR(std::abs(hs_inner(cs.mat(), ca.mat())), 0.0, kTol);
  }
}

TEST(EnsembleTest, UniformUnitaryAndValidation) {
  ChannelEnsemble pauli = preset_ensemble("pauli");
  EXPECT_EQ(pauli.members.size(), 4u);
  // Choi of the sigma_x conjugation is twice the triplet Bell state.
  Vec psip = Vec::Zero(4);
  psip(1) = psip(2) = 1.0;
  // members are ordered (i,j): (0,0), (0,1), (1,0), (1,1).
  EXPECT_NEAR(max_abs(pauli.members[2].second.mat() - psip * psip.adjoint()),
              0.0, kTol);
  for (const auto& [q, c] : pauli.members) {
    EXPECT_NEAR(q, 0.25, 1e-15);
    EXPECT_NEAR(c.mat().trace().real(), 2.0, kTol);
  }

  ChannelEnsemble single = uniform_unitary_ensemble({Mat::Identity(3, 3)});
  EXPECT_EQ(single.members.size(), 1u);
  EXPECT_NEAR(single.members[0].first, 1.0, 1e-15);

  ChannelEnsemble qutrit = preset_ensemble("clock_shift:3");
  EXPECT_EQ(qutrit.members.size(), 9u);
  qutrit.validate();

  EXPECT_THROW(uniform_unitary_ensemble({2.0 * Mat::Identity(2, 2)}),
               NotUnitary);

  ChannelEnsemble bad = pauli;
  bad.members[0].first = 0.5;
  EXPECT_THROW(bad.validate(), InvalidEnsemble);
}

TEST(EnsembleTest, TensorWithIdentity) {
  ChannelEnsemble pauli = preset_ensemble("pauli");
  ChannelEnsemble same = tensor_with_identity(pauli, 1);
  EXPECT_EQ(same.input.dim, 2);
  EXPECT_NEAR(max_abs(same.members[0].second.mat() -
                      pauli.members[0].second.mat()),
              0.0, kTol);

  ChannelEnsemble lifted = tensor_with_identity(
      uniform_unitary_ensemble({Mat::Identity(2, 2)}), 2);
  EXPECT_EQ(lifted.input.dim, 4);
  EXPECT_NEAR(lifted.members[0].second.mat().trace().real(), 4.0, kTol);
  // Lifting the identity channel gives the 4-dim identity channel's Choi.
  EXPECT_NEAR(max_abs(lifted.members[0].second.mat() -
                      unitary_choi(Mat::Identity(4, 4)).mat()),
              0.0, kTol);
  lifted.validate();
}

TEST(EnsembleTest, TwoCopy) {
  ChannelEnsemble e = preset_ensemble("adc_bf_id");
  ChannelEnsemble twice = two_copy(e);
  EXPECT_EQ(twice.input.dim, 4);
  EXPECT_EQ(twice.output.dim, 4);
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    EXPECT_NEAR(twice.members[i].first, e.members[i].first, 1e-15);
    EXPECT_NEAR(twice.members[i].second.mat().trace().real(), 4.0, 1e-9);
    // Member equals C (x) C after regrouping (I1,O1,I2,O2) -> (I1,I2,O1,O2).
    const Mat& c = e.members[i].second.mat();
    LabeledOperator plain(
        {{"I1", 2}, {"O1", 2}, {"I2", 2}, {"O2", 2}}, kron(c, c));
    Mat expect =
        permute_systems(plain, {"I1", "I2", "O1", "O2"}).mat();
    EXPECT_NEAR(max_abs(twice.members[i].second.mat() - expect), 0.0, kTol);
  }
  twice.validate();
}

TEST(PresetTest, ParseErrors) {
  EXPECT_THROW(preset_ensemble("unknown"), ParseError);
  EXPECT_THROW(preset_ensemble("clock_shift:x"), ParseError);
  EXPECT_THROW(preset_ensemble("clock_shift:1"), ParseError);
  ChannelEnsemble wh = preset_ensemble("werner_holevo:3");
  EXPECT_EQ(wh.members.size(), 2u);
  wh.validate();
  preset_ensemble("sqrt_pauli").validate();
  preset_ensemble("sqrt_clock_shift:3").validate();
}

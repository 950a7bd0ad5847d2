#include "qdisc/channels.hpp"

#include <cmath>
#include <numbers>

namespace qdisc {

namespace {

ChannelEnsemble make_ensemble(int di, int dout,
                              std::vector<std::pair<double, LabeledOperator>> m) {
  ChannelEnsemble e{{"I", di}, {"O", dout}, std::move(m)};
  e.validate();
  return e;
}

}  // namespace

void ChannelEnsemble::validate() const {
  if (members.empty()) throw InvalidEnsemble("ensemble has no members");
  double total = 0.0;
  for (const auto& [q, c] : members) {
    if (q < 0) throw InvalidEnsemble("negative weight");
    total += q;
    if (c.systems().size() != 2 || c.systems()[0].dim != input.dim ||
        c.systems()[1].dim != output.dim)
      throw InvalidEnsemble("Choi systems do not match ensemble metadata");
    if (!c.is_psd(1e-9)) throw InvalidEnsemble("Choi not PSD");
    Mat marg = ptrace(c.mat(), {input.dim, output.dim}, {1});
    if ((marg - Mat::Identity(input.dim, input.dim)).cwiseAbs().maxCoeff() >
        1e-9)
      throw InvalidEnsemble("Choi input marginal is not the identity");
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidEnsemble("weights do not sum to 1");
}

Mat clock_shift(int d, int i, int j) {
  if (d < 1 || i < 0 || i >= d || j < 0 || j >= d)
    throw BadIndex("clock_shift: indices must lie in [0, d)");
  Mat x = Mat::Zero(d, d), z = Mat::Zero(d, d);
  const cxd omega = std::polar(1.0, 2.0 * std::numbers::pi / d);
  for (int l = 0; l < d; ++l) {
    x((l + 1) % d, l) = 1.0;
    z(l, l) = std::pow(omega, l);
  }
  Mat xi = Mat::Identity(d, d), zj = Mat::Identity(d, d);
  for (int t = 0; t < i; ++t) xi = x * xi;
  for (int t = 0; t < j; ++t) zj = z * zj;
  return xi * zj;
}

Mat principal_sqrt(const Mat& u) {
  const long d = u.rows();
  if (u.cols() != d ||
      (u.adjoint() * u - Mat::Identity(d, d)).cwiseAbs().maxCoeff() >
          kValidationTol)
    throw NotUnitary("principal_sqrt: input is not unitary");
  // A unitary is normal, so its Schur form is diagonal; halve the eigenphases.
  Eigen::ComplexSchur<Mat> schur(u);
  Vec s(d);
  for (long i = 0; i < d; ++i)
    s(i) = std::polar(1.0, 0.5 * std::arg(schur.matrixT()(i, i)));
  Mat q = schur.matrixU();
  Mat r = q * s.asDiagonal() * q.adjoint();
  if ((r * r - u).cwiseAbs().maxCoeff() > 1e-10)
    throw NotUnitary("principal_sqrt: square-root verification failed");
  return r;
}

KrausChannel bit_flip(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw BadParameter("bit_flip: p outside [0,1]");
  Mat sx(2, 2);
  sx << 0, 1, 1, 0;
  return {{"I", 2},
          {"O", 2},
          {std::sqrt(p) * Mat::Identity(2, 2), std::sqrt(1.0 - p) * sx}};
}

KrausChannel amplitude_damping(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw BadParameter("amplitude_damping: p outside [0,1]");
  Mat b0(2, 2), b1(2, 2);
  b0 << 1, 0, 0, std::sqrt(1.0 - p);
  b1 << 0, std::sqrt(p), 0, 0;
  return {{"I", 2}, {"O", 2}, {b0, b1}};
}

LabeledOperator werner_holevo(int d, bool symmetric) {
  if (d < 2) throw BadParameter("werner_holevo: d must be >= 2");
  Mat swap = Mat::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) swap(i * d + j, j * d + i) = 1.0;
  Mat proj = (Mat::Identity(d * d, d * d) + (symmetric ? 1.0 : -1.0) * swap) / 2.0;
  double scale = 2.0 / (symmetric ? d + 1 : d - 1);
  return LabeledOperator({{"I", d}, {"O", d}}, scale * proj);
}

LabeledOperator unitary_choi(const Mat& u) {
  const int d = static_cast<int>(u.rows());
  if (u.cols() != d ||
      (u.adjoint() * u - Mat::Identity(d, d)).cwiseAbs().maxCoeff() >
          kValidationTol)
    throw NotUnitary("unitary_choi: input is not unitary");
  return choi(KrausChannel{{"I", d}, {"O", d}, {u}});
}

ChannelEnsemble uniform_unitary_ensemble(const std::vector<Mat>& unitaries) {
  if (unitaries.empty())
    throw InvalidEnsemble("uniform_unitary_ensemble: empty list");
  const int d = static_cast<int>(unitaries[0].rows());
  std::vector<std::pair<double, LabeledOperator>> members;
  for (const auto& u : unitaries) {
    if (u.rows() != d) throw DimMismatch("unitaries of unequal dimension");
    members.emplace_back(1.0 / unitaries.size(), unitary_choi(u));
  }
  return make_ensemble(d, d, std::move(members));
}

ChannelEnsemble tensor_with_identity(const ChannelEnsemble& e, int d_E) {
  if (d_E < 1) throw BadParameter("tensor_with_identity: d_E must be >= 1");
  if (d_E == 1) return e;
  const int di = e.input.dim, dout = e.output.dim;
  LabeledOperator phi = unitary_choi(Mat::Identity(d_E, d_E))
                            .relabeled("I", "E")
                            .relabeled("O", "F");
  std::vector<std::pair<double, LabeledOperator>> members;
  for (const auto& [q, c] : e.members) {
    LabeledOperator big = tensor(c, phi);
    big = permute_systems(big, {"I", "E", "O", "F"});
    members.emplace_back(
        q, LabeledOperator({{"I", di * d_E}, {"O", dout * d_E}}, big.mat()));
  }
  return make_ensemble(di * d_E, dout * d_E, std::move(members));
}

ChannelEnsemble two_copy(const ChannelEnsemble& e) {
  const int di = e.input.dim, dout = e.output.dim;
  std::vector<std::pair<double, LabeledOperator>> members;
  for (const auto& [q, c] : e.members) {
    LabeledOperator second({{"I2", di}, {"O2", dout}}, c.mat());
    LabeledOperator big =
        tensor(LabeledOperator({{"I1", di}, {"O1", dout}}, c.mat()), second);
    big = permute_systems(big, {"I1", "I2", "O1", "O2"});
    members.emplace_back(
        q, LabeledOperator({{"I", di * di}, {"O", dout * dout}}, big.mat()));
  }
  return make_ensemble(di * di, dout * dout, std::move(members));
}

ChannelEnsemble preset_ensemble(const std::string& name) {
  auto clock_family = [](int d, bool take_sqrt) {
    std::vector<Mat> us;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Mat u = clock_shift(d, i, j);
        us.push_back(take_sqrt ? principal_sqrt(u) : u);
      }
    return uniform_unitary_ensemble(us);
  };
  auto parse_dim = [&](const std::string& prefix) {
    int d = 0;
    try {
      d = std::stoi(name.substr(prefix.size()));
    } catch (const std::exception&) {
      throw ParseError("bad dimension in preset: " + name);
    }
    if (d < 2) throw ParseError("preset dimension must be >= 2: " + name);
    return d;
  };

  if (name == "pauli") return clock_family(2, false);
  if (name == "sqrt_pauli") return clock_family(2, true);
  if (name.rfind("clock_shift:", 0) == 0)
    return clock_family(parse_dim("clock_shift:"), false);
  if (name.rfind("sqrt_clock_shift:", 0) == 0)
    return clock_family(parse_dim("sqrt_clock_shift:"), true);
  if (name.rfind("werner_holevo:", 0) == 0) {
    int d = parse_dim("werner_holevo:");
    return make_ensemble(
        d, d, {{0.5, werner_holevo(d, true)}, {0.5, werner_holevo(d, false)}});
  }
  if (name == "adc_bf_id") {
    std::vector<std::pair<double, LabeledOperator>> members{
        {1.0 / 3.0, choi(amplitude_damping(2.0 / 3.0))},
        {1.0 / 3.0, choi(bit_flip(1.0 / 3.0))},
        {1.0 / 3.0, unitary_choi(Mat::Identity(2, 2))}};
    return make_ensemble(2, 2, std::move(members));
  }
  throw ParseError("unknown ensemble preset: " + name);
}

}  // namespace qdisc

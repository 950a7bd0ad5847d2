#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qdisc/qops.hpp"

namespace qdisc {

// Discrimination instance: weighted channels I -> O stored as Choi matrices
// on systems [input, output] (input factor first, trace = input dim).
struct ChannelEnsemble {
  SystemLabel input;
  SystemLabel output;
  std::vector<std::pair<double, LabeledOperator>> members;

  // Throws InvalidEnsemble unless weights form a distribution (1e-12) and
  // every Choi is PSD with identity marginal on the input (1e-9).
  void validate() const;
};

// X_d^i Z_d^j with X_d = sum_l |l+1 mod d><l|, Z_d = diag(omega^l).
Mat clock_shift(int d, int i, int j);

// Principal square root of a unitary: eigenphases halved with the branch
// taken in (-pi, pi].
Mat principal_sqrt(const Mat& u);

// rho -> p rho + (1-p) sigma_x rho sigma_x.
KrausChannel bit_flip(double p);

// Amplitude damping with decay probability p.
KrausChannel amplitude_damping(double p);

// Choi matrix proportional to the projector onto the (anti)symmetric
// subspace of C^d (x) C^d, normalized to a channel (Tr_out = 1_in).
LabeledOperator werner_holevo(int d, bool symmetric);

// Uniform ensemble of unitary conjugation channels.
ChannelEnsemble uniform_unitary_ensemble(const std::vector<Mat>& unitaries);

// Members C_i (x) id_{d_E} on input I*E, output O*E (quantum-memory lift).
ChannelEnsemble tensor_with_identity(const ChannelEnsemble& e, int d_E);

// Members C_i (x) C_i as channels I1 I2 -> O1 O2.
ChannelEnsemble two_copy(const ChannelEnsemble& e);

// Choi of conjugation by a unitary, as a LabeledOperator on [I, O].
LabeledOperator unitary_choi(const Mat& u);

// Named instances addressable from the CLI: pauli, clock_shift:d,
// sqrt_clock_shift:d, sqrt_pauli, adc_bf_id, werner_holevo:d.
ChannelEnsemble preset_ensemble(const std::string& name);

}  // namespace qdisc

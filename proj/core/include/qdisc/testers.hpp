#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qdisc/channels.hpp"
#include "qdisc/sdp.hpp"

namespace qdisc {

// Strategy class a tester is interpreted against.  SingleCopy elements live
// on systems (I,O); the two-copy classes on (I1,O1,I2,O2).
enum class TesterScenario {
  SingleCopy,
  Parallel2,
  Adaptive2,
  ClassicallyAdaptive2,
};

// Measure-and-guess strategy on channels: one PSD element per guess, acting
// on the channel input/output systems.  p(guess i | channel C) = Tr(T^i C).
struct Tester {
  TesterScenario scenario = TesterScenario::SingleCopy;
  std::vector<LabeledOperator> elements;

  const std::vector<SystemLabel>& systems() const;
};

// Physical implementation: input state entangled with a memory register,
// an intermediate channel between the two calls (two-copy adaptive only),
// and a final POVM on memory and last output.
struct Realization {
  LabeledOperator state;       // on (I,E) or (I1,E1)
  LabeledOperator processing;  // Choi on (E1,O1,I2,E2); empty for one call
  std::vector<LabeledOperator> povm;  // on (E,O) or (E2,O2)
};

// Diagnostics from validate(): most negative element eigenvalue plus named
// constraint residuals; never throws, malformed input shows up as a
// "structure" residual of infinity.
struct TesterReport {
  double min_element_eig = 0.0;
  std::vector<std::pair<std::string, double>> residuals;

  bool ok(double tol = 1e-9) const;
  double residual(const std::string& name) const;  // BadParameter if absent
};

enum class MembershipStatus { Member, NonMember, Inconclusive };

// Certificate-backed class decision; Inconclusive is a first-class outcome
// (the classically-adaptive test is sound but not complete).
struct MembershipResult {
  MembershipStatus status = MembershipStatus::Inconclusive;
  std::string certificate;
};

struct TesterOptimum {
  double value = 0.0;
  Tester tester;
  Solution solution;
};

// sum_i q_i Tr(T^i C^i); two-copy testers pair with two_copy ensembles.
double success_probability(const Tester& t, const ChannelEnsemble& e);

// Maximum over single-copy testers: PSD T^i with sum T^i = sigma (x) 1_O.
TesterOptimum optimal_single_copy(const ChannelEnsemble& e,
                                  const SolveOptions& o = {});

// Maximum over two-copy parallel testers (single-copy program over the
// composite input/output pair of a two_copy ensemble).
TesterOptimum optimal_parallel(const ChannelEnsemble& e2,
                               const SolveOptions& o = {});

// Maximum over two-copy adaptive testers: sum T^i = R (x) 1_{O2} with
// Tr_{I2}(R) = sigma (x) 1_{O1}.
TesterOptimum optimal_adaptive(const ChannelEnsemble& e2,
                               const SolveOptions& o = {});

// Upper bound on classically adaptive strategies valid for every register
// size: the adaptive program with each element additionally constrained to
// have positive partial transpose across the (I1 O1 | I2 O2) cut.
double ca_relaxation_bound(const ChannelEnsemble& e2,
                           const SolveOptions& o = {});

// Scenario-specific marginal diagnostics; see TesterReport.
TesterReport validate(const Tester& t);

// Class membership with certificate.  For ClassicallyAdaptive2 a register
// size L >= 1 is required and `k` sets the relaxation level used for
// non-membership detection (k = 1 is the partial-transpose level).
MembershipResult membership(const Tester& t, TesterScenario cls, int L = 0,
                            int k = 1, const SolveOptions& o = {});

// State + POVM implementing a valid single-copy tester exactly, with memory
// dimension d_E = d_I.  Throws NotATester when validate() fails.
Realization realize_single_copy(const Tester& t);

// State + intermediate channel + POVM implementing a valid two-copy
// adaptive tester exactly, with d_E1 = d_I1 and d_E2 = d_I1 d_O1 d_I2.
Realization realize_adaptive(const Tester& t);

// Success statistics of a realization replayed against an ensemble via the
// link product; used to cross-check realize_* round trips.
double realized_success_probability(const Realization& r,
                                    const ChannelEnsemble& e,
                                    TesterScenario scenario);

}  // namespace qdisc

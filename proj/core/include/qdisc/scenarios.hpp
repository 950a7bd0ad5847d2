#pragma once

#include <vector>

#include "qdisc/channels.hpp"
#include "qdisc/csep.hpp"
#include "qdisc/testers.hpp"

namespace qdisc {

// Strategy class a discrimination instance is compiled against.
enum class ScenarioKind {
  MemorylessSingleCopy,     // one call, bare input state
  MemoryDESingleCopy,       // one call, entangled memory of dimension d_E
  ParallelMemoryDE,         // two parallel calls, joint memory d_E
  AdaptiveNoClassical,      // two sequential calls, quantum memory only
  AdaptiveClassicalMemory,  // two sequential calls, quantum memory + register
  ClassicallyAdaptive,      // two sequential calls, classical register only
};

// Discrimination instance plus the resources the strategy may use. Two-call
// kinds expect a two_copy ensemble (composite input/output systems whose
// dimensions are perfect squares).
struct Scenario {
  ScenarioKind kind = ScenarioKind::MemorylessSingleCopy;
  ChannelEnsemble ensemble;
  int d_E = 1;             // single-call / parallel memory dimension
  int d_E1 = 1, d_E2 = 1;  // memory between the calls / into the measurement
  int L = 0;               // classical register size; 0 picks the default
                           // (the ensemble size) where a register applies

  // Throws BadParameter when a dimension is nonpositive, a field is set that
  // the kind cannot use, or a two-call kind gets a non-square ensemble.
  void validate() const;
};

// One call, no memory: party 0 is the direct sum of the POVM elements over a
// guess flag (rescaled to unit trace), constrained so the elements resolve
// the identity; party 1 is the input state. The separable optimum equals the
// best memoryless strategy.
ConstrainedSepProblem compile_memoryless_single_copy(const ChannelEnsemble& e);

// One call with a d_E-dimensional entangled memory: the memoryless compile
// of the ensemble lifted by an identity channel on the memory. d_E = 1 is
// identical to the memoryless compile.
ConstrainedSepProblem compile_memory_dE(const ChannelEnsemble& e, int d_E);

// Two sequential calls with quantum memories d_E1 (between the calls) and
// d_E2 (into the final measurement) and a classical register of size L:
// party 0 is the input state, party 1 the direct sum of the instrument
// branches, party 2 the direct sum of the register-conditioned POVMs.
// L = 1 removes the classical register. Throws SizeOverflow when the
// compiled objective would be too large.
ConstrainedSepProblem compile_adaptive(const ChannelEnsemble& e2, int d_E1,
                                       int d_E2, int L);

// Two sequential calls linked only by a classical register of size L:
// party 0 is the direct sum of the second-round testers (one per register
// value and guess), party 1 the direct sum of the first-round tester
// elements that write the register.
ConstrainedSepProblem compile_classically_adaptive(const ChannelEnsemble& e2,
                                                   int L);

// Dispatch on the scenario kind; fills in the default register size.
ConstrainedSepProblem compile(const Scenario& s);

// Optimal success probability for the uniform clock-shift family on d
// levels discriminated with a d_E-dimensional memory: min{1, d_E/d}.
double oracle_clock_shift(int d, int d_E);

// Optimal memory-d_E success probability for a uniform ensemble of unitary
// conjugations that form a group up to global phases and act irreducibly:
// (1/N) d min{d, d_E}. Throws NotAGroup when the set is not closed under
// multiplication up to phase and NotIrreducible when the representation
// fails the character-norm test.
double oracle_group_uniform(const std::vector<Mat>& unitaries, int d_E);

// Cap on two-call adaptive strategies without a classical register:
// min{d_O d_E2 / N, 1}.
double oracle_adaptive_no_cc_cap(int n, int d_O, int d_E2);

// Classically adaptive tester with register size L = d that discriminates
// the two-copy clock-shift family on d levels perfectly: the first round
// prepares |0>, measures in the computational basis and stores the outcome;
// the second round prepares the uniform superposition and measures in the
// Fourier basis.
Tester fourier_feed_forward_strategy(int d);

}  // namespace qdisc

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qdisc/qops.hpp"
#include "qdisc/sdp.hpp"

namespace qdisc {

// Affine constraint "action * vec(w) = target" on an operator w, where vec
// stacks columns (entry (m,n) sits at index n*dim + m). An empty action means
// no constraint beyond the implicit unit trace.
struct AffineMap {
  Mat action;
  Vec target;

  bool empty() const { return action.size() == 0; }
  int rows() const { return static_cast<int>(action.rows()); }
  // Appends the row  Tr(coeff * w) = value.
  void add_trace_row(const Mat& coeff, cxd value);
  // Residual max |action*vec(w) - target| of a candidate operator.
  double residual(const Mat& w) const;
};

// Builds the map  Tr_traced(w) = target  on a composite of the given factor
// dimensions; `traced` lists factor positions to trace out.
AffineMap affine_partial_trace_equals(const std::vector<int>& dims,
                                      const std::vector<int>& traced,
                                      const Mat& target);

// One feasible-set factor: unit-trace PSD operators of the given dimension
// satisfying the affine constraint. `sectors`, when nonempty, lists sizes of
// consecutive basis blocks outside of which every feasible operator may be
// assumed zero (a block-diagonal restriction valid without loss of
// generality); relaxations exploit it to shrink variables. `internal_cut`,
// when positive, declares that each sector factorizes as (sector/cut) x cut
// with the trailing factor of that size, and partial transposition across
// that split is additionally imposed in relaxations.
struct Party {
  int dim = 0;
  AffineMap constraint;
  std::vector<int> sectors;
  int internal_cut = 0;
};

// Maximize Tr[F (w_1 x ... x w_p)] over party factors; F carries one labeled
// system per party, in party order.
struct ConstrainedSepProblem {
  LabeledOperator f;
  std::vector<Party> parties;

  // Throws BadParameter / DimMismatch on inconsistent shapes, party counts
  // other than 2 or 3, non-hermitian F, or sector sizes not summing to dim.
  void validate() const;
};

// Knobs for the symmetric-extension relaxation.
struct UpperBoundOptions {
  int k = 1;                 // extension level (>= 1)
  bool ppt = true;           // partial-transpose cuts on every extension split
  bool bosonic = true;       // restrict to the symmetric subspace (else only
                             // permutation-invariance rows are imposed)
  int extend_party = -1;     // party replicated k times; -1 = lowest dim
  int side_cap = 5000;       // real block-side guard (SizeOverflow beyond)
  SolveOptions solve;
};

// Where each variable block of the relaxation lives.
struct HierarchyLayout {
  int extended_party = 0;           // index after any tail merge
  int sym_dim = 0;                  // extension-factor dimension
  std::vector<int> sector_of_block; // spectator sector per variable block
  std::vector<int> block_sides;     // complex side per variable block
};

struct UpperBoundResult {
  double value = 0.0;        // certified bound when `certified`, else primal
  bool certified = false;
  Solution solution;
  std::vector<Mat> extension;  // variable blocks, one per spectator sector
};

// Merges parties 1 and 2 of a three-party problem into one composite party
// whose constraint couples each original map with the marginal on the other
// factor; the composite is ordered (party1-sector-major, party2 trailing) and
// records the internal split for partial-transpose cuts.
ConstrainedSepProblem merge_tail_parties(const ConstrainedSepProblem& p);

// Assembles the level-k relaxation as a conic program (three-party problems
// are tail-merged first). Exposed for feasibility-style reuse and debugging.
ConicProblem build_hierarchy(const ConstrainedSepProblem& p,
                             const UpperBoundOptions& o,
                             HierarchyLayout* layout = nullptr);

// Certified upper bound on the separable optimum via the level-k extension
// with optional transposition cuts.
UpperBoundResult upper_bound(const ConstrainedSepProblem& p,
                             const UpperBoundOptions& o = {});

struct SeesawOptions {
  int restarts = 20;
  std::uint64_t seed = 0;
  int max_iters = 200;       // full best-response cycles per restart
  double conv_tol = 1e-9;    // stop when a cycle improves less than this
  int workers = 1;           // restarts solved concurrently
  // Optional feasible starting points per party, cycled across restarts;
  // parties without any fall back to Haar-random states projected onto the
  // feasible set by a nearest-feasible-point SDP (operator-norm metric).
  std::vector<std::vector<Mat>> inits;
  SolveOptions solve;
};

struct SeesawResult {
  double value = 0.0;          // objective of the returned feasible factors
  std::vector<Mat> factors;    // one operator per party
  int best_restart = -1;
  int iterations = 0;          // cycles used by the winning restart
};

// Alternating best-response lower bound; deterministic for a fixed seed and
// restart count (ties resolve to the lowest restart index). Throws
// InfeasibleParty when some party admits no feasible operator.
SeesawResult seesaw(const ConstrainedSepProblem& p, const SeesawOptions& o = {});

// Maximizes Tr(H w) over one party's feasible set with every other factor
// fixed; returns the solved program (primal optimizer in block 0).
Solution best_response(const ConstrainedSepProblem& p, int party,
                       const std::vector<Mat>& fixed,
                       const SolveOptions& o = {});

// Inner polytope spanned by feasible operators of one party, with a strictly
// interior reference point used to scale facet bounds.
struct Polytope {
  std::vector<Mat> vertices;
  Mat reference;
};

// Largest s such that tau + s*(Y - tau) lies in the vertex hull for the whole
// feasible set Y, computed facet by facet (one SDP per facet). Throws
// DegenerateReference when the reference is not strictly interior and
// GeometryError when facet enumeration is out of reach.
double approximation_radius(const Polytope& v, const Party& party,
                            const SolveOptions& o = {});

// Worst objective against the reference: min over the other party's set of
// Tr[Tr_tau-side(F (tau x 1)) w]; `tau_party` names the party tau lives on.
double f_tau(const ConstrainedSepProblem& p, const Mat& tau, int tau_party,
             const SolveOptions& o = {});

// Two-sided enclosure [r_V, r_V/l + ((l-1)/l) f] of the separable optimum
// from a vertex maximum r_V, a radius l in (0,1], and a reference value f.
// Throws BadRadius for l outside (0,1].
std::pair<double, double> seesaw_error_bound(double r_v, double l, double f);

struct SeesawCertificate {
  double r_v = 0.0;
  double l_tau = 0.0;
  double f_tau = 0.0;
  double upper_from_bound = 0.0;
};

// Vertex sweep + radius + reference value in one call; r_v is reported from
// feasible primal points while the enclosure endpoint uses certified bounds.
SeesawCertificate seesaw_certificate(const ConstrainedSepProblem& p,
                                     const Polytope& v, int tau_party,
                                     const SolveOptions& o = {});

}  // namespace qdisc

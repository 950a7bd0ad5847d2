#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qdisc/qops.hpp"

namespace qdisc {

// One upper-triangle entry (row <= col) of a hermitian coefficient matrix.
struct HermTriplet {
  int row = 0;
  int col = 0;
  cxd value{0.0, 0.0};
};

// Sparse hermitian coefficient attached to one PSD block; the lower triangle
// is implied by conjugate symmetry.
struct BlockCoeff {
  int block = 0;
  std::vector<HermTriplet> entries;
};

// sum_b Tr(coeff_b X_b) = rhs  (value is real since both sides are hermitian).
struct EqualityRow {
  std::vector<BlockCoeff> terms;
  double rhs = 0.0;
};

// Extra cone constraint PT_1(E X_b E^dag) >= 0 where the lifted space factors
// as d1 (x) d2 and the partial transpose acts on the first factor.  An empty
// `embed` means the identity (then d1*d2 must equal the block side);
// otherwise embed has d1*d2 rows and orthonormal columns (E^dag E = 1).
struct ConeLift {
  int block = 0;
  Mat embed;
  int d1 = 1;
  int d2 = 1;
};

// Normal form: hermitian PSD blocks, affine equality rows, a linear
// objective, and optional partial-transpose cone lifts.
struct ConicProblem {
  std::vector<std::pair<std::string, int>> blocks;  // (name, side)
  std::vector<Mat> objective;  // hermitian per block; empty matrix = zero
  bool maximize = true;
  std::vector<EqualityRow> equalities;
  std::vector<ConeLift> lifts;
  // Index of a row whose coefficient is a positive multiple of the identity
  // on every block (e.g. a global trace normalization); used to repair the
  // dual certificate.  -1 when absent.
  int trace_row = -1;

  void validate() const;  // throws on malformed data
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalTrouble };

struct Tolerances {
  double feas = 1e-8;
  double gap = 1e-8;
};

enum class Backend { Auto, Dense, Splitting };

struct SolveOptions {
  Tolerances tol;
  Backend backend = Backend::Auto;
  int max_iters = 0;       // 0 = backend default
  bool certify_dual = true;
  int verbosity = 0;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalTrouble;
  double primal_value = 0.0;
  double dual_value = 0.0;
  std::vector<Mat> block_values;
  // True when dual_value was rebuilt from an exactly dual-feasible point and
  // therefore bounds the optimum on its own (up to floating-point rounding).
  bool dual_certified = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double gap = 0.0;
  std::string backend;
};

// Solve to the requested tolerances.  Solver failures surface as a Solution
// with status NumericalTrouble, never as a silent wrong answer.
Solution solve(const ConicProblem& p, const SolveOptions& opts = {});

// Objective-free feasibility classification via an exact-penalty phase-1.
Solution check_feasibility(const ConicProblem& p, const SolveOptions& opts = {});

// [[Re, -Im], [Im, Re]] real-symmetric embedding of a hermitian matrix.
Eigen::MatrixXd real_embedding(const Mat& h);

// Write the problem (real embedded, lifts materialized) in sparse SDPA form.
void dump_problem(const ConicProblem& p, const std::string& path);

}  // namespace qdisc

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qdisc/sdp.hpp"

// Internal real-symmetric form of a ConicProblem.  Complex hermitian blocks
// become [[Re, -Im], [Im, Re]] real blocks (side doubled); row functionals
// pick up a factor 2 on the right-hand side, and the objective is halved so
// reported values match the complex problem.
namespace qdisc::detail {

using RMat = Eigen::MatrixXd;

struct RTriplet {
  int block;
  int i;
  int j;
  double v;
};

struct RealRow {
  std::vector<RTriplet> entries;  // both triangles
  double rhs = 0.0;
};

// PT_ax1(embed X_block embed^T) >= 0 over real dims {2, d1, d2}.
struct RealLift {
  int block;
  RMat embed;  // (2*d1*d2) x side(block); empty = identity
  int d1;
  int d2;
  int side() const { return 2 * d1 * d2; }
};

struct RealProblem {
  std::vector<int> sides;
  std::vector<RMat> C;  // dense symmetric per block (maximize sense)
  std::vector<RealRow> rows;
  std::vector<RealLift> lifts;
  int trace_row = -1;
  std::vector<double> trace_coeff;  // identity multiple per block when valid
  double sign = 1.0;                // +1: original was maximize
  bool infeasible_row = false;      // empty row with nonzero rhs seen
};

RealProblem to_real(const ConicProblem& p);

// Partial transpose on the middle factor of dims {2, d1, d2}.
RMat real_pt(const RMat& m, int d1, int d2);

// Forward lift map PT(E X E^T) and its adjoint E^T PT(P) E.
RMat lift_apply(const RealLift& l, const RMat& x);
RMat lift_adjoint(const RealLift& l, const RMat& p);

// J-average a real block and reassemble the complex hermitian matrix.
Mat complex_from_real(const RMat& r);

// Lift-free expansion for the dense backend: one extra PSD block per lift,
// identified with the lifted image by equality rows (appended after the
// original rows, sym-basis order).
struct Materialized {
  std::vector<int> sides;
  std::vector<RMat> C;
  std::vector<RealRow> rows;
  int orig_rows = 0;
  int orig_blocks = 0;
};
Materialized materialize(const RealProblem& rp);

struct RawResult {
  bool converged = false;
  std::vector<RMat> block_values;  // original blocks only
  std::vector<double> y;           // duals for the original rows
  std::vector<RMat> cone_duals;    // per lift (PSD up to rounding)
  int iterations = 0;
  double primal_residual = 0.0;
  double gap = 0.0;
  bool infeasible = false;
  bool unbounded = false;
};

RawResult solve_dense(const RealProblem& rp, const SolveOptions& opts);
RawResult solve_splitting(const RealProblem& rp, const SolveOptions& opts);

// Exact-penalty phase-1: returns the minimal equality violation scale.
double dense_phase1(const RealProblem& rp, const SolveOptions& opts);

// Recompute the dual bound from an exactly dual-feasible point: clip the cone
// duals to PSD, form the block residuals A*(y) - C - sum_j L_j*(P_j), and
// repair any negative part by bumping the trace-row dual.  ok=false when no
// valid trace row exists and the residual is not already PSD.
struct CertResult {
  double value = 0.0;
  bool ok = false;
};
CertResult polish_dual(const RealProblem& rp, std::vector<double> y,
                       std::vector<RMat> cone_duals);

double eval_objective(const RealProblem& rp, const std::vector<RMat>& x);

}  // namespace qdisc::detail

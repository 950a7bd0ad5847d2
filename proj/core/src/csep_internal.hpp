#pragma once

#include <utility>
#include <vector>

#include "qdisc/csep.hpp"

namespace qdisc {
namespace csep_detail {

// One real-valued constraint Tr(h w) = t with hermitian coefficient h.
struct HermRow {
  Mat h;
  double t = 0.0;
};

// Splits every (complex) row of an affine map into real and imaginary
// hermitian parts; rows that vanish entirely are dropped, rows with a zero
// coefficient but nonzero value are kept so that infeasibility surfaces.
std::vector<HermRow> hermitian_rows(const AffineMap& a, int dim);

// Appends the upper triangle of a hermitian coefficient to an equality row.
void add_hermitian_coeff(EqualityRow& row, int block, const Mat& h,
                         double prune = 1e-13);

// Emits the real and imaginary parts of  sum_b Tr(m_b X_b) = rhs  as
// equality rows (coefficients may be non-hermitian); all-zero rows with a
// negligible right-hand side are skipped.
void add_complex_equation(ConicProblem& cp,
                          const std::vector<std::pair<int, Mat>>& coeffs,
                          cxd rhs, double prune = 1e-13);

// Unit-trace PSD set of one party as a conic program: block 0 is the
// operator, the trace row is registered for certificate repair.
ConicProblem party_program(const Party& party, const Mat& objective,
                           bool maximize);

// Objective of a best response: others' factors contracted out of F,
// hermitized. `fixed` holds one operator per party; entry `party` is ignored.
Mat response_objective(const ConstrainedSepProblem& p, int party,
                       const std::vector<Mat>& fixed);

}  // namespace csep_detail
}  // namespace qdisc

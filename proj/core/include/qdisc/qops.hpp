#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

// lapacke.h (pulled in via EIGEN_USE_LAPACKE) leaks the C99 imaginary-unit
// macro, which breaks any header using I as an identifier.
#ifdef I
#undef I
#endif

#include "qdisc/errors.hpp"

namespace qdisc {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Tolerance for hermiticity/positivity validation predicates.
inline constexpr double kValidationTol = 1e-10;

// A named tensor factor.
struct SystemLabel {
  std::string name;
  int dim = 1;
};

// Dense complex operator over an ordered list of named tensor factors.
// Factor 0 is the slowest index (row-major Kronecker convention).
class LabeledOperator {
 public:
  LabeledOperator() = default;
  LabeledOperator(std::vector<SystemLabel> systems, Mat entries);

  const std::vector<SystemLabel>& systems() const { return systems_; }
  const Mat& mat() const { return mat_; }
  Mat& mat() { return mat_; }
  Eigen::Index side() const { return mat_.rows(); }

  std::vector<int> dims() const;
  // Index of a named system; throws UnknownSystem.
  int index_of(const std::string& name) const;
  bool has_system(const std::string& name) const;
  int dim_of(const std::string& name) const;

  bool is_hermitian(double tol = kValidationTol) const;
  bool is_psd(double tol = kValidationTol) const;

  // Copy with one system renamed (dimension unchanged).
  LabeledOperator relabeled(const std::string& old_name,
                            const std::string& new_name) const;

 private:
  std::vector<SystemLabel> systems_;
  Mat mat_;
};

// Kraus representation of a channel; output x input matrices.
struct KrausChannel {
  SystemLabel input;
  SystemLabel output;
  std::vector<Mat> kraus_ops;

  // Checks sum_k K^dag K = identity within tol.
  bool is_trace_preserving(double tol = kValidationTol) const;
};

// ---- core tensor algebra ----

// Kronecker product with concatenated system lists; names must be disjoint.
LabeledOperator tensor(const LabeledOperator& x, const LabeledOperator& y);

// Trace out the named systems.
LabeledOperator partial_trace(const LabeledOperator& x,
                              const std::vector<std::string>& over);

// Transpose the named tensor factors only.
LabeledOperator partial_transpose(const LabeledOperator& x,
                                  const std::vector<std::string>& over);

// Reorder tensor factors to the given name order (a permutation of current).
LabeledOperator permute_systems(const LabeledOperator& x,
                                const std::vector<std::string>& new_order);

// Tr_E[(X^{T_E} tensor 1)(1 tensor Y)] over the shared-name systems E;
// reduces to the tensor product when no names are shared. Result systems are
// ordered [X-private..., Y-private...].
LabeledOperator link_product(const LabeledOperator& x,
                             const LabeledOperator& y);

// X - Tr_O(X) tensor 1_O/d_O on the named system (trace-and-replace).
LabeledOperator trace_and_replace(const LabeledOperator& x,
                                  const std::string& over);

// Choi matrix D = sum_ij |i><j| tensor C(|i><j|), systems [input, output],
// unnormalized: Tr D = d_input for channels.
LabeledOperator choi(const KrausChannel& ch);

// Apply a channel given by its Choi matrix to a state on the input system:
// Tr_in[D (rho^T tensor 1_out)].
Mat apply_choi(const LabeledOperator& choi_matrix, const Mat& rho);

// ---- raw-matrix helpers (no labels) ----

// Unnormalized maximally entangled vector sum_i |i>|i>.
Vec max_entangled(int d);

// Partial trace/transpose/permutation on raw matrices with explicit dims.
Mat ptrace(const Mat& x, const std::vector<int>& dims,
           const std::vector<int>& traced);
Mat ptranspose(const Mat& x, const std::vector<int>& dims,
               const std::vector<int>& transposed);
// new_order[j] = current position of the factor that moves to slot j.
Mat psys_permute(const Mat& x, const std::vector<int>& dims,
                 const std::vector<int>& new_order);
Mat kron(const Mat& a, const Mat& b);

// Hilbert-Schmidt inner product Tr(A^dag B).
cxd hs_inner(const Mat& a, const Mat& b);

// ---- symmetric subspace machinery ----

// Isometry V: Sym_k(C^d) -> (C^d)^{tensor k}, V^dag V = 1,
// V V^dag = symmetric projector. Columns indexed by nondecreasing
// multi-indices in lexicographic order.
Mat symmetric_isometry(int d, int k);

// dim Sym_k(C^d) = binom(d+k-1, k); throws SizeOverflow on overflow.
long symmetric_dim(int d, int k);

// Unitary permuting tensor factors: U (v_1 x ... x v_k) has v_{sigma^-1(j)}
// in slot j; sigma is a permutation of {0..k-1}.
Mat permutation_unitary(int d, int k, const std::vector<int>& sigma);

// (V_l tensor V_{k-l})^dag V_k: splits a bosonic state into an l | k-l
// bipartition of copies. Used for partial transposes over subsets of copies.
Mat split_isometry(int d, int k, int l);

// ---- matrix functions ----

// Hermitian principal square root (eigenvalues clipped at 0).
Mat sqrtm_psd(const Mat& a);

// Moore-Penrose pseudoinverse of the PSD square root: eigenvalues below
// rel_tol * max are treated as zero.
Mat inv_sqrtm_psd(const Mat& a, double rel_tol = 1e-10);

// Projector onto the kernel of a PSD matrix (complement of its image).
Mat kernel_projector(const Mat& a, double rel_tol = 1e-10);

// Smallest eigenvalue of a hermitian matrix.
double min_eig_herm(const Mat& a);

}  // namespace qdisc

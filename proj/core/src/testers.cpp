#include "qdisc/testers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "csep_internal.hpp"
#include "qdisc/errors.hpp"

namespace qdisc {
namespace {

using csep_detail::add_complex_equation;
using csep_detail::add_hermitian_coeff;

std::vector<std::string> class_systems(TesterScenario s) {
  if (s == TesterScenario::SingleCopy) return {"I", "O"};
  return {"I1", "O1", "I2", "O2"};
}

// Elements permuted to the canonical system order of the given class.
std::vector<LabeledOperator> canonical_elements(
    const std::vector<LabeledOperator>& elements, TesterScenario cls) {
  if (elements.empty()) throw BadParameter("tester has no elements");
  const std::vector<std::string> order = class_systems(cls);
  std::vector<LabeledOperator> out;
  out.reserve(elements.size());
  for (const auto& e : elements) {
    if (e.systems().size() != order.size())
      throw DimMismatch("tester element carries the wrong number of systems");
    out.push_back(permute_systems(e, order));
    if (out.back().dims() != out.front().dims())
      throw DimMismatch("tester elements have mismatched dimensions");
  }
  return out;
}

LabeledOperator element_sum(const std::vector<LabeledOperator>& els) {
  Mat w = els.front().mat();
  for (std::size_t i = 1; i < els.size(); ++i) w += els[i].mat();
  return LabeledOperator(els.front().systems(), std::move(w));
}

// Frobenius distance of w from (marginal/d (x) identity) on named systems.
double marginal_residual(const LabeledOperator& w,
                         const std::vector<std::string>& over) {
  LabeledOperator rest = partial_trace(w, over);
  double dprod = 1.0;
  for (const auto& name : over) dprod *= w.dim_of(name);
  LabeledOperator rebuilt(rest.systems(), Mat(rest.mat() / dprod));
  for (const auto& name : over) {
    const int d = w.dim_of(name);
    rebuilt = tensor(rebuilt, LabeledOperator({{name, d}}, Mat::Identity(d, d)));
  }
  std::vector<std::string> order;
  for (const auto& s : w.systems()) order.push_back(s.name);
  rebuilt = permute_systems(rebuilt, order);
  return (w.mat() - rebuilt.mat()).norm();
}

// Unitary with E X E^dag = psys_permute(X, dims, order).
Mat perm_unitary(const std::vector<int>& dims, const std::vector<int>& order) {
  long n = 1;
  for (int d : dims) n *= d;
  std::vector<int> ndims(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) ndims[j] = dims[order[j]];
  Mat e = Mat::Zero(n, n);
  std::vector<int> mi(dims.size());
  for (long c = 0; c < n; ++c) {
    long rem = c;
    for (int j = static_cast<int>(dims.size()) - 1; j >= 0; --j) {
      mi[j] = static_cast<int>(rem % dims[j]);
      rem /= dims[j];
    }
    long r = 0;
    for (std::size_t j = 0; j < order.size(); ++j)
      r = r * ndims[j] + mi[order[j]];
    e(r, c) = 1.0;
  }
  return e;
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    default: return "numerical trouble";
  }
}

struct TesterProgram {
  ConicProblem cp;
  int elements = 0;  // blocks [0, elements) hold the tester elements
};

// max sum_i Tr(obj_i T^i) over PSD T^i with sum_i T^i = sigma (x) 1_O and
// Tr(sigma) = 1.  The entry rows already pin every block trace, so a global
// trace row is exactly dependent on them; it is added only when a dual
// certificate is wanted, at some cost to interior-point conditioning.
TesterProgram single_copy_program(const std::vector<Mat>& objs, int d_in,
                                  int d_out, bool with_trace_row) {
  const int n = static_cast<int>(objs.size());
  const int side = d_in * d_out;
  TesterProgram tp;
  tp.elements = n;
  ConicProblem& cp = tp.cp;
  cp.maximize = true;
  for (int i = 0; i < n; ++i)
    cp.blocks.emplace_back("t" + std::to_string(i), side);
  cp.blocks.emplace_back("sigma", d_in);
  cp.objective.resize(n + 1);
  for (int i = 0; i < n; ++i)
    cp.objective[i] = 0.5 * (objs[i] + objs[i].adjoint());

  for (int r = 0; r < side; ++r) {
    for (int c = r; c < side; ++c) {
      std::vector<std::pair<int, Mat>> coeffs;
      Mat sel = Mat::Zero(side, side);
      sel(c, r) = 1.0;
      for (int i = 0; i < n; ++i) coeffs.emplace_back(i, sel);
      const int a = r / d_out, x = r % d_out;
      const int b = c / d_out, y = c % d_out;
      if (x == y) {
        Mat ms = Mat::Zero(d_in, d_in);
        ms(b, a) = -1.0;
        coeffs.emplace_back(n, std::move(ms));
      }
      add_complex_equation(cp, coeffs, 0.0);
    }
  }
  EqualityRow unit;
  add_hermitian_coeff(unit, n, Mat::Identity(d_in, d_in));
  unit.rhs = 1.0;
  cp.equalities.push_back(std::move(unit));

  if (with_trace_row) {
    EqualityRow all;
    for (int i = 0; i < n; ++i)
      add_hermitian_coeff(all, i, Mat::Identity(side, side));
    add_hermitian_coeff(all, n, Mat::Identity(d_in, d_in));
    all.rhs = d_out + 1.0;
    cp.trace_row = static_cast<int>(cp.equalities.size());
    cp.equalities.push_back(std::move(all));
  }
  return tp;
}

// max sum_i Tr(obj_i T^i) over PSD T^i (ordering I1,I2,O1,O2) with
// sum T^i = R (x) 1_{O2}, Tr_{I2}(R) = sigma (x) 1_{O1}, Tr(sigma) = 1.
// With element_ppt each T^i is also constrained to stay positive under
// partial transposition across the (I1 O1 | I2 O2) cut.
TesterProgram adaptive_program(const std::vector<Mat>& objs, int d_in,
                               int d_out, bool element_ppt,
                               bool with_trace_row) {
  const int n = static_cast<int>(objs.size());
  const int side = d_in * d_in * d_out * d_out;
  const int rside = d_in * d_in * d_out;
  TesterProgram tp;
  tp.elements = n;
  ConicProblem& cp = tp.cp;
  cp.maximize = true;
  for (int i = 0; i < n; ++i)
    cp.blocks.emplace_back("t" + std::to_string(i), side);
  cp.blocks.emplace_back("r", rside);
  cp.blocks.emplace_back("sigma", d_in);
  cp.objective.resize(n + 2);
  for (int i = 0; i < n; ++i)
    cp.objective[i] = 0.5 * (objs[i] + objs[i].adjoint());

  // sum_i T^i = R (x) 1_{O2}
  for (int r = 0; r < side; ++r) {
    for (int c = r; c < side; ++c) {
      std::vector<std::pair<int, Mat>> coeffs;
      Mat sel = Mat::Zero(side, side);
      sel(c, r) = 1.0;
      for (int i = 0; i < n; ++i) coeffs.emplace_back(i, sel);
      const int p = r / d_out, x = r % d_out;
      const int g = c / d_out, y = c % d_out;
      if (x == y) {
        Mat ms = Mat::Zero(rside, rside);
        ms(g, p) = -1.0;
        coeffs.emplace_back(n, std::move(ms));
      }
      add_complex_equation(cp, coeffs, 0.0);
    }
  }
  // Tr_{I2}(R) = sigma (x) 1_{O1} on the (I1,O1) pair
  const int pair_side = d_in * d_out;
  for (int u = 0; u < pair_side; ++u) {
    for (int v = u; v < pair_side; ++v) {
      const int a = u / d_out, x = u % d_out;
      const int b = v / d_out, y = v % d_out;
      std::vector<std::pair<int, Mat>> coeffs;
      Mat mr = Mat::Zero(rside, rside);
      for (int m = 0; m < d_in; ++m)
        mr((b * d_in + m) * d_out + y, (a * d_in + m) * d_out + x) = 1.0;
      coeffs.emplace_back(n, std::move(mr));
      if (x == y) {
        Mat ms = Mat::Zero(d_in, d_in);
        ms(b, a) = -1.0;
        coeffs.emplace_back(n + 1, std::move(ms));
      }
      add_complex_equation(cp, coeffs, 0.0);
    }
  }
  EqualityRow unit;
  add_hermitian_coeff(unit, n + 1, Mat::Identity(d_in, d_in));
  unit.rhs = 1.0;
  cp.equalities.push_back(std::move(unit));

  if (with_trace_row) {
    EqualityRow all;
    for (int i = 0; i < n; ++i)
      add_hermitian_coeff(all, i, Mat::Identity(side, side));
    add_hermitian_coeff(all, n, Mat::Identity(rside, rside));
    add_hermitian_coeff(all, n + 1, Mat::Identity(d_in, d_in));
    all.rhs = static_cast<double>(d_out) * d_out + d_out + 1.0;
    cp.trace_row = static_cast<int>(cp.equalities.size());
    cp.equalities.push_back(std::move(all));
  }

  if (element_ppt) {
    Mat cut = perm_unitary({d_in, d_in, d_out, d_out}, {0, 2, 1, 3});
    for (int i = 0; i < n; ++i)
      cp.lifts.push_back(ConeLift{i, cut, d_in * d_out, d_in * d_out});
  }
  return tp;
}

std::vector<Mat> weighted_chois(const ChannelEnsemble& e) {
  std::vector<Mat> objs;
  objs.reserve(e.members.size());
  for (const auto& [q, c] : e.members) objs.push_back(q * c.mat());
  return objs;
}

int exact_sqrt(int n, const char* what) {
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (r * r != n) throw DimMismatch(std::string(what) + " is not a two-copy composite");
  return r;
}

Solution solve_or_throw(const ConicProblem& cp, const SolveOptions& o,
                        const char* what) {
  Solution s = solve(cp, o);
  if (s.status != SolveStatus::Optimal && s.status != SolveStatus::Infeasible &&
      o.backend == Backend::Auto) {
    // Perfect-discrimination optima sit on degenerate faces where the
    // interior-point method can stall; the splitting backend is slower but
    // does not mind them.
    SolveOptions retry = o;
    retry.backend = Backend::Splitting;
    if (retry.max_iters == 0) retry.max_iters = 200000;
    s = solve(cp, retry);
  }
  if (s.status != SolveStatus::Optimal)
    throw SolverFailure(std::string(what) + ": solver returned " +
                        status_name(s.status));
  return s;
}

std::string worst_residual(const TesterReport& rep) {
  std::ostringstream os;
  os.precision(3);
  if (rep.min_element_eig < 0)
    os << " min element eigenvalue " << rep.min_element_eig << ";";
  for (const auto& [name, value] : rep.residuals)
    if (value > 1e-9) os << " " << name << " residual " << value << ";";
  return os.str();
}

// Detects the computational-basis feed-forward form: every element diagonal
// in the first output basis, each O1=j block equal to sigma (x) S^{i|j} with
// the S^{i|j} forming a valid single-copy tester for every j.  Sound but not
// complete: failure means "no certificate", not non-membership.
MembershipResult pinch_member(const std::vector<LabeledOperator>& els, int L) {
  const int d_i1 = els[0].dim_of("I1"), d_o1 = els[0].dim_of("O1");
  const int d_i2 = els[0].dim_of("I2"), d_o2 = els[0].dim_of("O2");
  MembershipResult none{MembershipStatus::Inconclusive, ""};
  if (L < d_o1) return none;
  const int tail = d_i2 * d_o2;
  double scale = 0.0, offdiag = 0.0;
  for (const auto& e : els) scale = std::max(scale, e.mat().norm());
  for (const auto& e : els) {
    const Mat& m = e.mat();
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c)
        if ((r / tail) % d_o1 != (c / tail) % d_o1)
          offdiag += std::norm(m(r, c));
  }
  if (std::sqrt(offdiag) > 1e-9 * (1.0 + scale)) return none;

  LabeledOperator w = element_sum(els);
  Mat sigma = partial_trace(w, {"O1", "I2", "O2"}).mat() / (d_o1 * d_o2);
  const int bside = d_i1 * tail;
  double recon = 0.0;
  std::vector<std::vector<Mat>> cond(els.size(), std::vector<Mat>(d_o1));
  for (std::size_t i = 0; i < els.size(); ++i) {
    for (int j = 0; j < d_o1; ++j) {
      Mat b(bside, bside);
      for (int r = 0; r < bside; ++r)
        for (int c = 0; c < bside; ++c) {
          const int r1 = r / tail, rt = r % tail;
          const int c1 = c / tail, ct = c % tail;
          b(r, c) = els[i].mat()((r1 * d_o1 + j) * tail + rt,
                                 (c1 * d_o1 + j) * tail + ct);
        }
      Mat s = ptrace(b, {d_i1, tail}, {0});
      recon = std::max(recon, (b - kron(sigma, s)).norm() / (1.0 + b.norm()));
      if (min_eig_herm(0.5 * (s + s.adjoint())) < -1e-9) return none;
      cond[i][j] = std::move(s);
    }
  }
  if (recon > 1e-9) return none;
  for (int j = 0; j < d_o1; ++j) {
    Mat q = Mat::Zero(tail, tail);
    for (std::size_t i = 0; i < els.size(); ++i) q += cond[i][j];
    LabeledOperator ql({{"I2", d_i2}, {"O2", d_o2}}, q);
    if (marginal_residual(ql, {"O2"}) > 1e-9 * (1.0 + q.norm())) return none;
    if (std::abs(q.trace().real() / d_o2 - 1.0) > 1e-9) return none;
  }
  std::ostringstream os;
  os << "explicit feed-forward decomposition: the first round measures O1 in "
        "the computational basis (R^j = sigma (x) |j><j|), the second round "
        "plays the O1=j diagonal blocks; register size " << d_o1 << " <= L = "
     << L << ", worst reconstruction residual " << recon;
  return {MembershipStatus::Member, os.str()};
}

// Level-k splitting relaxation for register size L: tester elements must
// split as T^i = sum_j W^{ij} with each W^{ij} extendible to a symmetric,
// partial-transpose-positive operator across the (I1 O1 | I2 O2) cut and
// each column sum free of correlation with the last output.  Infeasibility
// certifies non-membership.
MembershipResult ca_level_k(const std::vector<LabeledOperator>& els, int L,
                            int k, const SolveOptions& o) {
  const int d_o1 = els[0].dim_of("O1"), d_o2 = els[0].dim_of("O2");
  const int d_a = els[0].dim_of("I1") * d_o1;
  const int d_b = els[0].dim_of("I2") * d_o2;
  const int n = static_cast<int>(els.size());
  const long nsb = k == 1 ? d_b : symmetric_dim(d_b, k);
  const long side = d_a * nsb;
  if (side > 4000)
    throw SizeOverflow("membership relaxation block of side " +
                       std::to_string(side) + " is too large");
  Mat v;
  std::vector<Mat> pair_blocks;
  if (k > 1) {
    v = symmetric_isometry(d_b, k);
    long stride = 1;
    for (int t = 0; t < k - 1; ++t) stride *= d_b;
    pair_blocks.resize(static_cast<std::size_t>(d_b) * d_b);
    for (int p = 0; p < d_b; ++p)
      for (int q = 0; q < d_b; ++q) {
        Mat g = Mat::Zero(v.rows(), nsb);
        g.middleRows(p * stride, stride) = v.middleRows(q * stride, stride);
        pair_blocks[p * d_b + q] = v.adjoint() * g;
      }
  }
  // Coefficient on the extension block for a sparse single-copy coefficient.
  auto lift = [&](const Mat& h) -> Mat {
    if (k == 1) return h;
    Mat out = Mat::Zero(side, side);
    for (int p = 0; p < h.rows(); ++p)
      for (int q = 0; q < h.cols(); ++q) {
        if (std::abs(h(p, q)) < 1e-14) continue;
        Mat ea = Mat::Zero(d_a, d_a);
        ea(p / d_b, q / d_b) = h(p, q);
        out += kron(ea, pair_blocks[(p % d_b) * d_b + (q % d_b)]);
      }
    return out;
  };

  ConicProblem cp;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < L; ++j)
      cp.blocks.emplace_back("w" + std::to_string(i) + "_" + std::to_string(j),
                             static_cast<int>(side));
  const int full = d_a * d_b;
  // sum_j W^{ij} = T^i
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < full; ++r)
      for (int c = r; c < full; ++c) {
        Mat sel = Mat::Zero(full, full);
        sel(c, r) = 1.0;
        Mat lifted = lift(sel);
        std::vector<std::pair<int, Mat>> coeffs;
        for (int j = 0; j < L; ++j) coeffs.emplace_back(i * L + j, lifted);
        add_complex_equation(cp, coeffs, els[i].mat()(r, c));
      }
  }
  // per register value j: sum_i W^{ij} = (something) (x) 1_{O2}
  for (int j = 0; j < L; ++j) {
    for (int r = 0; r < full; ++r)
      for (int c = r; c < full; ++c) {
        Mat m = Mat::Zero(full, full);
        m(c, r) = 1.0;
        if (r % d_o2 == c % d_o2) {
          const int pre_r = r / d_o2, pre_c = c / d_o2;
          for (int y = 0; y < d_o2; ++y)
            m(pre_c * d_o2 + y, pre_r * d_o2 + y) -= 1.0 / d_o2;
        }
        if (m.cwiseAbs().maxCoeff() < 1e-14) continue;
        Mat lifted = lift(m);
        std::vector<std::pair<int, Mat>> coeffs;
        for (int i = 0; i < n; ++i) coeffs.emplace_back(i * L + j, lifted);
        add_complex_equation(cp, coeffs, 0.0);
      }
  }
  EqualityRow all;
  double total = 0.0;
  for (int b = 0; b < n * L; ++b)
    add_hermitian_coeff(all, b, Mat::Identity(side, side));
  for (const auto& e : els) total += e.mat().trace().real();
  all.rhs = total;
  cp.trace_row = static_cast<int>(cp.equalities.size());
  cp.equalities.push_back(std::move(all));

  for (int b = 0; b < n * L; ++b) {
    cp.lifts.push_back(ConeLift{b, Mat(), d_a, static_cast<int>(nsb)});
    for (int l = 1; l < k; ++l) {
      Mat embed = kron(Mat::Identity(d_a, d_a), split_isometry(d_b, k, l));
      cp.lifts.push_back(
          ConeLift{b, std::move(embed),
                   static_cast<int>(d_a * symmetric_dim(d_b, l)),
                   static_cast<int>(symmetric_dim(d_b, k - l))});
    }
  }
  Solution s = check_feasibility(cp, o);
  std::ostringstream os;
  if (s.status == SolveStatus::Infeasible) {
    os << "no decomposition with register size " << L
       << " exists: the level-" << k << " splitting relaxation is infeasible";
    return {MembershipStatus::NonMember, os.str()};
  }
  if (s.status == SolveStatus::Optimal) {
    os << "the level-" << k
       << " splitting relaxation is feasible and no explicit decomposition "
          "was found";
    return {MembershipStatus::Inconclusive, os.str()};
  }
  os << "feasibility solve ended with " << status_name(s.status);
  return {MembershipStatus::Inconclusive, os.str()};
}

}  // namespace

const std::vector<SystemLabel>& Tester::systems() const {
  if (elements.empty()) throw BadParameter("tester has no elements");
  return elements.front().systems();
}

bool TesterReport::ok(double tol) const {
  if (!(min_element_eig >= -tol)) return false;
  for (const auto& [name, value] : residuals)
    if (!(value <= tol)) return false;
  return true;
}

double TesterReport::residual(const std::string& name) const {
  for (const auto& [n, v] : residuals)
    if (n == name) return v;
  throw BadParameter("no residual named " + name);
}

double success_probability(const Tester& t, const ChannelEnsemble& e) {
  std::vector<LabeledOperator> els = canonical_elements(t.elements, t.scenario);
  if (els.size() != e.members.size())
    throw DimMismatch("element count differs from the ensemble size");
  double p = 0.0;
  if (t.scenario == TesterScenario::SingleCopy) {
    if (els[0].dim_of("I") != e.input.dim || els[0].dim_of("O") != e.output.dim)
      throw DimMismatch("tester systems do not match the ensemble");
    for (std::size_t i = 0; i < els.size(); ++i)
      p += e.members[i].first *
           (els[i].mat() * e.members[i].second.mat()).trace().real();
    return p;
  }
  if (els[0].dim_of("I1") * els[0].dim_of("I2") != e.input.dim ||
      els[0].dim_of("O1") * els[0].dim_of("O2") != e.output.dim)
    throw DimMismatch("tester systems do not match the two-copy ensemble");
  for (std::size_t i = 0; i < els.size(); ++i) {
    LabeledOperator tt = permute_systems(els[i], {"I1", "I2", "O1", "O2"});
    p += e.members[i].first *
         (tt.mat() * e.members[i].second.mat()).trace().real();
  }
  return p;
}

TesterOptimum optimal_single_copy(const ChannelEnsemble& e,
                                  const SolveOptions& o) {
  e.validate();
  const int d_in = e.input.dim, d_out = e.output.dim;
  TesterProgram tp = single_copy_program(weighted_chois(e), d_in, d_out, false);
  Solution s = solve_or_throw(tp.cp, o, "single-copy tester program");
  TesterOptimum out;
  out.value = s.primal_value;
  out.tester.scenario = TesterScenario::SingleCopy;
  for (int i = 0; i < tp.elements; ++i)
    out.tester.elements.emplace_back(
        std::vector<SystemLabel>{{"I", d_in}, {"O", d_out}},
        s.block_values[i]);
  out.solution = std::move(s);
  return out;
}

TesterOptimum optimal_parallel(const ChannelEnsemble& e2,
                               const SolveOptions& o) {
  e2.validate();
  const int d_in = exact_sqrt(e2.input.dim, "ensemble input");
  const int d_out = exact_sqrt(e2.output.dim, "ensemble output");
  TesterProgram tp =
      single_copy_program(weighted_chois(e2), d_in * d_in, d_out * d_out, false);
  Solution s = solve_or_throw(tp.cp, o, "parallel tester program");
  TesterOptimum out;
  out.value = s.primal_value;
  out.tester.scenario = TesterScenario::Parallel2;
  for (int i = 0; i < tp.elements; ++i) {
    LabeledOperator t({{"I1", d_in}, {"I2", d_in}, {"O1", d_out}, {"O2", d_out}},
                      s.block_values[i]);
    out.tester.elements.push_back(
        permute_systems(t, {"I1", "O1", "I2", "O2"}));
  }
  out.solution = std::move(s);
  return out;
}

TesterOptimum optimal_adaptive(const ChannelEnsemble& e2,
                               const SolveOptions& o) {
  e2.validate();
  const int d_in = exact_sqrt(e2.input.dim, "ensemble input");
  const int d_out = exact_sqrt(e2.output.dim, "ensemble output");
  TesterProgram tp = adaptive_program(weighted_chois(e2), d_in, d_out, false, false);
  Solution s = solve_or_throw(tp.cp, o, "adaptive tester program");
  TesterOptimum out;
  out.value = s.primal_value;
  out.tester.scenario = TesterScenario::Adaptive2;
  for (int i = 0; i < tp.elements; ++i) {
    LabeledOperator t({{"I1", d_in}, {"I2", d_in}, {"O1", d_out}, {"O2", d_out}},
                      s.block_values[i]);
    out.tester.elements.push_back(
        permute_systems(t, {"I1", "O1", "I2", "O2"}));
  }
  out.solution = std::move(s);
  return out;
}

double ca_relaxation_bound(const ChannelEnsemble& e2, const SolveOptions& o) {
  e2.validate();
  const int d_in = exact_sqrt(e2.input.dim, "ensemble input");
  const int d_out = exact_sqrt(e2.output.dim, "ensemble output");
  TesterProgram tp = adaptive_program(weighted_chois(e2), d_in, d_out, true, true);
  Solution s = solve_or_throw(tp.cp, o, "classically adaptive relaxation");
  return s.dual_certified ? s.dual_value : s.primal_value;
}

TesterReport validate(const Tester& t) {
  TesterReport rep;
  std::vector<LabeledOperator> els;
  try {
    els = canonical_elements(t.elements, t.scenario);
  } catch (const Error&) {
    rep.residuals.emplace_back("structure",
                               std::numeric_limits<double>::infinity());
    return rep;
  }
  double herm = 0.0;
  double mineig = std::numeric_limits<double>::infinity();
  for (const auto& e : els) {
    herm = std::max(herm, (e.mat() - e.mat().adjoint()).norm());
    mineig =
        std::min(mineig, min_eig_herm(0.5 * (e.mat() + e.mat().adjoint())));
  }
  rep.min_element_eig = mineig;
  rep.residuals.emplace_back("hermiticity", herm);
  LabeledOperator w = element_sum(els);
  const double tr = w.mat().trace().real();
  if (t.scenario == TesterScenario::SingleCopy) {
    rep.residuals.emplace_back("product_marginal",
                               marginal_residual(w, {"O"}));
    rep.residuals.emplace_back("normalization",
                               std::abs(tr / w.dim_of("O") - 1.0));
    return rep;
  }
  const int d_o1 = w.dim_of("O1"), d_o2 = w.dim_of("O2");
  if (t.scenario == TesterScenario::Parallel2) {
    rep.residuals.emplace_back("product_marginal",
                               marginal_residual(w, {"O1", "O2"}));
    rep.residuals.emplace_back("normalization",
                               std::abs(tr / (d_o1 * d_o2) - 1.0));
    return rep;
  }
  rep.residuals.emplace_back("last_output_marginal",
                             marginal_residual(w, {"O2"}));
  LabeledOperator r = partial_trace(w, {"O2"});
  LabeledOperator q = partial_trace(r, {"I2"});
  rep.residuals.emplace_back("comb_marginal",
                             marginal_residual(q, {"O1"}) / d_o2);
  rep.residuals.emplace_back("normalization",
                             std::abs(tr / (d_o1 * d_o2) - 1.0));
  if (t.scenario == TesterScenario::ClassicallyAdaptive2) {
    double worst = 0.0;
    for (const auto& e : els)
      worst = std::min(worst,
                       min_eig_herm(partial_transpose(e, {"I1", "O1"}).mat()));
    rep.residuals.emplace_back("element_ppt", std::max(0.0, -worst));
  }
  return rep;
}

MembershipResult membership(const Tester& t, TesterScenario cls, int L, int k,
                            const SolveOptions& o) {
  std::vector<LabeledOperator> els = canonical_elements(t.elements, cls);
  if (cls != TesterScenario::ClassicallyAdaptive2) {
    Tester probe{cls, els};
    TesterReport rep = validate(probe);
    if (rep.ok(1e-8))
      return {MembershipStatus::Member,
              "all class marginal constraints hold within 1e-8"};
    return {MembershipStatus::NonMember,
            "violated constraints:" + worst_residual(rep)};
  }
  if (L < 1)
    throw BadParameter("classically adaptive membership needs L >= 1");
  if (k < 1) throw BadParameter("relaxation level must be >= 1");

  Tester adaptive_probe{TesterScenario::Adaptive2, els};
  TesterReport rep = validate(adaptive_probe);
  if (!rep.ok(1e-8))
    return {MembershipStatus::NonMember,
            "fails the adaptive comb constraints satisfied by every "
            "classically adaptive tester:" +
                worst_residual(rep)};

  double worst = 0.0;
  int worst_i = -1;
  for (std::size_t i = 0; i < els.size(); ++i) {
    const double m =
        min_eig_herm(partial_transpose(els[i], {"I1", "O1"}).mat());
    if (m < worst) {
      worst = m;
      worst_i = static_cast<int>(i);
    }
  }
  if (worst < -1e-8) {
    std::ostringstream os;
    os << "element " << worst_i << " has partial-transpose eigenvalue "
       << worst
       << " across the (I1 O1 | I2 O2) cut; classically adaptive elements "
          "are separable there";
    return {MembershipStatus::NonMember, os.str()};
  }
  MembershipResult pinch = pinch_member(els, L);
  if (pinch.status == MembershipStatus::Member) return pinch;
  // Level 1 adds nothing beyond the two gates above: splitting every element
  // uniformly across the register is always feasible once they pass.
  if (k == 1)
    return {MembershipStatus::Inconclusive,
            "adaptive marginals and element partial transposes pass and no "
            "feed-forward decomposition was detected"};
  return ca_level_k(els, L, k, o);
}

Realization realize_single_copy(const Tester& t) {
  if (t.scenario != TesterScenario::SingleCopy)
    throw NotATester("single-copy realization needs a single-copy tester");
  TesterReport rep = validate(t);
  if (!rep.ok(1e-8))
    throw NotATester("tester violates the single-copy constraints:" +
                     worst_residual(rep));
  std::vector<LabeledOperator> els =
      canonical_elements(t.elements, t.scenario);
  const int d_in = els[0].dim_of("I"), d_out = els[0].dim_of("O");
  LabeledOperator w = element_sum(els);
  Mat sigma_t = (partial_trace(w, {"O"}).mat() / d_out).transpose();

  Mat x = sqrtm_psd(sigma_t);
  Vec ket = Eigen::Map<const Vec>(x.data(), x.size());
  Realization out;
  out.state = LabeledOperator({{"I", d_in}, {"E", d_in}},
                              Mat(ket * ket.adjoint()));
  Mat inv = inv_sqrtm_psd(sigma_t);
  Mat sandwich = kron(inv, Mat::Identity(d_out, d_out));
  for (std::size_t i = 0; i < els.size(); ++i) {
    Mat m = sandwich * els[i].mat().transpose() * sandwich;
    if (i == 0)
      m += kron(kernel_projector(sigma_t), Mat::Identity(d_out, d_out));
    out.povm.emplace_back(std::vector<SystemLabel>{{"E", d_in}, {"O", d_out}},
                          std::move(m));
  }
  return out;
}

Realization realize_adaptive(const Tester& t) {
  if (t.scenario != TesterScenario::Adaptive2)
    throw NotATester("adaptive realization needs a two-copy adaptive tester");
  TesterReport rep = validate(t);
  if (!rep.ok(1e-8))
    throw NotATester("tester violates the adaptive comb constraints:" +
                     worst_residual(rep));
  std::vector<LabeledOperator> els =
      canonical_elements(t.elements, t.scenario);
  const int d_i1 = els[0].dim_of("I1"), d_o1 = els[0].dim_of("O1");
  const int d_i2 = els[0].dim_of("I2"), d_o2 = els[0].dim_of("O2");
  LabeledOperator w = element_sum(els);
  Mat r = partial_trace(w, {"O2"}).mat() / d_o2;  // on (I1,O1,I2)
  Mat sigma = partial_trace(w, {"O1", "I2", "O2"}).mat() / (d_o1 * d_o2);

  Realization out;
  Mat x1 = sqrtm_psd(Mat(sigma.transpose()));
  Vec ket1 = Eigen::Map<const Vec>(x1.data(), x1.size());
  out.state = LabeledOperator({{"I1", d_i1}, {"E1", d_i1}},
                              Mat(ket1 * ket1.adjoint()));

  const int d_e2 = d_i1 * d_o1 * d_i2;
  Mat rt = r.transpose();
  Mat y = sqrtm_psd(rt);
  Vec kety = Eigen::Map<const Vec>(y.data(), y.size());
  Mat sig_inv = kron(inv_sqrtm_psd(sigma),
                     Mat::Identity(d_o1 * d_i2 * d_e2, d_o1 * d_i2 * d_e2));
  Mat k = sig_inv * (kety * kety.adjoint()) * sig_inv;
  // Inputs orthogonal to the physical support are routed to a fixed state so
  // the processing stays trace preserving.
  Mat tau = Mat::Zero(d_i2 * d_e2, d_i2 * d_e2);
  tau(0, 0) = 1.0;
  k += kron(kernel_projector(sigma),
            kron(Mat::Identity(d_o1, d_o1), tau));
  out.processing = LabeledOperator(
      {{"E1", d_i1}, {"O1", d_o1}, {"I2", d_i2}, {"E2", d_e2}}, std::move(k));

  Mat inv = inv_sqrtm_psd(rt);
  Mat sandwich = kron(inv, Mat::Identity(d_o2, d_o2));
  for (std::size_t i = 0; i < els.size(); ++i) {
    Mat m = sandwich * els[i].mat().transpose() * sandwich;
    if (i == 0) m += kron(kernel_projector(rt), Mat::Identity(d_o2, d_o2));
    out.povm.emplace_back(std::vector<SystemLabel>{{"E2", d_e2}, {"O2", d_o2}},
                          std::move(m));
  }
  return out;
}

double realized_success_probability(const Realization& r,
                                    const ChannelEnsemble& e,
                                    TesterScenario scenario) {
  Tester t;
  t.scenario = scenario;
  if (scenario == TesterScenario::SingleCopy) {
    for (const auto& m : r.povm) {
      LabeledOperator mt(m.systems(), Mat(m.mat().transpose()));
      t.elements.push_back(link_product(r.state, mt));
    }
  } else if (scenario == TesterScenario::Adaptive2) {
    LabeledOperator front = link_product(r.state, r.processing);
    for (const auto& m : r.povm) {
      LabeledOperator mt(m.systems(), Mat(m.mat().transpose()));
      t.elements.push_back(link_product(front, mt));
    }
  } else {
    throw BadParameter(
        "realizations cover single-copy and two-copy adaptive testers");
  }
  return success_probability(t, e);
}

}  // namespace qdisc

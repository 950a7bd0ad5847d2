#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>

#include "qdisc/sdp.hpp"
#include "sdp_internal.hpp"

namespace qdisc {

using detail::RMat;

void ConicProblem::validate() const {
  if (blocks.empty()) throw BadParameter("ConicProblem: no blocks");
  if (!objective.empty() && objective.size() != blocks.size())
    throw BadParameter("ConicProblem: objective list size mismatch");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].second < 1) throw BadParameter("ConicProblem: bad block side");
    if (b < objective.size() && objective[b].size() != 0) {
      const Mat& c = objective[b];
      if (c.rows() != blocks[b].second || c.cols() != blocks[b].second)
        throw DimMismatch("ConicProblem: objective shape mismatch");
      if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw BadParameter("ConicProblem: objective not hermitian");
    }
  }
  for (const auto& row : equalities)
    for (const auto& term : row.terms) {
      if (term.block < 0 || term.block >= static_cast<int>(blocks.size()))
        throw BadIndex("ConicProblem: row references unknown block");
      const int s = blocks[term.block].second;
      for (const auto& e : term.entries) {
        if (e.row < 0 || e.col < e.row || e.col >= s)
          throw BadIndex("ConicProblem: bad coefficient entry");
        if (e.row == e.col && std::abs(e.value.imag()) > 1e-12)
          throw BadParameter("ConicProblem: complex diagonal coefficient");
      }
    }
  for (const auto& lift : lifts) {
    if (lift.block < 0 || lift.block >= static_cast<int>(blocks.size()))
      throw BadIndex("ConicProblem: lift references unknown block");
    const int s = blocks[lift.block].second;
    if (lift.d1 < 1 || lift.d2 < 1) throw BadParameter("ConicProblem: bad lift dims");
    if (lift.embed.size() == 0) {
      if (lift.d1 * lift.d2 != s)
        throw DimMismatch("ConicProblem: identity lift dims mismatch");
    } else {
      if (lift.embed.cols() != s || lift.embed.rows() != lift.d1 * lift.d2)
        throw DimMismatch("ConicProblem: lift embed shape mismatch");
      Mat g = lift.embed.adjoint() * lift.embed;
      if ((g - Mat::Identity(s, s)).cwiseAbs().maxCoeff() > 1e-8)
        throw BadParameter("ConicProblem: lift embed is not an isometry");
    }
  }
  if (trace_row < -1 || trace_row >= static_cast<int>(equalities.size()))
    throw BadIndex("ConicProblem: trace_row out of range");
}

Eigen::MatrixXd real_embedding(const Mat& h) {
  const long s = h.rows();
  RMat out(2 * s, 2 * s);
  out.topLeftCorner(s, s) = h.real();
  out.bottomRightCorner(s, s) = h.real();
  out.topRightCorner(s, s) = -h.imag();
  out.bottomLeftCorner(s, s) = h.imag();
  return out;
}

namespace detail {

RealProblem to_real(const ConicProblem& p) {
  RealProblem rp;
  rp.sign = p.maximize ? 1.0 : -1.0;
  const int nb = static_cast<int>(p.blocks.size());
  rp.sides.resize(nb);
  rp.C.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const int s = p.blocks[b].second;
    rp.sides[b] = 2 * s;
    Mat c = (b < static_cast<int>(p.objective.size()) &&
             p.objective[b].size() != 0)
                ? p.objective[b]
                : Mat::Zero(s, s);
    rp.C[b] = 0.5 * rp.sign * real_embedding(c);
  }
  for (const auto& row : p.equalities) {
    RealRow rr;
    rr.rhs = 2.0 * row.rhs;
    for (const auto& term : row.terms) {
      const int s = p.blocks[term.block].second;
      for (const auto& e : term.entries) {
        const double a = e.value.real(), im = e.value.imag();
        const int r = e.row, c = e.col;
        if (std::abs(a) > 0) {
          rr.entries.push_back({term.block, r, c, a});
          rr.entries.push_back({term.block, r + s, c + s, a});
          if (r != c) {
            rr.entries.push_back({term.block, c, r, a});
            rr.entries.push_back({term.block, c + s, r + s, a});
          }
        }
        if (r != c && std::abs(im) > 0) {
          rr.entries.push_back({term.block, r, c + s, -im});
          rr.entries.push_back({term.block, c + s, r, -im});
          rr.entries.push_back({term.block, c, r + s, im});
          rr.entries.push_back({term.block, r + s, c, im});
        }
      }
    }
    if (rr.entries.empty() && std::abs(rr.rhs) > 1e-12) rp.infeasible_row = true;
    rp.rows.push_back(std::move(rr));
  }
  for (const auto& lift : p.lifts) {
    RealLift rl;
    rl.block = lift.block;
    rl.d1 = lift.d1;
    rl.d2 = lift.d2;
    if (lift.embed.size() != 0) {
      const long rows = lift.embed.rows(), cols = lift.embed.cols();
      rl.embed.resize(2 * rows, 2 * cols);
      rl.embed.topLeftCorner(rows, cols) = lift.embed.real();
      rl.embed.bottomRightCorner(rows, cols) = lift.embed.real();
      rl.embed.topRightCorner(rows, cols) = -lift.embed.imag();
      rl.embed.bottomLeftCorner(rows, cols) = lift.embed.imag();
    }
    rp.lifts.push_back(std::move(rl));
  }
  // Trace-row bookkeeping for the dual certificate: the row must be a
  // positive identity multiple on every block.
  if (p.trace_row >= 0) {
    const auto& row = p.equalities[p.trace_row];
    std::vector<double> coeff(nb, 0.0);
    bool ok = true;
    for (const auto& term : row.terms) {
      const int s = p.blocks[term.block].second;
      std::vector<cxd> diag(s, 0.0);
      for (const auto& e : term.entries) {
        if (e.row != e.col) ok = false;
        else diag[e.row] += e.value;
      }
      for (int r = 1; r < s && ok; ++r)
        if (std::abs(diag[r] - diag[0]) > 1e-14) ok = false;
      if (std::abs(diag[0].imag()) > 1e-14 || diag[0].real() <= 0) ok = false;
      coeff[term.block] = diag[0].real();
    }
    for (int b = 0; b < nb && ok; ++b)
      if (coeff[b] <= 0) ok = false;
    if (ok) {
      rp.trace_row = p.trace_row;
      rp.trace_coeff = std::move(coeff);
    }
  }
  return rp;
}

RMat real_pt(const RMat& m, int d1, int d2) {
  const int n = static_cast<int>(m.rows());  // 2*d1*d2
  RMat out(n, n);
  auto split = [&](int t, int& u, int& a, int& b) {
    u = t / (d1 * d2);
    a = (t / d2) % d1;
    b = t % d2;
  };
  auto join = [&](int u, int a, int b) { return (u * d1 + a) * d2 + b; };
  for (int r = 0; r < n; ++r) {
    int u, a1, a2;
    split(r, u, a1, a2);
    for (int c = 0; c < n; ++c) {
      int v, b1, b2;
      split(c, v, b1, b2);
      out(join(u, b1, a2), join(v, a1, b2)) = m(r, c);
    }
  }
  return out;
}

Mat complex_from_real(const RMat& r) {
  const long s = r.rows() / 2;
  RMat p = r.topLeftCorner(s, s), q = r.topRightCorner(s, s),
       qt = r.bottomLeftCorner(s, s), w = r.bottomRightCorner(s, s);
  RMat re = (p + w) / 2.0;
  RMat im = (qt - q) / 2.0;
  re = (re + re.transpose()).eval() / 2.0;
  im = (im - im.transpose()).eval() / 2.0;
  return re.cast<cxd>() + cxd(0, 1) * im.cast<cxd>();
}

RMat lift_adjoint(const RealLift& l, const RMat& p) {
  RMat pt = real_pt(p, l.d1, l.d2);
  if (l.embed.size() == 0) return pt;
  return l.embed.transpose() * pt * l.embed;
}

RMat lift_apply(const RealLift& l, const RMat& x) {
  if (l.embed.size() == 0) return real_pt(x, l.d1, l.d2);
  return real_pt(l.embed * x * l.embed.transpose(), l.d1, l.d2);
}

Materialized materialize(const RealProblem& rp) {
  Materialized m;
  m.sides = rp.sides;
  m.C = rp.C;
  m.rows = rp.rows;
  m.orig_rows = static_cast<int>(rp.rows.size());
  m.orig_blocks = static_cast<int>(rp.sides.size());
  for (const auto& l : rp.lifts) {
    const int t = l.side();
    const int yb = static_cast<int>(m.sides.size());
    m.sides.push_back(t);
    m.C.push_back(RMat::Zero(t, t));
    // Rows: <S, lift(X)> - <S, Y> = 0 over the symmetric basis S.
    for (int k = 0; k < t; ++k)
      for (int lcol = k; lcol < t; ++lcol) {
        RealRow row;
        row.rhs = 0.0;
        // lift adjoint of (E_kl + E_lk) (or E_kk).
        RMat s = RMat::Zero(t, t);
        s(k, lcol) = 1.0;
        s(lcol, k) = 1.0;
        RMat coeff = lift_adjoint(l, s);
        for (int i = 0; i < coeff.rows(); ++i)
          for (int j = 0; j < coeff.cols(); ++j)
            if (std::abs(coeff(i, j)) > 1e-15)
              row.entries.push_back({l.block, i, j, coeff(i, j)});
        row.entries.push_back({yb, k, lcol, -1.0});
        if (k != lcol) row.entries.push_back({yb, lcol, k, -1.0});
        m.rows.push_back(std::move(row));
      }
  }
  return m;
}

double eval_objective(const RealProblem& rp, const std::vector<RMat>& x) {
  double v = 0.0;
  for (std::size_t b = 0; b < rp.C.size(); ++b)
    v += (rp.C[b].array() * x[b].array()).sum();
  return v;
}

CertResult polish_dual(const RealProblem& rp, std::vector<double> y,
                       std::vector<RMat> cone_duals) {
  CertResult out;
  const int nb = static_cast<int>(rp.sides.size());
  // Clip cone duals to the PSD cone.
  for (auto& p : cone_duals) {
    RMat sym = (p + p.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<RMat> es(sym);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    p = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  }
  // Residual R_b = A*(y)_b - C_b - sum_j L_j*(P_j)_b.
  std::vector<RMat> r(nb);
  for (int b = 0; b < nb; ++b) r[b] = -rp.C[b];
  for (std::size_t i = 0; i < rp.rows.size(); ++i) {
    if (y[i] == 0.0) continue;
    for (const auto& e : rp.rows[i].entries) r[e.block](e.i, e.j) += y[i] * e.v;
  }
  for (std::size_t j = 0; j < rp.lifts.size(); ++j)
    r[rp.lifts[j].block] -= lift_adjoint(rp.lifts[j], cone_duals[j]);
  // Worst negative eigenvalue, scaled by the trace-row coefficient.
  double delta = 0.0;
  bool need_bump = false;
  for (int b = 0; b < nb; ++b) {
    RMat sym = (r[b] + r[b].transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<RMat> es(sym, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < 0) {
      need_bump = true;
      if (rp.trace_row < 0) return out;  // no repair channel: not certified
      delta = std::max(delta, -lmin / rp.trace_coeff[b]);
    }
  }
  double val = 0.0;
  for (std::size_t i = 0; i < rp.rows.size(); ++i) val += y[i] * rp.rows[i].rhs;
  if (need_bump) val += delta * rp.rows[rp.trace_row].rhs;
  out.value = val;
  out.ok = true;
  return out;
}

}  // namespace detail

namespace {

// Estimated cost of the lift-free expansion, used to pick a backend.
long materialized_rows(const detail::RealProblem& rp) {
  long m = static_cast<long>(rp.rows.size());
  for (const auto& l : rp.lifts) {
    const long t = l.side();
    m += t * (t + 1) / 2;
  }
  return m;
}

Solution assemble(const ConicProblem& p, const detail::RealProblem& rp,
                  detail::RawResult rr, const SolveOptions& opts,
                  const std::string& backend_name) {
  Solution sol;
  sol.backend = backend_name;
  sol.iterations = rr.iterations;
  sol.primal_residual = rr.primal_residual;
  sol.gap = rr.gap;
  if (rr.infeasible) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  if (rr.unbounded) {
    sol.status = SolveStatus::Unbounded;
    return sol;
  }
  sol.block_values.reserve(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    sol.block_values.push_back(detail::complex_from_real(rr.block_values[b]));
  const double raw_primal = detail::eval_objective(rp, rr.block_values);
  sol.primal_value = rp.sign * raw_primal;
  double raw_dual = 0.0;
  for (std::size_t i = 0; i < rp.rows.size(); ++i)
    raw_dual += rr.y[i] * rp.rows[i].rhs;
  if (opts.certify_dual) {
    detail::CertResult cert = detail::polish_dual(rp, rr.y, rr.cone_duals);
    if (cert.ok) {
      sol.dual_value = rp.sign * cert.value;
      sol.dual_certified = true;
    } else {
      sol.dual_value = rp.sign * raw_dual;
    }
  } else {
    sol.dual_value = rp.sign * raw_dual;
  }
  sol.status = rr.converged ? SolveStatus::Optimal : SolveStatus::NumericalTrouble;
  return sol;
}

}  // namespace

Solution solve(const ConicProblem& p, const SolveOptions& opts) {
  p.validate();
  detail::RealProblem rp = detail::to_real(p);
  if (rp.infeasible_row) {
    Solution sol;
    sol.status = SolveStatus::Infeasible;
    sol.backend = "presolve";
    return sol;
  }
  Backend be = opts.backend;
  if (be == Backend::Auto) {
    const long m = materialized_rows(rp);
    const int max_side =
        *std::max_element(rp.sides.begin(), rp.sides.end());
    be = (m <= 4500 && max_side <= 700) ? Backend::Dense : Backend::Splitting;
  }
  detail::RawResult rr = (be == Backend::Dense)
                             ? detail::solve_dense(rp, opts)
                             : detail::solve_splitting(rp, opts);
  return assemble(p, rp, std::move(rr), opts,
                  be == Backend::Dense ? "dense-ipm" : "splitting-admm");
}

Solution check_feasibility(const ConicProblem& p, const SolveOptions& opts) {
  p.validate();
  detail::RealProblem rp = detail::to_real(p);
  Solution sol;
  sol.backend = "phase1";
  sol.primal_value = 0.0;
  sol.dual_value = 0.0;
  if (rp.infeasible_row) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  if (rp.rows.empty()) {
    sol.status = SolveStatus::Optimal;
    return sol;
  }
  double viol = detail::dense_phase1(rp, opts);
  double scale = 0.0;
  for (const auto& r : rp.rows) scale = std::max(scale, std::abs(r.rhs));
  sol.primal_residual = viol;
  sol.status = (viol <= 1e-7 * (1.0 + scale)) ? SolveStatus::Optimal
                                              : SolveStatus::Infeasible;
  return sol;
}

void dump_problem(const ConicProblem& p, const std::string& path) {
  p.validate();
  detail::RealProblem rp = detail::to_real(p);
  detail::Materialized m = detail::materialize(rp);
  std::ofstream f(path);
  if (!f) throw Error("dump_problem: cannot open " + path);
  f << std::setprecision(17);
  f << "\"normal form: max tr(F0 Y), tr(Fk Y) = ck, Y psd";
  if (rp.sign < 0) f << " (sign-flipped from a minimization)";
  f << "\n";
  f << m.rows.size() << "\n";
  f << m.sides.size() << "\n";
  for (std::size_t b = 0; b < m.sides.size(); ++b)
    f << m.sides[b] << (b + 1 < m.sides.size() ? " " : "\n");
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    f << m.rows[i].rhs << (i + 1 < m.rows.size() ? " " : "\n");
  char buf[128];
  auto emit = [&](int mat, int blk, int i, int j, double v) {
    if (i > j || std::abs(v) < 1e-15) return;
    std::snprintf(buf, sizeof(buf), "%d %d %d %d %.17g\n", mat, blk + 1, i + 1,
                  j + 1, v);
    f << buf;
  };
  for (std::size_t b = 0; b < m.C.size(); ++b)
    for (int i = 0; i < m.C[b].rows(); ++i)
      for (int j = i; j < m.C[b].cols(); ++j) emit(0, static_cast<int>(b), i, j, m.C[b](i, j));
  for (std::size_t k = 0; k < m.rows.size(); ++k)
    for (const auto& e : m.rows[k].entries)
      emit(static_cast<int>(k) + 1, e.block, e.i, e.j, e.v);
}

}  // namespace qdisc

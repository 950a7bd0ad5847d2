#include <algorithm>
#include <cmath>
#include <vector>

#include "sdp_internal.hpp"

// Dense predictor-corrector interior-point method (HKM direction) for the
// lift-free real form.  Cone lifts are first materialized as extra PSD
// blocks tied to the base block by equality rows, so their duals come out
// as ordinary dual blocks.
namespace qdisc::detail {
namespace {

struct BlockEntries {
  int block = 0;
  std::vector<RTriplet> entries;
};

struct IpmRow {
  std::vector<BlockEntries> parts;
  double rhs = 0.0;
  double norm = 0.0;
};

struct IpmProblem {
  std::vector<int> sides;
  std::vector<RMat> C;
  std::vector<IpmRow> rows;
};

struct IpmOptions {
  Tolerances tol;
  int max_iters = 100;
  double start_scale = -1.0;  // <0: automatic
};

struct IpmState {
  bool converged = false;
  bool unbounded = false;
  std::vector<RMat> X;
  std::vector<RMat> Z;
  std::vector<double> y;
  int iterations = 0;
  double rel_pinf = 0.0;
  double rel_gap = 0.0;
  double pobj = 0.0;
};

IpmProblem group_rows(std::vector<int> sides, std::vector<RMat> C,
                      const std::vector<RealRow>& rows) {
  IpmProblem p;
  p.sides = std::move(sides);
  p.C = std::move(C);
  p.rows.reserve(rows.size());
  const int nb = static_cast<int>(p.sides.size());
  for (const auto& r : rows) {
    IpmRow ir;
    ir.rhs = r.rhs;
    std::vector<int> where(nb, -1);
    for (const auto& e : r.entries) {
      if (where[e.block] < 0) {
        where[e.block] = static_cast<int>(ir.parts.size());
        ir.parts.push_back({e.block, {}});
      }
      ir.parts[where[e.block]].entries.push_back(e);
      ir.norm += e.v * e.v;
    }
    ir.norm = std::sqrt(ir.norm);
    p.rows.push_back(std::move(ir));
  }
  return p;
}

// tr(A_i M) for the (symmetric) row coefficient against a dense matrix.
double row_dot(const IpmRow& row, const std::vector<RMat>& m) {
  double v = 0.0;
  for (const auto& part : row.parts)
    for (const auto& e : part.entries) v += e.v * m[part.block](e.j, e.i);
  return v;
}

void accumulate(const IpmRow& row, double w, std::vector<RMat>& out) {
  if (w == 0.0) return;
  for (const auto& part : row.parts)
    for (const auto& e : part.entries) out[part.block](e.i, e.j) += w * e.v;
}

// Largest step alpha <= 1 keeping S + alpha*D positive semidefinite.
double step_length(const RMat& s, const RMat& d, double gamma) {
  Eigen::LLT<RMat> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  RMat w = llt.matrixL().solve(d);
  w = llt.matrixL().solve(RMat(w.transpose()));
  Eigen::SelfAdjointEigenSolver<RMat> es((w + w.transpose()) / 2.0,
                                         Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return 1.0;
  return std::min(1.0, -gamma / lmin);
}

IpmState run_ipm(const IpmProblem& p, const IpmOptions& opts) {
  const int nb = static_cast<int>(p.sides.size());
  const int m = static_cast<int>(p.rows.size());
  if (m > 12000)
    throw SolverFailure("dense backend: problem too large after lift expansion");
  IpmState st;
  int ntot = 0;
  for (int b = 0; b < nb; ++b) ntot += p.sides[b];
  double bmax = 0.0, cmax = 0.0, amax = 0.0;
  for (const auto& r : p.rows) {
    bmax = std::max(bmax, std::abs(r.rhs));
    amax = std::max(amax, r.norm);
  }
  for (const auto& c : p.C) if (c.size()) cmax = std::max(cmax, c.norm());

  // No equalities: optimum is 0 at X = 0 unless the objective has a
  // positive direction.
  if (m == 0) {
    st.X.resize(nb);
    st.Z.resize(nb);
    for (int b = 0; b < nb; ++b) {
      st.X[b] = RMat::Zero(p.sides[b], p.sides[b]);
      Eigen::SelfAdjointEigenSolver<RMat> es(p.C[b], Eigen::EigenvaluesOnly);
      if (es.eigenvalues().maxCoeff() > 1e-10) st.unbounded = true;
      st.Z[b] = -p.C[b];
      st.Z[b] += (1e-8 + 1.0) * RMat::Identity(p.sides[b], p.sides[b]);
    }
    st.converged = !st.unbounded;
    return st;
  }

  double xi = opts.start_scale, eta = opts.start_scale;
  if (xi <= 0) {
    xi = std::max({10.0, std::sqrt(static_cast<double>(ntot)),
                   static_cast<double>(ntot) * bmax / (1.0 + amax)});
    eta = std::max({10.0, std::sqrt(static_cast<double>(ntot)), cmax, amax});
  }
  st.X.resize(nb);
  st.Z.resize(nb);
  for (int b = 0; b < nb; ++b) {
    st.X[b] = xi * RMat::Identity(p.sides[b], p.sides[b]);
    st.Z[b] = eta * RMat::Identity(p.sides[b], p.sides[b]);
  }
  st.y.assign(m, 0.0);

  std::vector<RMat> zinv(nb), rd(nb), t(nb), g1(nb), dxa(nb), dza(nb), dx(nb),
      dz(nb);
  Eigen::VectorXd rhs(m), dy(m);
  RMat schur(m, m);
  const double gamma = 0.98;
  int stall = 0;

  for (int it = 0; it < opts.max_iters; ++it) {
    st.iterations = it;
    // Residuals and convergence metrics.
    double pobj = 0.0, dobj = 0.0, pinf = 0.0, dinf = 0.0;
    for (int b = 0; b < nb; ++b) {
      pobj += (p.C[b].array() * st.X[b].array()).sum();
      rd[b] = p.C[b] + st.Z[b];
    }
    for (int i = 0; i < m; ++i) {
      accumulate(p.rows[i], -st.y[i], rd);
      dobj += st.y[i] * p.rows[i].rhs;
      pinf = std::max(pinf, std::abs(p.rows[i].rhs - row_dot(p.rows[i], st.X)));
    }
    for (int b = 0; b < nb; ++b)
      dinf = std::max(dinf, rd[b].cwiseAbs().maxCoeff());
    const double rel_pinf = pinf / (1.0 + bmax);
    const double rel_dinf = dinf / (1.0 + cmax);
    const double rel_gap =
        std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    st.rel_pinf = rel_pinf;
    st.rel_gap = rel_gap;
    st.pobj = pobj;
    if (rel_pinf <= opts.tol.feas && rel_dinf <= opts.tol.feas &&
        rel_gap <= opts.tol.gap) {
      st.converged = true;
      return st;
    }
    if (std::abs(pobj) > 1e12 * (1.0 + bmax + cmax) && rel_pinf < 1e-6) {
      st.unbounded = true;
      return st;
    }

    double gap = 0.0;
    for (int b = 0; b < nb; ++b) {
      Eigen::LLT<RMat> llt(st.Z[b]);
      if (llt.info() != Eigen::Success) return st;
      zinv[b] = llt.solve(RMat::Identity(p.sides[b], p.sides[b]));
      zinv[b] = (zinv[b] + zinv[b].transpose()).eval() / 2.0;
      gap += (st.X[b].array() * st.Z[b].array()).sum();
    }
    const double mu = gap / ntot;

    // Schur complement M_ij = tr(A_i X A_j Z^-1).
    schur.setZero();
    for (int i = 0; i < m; ++i) {
      for (const auto& part : p.rows[i].parts) {
        const int b = part.block;
        t[b].setZero(p.sides[b], p.sides[b]);
        for (const auto& e : part.entries)
          t[b].noalias() += e.v * st.X[b].col(e.i) * zinv[b].row(e.j);
      }
      for (int j = i; j < m; ++j) {
        double v = 0.0;
        auto pi = p.rows[i].parts.begin();
        for (const auto& pj : p.rows[j].parts) {
          // parts are sorted by first appearance, not block id; scan row i.
          for (const auto& qi : p.rows[i].parts)
            if (qi.block == pj.block) {
              for (const auto& e : pj.entries) v += e.v * t[pj.block](e.j, e.i);
              break;
            }
        }
        (void)pi;
        schur(i, j) = v;
        schur(j, i) = v;
      }
    }
    double ridge = 1e-11 * std::max(schur.diagonal().mean(), 1e-12);
    Eigen::LLT<RMat> mf;
    for (int attempt = 0; attempt < 8; ++attempt) {
      mf.compute(schur + ridge * RMat::Identity(m, m));
      if (mf.info() == Eigen::Success) break;
      ridge *= 10.0;
    }
    if (mf.info() != Eigen::Success) return st;
    // The ridge perturbs the solve enough to stall primal feasibility near
    // degenerate optima; refine against the unmodified Schur matrix.
    auto solve_refined = [&](const Eigen::VectorXd& b) {
      Eigen::VectorXd s = mf.solve(b);
      for (int r = 0; r < 2; ++r) s += mf.solve(b - schur * s);
      return s;
    };

    // Predictor (affine) direction: sigma = 0, no corrector term.
    for (int b = 0; b < nb; ++b) g1[b].noalias() = st.X[b] * rd[b] * zinv[b];
    for (int i = 0; i < m; ++i)
      rhs(i) = row_dot(p.rows[i], g1) - p.rows[i].rhs;
    dy = solve_refined(rhs);
    for (int b = 0; b < nb; ++b) dza[b] = -rd[b];
    for (int i = 0; i < m; ++i) accumulate(p.rows[i], dy(i), dza);
    for (int b = 0; b < nb; ++b) {
      dxa[b].noalias() = -st.X[b] * dza[b] * zinv[b];
      dxa[b] -= st.X[b];
      dxa[b] = ((dxa[b] + dxa[b].transpose()) / 2.0).eval();
    }
    double apa = 1.0, ada = 1.0;
    for (int b = 0; b < nb; ++b) {
      apa = std::min(apa, step_length(st.X[b], dxa[b], 1.0));
      ada = std::min(ada, step_length(st.Z[b], dza[b], 1.0));
    }
    double gap_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      gap_aff += ((st.X[b] + apa * dxa[b]).array() *
                  (st.Z[b] + ada * dza[b]).array())
                     .sum();
    double sigma = std::pow(std::max(0.0, gap_aff / gap), 3.0);
    sigma = std::min(1.0, sigma);

    // Corrector.
    for (int b = 0; b < nb; ++b) {
      g1[b].noalias() = st.X[b] * rd[b] * zinv[b];
      g1[b].noalias() -= dxa[b] * dza[b] * zinv[b];
      g1[b] += sigma * mu * zinv[b];
    }
    for (int i = 0; i < m; ++i)
      rhs(i) = row_dot(p.rows[i], g1) - p.rows[i].rhs;
    dy = solve_refined(rhs);
    for (int b = 0; b < nb; ++b) dz[b] = -rd[b];
    for (int i = 0; i < m; ++i) accumulate(p.rows[i], dy(i), dz);
    for (int b = 0; b < nb; ++b) {
      dx[b].noalias() = -st.X[b] * dz[b] * zinv[b];
      dx[b].noalias() -= dxa[b] * dza[b] * zinv[b];
      dx[b] += sigma * mu * zinv[b];
      dx[b] -= st.X[b];
      dx[b] = ((dx[b] + dx[b].transpose()) / 2.0).eval();
    }
    double ap = 1.0, ad = 1.0;
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, step_length(st.X[b], dx[b], gamma));
      ad = std::min(ad, step_length(st.Z[b], dz[b], gamma));
    }
    if (ap < 1e-8 && ad < 1e-8) {
      if (++stall >= 3) return st;
    } else {
      stall = 0;
    }
    for (int b = 0; b < nb; ++b) {
      st.X[b] += ap * dx[b];
      st.Z[b] += ad * dz[b];
    }
    for (int i = 0; i < m; ++i) st.y[i] += ad * dy(i);
  }
  return st;
}

}  // namespace

RawResult solve_dense(const RealProblem& rp, const SolveOptions& opts) {
  Materialized mp = materialize(rp);
  IpmProblem ip = group_rows(mp.sides, mp.C, mp.rows);
  IpmOptions io;
  io.tol = opts.tol;
  io.max_iters = opts.max_iters > 0 ? opts.max_iters : 100;
  IpmState st = run_ipm(ip, io);
  RawResult rr;
  rr.iterations = st.iterations;
  rr.primal_residual = st.rel_pinf;
  rr.gap = st.rel_gap;
  rr.converged = st.converged;
  rr.unbounded = st.unbounded;
  rr.block_values.assign(st.X.begin(), st.X.begin() + mp.orig_blocks);
  rr.y.assign(st.y.begin(), st.y.begin() + mp.orig_rows);
  for (std::size_t j = 0; j < rp.lifts.size(); ++j)
    rr.cone_duals.push_back(st.Z[mp.orig_blocks + j]);
  if (!st.converged && !st.unbounded && st.rel_pinf > 1e-5) {
    // Distinguish genuine infeasibility from numerical trouble.
    double bmax = 0.0;
    for (const auto& r : rp.rows) bmax = std::max(bmax, std::abs(r.rhs));
    if (dense_phase1(rp, opts) > 1e-7 * (1.0 + bmax)) rr.infeasible = true;
  }
  return rr;
}

double dense_phase1(const RealProblem& rp, const SolveOptions& opts) {
  Materialized mp = materialize(rp);
  const int nb = static_cast<int>(mp.sides.size());
  double bmax = 0.0;
  for (const auto& r : mp.rows) bmax = std::max(bmax, std::abs(r.rhs));
  const double xi = std::max(1.0, bmax);
  // Slack block: one extra scalar t >= 0 absorbing the violation of each
  // row, with coefficients chosen so X = xi*I, t = xi is exactly feasible.
  std::vector<int> sides = mp.sides;
  sides.push_back(1);
  std::vector<RMat> c(nb + 1);
  for (int b = 0; b < nb; ++b) c[b] = RMat::Zero(mp.sides[b], mp.sides[b]);
  c[nb] = -RMat::Identity(1, 1);
  std::vector<RealRow> rows = mp.rows;
  for (auto& r : rows) {
    double tr = 0.0;
    for (const auto& e : r.entries)
      if (e.i == e.j) tr += e.v;
    const double coef = r.rhs / xi - tr;
    if (std::abs(coef) > 0) r.entries.push_back({nb, 0, 0, coef});
  }
  IpmProblem ip = group_rows(sides, c, rows);
  IpmOptions io;
  io.tol = opts.tol;
  io.max_iters = opts.max_iters > 0 ? opts.max_iters : 100;
  io.start_scale = xi;
  IpmState st = run_ipm(ip, io);
  return st.X[nb](0, 0);
}

}  // namespace qdisc::detail

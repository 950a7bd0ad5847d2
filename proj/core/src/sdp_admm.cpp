#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "sdp_internal.hpp"

// Operator-splitting backend: alternating projections with scaled duals.
// Each PSD block and each cone lift gets a projection copy V_c = M_c(X);
// the X-step solves an equality-constrained least-squares problem whose
// normal matrix G = A D A^T does not depend on the penalty, so it is
// factored exactly once.
namespace qdisc::detail {
namespace {

struct Cone {
  int block = 0;
  const RealLift* lift = nullptr;  // nullptr: plain PSD copy of the block
  int side = 0;
  RMat V, U;
};

RMat psd_project(const RMat& q) {
  Eigen::SelfAdjointEigenSolver<RMat> es((q + q.transpose()) / 2.0);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

RawResult solve_splitting(const RealProblem& rp, const SolveOptions& opts) {
  const int nb = static_cast<int>(rp.sides.size());
  const int m = static_cast<int>(rp.rows.size());
  RawResult rr;

  // Row normalization keeps the normal matrix well-conditioned.
  std::vector<RealRow> rows = rp.rows;
  std::vector<double> rnorm(m, 1.0);
  double bmax = 0.0;
  for (int i = 0; i < m; ++i) {
    double n2 = 0.0;
    for (const auto& e : rows[i].entries) n2 += e.v * e.v;
    rnorm[i] = std::max(std::sqrt(n2), 1e-12);
    for (auto& e : rows[i].entries) e.v /= rnorm[i];
    rows[i].rhs /= rnorm[i];
    bmax = std::max(bmax, std::abs(rows[i].rhs));
  }

  std::vector<int> nlift(nb, 0);
  for (const auto& l : rp.lifts) nlift[l.block]++;

  // Stacked full-vec layout of the block variables.
  std::vector<long> offset(nb + 1, 0);
  for (int b = 0; b < nb; ++b)
    offset[b + 1] = offset[b] + static_cast<long>(rp.sides[b]) * rp.sides[b];
  const long nvec = offset[nb];

  Eigen::SparseMatrix<double> a(m, nvec);
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < m; ++i)
      for (const auto& e : rows[i].entries)
        trips.emplace_back(
            i, offset[e.block] + static_cast<long>(e.i) * rp.sides[e.block] + e.j,
            e.v);
    a.setFromTriplets(trips.begin(), trips.end());
  }
  Eigen::VectorXd dinv(nvec);
  for (int b = 0; b < nb; ++b)
    dinv.segment(offset[b], offset[b + 1] - offset[b])
        .setConstant(1.0 / (1.0 + nlift[b]));

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  if (m > 0) {
    Eigen::SparseMatrix<double> g = a * dinv.asDiagonal() * a.transpose();
    double diag_mean = 0.0;
    for (int i = 0; i < m; ++i) diag_mean += g.coeff(i, i);
    diag_mean = std::max(diag_mean / m, 1e-12);
    Eigen::SparseMatrix<double> eye(m, m);
    eye.setIdentity();
    g = g + (1e-10 * diag_mean) * eye;
    ldlt.compute(g);
    if (ldlt.info() != Eigen::Success)
      throw SolverFailure("splitting backend: normal matrix factorization failed");
  }

  std::vector<RMat> x(nb), w(nb);
  for (int b = 0; b < nb; ++b) x[b] = RMat::Zero(rp.sides[b], rp.sides[b]);
  std::vector<Cone> cones;
  for (int b = 0; b < nb; ++b) {
    Cone c;
    c.block = b;
    c.side = rp.sides[b];
    c.V = RMat::Zero(c.side, c.side);
    c.U = RMat::Zero(c.side, c.side);
    cones.push_back(std::move(c));
  }
  for (const auto& l : rp.lifts) {
    Cone c;
    c.block = l.block;
    c.lift = &l;
    c.side = l.side();
    c.V = RMat::Zero(c.side, c.side);
    c.U = RMat::Zero(c.side, c.side);
    cones.push_back(std::move(c));
  }

  double cmax = 0.0;
  for (const auto& c : rp.C) if (c.size()) cmax = std::max(cmax, c.norm());
  double rho = 1.0;
  const double alpha = 1.6;
  const int max_iters = opts.max_iters > 0 ? opts.max_iters : 25000;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(m), rhs(m);

  auto row_dot = [&](const RealRow& row, const std::vector<RMat>& v) {
    double s = 0.0;
    for (const auto& e : row.entries) s += e.v * v[e.block](e.j, e.i);
    return s;
  };

  double rel_eq = 0.0, rel_r = 0.0, rel_s = 0.0, rel_gap = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    rr.iterations = it + 1;
    // X-step: W collects the projection copies and the objective push.
    for (int b = 0; b < nb; ++b) w[b] = rp.C[b] / rho;
    for (const auto& c : cones) {
      if (c.lift)
        w[c.block] += lift_adjoint(*c.lift, c.V - c.U);
      else
        w[c.block] += c.V - c.U;
    }
    for (int b = 0; b < nb; ++b) w[b] *= 1.0 / (1.0 + nlift[b]);
    if (m > 0) {
      for (int i = 0; i < m; ++i) rhs(i) = row_dot(rows[i], w) - rows[i].rhs;
      nu = ldlt.solve(rhs);
    }
    for (int b = 0; b < nb; ++b) x[b] = w[b];
    for (int i = 0; i < m; ++i)
      for (const auto& e : rows[i].entries)
        x[e.block](e.i, e.j) -= nu(i) * e.v / (1.0 + nlift[e.block]);

    // Projection step with over-relaxation; scaled duals stay negative
    // semidefinite by construction.
    double pr_num = 0.0, pr_den = 1.0, ds_num = 0.0;
    for (auto& c : cones) {
      RMat mx = c.lift ? lift_apply(*c.lift, x[c.block]) : x[c.block];
      RMat t = alpha * mx + (1.0 - alpha) * c.V;
      RMat vold = c.V;
      c.V = psd_project(t + c.U);
      c.U += t - c.V;
      pr_num = std::max(pr_num, (mx - c.V).norm());
      pr_den = std::max(pr_den, std::max(mx.norm(), c.V.norm()));
      ds_num = std::max(ds_num, (c.V - vold).norm());
    }
    rel_r = pr_num / pr_den;
    rel_s = rho * ds_num / (1.0 + cmax);
    double eq = 0.0;
    for (int i = 0; i < m; ++i)
      eq = std::max(eq, std::abs(row_dot(rows[i], x) - rows[i].rhs));
    rel_eq = eq / (1.0 + bmax);
    double pobj = 0.0;
    for (int b = 0; b < nb; ++b)
      pobj += (rp.C[b].array() * x[b].array()).sum();
    double dobj = 0.0;
    for (int i = 0; i < m; ++i) dobj += rho * nu(i) * rows[i].rhs;
    rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (opts.verbosity >= 2 && it % 500 == 0)
      std::fprintf(stderr,
                   "admm it %d rho %.2e r %.2e s %.2e eq %.2e gap %.2e\n", it,
                   rho, rel_r, rel_s, rel_eq, rel_gap);
    if (rel_r <= opts.tol.feas && rel_s <= opts.tol.feas &&
        rel_eq <= opts.tol.feas && rel_gap <= opts.tol.gap) {
      rr.converged = true;
      break;
    }
    if ((it + 1) % 50 == 0) {
      if (rel_r > 10.0 * rel_s && rho < 1e6) {
        rho *= 2.0;
        for (auto& c : cones) c.U /= 2.0;
      } else if (rel_s > 10.0 * rel_r && rho > 1e-6) {
        rho /= 2.0;
        for (auto& c : cones) c.U *= 2.0;
      }
    }
  }

  rr.primal_residual = std::max(rel_eq, rel_r);
  rr.gap = rel_gap;
  rr.block_values = x;
  rr.y.resize(m);
  for (int i = 0; i < m; ++i) rr.y[i] = rho * nu(i) / rnorm[i];
  for (const auto& c : cones)
    if (c.lift) rr.cone_duals.push_back(-rho * c.U);
  return rr;
}

}  // namespace qdisc::detail

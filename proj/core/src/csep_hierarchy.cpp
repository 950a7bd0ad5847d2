#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "csep_internal.hpp"
#include "qdisc/csep.hpp"
#include "qdisc/errors.hpp"

namespace qdisc {

using csep_detail::add_complex_equation;
using csep_detail::add_hermitian_coeff;
using csep_detail::HermRow;
using csep_detail::hermitian_rows;

void AffineMap::add_trace_row(const Mat& coeff, cxd value) {
  const int d = static_cast<int>(coeff.rows());
  if (coeff.cols() != d) throw DimMismatch("affine coefficient must be square");
  const int dd = d * d;
  if (action.size() == 0) {
    action.resize(0, dd);
    target.resize(0);
  }
  if (action.cols() != dd)
    throw DimMismatch("affine coefficient dimension mismatch");
  const int r = static_cast<int>(action.rows());
  action.conservativeResize(r + 1, dd);
  Mat mt = coeff.transpose();
  action.row(r) = Eigen::Map<const Vec>(mt.data(), dd).transpose();
  target.conservativeResize(r + 1);
  target(r) = value;
}

double AffineMap::residual(const Mat& w) const {
  if (empty()) return 0.0;
  const int d = static_cast<int>(w.rows());
  if (action.cols() != static_cast<Eigen::Index>(d) * d)
    throw DimMismatch("affine map does not match operator size");
  Vec v = action * Eigen::Map<const Vec>(w.data(), w.size()) - target;
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

AffineMap affine_partial_trace_equals(const std::vector<int>& dims,
                                      const std::vector<int>& traced,
                                      const Mat& target) {
  const int nf = static_cast<int>(dims.size());
  std::vector<bool> out(nf, false);
  for (int t : traced) {
    if (t < 0 || t >= nf) throw BadIndex("traced factor out of range");
    out[t] = true;
  }
  long kept = 1;
  for (int j = 0; j < nf; ++j)
    if (!out[j]) kept *= dims[j];
  if (target.rows() != kept || target.cols() != kept)
    throw DimMismatch("marginal target has the wrong size");
  // Enumerate kept-space entries (a, b) with a <= b; the coefficient is the
  // identity on traced factors and |b_j><a_j| on kept ones.
  std::vector<int> kdims;
  for (int j = 0; j < nf; ++j)
    if (!out[j]) kdims.push_back(dims[j]);
  AffineMap m;
  for (long a = 0; a < kept; ++a) {
    for (long b = a; b < kept; ++b) {
      // decode multi-indices of a and b over kept factors
      std::vector<int> ai(kdims.size()), bi(kdims.size());
      long ra = a, rb = b;
      for (int j = static_cast<int>(kdims.size()) - 1; j >= 0; --j) {
        ai[j] = static_cast<int>(ra % kdims[j]);
        ra /= kdims[j];
        bi[j] = static_cast<int>(rb % kdims[j]);
        rb /= kdims[j];
      }
      Mat coeff = Mat::Ones(1, 1);
      int kj = 0;
      for (int j = 0; j < nf; ++j) {
        if (out[j]) {
          coeff = kron(coeff, Mat::Identity(dims[j], dims[j]));
        } else {
          Mat e = Mat::Zero(kdims[kj], kdims[kj]);
          e(bi[kj], ai[kj]) = 1.0;
          coeff = kron(coeff, e);
          ++kj;
        }
      }
      m.add_trace_row(coeff, target(a, b));
    }
  }
  return m;
}

void ConstrainedSepProblem::validate() const {
  const int np = static_cast<int>(parties.size());
  if (np != 2 && np != 3)
    throw BadParameter("constrained separability needs 2 or 3 parties");
  if (static_cast<int>(f.systems().size()) != np)
    throw DimMismatch("objective must carry one system per party");
  long side = 1;
  for (int j = 0; j < np; ++j) {
    const Party& pt = parties[j];
    if (pt.dim <= 0) throw BadParameter("party dimension must be positive");
    if (f.systems()[j].dim != pt.dim)
      throw DimMismatch("objective system does not match party dimension");
    side *= pt.dim;
    if (!pt.constraint.empty()) {
      if (pt.constraint.action.cols() !=
          static_cast<Eigen::Index>(pt.dim) * pt.dim)
        throw DimMismatch("affine action width must be dim^2");
      if (pt.constraint.target.size() != pt.constraint.action.rows())
        throw DimMismatch("affine target length must match row count");
    }
    if (!pt.sectors.empty()) {
      long s = 0;
      for (int v : pt.sectors) {
        if (v <= 0) throw BadParameter("sector sizes must be positive");
        s += v;
      }
      if (s != pt.dim) throw BadParameter("sector sizes must sum to dim");
    }
    if (pt.internal_cut < 0 ||
        (pt.internal_cut > 0 && pt.dim % pt.internal_cut != 0))
      throw BadParameter("internal cut must divide the party dimension");
    if (pt.internal_cut > 0 && !pt.sectors.empty()) {
      for (int v : pt.sectors)
        if (v % pt.internal_cut != 0)
          throw BadParameter("sectors must refine the internal cut");
    }
  }
  if (f.mat().rows() != side)
    throw DimMismatch("objective size must be the product of party dims");
  double scale = std::max(1.0, f.mat().cwiseAbs().maxCoeff());
  if ((f.mat() - f.mat().adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw BadParameter("objective must be hermitian");
}

namespace csep_detail {

std::vector<HermRow> hermitian_rows(const AffineMap& a, int dim) {
  std::vector<HermRow> rows;
  if (a.empty()) return rows;
  for (int r = 0; r < a.rows(); ++r) {
    Vec v = a.action.row(r).transpose();
    Mat m = Eigen::Map<const Mat>(v.data(), dim, dim).transpose();
    Mat hre = 0.5 * (m + m.adjoint());
    Mat him = (m - m.adjoint()) / cxd(0.0, 2.0);
    cxd t = a.target(r);
    if (hre.cwiseAbs().maxCoeff() > 1e-13 || std::abs(t.real()) > 1e-13)
      rows.push_back({std::move(hre), t.real()});
    if (him.cwiseAbs().maxCoeff() > 1e-13 || std::abs(t.imag()) > 1e-13)
      rows.push_back({std::move(him), t.imag()});
  }
  return rows;
}

void add_hermitian_coeff(EqualityRow& row, int block, const Mat& h,
                         double prune) {
  BlockCoeff bc;
  bc.block = block;
  const int n = static_cast<int>(h.rows());
  for (int i = 0; i < n; ++i) {
    if (std::abs(h(i, i).real()) > prune)
      bc.entries.push_back({i, i, cxd(h(i, i).real(), 0.0)});
    for (int j = i + 1; j < n; ++j)
      if (std::abs(h(i, j)) > prune) bc.entries.push_back({i, j, h(i, j)});
  }
  if (!bc.entries.empty()) row.terms.push_back(std::move(bc));
}

void add_complex_equation(ConicProblem& cp,
                          const std::vector<std::pair<int, Mat>>& coeffs,
                          cxd rhs, double prune) {
  EqualityRow re, im;
  for (const auto& [block, m] : coeffs) {
    Mat hre = 0.5 * (m + m.adjoint());
    Mat him = (m - m.adjoint()) / cxd(0.0, 2.0);
    add_hermitian_coeff(re, block, hre, prune);
    add_hermitian_coeff(im, block, him, prune);
  }
  re.rhs = rhs.real();
  im.rhs = rhs.imag();
  if (!re.terms.empty() || std::abs(re.rhs) > prune)
    cp.equalities.push_back(std::move(re));
  if (!im.terms.empty() || std::abs(im.rhs) > prune)
    cp.equalities.push_back(std::move(im));
}

}  // namespace csep_detail

ConstrainedSepProblem merge_tail_parties(const ConstrainedSepProblem& p) {
  p.validate();
  if (p.parties.size() != 3)
    throw BadParameter("tail merge expects a three-party problem");
  const Party& pk = p.parties[1];
  const Party& pm = p.parties[2];
  const int dk = pk.dim, dm = pm.dim;
  if (pk.internal_cut > 0 || pm.internal_cut > 0)
    throw BadParameter("tail parties already carry an internal cut");

  Party merged;
  merged.dim = dm * dk;  // composite ordered (party2, party1)
  merged.internal_cut = dk;
  if (!pm.sectors.empty()) {
    for (int s : pm.sectors) merged.sectors.push_back(s * dk);
  } else if (!pk.sectors.empty()) {
    // Sectors of the trailing factor do not stay contiguous; drop them.
    merged.sectors.clear();
  }

  // Each original row, coupled to the marginal on the other factor:
  // (phi (x) id)(w) = t_phi Tr_K(w) entrywise, and symmetrically for psi.
  Mat idk = Mat::Identity(dk, dk);
  Mat idm = Mat::Identity(dm, dm);
  for (const HermRow& r : hermitian_rows(pk.constraint, dk)) {
    Mat hk = r.h - r.t * idk;
    for (int m = 0; m < dm; ++m) {
      for (int mp = m; mp < dm; ++mp) {
        Mat e = Mat::Zero(dm, dm);
        e(mp, m) = 1.0;
        merged.constraint.add_trace_row(kron(e, hk), 0.0);
      }
    }
  }
  for (const HermRow& r : hermitian_rows(pm.constraint, dm)) {
    Mat hm = r.h - r.t * idm;
    for (int a = 0; a < dk; ++a) {
      for (int b = a; b < dk; ++b) {
        Mat e = Mat::Zero(dk, dk);
        e(b, a) = 1.0;
        merged.constraint.add_trace_row(kron(hm, e), 0.0);
      }
    }
  }

  ConstrainedSepProblem out;
  out.parties = {p.parties[0], std::move(merged)};
  const int d0 = p.parties[0].dim;
  Mat f2 = psys_permute(p.f.mat(), {d0, dk, dm}, {0, 2, 1});
  out.f = LabeledOperator(
      {p.f.systems()[0], {p.f.systems()[2].name + "*" + p.f.systems()[1].name,
                          dm * dk}},
      std::move(f2));
  return out;
}

namespace {

// Sector bookkeeping for the spectator party.
struct SectorPlan {
  std::vector<int> sizes;
  std::vector<int> offsets;
  std::vector<HermRow> rows;  // constraint rows kept (sector-compatible)
};

int sector_of(const std::vector<int>& offsets, const std::vector<int>& sizes,
              int idx) {
  for (size_t i = 0; i < sizes.size(); ++i)
    if (idx < offsets[i] + sizes[i]) return static_cast<int>(i);
  return -1;
}

// Decides whether the declared sectors can be exploited: the objective and
// every constraint row must live on the sector diagonal (rows supported
// purely off it may be dropped when homogeneous). Falls back to one dense
// sector otherwise.
SectorPlan plan_sectors(const Party& y, const Mat& f, int dx,
                        const std::vector<HermRow>& ry) {
  SectorPlan plan;
  plan.sizes = y.sectors.empty() ? std::vector<int>{y.dim} : y.sectors;
  auto offsets_of = [](const std::vector<int>& sizes) {
    std::vector<int> off(sizes.size());
    int acc = 0;
    for (size_t i = 0; i < sizes.size(); ++i) {
      off[i] = acc;
      acc += sizes[i];
    }
    return off;
  };
  plan.offsets = offsets_of(plan.sizes);
  bool ok = plan.sizes.size() > 1;
  const double fmax = std::max(1.0, f.cwiseAbs().maxCoeff());
  if (ok) {
    // objective support check: F[(x,m),(x',m')] with m, m' in one sector
    const int dy = y.dim;
    for (int x = 0; x < dx && ok; ++x)
      for (int m = 0; m < dy && ok; ++m)
        for (int xp = 0; xp < dx && ok; ++xp)
          for (int mp = 0; mp < dy && ok; ++mp) {
            if (sector_of(plan.offsets, plan.sizes, m) ==
                sector_of(plan.offsets, plan.sizes, mp))
              continue;
            if (std::abs(f(x * dy + m, xp * dy + mp)) > 1e-12 * fmax) ok = false;
          }
  }
  if (ok) {
    for (const HermRow& r : ry) {
      bool diag = false, off = false;
      for (int m = 0; m < y.dim; ++m)
        for (int mp = 0; mp < y.dim; ++mp) {
          if (std::abs(r.h(m, mp)) <= 1e-13) continue;
          (sector_of(plan.offsets, plan.sizes, m) ==
                   sector_of(plan.offsets, plan.sizes, mp)
               ? diag
               : off) = true;
        }
      if (off && (diag || std::abs(r.t) > 1e-13)) {
        ok = false;
        break;
      }
      if (!off) plan.rows.push_back(r);  // purely off-diagonal rows drop
    }
  }
  if (!ok) {
    plan.sizes = {y.dim};
    plan.offsets = {0};
    plan.rows = ry;
  }
  return plan;
}

void guard_side(long side, int cap) {
  if (2 * side > cap)
    throw SizeOverflow("relaxation block of real side " +
                       std::to_string(2 * side) + " exceeds the cap of " +
                       std::to_string(cap));
}

}  // namespace

ConicProblem build_hierarchy(const ConstrainedSepProblem& p0,
                             const UpperBoundOptions& o,
                             HierarchyLayout* layout) {
  ConstrainedSepProblem merged;
  const ConstrainedSepProblem* pp = &p0;
  if (p0.parties.size() == 3) {
    merged = merge_tail_parties(p0);
    pp = &merged;
  }
  const ConstrainedSepProblem& p = *pp;
  p.validate();
  if (o.k < 1) throw BadParameter("extension level must be at least 1");

  int xi = o.extend_party;
  if (p0.parties.size() == 3 && xi > 0) xi = 1;
  if (xi == -1)
    xi = p.parties[0].dim <= p.parties[1].dim ? 0 : 1;
  if (xi != 0 && xi != 1) throw BadIndex("extend_party out of range");
  const Party& px = p.parties[xi];
  const Party& py = p.parties[1 - xi];
  const int dx = px.dim, dy = py.dim;

  Mat f = p.f.mat();
  if (xi == 1) f = psys_permute(f, {p.parties[0].dim, p.parties[1].dim}, {1, 0});

  std::vector<HermRow> rx = hermitian_rows(px.constraint, dx);
  std::vector<HermRow> ry = hermitian_rows(py.constraint, dy);
  SectorPlan plan = plan_sectors(py, f, dx, ry);
  const int nsec = static_cast<int>(plan.sizes.size());

  const int k = o.k;
  long ns_l;
  Mat v;  // extension-factor isometry (bosonic only)
  if (o.bosonic) {
    ns_l = symmetric_dim(dx, k);
    v = symmetric_isometry(dx, k);
  } else {
    ns_l = 1;
    for (int j = 0; j < k; ++j) {
      ns_l *= dx;
      if (ns_l > (1L << 30)) throw SizeOverflow("extension space overflows");
    }
  }
  const int ns = static_cast<int>(ns_l);

  ConicProblem cp;
  cp.maximize = true;
  for (int i = 0; i < nsec; ++i) {
    guard_side(static_cast<long>(ns) * plan.sizes[i], o.side_cap);
    cp.blocks.push_back({"rho" + std::to_string(i),
                         ns * plan.sizes[i]});
  }

  // Objective: the sector block of F, lifted to k copies and compressed.
  cp.objective.resize(nsec);
  long dxk1 = 1;  // dx^(k-1)
  for (int j = 0; j < k - 1; ++j) dxk1 *= dx;
  for (int i = 0; i < nsec; ++i) {
    const int s = plan.sizes[i], off = plan.offsets[i];
    Mat fi(dx * s, dx * s);
    for (int x = 0; x < dx; ++x)
      for (int m = 0; m < s; ++m)
        for (int xp = 0; xp < dx; ++xp)
          for (int mp = 0; mp < s; ++mp)
            fi(x * s + m, xp * s + mp) =
                f(x * dy + off + m, xp * dy + off + mp);
    Mat lifted = kron(fi, Mat::Identity(dxk1, dxk1));
    std::vector<int> dims = {dx, s};
    std::vector<int> order = {0};
    for (int j = 0; j < k - 1; ++j) {
      dims.push_back(dx);
      order.push_back(2 + j);
    }
    order.push_back(1);
    lifted = psys_permute(lifted, dims, order);
    if (o.bosonic) {
      Mat vs = kron(v, Mat::Identity(s, s));
      cp.objective[i] = vs.adjoint() * lifted * vs;
    } else {
      cp.objective[i] = std::move(lifted);
    }
  }

  // Normalization: total trace one (also the certificate trace row).
  {
    EqualityRow norm;
    for (int i = 0; i < nsec; ++i)
      add_hermitian_coeff(norm, i,
                          Mat::Identity(ns * plan.sizes[i], ns * plan.sizes[i]));
    norm.rhs = 1.0;
    cp.trace_row = static_cast<int>(cp.equalities.size());
    cp.equalities.push_back(std::move(norm));
  }

  // Spectator constraint, lifted against the extension marginal:
  // sum_i Tr_Y[(1 (x) (h_i - t)) rho_i] = 0 entrywise over extension pairs.
  for (const HermRow& r : plan.rows) {
    for (int x = 0; x < ns; ++x) {
      for (int y = x; y < ns; ++y) {
        std::vector<std::pair<int, Mat>> coeffs;
        for (int i = 0; i < nsec; ++i) {
          const int s = plan.sizes[i], off = plan.offsets[i];
          Mat hi = r.h.block(off, off, s, s) - r.t * Mat::Identity(s, s);
          if (hi.cwiseAbs().maxCoeff() <= 1e-14) continue;
          Mat e = Mat::Zero(ns, ns);
          e(y, x) = 1.0;
          coeffs.push_back({i, kron(e, hi)});
        }
        if (!coeffs.empty()) add_complex_equation(cp, coeffs, 0.0);
      }
    }
  }

  // Extended-party constraint on one split-off copy of the marginal
  // tau = sum_i Tr_Y(rho_i).
  if (!rx.empty()) {
    Mat split;     // maps the extension space to (rest, one copy)
    long nk1;      // dimension of the k-1 remainder
    if (o.bosonic) {
      split = split_isometry(dx, k, k - 1);
      nk1 = symmetric_dim(dx, k - 1);
    } else {
      split = Mat::Identity(ns, ns);
      nk1 = dxk1;
    }
    for (const HermRow& r : rx) {
      Mat hx = r.h - r.t * Mat::Identity(dx, dx);
      for (long u = 0; u < nk1; ++u) {
        for (long vv = u; vv < nk1; ++vv) {
          Mat e = Mat::Zero(nk1, nk1);
          e(vv, u) = 1.0;
          Mat mtau = split.adjoint() * kron(e, hx) * split;
          if (mtau.cwiseAbs().maxCoeff() <= 1e-14) continue;
          std::vector<std::pair<int, Mat>> coeffs;
          for (int i = 0; i < nsec; ++i)
            coeffs.push_back(
                {i, kron(mtau, Mat::Identity(plan.sizes[i], plan.sizes[i]))});
          add_complex_equation(cp, coeffs, 0.0);
        }
      }
    }
  }

  // Permutation-invariance rows (only without the bosonic compression).
  if (!o.bosonic) {
    for (int j = 0; j + 1 < k; ++j) {
      std::vector<int> sigma(k);
      for (int l = 0; l < k; ++l) sigma[l] = l;
      std::swap(sigma[j], sigma[j + 1]);
      Mat u = permutation_unitary(dx, k, sigma);
      for (int i = 0; i < nsec; ++i) {
        const int s = plan.sizes[i];
        Mat us = kron(u, Mat::Identity(s, s));
        const int side = ns * s;
        for (int a = 0; a < side; ++a) {
          for (int b = a; b < side; ++b) {
            Mat e = Mat::Zero(side, side);
            e(b, a) = 1.0;
            Mat coeff = us.adjoint() * e * us - e;
            if (coeff.cwiseAbs().maxCoeff() <= 1e-14) continue;
            add_complex_equation(cp, {{i, coeff}}, 0.0);
          }
        }
      }
    }
  }

  // Transposition cuts across every copies-vs-rest split, plus any internal
  // split the spectator party carries.
  if (o.ppt) {
    for (int i = 0; i < nsec; ++i) {
      const int s = plan.sizes[i];
      for (int l = 1; l <= k; ++l) {
        ConeLift lift;
        lift.block = i;
        if (l == k) {
          lift.d1 = ns;
          lift.d2 = s;
        } else if (o.bosonic) {
          long nl = symmetric_dim(dx, l), nr = symmetric_dim(dx, k - l);
          lift.embed = kron(split_isometry(dx, k, l), Mat::Identity(s, s));
          lift.d1 = static_cast<int>(nl);
          lift.d2 = static_cast<int>(nr) * s;
        } else {
          long nl = 1, nr = 1;
          for (int j = 0; j < l; ++j) nl *= dx;
          for (int j = 0; j < k - l; ++j) nr *= dx;
          lift.d1 = static_cast<int>(nl);
          lift.d2 = static_cast<int>(nr) * s;
        }
        guard_side(static_cast<long>(lift.d1) * lift.d2, o.side_cap);
        cp.lifts.push_back(std::move(lift));
      }
      if (py.internal_cut > 0) {
        ConeLift lift;
        lift.block = i;
        lift.d1 = ns * (s / py.internal_cut);
        lift.d2 = py.internal_cut;
        guard_side(static_cast<long>(lift.d1) * lift.d2, o.side_cap);
        cp.lifts.push_back(std::move(lift));
      }
    }
  }

  if (layout) {
    layout->extended_party = xi;
    layout->sym_dim = ns;
    layout->sector_of_block.resize(nsec);
    layout->block_sides.resize(nsec);
    for (int i = 0; i < nsec; ++i) {
      layout->sector_of_block[i] = i;
      layout->block_sides[i] = ns * plan.sizes[i];
    }
  }
  return cp;
}

UpperBoundResult upper_bound(const ConstrainedSepProblem& p,
                             const UpperBoundOptions& o) {
  HierarchyLayout layout;
  ConicProblem cp = build_hierarchy(p, o, &layout);
  Solution sol = solve(cp, o.solve);
  if (sol.status == SolveStatus::Infeasible)
    throw InfeasibleParty("relaxation infeasible: some party set is empty");
  UpperBoundResult res;
  res.certified = sol.dual_certified;
  res.value = res.certified ? sol.dual_value : sol.primal_value;
  res.extension = sol.block_values;
  res.solution = std::move(sol);
  return res;
}

}  // namespace qdisc

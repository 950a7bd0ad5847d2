#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "csep_internal.hpp"
#include "qdisc/csep.hpp"
#include "qdisc/errors.hpp"

namespace qdisc {

namespace {

// Real isometric coordinates of hermitian operators: diagonal first, then
// sqrt(2)-scaled real and imaginary parts of the upper triangle, so that
// Frobenius inner products become euclidean dot products.
Eigen::VectorXd herm_coords(const Mat& h) {
  const int d = static_cast<int>(h.rows());
  Eigen::VectorXd v(d * d);
  int at = 0;
  for (int i = 0; i < d; ++i) v(at++) = h(i, i).real();
  const double s = std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      v(at++) = s * h(i, j).real();
      v(at++) = s * h(i, j).imag();
    }
  return v;
}

Mat herm_from_coords(const Eigen::VectorXd& v, int d) {
  Mat h = Mat::Zero(d, d);
  int at = 0;
  for (int i = 0; i < d; ++i) h(i, i) = v(at++);
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double re = v(at++) * s, im = v(at++) * s;
      h(i, j) = cxd(re, im);
      h(j, i) = cxd(re, -im);
    }
  return h;
}

void check_polytope(const Polytope& v, const Party& party) {
  if (v.vertices.size() < 2) throw BadParameter("polytope needs vertices");
  if (v.reference.rows() != party.dim || v.reference.cols() != party.dim)
    throw DimMismatch("reference operator has the wrong dimension");
  for (const Mat& w : v.vertices) {
    if (w.rows() != party.dim || w.cols() != party.dim)
      throw DimMismatch("vertex has the wrong dimension");
    if (std::abs(w.trace().real() - 1.0) > 1e-9 ||
        w.trace().imag() > 1e-9)
      throw BadParameter("vertices must have unit trace");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.adjoint()),
                                          Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
      throw BadParameter("vertices must be positive semidefinite");
    if (party.constraint.residual(w) > 1e-9)
      throw BadParameter("vertices must satisfy the party constraint");
  }
}

struct Facet {
  Eigen::VectorXd normal;  // outward unit normal in affine coordinates
  double offset = 0.0;     // <normal, x> <= offset on the hull
};

// All hull facets by exhaustive candidate planes through q affinely
// independent vertices (coplanar duplicates are merged). Adequate for the
// low-dimensional polytopes certificates are built from.
std::vector<Facet> enumerate_facets(const std::vector<Eigen::VectorXd>& pts,
                                    int q) {
  const int n = static_cast<int>(pts.size());
  if (n < q + 1)
    throw GeometryError("too few vertices for a full-dimensional hull");
  double binom = 1.0;
  for (int j = 0; j < q; ++j) binom = binom * (n - j) / (j + 1);
  if (binom > 2.0e5)
    throw GeometryError("facet enumeration out of reach for this polytope");

  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(q);
  for (const auto& p : pts) centroid += p;
  centroid /= n;
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, (p - centroid).norm());

  std::map<std::vector<long>, Facet> found;
  std::vector<int> idx(q);
  for (int j = 0; j < q; ++j) idx[j] = j;
  while (true) {
    bool independent = true;
    Eigen::VectorXd nrm = Eigen::VectorXd::Ones(1);
    if (q > 1) {
      Eigen::MatrixXd diff(q - 1, q);
      for (int j = 1; j < q; ++j)
        diff.row(j - 1) = (pts[idx[j]] - pts[idx[0]]).transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff, Eigen::ComputeFullV);
      independent = svd.singularValues().minCoeff() > 1e-9 * scale;
      nrm = svd.matrixV().col(q - 1);
    }
    if (independent) {
      double c = nrm.dot(pts[idx[0]]);
      if (nrm.dot(centroid) > c) {
        nrm = -nrm;
        c = -c;
      }
      bool facet = true;
      for (const auto& p : pts)
        if (nrm.dot(p) > c + 1e-9 * (1.0 + scale)) {
          facet = false;
          break;
        }
      if (facet) {
        std::vector<long> key(q + 1);
        for (int j = 0; j < q; ++j)
          key[j] = std::lround(nrm(j) * 1.0e7);
        key[q] = std::lround(c / (1.0 + scale) * 1.0e7);
        found.emplace(std::move(key), Facet{nrm, c});
      }
    }
    // next combination
    int j = q - 1;
    while (j >= 0 && idx[j] == n - q + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int l = j + 1; l < q; ++l) idx[l] = idx[l - 1] + 1;
  }
  std::vector<Facet> facets;
  facets.reserve(found.size());
  for (auto& [key, f] : found) facets.push_back(std::move(f));
  if (facets.empty()) throw GeometryError("no bounding facets found");
  return facets;
}

}  // namespace

double approximation_radius(const Polytope& v, const Party& party,
                            const SolveOptions& o) {
  check_polytope(v, party);
  const int d = party.dim;
  const int n = static_cast<int>(v.vertices.size());

  // Affine coordinates spanned by the vertices.
  Eigen::MatrixXd raw(d * d, n);
  for (int j = 0; j < n; ++j) raw.col(j) = herm_coords(v.vertices[j]);
  Eigen::VectorXd center = raw.rowwise().mean();
  Eigen::MatrixXd diffs = raw.colwise() - center;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs, Eigen::ComputeFullU);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int q = 0;
  while (q < svd.singularValues().size() &&
         svd.singularValues()(q) > 1e-9 * std::max(1.0, smax))
    ++q;
  if (q == 0) throw GeometryError("polytope has no extent");
  Eigen::MatrixXd basis = svd.matrixU().leftCols(q);

  Eigen::VectorXd tau_raw = herm_coords(0.5 * (v.reference + v.reference.adjoint()));
  Eigen::VectorXd tau_rel = tau_raw - center;
  if ((tau_rel - basis * (basis.transpose() * tau_rel)).norm() >
      1e-8 * (1.0 + tau_rel.norm()))
    throw DegenerateReference("reference lies outside the vertex span");
  Eigen::VectorXd tau = basis.transpose() * tau_rel;

  std::vector<Eigen::VectorXd> pts(n);
  for (int j = 0; j < n; ++j) pts[j] = basis.transpose() * diffs.col(j);
  std::vector<Facet> facets = enumerate_facets(pts, q);

  double radius = 1.0;
  for (const Facet& f : facets) {
    const double at_tau = f.normal.dot(tau);
    if (f.offset - at_tau < 1e-10 * (1.0 + std::abs(f.offset)))
      throw DegenerateReference("reference touches a facet");
    // Furthest feasible point along the facet functional, bounded from above
    // by the certified dual so the returned radius never overshoots.  An
    // unconstrained party maximizes a Hermitian functional at its top
    // eigenvalue, which avoids solver noise entirely.
    Mat h = herm_from_coords(basis * f.normal, d);
    double peak;
    if (party.constraint.empty()) {
      Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
      peak = es.eigenvalues().maxCoeff();
    } else {
      Solution s = solve(csep_detail::party_program(party, h, true), o);
      peak = s.dual_certified ? s.dual_value : s.primal_value;
    }
    double m_h = peak - center.dot(basis * f.normal);
    if (m_h <= f.offset) continue;  // set does not cross this facet
    radius = std::min(radius, (f.offset - at_tau) / (m_h - at_tau));
  }
  if (radius <= 0.0) throw GeometryError("nonpositive radius");
  return radius;
}

double f_tau(const ConstrainedSepProblem& p, const Mat& tau, int tau_party,
             const SolveOptions& o) {
  p.validate();
  if (p.parties.size() != 2)
    throw BadParameter("reference value needs a two-party problem");
  if (tau_party != 0 && tau_party != 1) throw BadIndex("party out of range");
  const Party& pt = p.parties[tau_party];
  if (tau.rows() != pt.dim || tau.cols() != pt.dim)
    throw DimMismatch("reference has the wrong dimension");
  if (pt.constraint.residual(tau) > 1e-8 ||
      std::abs(tau.trace().real() - 1.0) > 1e-8)
    throw BadParameter("reference must satisfy its party constraint");
  std::vector<Mat> fixed(2);
  fixed[tau_party] = tau;
  Mat env = csep_detail::response_objective(p, 1 - tau_party, fixed);
  Solution s =
      solve(csep_detail::party_program(p.parties[1 - tau_party], env, false), o);
  return s.dual_certified ? s.dual_value : s.primal_value;
}

std::pair<double, double> seesaw_error_bound(double r_v, double l, double f) {
  if (!(l > 0.0) || l > 1.0 + 1e-12)
    throw BadRadius("radius must lie in (0, 1]");
  l = std::min(l, 1.0);
  return {r_v, r_v / l + (l - 1.0) / l * f};
}

SeesawCertificate seesaw_certificate(const ConstrainedSepProblem& p,
                                     const Polytope& v, int tau_party,
                                     const SolveOptions& o) {
  p.validate();
  if (p.parties.size() != 2)
    throw BadParameter("certificate needs a two-party problem");
  if (tau_party != 0 && tau_party != 1) throw BadIndex("party out of range");
  check_polytope(v, p.parties[tau_party]);

  SeesawCertificate cert;
  double r_low = -1e300, r_high = -1e300;
  for (const Mat& w : v.vertices) {
    std::vector<Mat> fixed(2);
    fixed[tau_party] = w;
    Solution s = best_response(p, 1 - tau_party, fixed, o);
    // Feasible-point value for the reported maximum, certified bound for the
    // enclosure endpoint.
    double lo = s.primal_value;
    if (!s.block_values.empty()) {
      std::vector<Mat> both = fixed;
      both[1 - tau_party] = s.block_values[0];
      Mat acc = Mat::Ones(1, 1);
      for (const Mat& b : both) acc = kron(acc, b);
      lo = (p.f.mat() * acc).trace().real();
    }
    r_low = std::max(r_low, lo);
    r_high = std::max(r_high, s.dual_certified ? s.dual_value : s.primal_value);
  }
  cert.r_v = r_low;
  cert.l_tau = approximation_radius(v, p.parties[tau_party], o);
  cert.f_tau = f_tau(p, v.reference, tau_party, o);
  cert.upper_from_bound =
      seesaw_error_bound(r_high, cert.l_tau, cert.f_tau).second;
  return cert;
}

}  // namespace qdisc

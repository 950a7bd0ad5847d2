#include "qdisc/qops.hpp"

#include <algorithm>
#include <numeric>

#include "qdisc/rng.hpp"

namespace qdisc {

namespace {

long prod_dims(const std::vector<SystemLabel>& systems) {
  long p = 1;
  for (const auto& s : systems) p *= s.dim;
  return p;
}

// Strides for row-major tensor indexing (factor 0 slowest).
std::vector<long> strides_of(const std::vector<int>& dims) {
  std::vector<long> st(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i)
    st[i] = st[i + 1] * dims[i + 1];
  return st;
}

void unravel(long idx, const std::vector<long>& st, std::vector<int>& out) {
  for (std::size_t i = 0; i < st.size(); ++i) {
    out[i] = static_cast<int>(idx / st[i]);
    idx %= st[i];
  }
}

long ravel(const std::vector<int>& t, const std::vector<long>& st) {
  long idx = 0;
  for (std::size_t i = 0; i < st.size(); ++i) idx += t[i] * st[i];
  return idx;
}

std::vector<int> positions_of(const LabeledOperator& x,
                              const std::vector<std::string>& names) {
  std::vector<int> pos;
  pos.reserve(names.size());
  for (const auto& n : names) pos.push_back(x.index_of(n));
  return pos;
}

}  // namespace

LabeledOperator::LabeledOperator(std::vector<SystemLabel> systems, Mat entries)
    : systems_(std::move(systems)), mat_(std::move(entries)) {
  for (const auto& s : systems_)
    if (s.dim < 1) throw BadParameter("system dimension must be >= 1");
  for (std::size_t i = 0; i < systems_.size(); ++i)
    for (std::size_t j = i + 1; j < systems_.size(); ++j)
      if (systems_[i].name == systems_[j].name)
        throw DuplicateSystem("duplicate system name: " + systems_[i].name);
  if (mat_.rows() != mat_.cols() || mat_.rows() != prod_dims(systems_))
    throw DimMismatch("matrix side does not match product of dims");
}

std::vector<int> LabeledOperator::dims() const {
  std::vector<int> d;
  d.reserve(systems_.size());
  for (const auto& s : systems_) d.push_back(s.dim);
  return d;
}

int LabeledOperator::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < systems_.size(); ++i)
    if (systems_[i].name == name) return static_cast<int>(i);
  throw UnknownSystem("unknown system: " + name);
}

bool LabeledOperator::has_system(const std::string& name) const {
  for (const auto& s : systems_)
    if (s.name == name) return true;
  return false;
}

int LabeledOperator::dim_of(const std::string& name) const {
  return systems_[index_of(name)].dim;
}

bool LabeledOperator::is_hermitian(double tol) const {
  return (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool LabeledOperator::is_psd(double tol) const {
  if (!is_hermitian(tol)) return false;
  Mat h = (mat_ + mat_.adjoint()) / 2.0;
  return min_eig_herm(h) >= -tol;
}

LabeledOperator LabeledOperator::relabeled(const std::string& old_name,
                                           const std::string& new_name) const {
  auto sys = systems_;
  sys[index_of(old_name)].name = new_name;
  return LabeledOperator(std::move(sys), mat_);
}

bool KrausChannel::is_trace_preserving(double tol) const {
  if (kraus_ops.empty()) return false;
  Mat acc = Mat::Zero(input.dim, input.dim);
  for (const auto& k : kraus_ops) {
    if (k.rows() != output.dim || k.cols() != input.dim) return false;
    acc += k.adjoint() * k;
  }
  return (acc - Mat::Identity(input.dim, input.dim)).cwiseAbs().maxCoeff() <=
         tol;
}

LabeledOperator tensor(const LabeledOperator& x, const LabeledOperator& y) {
  for (const auto& s : y.systems())
    if (x.has_system(s.name))
      throw DuplicateSystem("tensor: system name collision: " + s.name);
  auto sys = x.systems();
  sys.insert(sys.end(), y.systems().begin(), y.systems().end());
  return LabeledOperator(std::move(sys), kron(x.mat(), y.mat()));
}

Mat ptrace(const Mat& x, const std::vector<int>& dims,
           const std::vector<int>& traced) {
  const auto st = strides_of(dims);
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(dims.size()); ++i)
    if (std::find(traced.begin(), traced.end(), i) == traced.end())
      keep.push_back(i);
  std::vector<int> kdims;
  for (int i : keep) kdims.push_back(dims[i]);
  const auto kst = strides_of(kdims);
  long nk = 1;
  for (int d : kdims) nk *= d;

  Mat out = Mat::Zero(nk, nk);
  const long n = x.rows();
  std::vector<int> tr(dims.size()), tc(dims.size()), kr(keep.size()),
      kc(keep.size());
  for (long r = 0; r < n; ++r) {
    unravel(r, st, tr);
    for (long c = 0; c < n; ++c) {
      unravel(c, st, tc);
      bool diag = true;
      for (int t : traced)
        if (tr[t] != tc[t]) {
          diag = false;
          break;
        }
      if (!diag) continue;
      for (std::size_t i = 0; i < keep.size(); ++i) {
        kr[i] = tr[keep[i]];
        kc[i] = tc[keep[i]];
      }
      out(ravel(kr, kst), ravel(kc, kst)) += x(r, c);
    }
  }
  return out;
}

Mat ptranspose(const Mat& x, const std::vector<int>& dims,
               const std::vector<int>& transposed) {
  const auto st = strides_of(dims);
  const long n = x.rows();
  Mat out(n, n);
  std::vector<int> tr(dims.size()), tc(dims.size());
  for (long r = 0; r < n; ++r) {
    unravel(r, st, tr);
    for (long c = 0; c < n; ++c) {
      unravel(c, st, tc);
      auto nr = tr, nc = tc;
      for (int t : transposed) std::swap(nr[t], nc[t]);
      out(ravel(nr, st), ravel(nc, st)) = x(r, c);
    }
  }
  return out;
}

Mat psys_permute(const Mat& x, const std::vector<int>& dims,
                 const std::vector<int>& new_order) {
  const auto st = strides_of(dims);
  std::vector<int> ndims(dims.size());
  for (std::size_t j = 0; j < dims.size(); ++j) ndims[j] = dims[new_order[j]];
  const auto nst = strides_of(ndims);
  const long n = x.rows();
  std::vector<long> map(n);
  std::vector<int> t(dims.size()), nt(dims.size());
  for (long i = 0; i < n; ++i) {
    unravel(i, st, t);
    for (std::size_t j = 0; j < dims.size(); ++j) nt[j] = t[new_order[j]];
    map[i] = ravel(nt, nst);
  }
  Mat out(n, n);
  for (long r = 0; r < n; ++r)
    for (long c = 0; c < n; ++c) out(map[r], map[c]) = x(r, c);
  return out;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

cxd hs_inner(const Mat& a, const Mat& b) {
  return (a.adjoint() * b).trace();
}

LabeledOperator partial_trace(const LabeledOperator& x,
                              const std::vector<std::string>& over) {
  auto pos = positions_of(x, over);
  std::vector<SystemLabel> rest;
  for (int i = 0; i < static_cast<int>(x.systems().size()); ++i)
    if (std::find(pos.begin(), pos.end(), i) == pos.end())
      rest.push_back(x.systems()[i]);
  return LabeledOperator(std::move(rest), ptrace(x.mat(), x.dims(), pos));
}

LabeledOperator partial_transpose(const LabeledOperator& x,
                                  const std::vector<std::string>& over) {
  auto pos = positions_of(x, over);
  return LabeledOperator(x.systems(), ptranspose(x.mat(), x.dims(), pos));
}

LabeledOperator permute_systems(const LabeledOperator& x,
                                const std::vector<std::string>& new_order) {
  if (new_order.size() != x.systems().size())
    throw BadPermutation("permute_systems: wrong number of names");
  std::vector<int> order;
  order.reserve(new_order.size());
  for (const auto& n : new_order) order.push_back(x.index_of(n));
  std::vector<bool> seen(order.size(), false);
  for (int i : order) {
    if (seen[i]) throw BadPermutation("permute_systems: repeated name");
    seen[i] = true;
  }
  std::vector<SystemLabel> sys;
  sys.reserve(order.size());
  for (int i : order) sys.push_back(x.systems()[i]);
  return LabeledOperator(std::move(sys), psys_permute(x.mat(), x.dims(), order));
}

LabeledOperator link_product(const LabeledOperator& x,
                             const LabeledOperator& y) {
  // Shared systems, in their order of appearance in x.
  std::vector<std::string> shared;
  for (const auto& s : x.systems())
    if (y.has_system(s.name)) {
      if (y.dim_of(s.name) != s.dim)
        throw DimMismatch("link_product: dimension mismatch on " +
                                s.name);
      shared.push_back(s.name);
    }

  std::vector<std::string> xp, yp;
  for (const auto& s : x.systems())
    if (std::find(shared.begin(), shared.end(), s.name) == shared.end())
      xp.push_back(s.name);
  for (const auto& s : y.systems())
    if (std::find(shared.begin(), shared.end(), s.name) == shared.end())
      yp.push_back(s.name);

  // Reorder: x -> [xp..., shared...], y -> [shared..., yp...].
  std::vector<std::string> xorder = xp;
  xorder.insert(xorder.end(), shared.begin(), shared.end());
  std::vector<std::string> yorder = shared;
  yorder.insert(yorder.end(), yp.begin(), yp.end());
  LabeledOperator xs = permute_systems(x, xorder);
  LabeledOperator ys = permute_systems(y, yorder);

  long a = 1, e = 1, b = 1;
  std::vector<SystemLabel> out_sys;
  for (const auto& n : xp) {
    a *= x.dim_of(n);
    out_sys.push_back(x.systems()[x.index_of(n)]);
  }
  for (const auto& n : shared) e *= x.dim_of(n);
  for (const auto& n : yp) {
    b *= y.dim_of(n);
    out_sys.push_back(y.systems()[y.index_of(n)]);
  }

  // Z[(i,i'),(j,j')] = sum_{m,k} X[(i,m),(i',k)] Y[(m,j),(k,j')]
  // computed as an (a^2 x e^2) * (e^2 x b^2) product.
  Mat m1(a * a, e * e), m2(e * e, b * b);
  const Mat& xm = xs.mat();
  const Mat& ym = ys.mat();
  for (long i = 0; i < a; ++i)
    for (long ip = 0; ip < a; ++ip)
      for (long m = 0; m < e; ++m)
        for (long k = 0; k < e; ++k)
          m1(i * a + ip, m * e + k) = xm(i * e + m, ip * e + k);
  for (long m = 0; m < e; ++m)
    for (long k = 0; k < e; ++k)
      for (long j = 0; j < b; ++j)
        for (long jp = 0; jp < b; ++jp)
          m2(m * e + k, j * b + jp) = ym(m * b + j, k * b + jp);
  Mat z2 = m1 * m2;
  Mat z(a * b, a * b);
  for (long i = 0; i < a; ++i)
    for (long ip = 0; ip < a; ++ip)
      for (long j = 0; j < b; ++j)
        for (long jp = 0; jp < b; ++jp)
          z(i * b + j, ip * b + jp) = z2(i * a + ip, j * b + jp);
  return LabeledOperator(std::move(out_sys), std::move(z));
}

LabeledOperator trace_and_replace(const LabeledOperator& x,
                                  const std::string& over) {
  int pos = x.index_of(over);
  int d = x.systems()[pos].dim;
  LabeledOperator traced = partial_trace(x, {over});
  LabeledOperator idq({x.systems()[pos]},
                      Mat::Identity(d, d) / static_cast<double>(d));
  LabeledOperator lifted = tensor(traced, idq);
  std::vector<std::string> orig;
  for (const auto& s : x.systems()) orig.push_back(s.name);
  lifted = permute_systems(lifted, orig);
  return LabeledOperator(x.systems(), x.mat() - lifted.mat());
}

LabeledOperator choi(const KrausChannel& ch) {
  const int di = ch.input.dim, dout = ch.output.dim;
  Mat d = Mat::Zero(di * dout, di * dout);
  for (const auto& k : ch.kraus_ops) {
    if (k.rows() != dout || k.cols() != di)
      throw DimMismatch("choi: Kraus operator shape mismatch");
    Vec w(di * dout);
    for (int i = 0; i < di; ++i)
      for (int o = 0; o < dout; ++o) w(i * dout + o) = k(o, i);
    d += w * w.adjoint();
  }
  return LabeledOperator({ch.input, ch.output}, std::move(d));
}

Mat apply_choi(const LabeledOperator& choi_matrix, const Mat& rho) {
  const auto& sys = choi_matrix.systems();
  if (sys.size() != 2 || rho.rows() != sys[0].dim)
    throw DimMismatch("apply_choi: expects [input, output] systems");
  const int di = sys[0].dim, dout = sys[1].dim;
  const Mat& d = choi_matrix.mat();
  Mat out = Mat::Zero(dout, dout);
  for (int i = 0; i < di; ++i)
    for (int ip = 0; ip < di; ++ip)
      out += rho(i, ip) *
             d.block(i * dout, ip * dout, dout, dout);
  return out;
}

Vec max_entangled(int d) {
  Vec v = Vec::Zero(d * d);
  for (int i = 0; i < d; ++i) v(i * d + i) = 1.0;
  return v;
}

long symmetric_dim(int d, int k) {
  // binom(d+k-1, k) with overflow guard.
  long num = 1;
  for (int i = 1; i <= k; ++i) {
    num = num * (d - 1 + i);
    if (num > (1L << 40)) throw SizeOverflow("symmetric_dim overflow");
    num /= i;
  }
  return num;
}

Mat symmetric_isometry(int d, int k) {
  const long ns = symmetric_dim(d, k);
  long n = 1;
  for (int i = 0; i < k; ++i) {
    n *= d;
    if (n > (1L << 30)) throw SizeOverflow("symmetric_isometry overflow");
  }
  // Enumerate nondecreasing tuples lexicographically; map each basis tuple to
  // its sorted representative.
  std::vector<std::vector<int>> reps;
  std::vector<int> t(k, 0);
  while (true) {
    reps.push_back(t);
    int j = k - 1;
    while (j >= 0 && t[j] == d - 1) --j;
    if (j < 0) break;
    ++t[j];
    for (int m = j + 1; m < k; ++m) t[m] = t[j];
    // skip tuples that are not nondecreasing (construction keeps them sorted)
  }
  if (static_cast<long>(reps.size()) != ns)
    throw Error("symmetric_isometry: internal enumeration error");
  auto rep_index = [&](std::vector<int> s) {
    std::sort(s.begin(), s.end());
    auto it = std::lower_bound(reps.begin(), reps.end(), s);
    return static_cast<long>(it - reps.begin());
  };

  std::vector<int> dims(k, d);
  const auto st = strides_of(dims);
  Mat v = Mat::Zero(n, ns);
  std::vector<int> tup(k);
  for (long idx = 0; idx < n; ++idx) {
    unravel(idx, st, tup);
    v(idx, rep_index(tup)) += 1.0;
  }
  for (long c = 0; c < ns; ++c) v.col(c).normalize();
  return v;
}

Mat permutation_unitary(int d, int k, const std::vector<int>& sigma) {
  if (static_cast<int>(sigma.size()) != k)
    throw BadPermutation("permutation_unitary: wrong length");
  std::vector<int> inv(k, -1);
  for (int j = 0; j < k; ++j) {
    if (sigma[j] < 0 || sigma[j] >= k || inv[sigma[j]] != -1)
      throw BadPermutation("permutation_unitary: not a permutation");
    inv[sigma[j]] = j;
  }
  long n = 1;
  for (int i = 0; i < k; ++i) n *= d;
  std::vector<int> dims(k, d);
  const auto st = strides_of(dims);
  Mat u = Mat::Zero(n, n);
  std::vector<int> t(k), nt(k);
  for (long idx = 0; idx < n; ++idx) {
    unravel(idx, st, t);
    for (int j = 0; j < k; ++j) nt[j] = t[inv[j]];
    u(ravel(nt, st), idx) = 1.0;
  }
  return u;
}

Mat split_isometry(int d, int k, int l) {
  if (l < 0 || l > k) throw BadIndex("split_isometry: l out of range");
  Mat vk = symmetric_isometry(d, k);
  if (l == 0 || l == k) return Mat::Identity(vk.cols(), vk.cols());
  Mat vl = symmetric_isometry(d, l);
  Mat vr = symmetric_isometry(d, k - l);
  return kron(vl, vr).adjoint() * vk;
}

Mat sqrtm_psd(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es((a + a.adjoint()) / 2.0);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

Mat inv_sqrtm_psd(const Mat& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es((a + a.adjoint()) / 2.0);
  Eigen::VectorXd lam = es.eigenvalues();
  const double cut = rel_tol * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    inv(i) = lam(i) > cut ? 1.0 / std::sqrt(lam(i)) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

Mat kernel_projector(const Mat& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es((a + a.adjoint()) / 2.0);
  Eigen::VectorXd lam = es.eigenvalues();
  const double cut = rel_tol * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd sel(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) sel(i) = lam(i) > cut ? 0.0 : 1.0;
  return es.eigenvectors() * sel.asDiagonal() * es.eigenvectors().adjoint();
}

double min_eig_herm(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es((a + a.adjoint()) / 2.0,
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---- rng helpers ----

Mat random_gaussian(int rows, int cols, Rng& rng) {
  Mat g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = cxd(rng.normal(), rng.normal());
  return g;
}

Mat random_unitary(int d, Rng& rng) {
  Mat g = random_gaussian(d, d, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    cxd ph = r(i, i) / std::abs(r(i, i));
    q.col(i) *= ph;
  }
  return q;
}

Mat random_pure_state(int d, Rng& rng) {
  Vec v = random_gaussian(d, 1, rng).col(0);
  v.normalize();
  return v * v.adjoint();
}

Mat random_psd(int d, Rng& rng) {
  Mat g = random_gaussian(d, d, rng);
  return g * g.adjoint();
}

}  // namespace qdisc

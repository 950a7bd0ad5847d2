#include "qdisc/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace qdisc {

namespace {

constexpr long kObjectiveSideCap = 4096;

int exact_sqrt(int n, const char* what) {
  const int r = static_cast<int>(std::lround(std::sqrt(double(n))));
  if (r < 1 || r * r != n)
    throw DimMismatch(std::string(what) +
                      " dimension is not a perfect square (expected a "
                      "two-copy ensemble)");
  return r;
}

// Row-major strides for a factor list (factor 0 slowest).
std::vector<long> strides_of(const std::vector<int>& dims) {
  std::vector<long> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
    s[k] = s[k + 1] * dims[k + 1];
  return s;
}

// Appends rows forcing the marginal obtained by fixing the factors in
// `fixed`, summing the factors in `summed`, and reading the remaining
// factors as matrix indices to be proportional to the identity on factor
// `ident`: its off-diagonal entries vanish and consecutive diagonal entries
// agree. The proportionality constants stay free (the unit trace or a
// sector-balance row pins them), which keeps the rows linearly independent.
void add_identity_marginal_rows(AffineMap& a, const std::vector<int>& dims,
                                const std::vector<int>& summed, int ident,
                                const std::vector<std::pair<int, int>>& fixed) {
  const int nf = static_cast<int>(dims.size());
  const std::vector<long> str = strides_of(dims);
  const long side =
      std::accumulate(dims.begin(), dims.end(), 1L, std::multiplies<long>());

  std::vector<int> free;
  for (int k = 0; k < nf; ++k) {
    if (k == ident) continue;
    if (std::find(summed.begin(), summed.end(), k) != summed.end()) continue;
    bool fix = false;
    for (const auto& [pos, val] : fixed) fix = fix || pos == k;
    if (!fix) free.push_back(k);
  }
  long nfree = 1;
  for (int k : free) nfree *= dims[k];
  long nsum = 1;
  for (int k : summed) nsum *= dims[k];

  long base = 0;
  for (const auto& [pos, val] : fixed) base += val * str[pos];
  // Flat offset of a free multi-index g, identity index x, summed index s.
  auto offset = [&](long g, int x, long s) {
    long off = base + x * str[ident];
    long gg = g;
    for (int k = static_cast<int>(free.size()) - 1; k >= 0; --k) {
      off += (gg % dims[free[k]]) * str[free[k]];
      gg /= dims[free[k]];
    }
    long ss = s;
    for (int k = static_cast<int>(summed.size()) - 1; k >= 0; --k) {
      off += (ss % dims[summed[k]]) * str[summed[k]];
      ss /= dims[summed[k]];
    }
    return off;
  };

  const int dt = dims[ident];
  for (long g = 0; g < nfree; ++g) {
    for (long gp = 0; gp < nfree; ++gp) {
      // Off-diagonal identity entries vanish; x < x' covers each conjugate
      // pair once.
      for (int x = 0; x < dt; ++x) {
        for (int xp = x + 1; xp < dt; ++xp) {
          Mat coeff = Mat::Zero(side, side);
          for (long s = 0; s < nsum; ++s)
            coeff(offset(gp, xp, s), offset(g, x, s)) += 1.0;
          a.add_trace_row(coeff, 0.0);
        }
      }
      // Consecutive diagonal entries agree; g <= g' avoids conjugate rows.
      if (g > gp) continue;
      for (int x = 0; x + 1 < dt; ++x) {
        Mat coeff = Mat::Zero(side, side);
        for (long s = 0; s < nsum; ++s) {
          coeff(offset(gp, x, s), offset(g, x, s)) += 1.0;
          coeff(offset(gp, x + 1, s), offset(g, x + 1, s)) -= 1.0;
        }
        a.add_trace_row(coeff, 0.0);
      }
    }
  }
}

// Appends rows equating the traces of consecutive index values of factor
// `reg`; with the unit trace this gives every register value an equal share.
void add_register_balance_rows(AffineMap& a, const std::vector<int>& dims,
                               int reg) {
  const std::vector<long> str = strides_of(dims);
  const long side =
      std::accumulate(dims.begin(), dims.end(), 1L, std::multiplies<long>());
  const long block = str[reg];
  long outer = 1;
  for (int k = 0; k < reg; ++k) outer *= dims[k];
  for (int j = 0; j + 1 < dims[reg]; ++j) {
    Mat coeff = Mat::Zero(side, side);
    for (long o = 0; o < outer; ++o) {
      const long b0 = o * dims[reg] * block + j * block;
      for (long r = 0; r < block; ++r) {
        coeff(b0 + r, b0 + r) += 1.0;
        coeff(b0 + block + r, b0 + block + r) -= 1.0;
      }
    }
    a.add_trace_row(coeff, 0.0);
  }
}

// Weighted member Chois of a two-copy ensemble, reordered to
// (in1, out1, in2, out2) with the quantum memories folded in: the memory
// between the calls rides along the first call as an identity channel, the
// memory into the measurement along the second.
struct TwoCopyView {
  std::vector<double> weight;
  std::vector<Mat> choi;
  int di1 = 0, do1 = 0, di2 = 0, do2 = 0;
};

TwoCopyView lifted_two_copy(const ChannelEnsemble& e2, int d_e1, int d_e2) {
  const int di = exact_sqrt(e2.input.dim, "ensemble input");
  const int dout = exact_sqrt(e2.output.dim, "ensemble output");
  TwoCopyView v;
  v.di1 = di * d_e1;
  v.do1 = dout * d_e1;
  v.di2 = di * d_e2;
  v.do2 = dout * d_e2;
  Mat phi1, phi2;
  if (d_e1 > 1 || d_e2 > 1) {
    Vec m1 = max_entangled(d_e1), m2 = max_entangled(d_e2);
    phi1 = m1 * m1.adjoint();
    phi2 = m2 * m2.adjoint();
  }
  for (const auto& [q, c] : e2.members) {
    Mat m = psys_permute(c.mat(), {di, di, dout, dout}, {0, 2, 1, 3});
    if (d_e1 > 1 || d_e2 > 1) {
      m = kron(m, kron(phi1, phi2));
      m = psys_permute(m, {di, dout, di, dout, d_e1, d_e1, d_e2, d_e2},
                       {0, 4, 1, 5, 2, 6, 3, 7});
    }
    v.weight.push_back(q);
    v.choi.push_back(std::move(m));
  }
  return v;
}

}  // namespace

ConstrainedSepProblem compile_memoryless_single_copy(const ChannelEnsemble& e) {
  e.validate();
  const int di = e.input.dim, dout = e.output.dim;
  const int n = static_cast<int>(e.members.size());
  const long block = static_cast<long>(dout) * di;
  const long side = n * block;
  if (side > kObjectiveSideCap)
    throw SizeOverflow("compiled objective side exceeds the supported size");

  // Objective block per guess: the member Choi read from the measurement
  // side, so that a product of the POVM block and the input state evaluates
  // to the success probability.
  Mat f = Mat::Zero(side, side);
  for (int i = 0; i < n; ++i) {
    Mat g = psys_permute(e.members[i].second.mat(), {di, dout}, {1, 0});
    g = ptranspose(g, {dout, di}, {1});
    f.block(i * block, i * block, block, block) =
        dout * e.members[i].first * g;
  }

  ConstrainedSepProblem p;
  p.f = LabeledOperator({{"povm", n * dout}, {"state", di}}, std::move(f));

  Party povm;
  povm.dim = n * dout;
  povm.sectors.assign(n, dout);
  // Summed over the guess flag, the block must resolve the identity on the
  // output; the scale is fixed by the unit trace.
  add_identity_marginal_rows(povm.constraint, {n, dout}, {0}, 1, {});
  Party state;
  state.dim = di;
  p.parties = {std::move(povm), std::move(state)};
  return p;
}

ConstrainedSepProblem compile_memory_dE(const ChannelEnsemble& e, int d_E) {
  if (d_E < 1) throw BadParameter("memory dimension must be at least 1");
  if (d_E == 1) return compile_memoryless_single_copy(e);
  return compile_memoryless_single_copy(tensor_with_identity(e, d_E));
}

ConstrainedSepProblem compile_adaptive(const ChannelEnsemble& e2, int d_E1,
                                       int d_E2, int L) {
  e2.validate();
  if (d_E1 < 1 || d_E2 < 1)
    throw BadParameter("memory dimensions must be at least 1");
  if (L < 1) throw BadParameter("register size must be at least 1");
  TwoCopyView v = lifted_two_copy(e2, d_E1, d_E2);
  const int n = static_cast<int>(v.weight.size());
  const long d_state = v.di1;
  const long d_inst = static_cast<long>(L) * v.do1 * v.di2;
  const long d_meas = static_cast<long>(L) * n * v.do2;
  const long side = d_state * d_inst * d_meas;
  if (side > kObjectiveSideCap)
    throw SizeOverflow(
        "compiled adaptive objective exceeds the supported size; reduce the "
        "register size or the memory dimensions");

  // Objective entries: the member Choi transposed on everything but the last
  // output, placed on the matching register/guess diagonal. A product of a
  // state, an instrument branch j and a POVM element i then evaluates to the
  // probability of guess i through branch j.
  const double scale = static_cast<double>(v.do1) * L * v.do2;
  const std::vector<int> cdims = {v.di1, v.do1, v.di2, v.do2};
  const std::vector<long> cstr = strides_of(cdims);
  const long cside = cstr[0] * v.di1;
  Mat f = Mat::Zero(side, side);
  auto slot = [&](long a, int j, long o, long b, int i, long x) {
    return (a * L + j) * (d_inst / L) * d_meas +
           (o * v.di2 + b) * d_meas + (static_cast<long>(j) * n + i) * v.do2 +
           x;
  };
  for (int i = 0; i < n; ++i) {
    Mat h = ptranspose(v.choi[i].transpose(), cdims, {3});
    for (int j = 0; j < L; ++j) {
      for (long r = 0; r < cside; ++r) {
        const long a = r / cstr[0], o = (r / cstr[1]) % v.do1;
        const long b = (r / cstr[2]) % v.di2, x = r % v.do2;
        for (long c = 0; c < cside; ++c) {
          const cxd val = h(r, c);
          if (val == cxd(0.0, 0.0)) continue;
          const long ap = c / cstr[0], op = (c / cstr[1]) % v.do1;
          const long bp = (c / cstr[2]) % v.di2, xp = c % v.do2;
          f(slot(a, j, o, b, i, x), slot(ap, j, op, bp, i, xp)) +=
              scale * v.weight[i] * val;
        }
      }
    }
  }

  ConstrainedSepProblem p;
  p.f = LabeledOperator({{"state", static_cast<int>(d_state)},
                         {"instrument", static_cast<int>(d_inst)},
                         {"measurement", static_cast<int>(d_meas)}},
                        std::move(f));

  Party state;
  state.dim = static_cast<int>(d_state);

  Party inst;
  inst.dim = static_cast<int>(d_inst);
  inst.sectors.assign(L, v.do1 * v.di2);
  // Branches summed over the register and traced over the next input must
  // resolve the identity on the first output.
  add_identity_marginal_rows(inst.constraint, {L, v.do1, v.di2}, {0, 2}, 1,
                             {});

  Party meas;
  meas.dim = static_cast<int>(d_meas);
  meas.sectors.assign(static_cast<std::size_t>(L) * n, v.do2);
  // Each register value carries a complete POVM on the last output: summed
  // over guesses it is proportional to the identity, and all register values
  // carry the same share of the trace.
  for (int j = 0; j < L; ++j)
    add_identity_marginal_rows(meas.constraint, {L, n, v.do2}, {1}, 2,
                               {{0, j}});
  add_register_balance_rows(meas.constraint, {L, n, v.do2}, 0);

  p.parties = {std::move(state), std::move(inst), std::move(meas)};
  return p;
}

ConstrainedSepProblem compile_classically_adaptive(const ChannelEnsemble& e2,
                                                   int L) {
  e2.validate();
  if (L < 1) throw BadParameter("register size must be at least 1");
  TwoCopyView v = lifted_two_copy(e2, 1, 1);
  const int n = static_cast<int>(v.weight.size());
  const long d_second = static_cast<long>(L) * n * v.di2 * v.do2;
  const long d_first = static_cast<long>(L) * v.di1 * v.do1;
  if (d_second * d_first > kObjectiveSideCap)
    throw SizeOverflow(
        "compiled register objective exceeds the supported size; reduce the "
        "register size");

  // Objective: member Chois reordered so the second-round systems come
  // first, on the diagonal of matching register values and guesses.
  const double scale = static_cast<double>(v.do1) * L * v.do2;
  const long dsec = static_cast<long>(v.di2) * v.do2;  // second-round block
  const long dfir = static_cast<long>(v.di1) * v.do1;  // first-round block
  Mat f = Mat::Zero(d_second * d_first, d_second * d_first);
  for (int i = 0; i < n; ++i) {
    Mat c = psys_permute(v.choi[i], {static_cast<int>(dfir),
                                     static_cast<int>(dsec)},
                         {1, 0});
    for (int j = 0; j < L; ++j) {
      const long arow = (static_cast<long>(j) * n + i) * dsec;
      const long brow = j * dfir;
      for (long s = 0; s < dsec; ++s)
        for (long sp = 0; sp < dsec; ++sp)
          for (long t = 0; t < dfir; ++t)
            for (long tp = 0; tp < dfir; ++tp)
              f((arow + s) * d_first + brow + t,
                (arow + sp) * d_first + brow + tp) +=
                  scale * v.weight[i] * c(s * dfir + t, sp * dfir + tp);
    }
  }

  ConstrainedSepProblem p;
  p.f = LabeledOperator({{"second_round", static_cast<int>(d_second)},
                         {"first_round", static_cast<int>(d_first)}},
                        std::move(f));

  Party second;
  second.dim = static_cast<int>(d_second);
  second.sectors.assign(static_cast<std::size_t>(L) * n, v.di2 * v.do2);
  // Each register value holds a complete second-round tester: summed over
  // guesses the block is some state tensored with the identity on the last
  // output, and every register value carries the same share of the trace.
  for (int j = 0; j < L; ++j)
    add_identity_marginal_rows(second.constraint, {L, n, v.di2, v.do2}, {1},
                               3, {{0, j}});
  add_register_balance_rows(second.constraint, {L, n, v.di2, v.do2}, 0);

  Party first;
  first.dim = static_cast<int>(d_first);
  first.sectors.assign(L, v.di1 * v.do1);
  // Summed over the register, the first-round elements form a tester: some
  // input state tensored with the identity on the first output.
  add_identity_marginal_rows(first.constraint, {L, v.di1, v.do1}, {0}, 2, {});

  p.parties = {std::move(second), std::move(first)};
  return p;
}

void Scenario::validate() const {
  ensemble.validate();
  if (d_E < 1 || d_E1 < 1 || d_E2 < 1)
    throw BadParameter("memory dimensions must be at least 1");
  if (L < 0) throw BadParameter("register size cannot be negative");
  const bool single_call = kind == ScenarioKind::MemorylessSingleCopy ||
                           kind == ScenarioKind::MemoryDESingleCopy;
  if (!single_call) {
    exact_sqrt(ensemble.input.dim, "ensemble input");
    exact_sqrt(ensemble.output.dim, "ensemble output");
  }
  const bool has_register = kind == ScenarioKind::AdaptiveClassicalMemory ||
                            kind == ScenarioKind::ClassicallyAdaptive;
  if (!has_register && L > 1)
    throw BadParameter("this scenario kind has no classical register");
  const bool adaptive = kind == ScenarioKind::AdaptiveNoClassical ||
                        kind == ScenarioKind::AdaptiveClassicalMemory;
  if (!adaptive && (d_E1 > 1 || d_E2 > 1))
    throw BadParameter("round memories apply only to adaptive scenarios");
  if (adaptive && d_E > 1)
    throw BadParameter("adaptive scenarios use d_E1 and d_E2, not d_E");
  if (kind == ScenarioKind::MemorylessSingleCopy && d_E > 1)
    throw BadParameter("the memoryless scenario cannot hold a memory");
  if (kind == ScenarioKind::ClassicallyAdaptive && d_E > 1)
    throw BadParameter("the register-only scenario has no quantum memory");
}

ConstrainedSepProblem compile(const Scenario& s) {
  s.validate();
  const int n = static_cast<int>(s.ensemble.members.size());
  switch (s.kind) {
    case ScenarioKind::MemorylessSingleCopy:
      return compile_memoryless_single_copy(s.ensemble);
    case ScenarioKind::MemoryDESingleCopy:
    case ScenarioKind::ParallelMemoryDE:
      return compile_memory_dE(s.ensemble, s.d_E);
    case ScenarioKind::AdaptiveNoClassical:
      return compile_adaptive(s.ensemble, s.d_E1, s.d_E2, 1);
    case ScenarioKind::AdaptiveClassicalMemory:
      return compile_adaptive(s.ensemble, s.d_E1, s.d_E2, s.L > 0 ? s.L : n);
    case ScenarioKind::ClassicallyAdaptive:
      return compile_classically_adaptive(s.ensemble, s.L > 0 ? s.L : n);
  }
  throw BadParameter("unknown scenario kind");
}

double oracle_clock_shift(int d, int d_E) {
  if (d < 2) throw BadParameter("clock-shift family needs d >= 2");
  if (d_E < 1) throw BadParameter("memory dimension must be at least 1");
  return std::min(1.0, static_cast<double>(d_E) / d);
}

double oracle_group_uniform(const std::vector<Mat>& unitaries, int d_E) {
  if (unitaries.empty()) throw BadParameter("need at least one unitary");
  if (d_E < 1) throw BadParameter("memory dimension must be at least 1");
  const int d = static_cast<int>(unitaries[0].rows());
  const int n = static_cast<int>(unitaries.size());
  for (const Mat& u : unitaries) {
    if (u.rows() != d || u.cols() != d)
      throw DimMismatch("unitaries must share one square dimension");
    if ((u.adjoint() * u - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-9)
      throw NotUnitary("group member is not unitary");
  }
  // Closure up to phase: every pairwise product must overlap some member
  // with |tr(U_k^dag U_i U_j)| = d.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Mat prod = unitaries[i] * unitaries[j];
      bool found = false;
      for (int k = 0; k < n && !found; ++k)
        found = std::abs((unitaries[k].adjoint() * prod).trace()) >
                d * (1.0 - 1e-9);
      if (!found)
        throw NotAGroup(
            "the set is not closed under multiplication up to phase");
    }
  }
  // Character-norm test: the averaged squared character modulus is 1 exactly
  // for an irreducible action.
  double s = 0.0;
  for (const Mat& u : unitaries) s += std::norm(u.trace());
  if (std::abs(s / n - 1.0) > 1e-9)
    throw NotIrreducible("the representation is reducible");
  return static_cast<double>(d) * std::min(d, d_E) / n;
}

double oracle_adaptive_no_cc_cap(int n, int d_O, int d_E2) {
  if (n < 1 || d_O < 1 || d_E2 < 1)
    throw BadParameter("cap arguments must be positive");
  return std::min(1.0, static_cast<double>(d_O) * d_E2 / n);
}

Tester fourier_feed_forward_strategy(int d) {
  if (d < 2) throw BadParameter("strategy needs d >= 2");
  Vec f0 = Vec::Constant(d, cxd(1.0 / std::sqrt(double(d)), 0.0));
  std::vector<Vec> fourier(d);
  for (int k = 0; k < d; ++k) {
    fourier[k] = Vec(d);
    for (int l = 0; l < d; ++l)
      fourier[k](l) =
          std::exp(cxd(0.0, 2.0 * M_PI * k * l / d)) / std::sqrt(double(d));
  }
  Tester t;
  t.scenario = TesterScenario::ClassicallyAdaptive2;
  const std::vector<SystemLabel> sys = {
      {"I1", d}, {"O1", d}, {"I2", d}, {"O2", d}};
  Mat zero = Mat::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    Mat oa = zero;
    oa(a, a) = 1.0;
    for (int b = 0; b < d; ++b) {
      Mat i1 = zero;
      i1(0, 0) = 1.0;
      Mat i2 = f0 * f0.adjoint();
      Mat o2 = fourier[b] * fourier[b].adjoint();
      t.elements.emplace_back(sys, kron(kron(i1, oa), kron(i2, o2)));
    }
  }
  return t;
}

}  // namespace qdisc

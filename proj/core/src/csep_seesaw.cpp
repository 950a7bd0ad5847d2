#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "csep_internal.hpp"
#include "qdisc/csep.hpp"
#include "qdisc/errors.hpp"
#include "qdisc/rng.hpp"

namespace qdisc {

namespace csep_detail {

ConicProblem party_program(const Party& party, const Mat& objective,
                           bool maximize) {
  ConicProblem cp;
  cp.maximize = maximize;
  cp.blocks.push_back({"w", party.dim});
  if (objective.size()) cp.objective = {0.5 * (objective + objective.adjoint())};
  for (const HermRow& r : hermitian_rows(party.constraint, party.dim)) {
    EqualityRow row;
    add_hermitian_coeff(row, 0, r.h);
    row.rhs = r.t;
    cp.equalities.push_back(std::move(row));
  }
  EqualityRow tr;
  add_hermitian_coeff(tr, 0, Mat::Identity(party.dim, party.dim));
  tr.rhs = 1.0;
  cp.trace_row = static_cast<int>(cp.equalities.size());
  cp.equalities.push_back(std::move(tr));
  return cp;
}

Mat response_objective(const ConstrainedSepProblem& p, int party,
                       const std::vector<Mat>& fixed) {
  const int np = static_cast<int>(p.parties.size());
  std::vector<std::string> names;
  LabeledOperator probe = p.f;
  Mat other = Mat::Ones(1, 1);
  // Build 1 at `party` and the fixed factors elsewhere, in party order.
  for (int j = 0; j < np; ++j) {
    const int d = p.parties[j].dim;
    if (j == party) {
      other = kron(other, Mat::Identity(d, d));
    } else {
      if (fixed[j].rows() != d || fixed[j].cols() != d)
        throw DimMismatch("fixed factor has the wrong dimension");
      other = kron(other, fixed[j]);
      names.push_back(p.f.systems()[j].name);
    }
  }
  LabeledOperator prod(p.f.systems(), p.f.mat() * other);
  Mat env = partial_trace(prod, names).mat();
  return 0.5 * (env + env.adjoint());
}

}  // namespace csep_detail

using csep_detail::party_program;
using csep_detail::response_objective;

Solution best_response(const ConstrainedSepProblem& p, int party,
                       const std::vector<Mat>& fixed, const SolveOptions& o) {
  if (party < 0 || party >= static_cast<int>(p.parties.size()))
    throw BadIndex("party index out of range");
  Mat env = response_objective(p, party, fixed);
  return solve(party_program(p.parties[party], env, true), o);
}

namespace {

// Nearest feasible point in operator norm:
// min t  s.t.  w feasible,  -t 1 <= w - rho0 <= t 1.
Mat project_feasible(const Party& party, const Mat& rho0,
                     const SolveOptions& so) {
  const int d = party.dim;
  ConicProblem cp;
  cp.maximize = false;
  cp.blocks.push_back({"w", d});
  cp.blocks.push_back({"p", d});  // t 1 - w + rho0
  cp.blocks.push_back({"q", d});  // t 1 + w - rho0
  cp.blocks.push_back({"t", 1});
  cp.objective = {Mat(), Mat(), Mat(), Mat::Ones(1, 1)};
  for (const auto& r : csep_detail::hermitian_rows(party.constraint, d)) {
    EqualityRow row;
    csep_detail::add_hermitian_coeff(row, 0, r.h);
    row.rhs = r.t;
    cp.equalities.push_back(std::move(row));
  }
  {
    EqualityRow tr;
    csep_detail::add_hermitian_coeff(tr, 0, Mat::Identity(d, d));
    tr.rhs = 1.0;
    cp.equalities.push_back(std::move(tr));
  }
  // Entrywise:  p + w - t 1 = rho0  and  q - w + t 1 = rho0.
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Mat e = Mat::Zero(d, d);
      e(j, i) = 1.0;
      std::vector<std::pair<int, Mat>> c1 = {{0, e}, {1, e}};
      std::vector<std::pair<int, Mat>> c2 = {{0, Mat(-e)}, {2, e}};
      if (i == j) {
        Mat one = Mat::Ones(1, 1);
        c1.push_back({3, Mat(-one)});
        c2.push_back({3, Mat(-one)});
      }
      csep_detail::add_complex_equation(cp, c1, rho0(i, j));
      csep_detail::add_complex_equation(cp, c2, -rho0(i, j));
    }
  }
  SolveOptions o = so;
  o.certify_dual = false;
  Solution s = solve(cp, o);
  if (s.block_values.empty() || s.status == SolveStatus::Infeasible)
    throw InfeasibleParty("no feasible operator for a party");
  Mat w = s.block_values[0];
  w = 0.5 * (w + w.adjoint());
  return w;
}

struct RestartOutcome {
  double value = -1e300;
  std::vector<Mat> factors;
  int iterations = 0;
};

double product_objective(const ConstrainedSepProblem& p,
                         const std::vector<Mat>& ws) {
  Mat acc = Mat::Ones(1, 1);
  for (const Mat& w : ws) acc = kron(acc, w);
  return (p.f.mat() * acc).trace().real();
}

RestartOutcome run_restart(const ConstrainedSepProblem& p,
                           const SeesawOptions& o, int restart) {
  const int np = static_cast<int>(p.parties.size());
  Rng rng(o.seed);
  Rng local = rng.fork(static_cast<std::uint64_t>(restart) + 1);
  RestartOutcome out;
  out.factors.resize(np);
  for (int j = 0; j < np; ++j) {
    const auto& given =
        static_cast<size_t>(j) < o.inits.size() ? o.inits[j] : std::vector<Mat>{};
    if (!given.empty()) {
      out.factors[j] = given[restart % given.size()];
    } else {
      Mat psi = random_pure_state(p.parties[j].dim, local);
      out.factors[j] = project_feasible(p.parties[j], Mat(psi * psi.adjoint()),
                                        o.solve);
    }
  }
  double value = product_objective(p, out.factors);
  for (int it = 0; it < o.max_iters; ++it) {
    const double prev = value;
    for (int j = 0; j < np; ++j) {
      Solution s = best_response(p, j, out.factors, o.solve);
      if (s.block_values.empty()) continue;
      Mat w = 0.5 * (s.block_values[0] + s.block_values[0].adjoint());
      std::vector<Mat> trial = out.factors;
      trial[j] = w;
      double tv = product_objective(p, trial);
      if (tv >= value) {
        out.factors = std::move(trial);
        value = tv;
      }
    }
    out.iterations = it + 1;
    if (value - prev <= o.conv_tol * (1.0 + std::abs(value))) break;
  }
  out.value = value;
  return out;
}

}  // namespace

SeesawResult seesaw(const ConstrainedSepProblem& p, const SeesawOptions& o) {
  p.validate();
  if (o.restarts < 1) throw BadParameter("need at least one restart");
  const int np = static_cast<int>(p.parties.size());
  for (int j = 0; j < np; ++j) {
    Solution f = check_feasibility(party_program(p.parties[j], Mat(), true),
                                   o.solve);
    if (f.status == SolveStatus::Infeasible)
      throw InfeasibleParty("party " + std::to_string(j) +
                            " has no feasible operator");
  }

  std::vector<RestartOutcome> outcomes(o.restarts);
  const int workers = std::max(1, std::min(o.workers, o.restarts));
  if (workers == 1) {
    for (int r = 0; r < o.restarts; ++r) outcomes[r] = run_restart(p, o, r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < o.restarts;
             r = next.fetch_add(1))
          outcomes[r] = run_restart(p, o, r);
      });
    }
    for (auto& t : pool) t.join();
  }

  SeesawResult res;
  for (int r = 0; r < o.restarts; ++r) {
    if (outcomes[r].value > res.value + 1e-12 || res.best_restart < 0) {
      res.value = outcomes[r].value;
      res.factors = outcomes[r].factors;
      res.best_restart = r;
      res.iterations = outcomes[r].iterations;
    }
  }
  return res;
}

}  // namespace qdisc

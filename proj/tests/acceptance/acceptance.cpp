// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.
#include <polyest/ctl.hpp>
#include <polyest/harness.hpp>
#include <polyest/oracle.hpp>
#include <polyest/problems.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace polyest;
using namespace polyest::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome oracle_minorant() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst_minorant = -std::numeric_limits<double>::infinity(), worst_anchor = 0.0;
  int positive = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = 2 + inst % 11, k = 1 + inst % 4, l = 1 + (inst / 4) % 4;
    const DesignSpec spec = random_spec(rng, n, k, l, -1, inst % 3 == 1);
    const DualPoint xb = random_point(rng, l, k, 0.05, 1.0);
    const Index rho = 1 + inst % n;
    const auto ans = build_model(xb, rho, spec);
    const double scale = std::max(1.0, std::abs(ans.f_value));
    worst_anchor = std::max(worst_anchor, std::abs(eval_model(ans.model, xb.stacked()) - ans.f_value) / scale);
    for (int j = 0; j < 100; ++j) {
      const DualPoint y = random_point(rng, l, k, 0.02, 1.5);
      const double f = true_f(y, spec);
      positive += f > 0.0;
      worst_minorant =
          std::max(worst_minorant, (eval_model(ans.model, y.stacked()) - f) / std::max(1.0, std::abs(f)));
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "max (model - f)/scale " << worst_minorant << ", anchor error " << worst_anchor << ", f > 0 at " << positive << "/5000 points, " << secs << " s";
  return {worst_minorant <= 1e-8 && worst_anchor <= 1e-7 && secs < 10.0, os.str()};
}

Outcome partial_minimization() {
  Rng rng(102);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = 2 + inst % 7, k = 1 + inst % 3, l = 1 + inst % 2;
    const DesignSpec spec = random_spec(rng, n, k, l);
    const DualPoint p = random_point(rng, l, k);
    const SymMatrix ft = frak_t(p, spec);
    const SymMatrix theta = recover_theta(p, spec);
    const double scale = std::max(1.0, magnitude_scale(ft.mat()));
    worst = std::max({worst, -min_eig(theta) / scale, -min_eig(theta - ft) / scale});
    for (int j = 0; j < 20; ++j) {
      // perturb in an arbitrary symmetric direction, then shift by the identity until feasible again
      const Matrix e = (j % 2 ? random_psd(n, rng, 1) : random_sym(n, rng)) * 0.1 * scale;
      SymMatrix other = SymMatrix::symmetrize(theta.mat() + e);
      const double shift = std::max({0.0, -min_eig(other), -min_eig(other - ft)});
      other = SymMatrix::symmetrize(other.mat() + shift * Matrix::Identity(n, n));
      worst = std::max(worst, (theta.trace() - other.trace()) / scale);
    }
  }
  std::ostringstream os;
  os << "worst violation " << worst;
  return {worst <= 1e-8, os.str()};
}

Outcome analytic_one_dim() {
  std::ostringstream os;
  bool ok = true;
  for (double gamma : {0.25, 1.0, 4.0}) {
    const DesignSpec spec(Matrix::Ones(1, 1), Matrix::Ones(1, 1), std::sqrt(gamma) / chi(0.05, 1), 0.05,
                          make_euclidean_ball(1), make_euclidean_ball(1));
    const ReducedProblem rp = make_reduced_problem(spec, 1);
    CtlParams params;
    params.rho = 1;
    const CtlResult r = run(rp.problem, params);
    const double opt = std::min(gamma, 1.0);
    ok = ok && r.upper >= opt * (1.0 - 1e-9) && r.upper <= 1.1 * opt && r.lower > 0.0 &&
         r.upper <= 1.1 * r.lower * (1.0 + 1e-12);
    os << "gamma " << gamma << ": " << r.upper / opt << "x opt; ";
  }
  return {ok, os.str()};
}

Outcome contraction_and_bound() {
  Rng rng(104);
  CtlParams params;
  params.rho = 3;
  const double theta = contraction_factor(params);
  int phases = 0, violations = 0, max_it = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const Index n = Index{4} << (inst % 5);  // 4 .. 64
    const Index k = 2 + inst % 3, l = 1 + inst % 2;
    const DesignSpec spec = random_spec(rng, n, k, l);
    const GeneralProblem gp = make_general_problem(spec, params.rho);
    const CtlResult r = run(gp.problem, params);
    if (r.budget_exhausted) ++violations;
    for (const auto& ph : r.trace.phases) {
      ++phases;
      max_it = std::max(max_it, ph.iterations);
      if ((ph.end == PhaseEnd::UpperProgress || ph.end == PhaseEnd::LowerProgress) &&
          ph.end_gap > theta * ph.start_gap + 1e-9)
        ++violations;
      if (ph.start_gap > 0.0 && ph.iterations > iteration_bound(ph.lipschitz, ph.omega, ph.start_gap, params))
        ++violations;
    }
  }
  std::ostringstream os;
  os << "factor " << theta << ", " << phases << " phases, max iterations per phase " << max_it << ", violations "
     << violations;
  return {theta == 0.75 && violations == 0, os.str()};
}

struct DesignRun {
  DesignResult result;
  double seconds = 0.0;
};

DesignRun timed_design(Index n, Index k, Index rho, Index tau, std::uint64_t seed) {
  ExperimentConfig cfg = make_config({{"n", std::to_string(n)}, {"K", std::to_string(k)}});
  cfg.rho = rho;
  cfg.tau = tau;
  cfg.seed = seed;
  const Instance inst = gen_instance(cfg);
  const auto t0 = Clock::now();
  DesignRun out{run_design(inst.spec, cfg), 0.0};
  out.seconds = seconds_since(t0);
  return out;
}

Outcome desk_scale(DesignRun& big) {
  const DesignRun small = timed_design(64, 8, 10, 10, 1);
  big = timed_design(256, 32, 10, 10, 1);
  auto ok = [](const DesignRun& d, int calls, double secs) {
    const DesignResult& r = d.result;
    return !r.budget_exhausted && r.reduced_lower > 0.0 && r.reduced_upper <= 1.1 * r.reduced_lower * (1 + 1e-12) &&
           r.calls <= calls && d.seconds <= secs;
  };
  std::ostringstream os;
  os << "n=64: " << small.result.calls << " calls, " << small.result.phases << " phases, " << small.seconds
     << " s; n=256: " << big.result.calls << " calls, " << big.result.phases << " phases, " << big.seconds << " s";
  return {ok(small, 200, 60.0) && ok(big, 300, 600.0), os.str()};
}

Outcome bundle_trend(const DesignRun& rich) {
  const DesignRun poor = timed_design(256, 32, 1, 1, 1);
  std::ostringstream os;
  os << "calls at (10,10) " << rich.result.calls << ", at (1,1) " << poor.result.calls;
  return {rich.result.calls <= poor.result.calls && !poor.result.budget_exhausted, os.str()};
}

Outcome risk_certification() {
  int covered = 0;
  std::ostringstream os;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DesignRun d = timed_design(64, 8, 10, 10, seed);
    ExperimentConfig cfg = d.result.config;
    const Instance inst = gen_instance(cfg);
    const RiskSummary r = monte_carlo_risk(inst.spec, d.result.h, EstimatorKind::Polyhedral, 2000, seed);
    if (r.quantile <= d.result.certified_bound) ++covered;
    os << r.quantile / d.result.certified_bound << (seed < 10 ? " " : "");
  }
  return {covered >= 9, std::to_string(covered) + "/10 covered, quantile/bound " + os.str()};
}

Outcome linear_conversion() {
  Rng rng(108);
  double worst_q = 0.0, worst_lmi = 0.0;
  int infeasible_inputs = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = 2 + inst % 9, k = 1 + inst % 3, l = 1 + inst % 2, nu = 1 + inst % n;
    const DesignSpec spec = random_spec(rng, n, k, l, nu);
    const DualPoint p = random_point(rng, l, k);
    const SymMatrix theta = recover_theta(p, spec);
    const SymMatrix poly = polyhedral_lmi(p, theta, spec);
    if (min_eig(poly) < -1e-8 * magnitude_scale(poly.mat())) ++infeasible_inputs;
    const LinearDesign lin = poly_to_linear(p, theta, spec);
    const SymMatrix lmi = linear_lmi(lin.point, lin.h, lin.theta, spec);
    worst_q = std::max(worst_q, lin.q_norm);
    worst_lmi = std::max(worst_lmi, -min_eig(lmi) / magnitude_scale(lmi.mat()));
  }
  std::ostringstream os;
  os << "max ||Q|| " << worst_q << ", worst scaled LMI min eig " << -worst_lmi;
  return {infeasible_inputs == 0 && worst_q <= 1 + 1e-7 && worst_lmi <= 1e-6, os.str()};
}

Outcome quantile_bounds_check() {
  Rng rng(109);
  int misordered = 0, exceeded = 0;
  for (int i = 0; i < 100; ++i) {
    const Index n = 2 + i % 6;
    const SymMatrix t = SymMatrix::symmetrize(random_psd(n, rng, 1 + i % n));
    const QuantileBounds qb = quantile_bounds(t, 0.05);
    const double tol = 1e-10 * (1.0 + qb.crude);
    if (!(qb.log_det <= qb.resolvent + tol && qb.resolvent <= qb.closed_form + tol && qb.closed_form <= qb.crude + tol))
      ++misordered;
  }
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Index n = 2 + i % 5;
    const SymMatrix t = SymMatrix::symmetrize(random_psd(n, rng, 1 + i % n));
    const Matrix root = sqrt_psd(t).mat();
    std::vector<double> draws(100000);
    for (auto& d : draws) d = (root * rng.normal_vector(n)).squaredNorm();
    const double q = empirical_quantile(draws, 0.95), psi = quantile_bounds(t, 0.05).log_det;
    worst = std::max(worst, q / psi);
    if (q > psi) ++exceeded;
  }
  std::ostringstream os;
  os << misordered << " misordered, " << exceeded << " quantiles above psi (max ratio " << worst << ")";
  return {misordered == 0 && exceeded == 0, os.str()};
}

Outcome singular_consistency() {
  Rng rng(110);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Index n = 3 + i % 5;
    const DesignSpec r = random_spec(rng, n, 1 + i % 3, 1 + i % 2, 1 + i % n);
    const SingularDesignSpec s(r.a(), r.b(), r.sigma(), r.eps(), r.signal_set(), r.norm_polar());
    const DualPoint p = random_point(rng, r.num_norm_forms(), r.num_signal_forms());
    const double u = upsilon(p, r);
    worst = std::max(worst, std::abs(singular_objective(p, s) - u) / std::max(1.0, std::abs(u)));
  }
  Matrix a = Matrix::Zero(2, 3);
  a(0, 0) = a(1, 1) = 1;
  const SingularDesignSpec s(a, Matrix::Identity(3, 3), 0.1, 0.05, make_euclidean_ball(3), make_euclidean_ball(3));
  auto point = [](double lam, double mu) { return DualPoint{Vector::Constant(1, lam), Vector::Constant(1, mu)}; };
  bool raised = false;
  try {
    singular_objective(point(1, 0), s);
  } catch (const ZNotNegativeDefinite&) {
    raised = true;
  }
  bool large_ok = false;
  try {
    large_ok = std::isfinite(singular_objective(point(1, 10), s));
  } catch (const Error&) {
  }
  std::ostringstream os;
  os << "max relative difference " << worst << ", error at mu=0: " << (raised ? "yes" : "no")
     << ", large mu: " << (large_ok ? "ok" : "failed");
  return {worst <= 1e-8 && raised && large_ok, os.str()};
}

/// Minimum of phi over a regular grid of about 10^6 points of the box-simplex domain.
double grid_minimum(const CompositeProblem& p) {
  const Polytope& x = p.domain;
  const Index d = x.dim();
  const int per_axis = static_cast<int>(std::round(std::pow(1e6, 1.0 / static_cast<double>(d))));
  const double span = x.radius - x.lower.sum();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<size_t>(d), 0);
  Vector y(d);
  for (;;) {
    for (Index i = 0; i < d; ++i) y(i) = x.lower(i) + span * idx[static_cast<size_t>(i)] / (per_axis - 1.0);
    if (x.contains(y, 0.0)) best = std::min(best, p.phi(y));
    Index i = 0;
    while (i < d && ++idx[static_cast<size_t>(i)] == per_axis) idx[static_cast<size_t>(i++)] = 0;
    if (i == d) break;
  }
  return best;
}

Outcome lower_bound_validity() {
  Rng rng(111);
  int bad = 0;
  std::ostringstream os;
  for (int inst = 0; inst < 6; ++inst) {
    const Index k = 1 + inst % 2, l = inst % 2 ? 1 : 1 + inst / 3;  // K + L in {2, 3}
    const DesignSpec spec = random_spec(rng, 4, k, l);
    const GeneralProblem gp = make_general_problem(spec, 2);
    CtlParams params;
    params.rho = 2;
    params.target_ratio = 1.01;
    const CtlResult r = run(gp.problem, params);
    const double grid = grid_minimum(gp.problem);
    double worst_lower = r.lower;
    for (const auto& c : r.trace.calls) worst_lower = std::max(worst_lower, c.lower);
    if (worst_lower > grid + 1e-9 * (1.0 + std::abs(grid))) ++bad;
    os << (inst ? ", " : "") << "K+L=" << k + l << ": " << worst_lower << " <= " << grid;
  }
  return {bad == 0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  // optional arguments select criteria by number
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << std::endl;
  };
  DesignRun big;
  report(1, "oracle minorant", oracle_minorant);
  report(2, "partial minimization", partial_minimization);
  report(3, "analytic 1-D optimum", analytic_one_dim);
  report(4, "gap contraction and iteration bound", contraction_and_bound);
  report(5, "desk-scale reproduction", [&] { return desk_scale(big); });
  report(6, "bundle size and oracle complexity trend", [&] {
    if (big.result.calls == 0) big = timed_design(256, 32, 10, 10, 1);
    return bundle_trend(big);
  });
  report(7, "risk certification", risk_certification);
  report(8, "linear conversion", linear_conversion);
  report(9, "quantile bounds", quantile_bounds_check);
  report(10, "singular-A consistency", singular_consistency);
  report(11, "lower-bound validity", lower_bound_validity);
  return failures == 0 ? 0 : 1;
}

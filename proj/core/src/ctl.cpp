#include "polyest/ctl.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace polyest {

namespace {

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

double slack(double v) { return 1e-12 * (1.0 + std::abs(v)); }

}  // namespace

void CtlParams::validate() const {
  if (!in_open_unit(lambda_level)) throw InvalidArgument("lambda_level must lie in (0,1)");
  if (!in_open_unit(theta_up)) throw InvalidArgument("theta_up must lie in (0,1)");
  if (!in_open_unit(theta_low)) throw InvalidArgument("theta_low must lie in (0,1)");
  if (tau < 1) throw InvalidArgument("tau must be positive");
  if (rho < 1) throw InvalidArgument("rho must be positive");
  if (!(target_ratio >= 1.0)) throw InvalidArgument("target_ratio must be at least 1");
  if (!(abs_tol > 0.0)) throw InvalidArgument("abs_tol must be positive");
  if (max_calls < 1) throw InvalidArgument("max_calls must be positive");
}

void CtlTrace::write_calls_csv(std::ostream& os) const {
  os << "call,phase,upper,lower,gap,wall_ms\n";
  os << std::setprecision(17);
  for (const auto& r : calls)
    os << r.call << ',' << r.phase << ',' << r.upper << ',' << r.lower << ',' << r.gap << ',' << r.wall_ms << '\n';
}

double contraction_factor(const CtlParams& p) {
  const double l = p.lambda_level;
  return std::max({1.0 - l * p.theta_up, 1.0 - l * (1.0 - p.theta_up), p.theta_low + l * (1.0 - p.theta_low)});
}

long long iteration_bound(double lipschitz, double omega, double gap, const CtlParams& p) {
  if (!(lipschitz > 0.0) || !(omega > 0.0) || !(gap > 0.0)) throw InvalidArgument("iteration_bound needs positive inputs");
  const double r = lipschitz * omega / (p.theta_up * p.lambda_level * gap);
  // guard the ceiling against rounding of an exact integer square
  const double b = std::ceil(r * r * (1.0 - 1e-12));
  constexpr double cap = static_cast<double>(std::numeric_limits<long long>::max());
  return b >= cap ? std::numeric_limits<long long>::max() : static_cast<long long>(b);
}

CtlEngine::CtlEngine(const CompositeProblem& problem, CtlParams params) : problem_(problem), params_(params) {
  params_.validate();
  if (!problem_.oracle) throw InvalidArgument("composite problem has no oracle");
  if (!problem_.domain.nonempty()) throw InvalidArgument("feasible domain is empty");
  if (params_.setup == ProxSetup::L1L2) {
    mirror_ = L1L2Setup::for_dim(problem_.domain.dim());
    dual_exponent_ = std::numeric_limits<double>::infinity();
  }
}

Vector CtlEngine::dgf_gradient(const Vector& y) const { return mirror_ ? mirror_->gradient(y) : y; }

double CtlEngine::lipschitz_estimate() const { return max_piece_lipschitz_ + problem_.psi.lipschitz(dual_exponent_); }

double CtlEngine::omega_estimate() const {
  const Polytope& x = problem_.domain;
  if (!mirror_) return x.euclidean_diameter();
  const double l1_radius = x.radius + 2.0 * (-x.lower).cwiseMax(0.0).sum();
  return mirror_->diameter_bound(l1_radius);
}

void CtlEngine::record_call() {
  CallRecord r;
  r.call = calls_;
  r.phase = phase_;
  r.upper = upper_;
  r.lower = lower_;
  r.gap = upper_ - lower_;
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  if (!trace_.calls.empty() && trace_.calls.back().call == calls_)
    trace_.calls.back() = r;
  else
    trace_.calls.push_back(r);
}

void CtlEngine::add_piece(const PiecewiseModel& piece) {
  if (std::any_of(bundle_.begin(), bundle_.end(), [&](const PiecewiseModel& p) { return p == piece; })) return;
  max_piece_lipschitz_ = std::max(max_piece_lipschitz_, piece.lipschitz(dual_exponent_));
  if (static_cast<Index>(bundle_.size()) >= params_.tau) {
    size_t victim = bundle_.size();
    for (size_t i = 0; i < bundle_.size(); ++i) {
      if (bundle_[i] == incumbent_piece_) continue;
      if (victim == bundle_.size() || bundle_age_[i] < bundle_age_[victim]) victim = i;
    }
    if (victim == bundle_.size())
      victim = static_cast<size_t>(std::min_element(bundle_age_.begin(), bundle_age_.end()) - bundle_age_.begin());
    bundle_.erase(bundle_.begin() + static_cast<long>(victim));
    bundle_age_.erase(bundle_age_.begin() + static_cast<long>(victim));
  }
  bundle_.push_back(piece);
  bundle_age_.push_back(next_age_++);
}

void CtlEngine::call_oracle(const Vector& x, double& phi_value) {
  OracleAnswer a = problem_.oracle(x);
  ++calls_;
  ++phase_calls_;
  phi_value = problem_.psi.eval(x) + a.f_value;
  if (!std::isfinite(phi_value)) throw CtlError("oracle returned a non-finite value\n" + snapshot());
  if (phi_value < upper_) {
    upper_ = phi_value;
    incumbent_ = x;
    incumbent_piece_ = a.piece;
  }
  add_piece(a.piece);
}

void CtlEngine::initialize() {
  t0_ = std::chrono::steady_clock::now();
  const Polytope& dom = problem_.domain;
  Vector x = problem_.start;
  if (x.size() == 0) x = dom.lower.array() + (dom.radius - dom.lower.sum()) / (2.0 * static_cast<double>(dom.dim()));
  require_dims(x.size() == dom.dim(), "starting point");
  if (!dom.contains(x)) throw InvalidArgument("starting point lies outside the domain");
  upper_ = std::numeric_limits<double>::infinity();
  bundle_.clear();
  bundle_age_.clear();
  calls_ = 0;
  phase_ = 0;
  double phi = 0.0;
  call_oracle(x, phi);
  try {
    const LevelLpResult lp = solve_level_lp(bundle_, problem_.psi, dom);
    lower_ = lp.value;
  } catch (const SubsolverError& e) {
    throw CtlError(std::string(e.what()) + "\n" + snapshot());
  }
  lower_ = std::min(lower_, upper_);
  query_ = prox_center_ = incumbent_;
  record_call();
}

bool CtlEngine::converged() const {
  if (lower_ > 0.0 && upper_ <= params_.target_ratio * lower_ + slack(upper_)) return true;
  return upper_ - lower_ <= params_.abs_tol * (1.0 + std::abs(upper_));
}

void CtlEngine::start_phase() {
  ++phase_;
  prox_center_ = incumbent_;
  query_ = prox_center_;
  level_ = params_.lambda_level * lower_ + (1.0 - params_.lambda_level) * upper_;
  delta_up_ = upper_ - level_;
  delta_low_ = level_ - lower_;
  phase_iterations_ = 0;
  phase_calls_ = 0;
  PhaseRecord r;
  r.phase = phase_;
  r.start_gap = upper_ - lower_;
  r.level = level_;
  trace_.phases.push_back(r);
}

std::optional<AffineForm> CtlEngine::current_cut() const {
  const Vector d = dgf_gradient(query_) - dgf_gradient(prox_center_);
  if (d.cwiseAbs().maxCoeff() == 0.0) return std::nullopt;
  return AffineForm{d, -d.dot(query_)};
}

CtlEngine::Step CtlEngine::phase_step() {
  auto close = [&](Step s) {
    PhaseRecord& r = trace_.phases.back();
    r.end_gap = upper_ - lower_;
    r.iterations = phase_iterations_;
    r.calls = phase_calls_;
    r.lipschitz = lipschitz_estimate();
    r.omega = omega_estimate();
    r.end = s == Step::UpperProgress   ? PhaseEnd::UpperProgress
            : s == Step::LowerProgress ? PhaseEnd::LowerProgress
            : s == Step::Converged     ? PhaseEnd::Converged
            : s == Step::Stalled       ? PhaseEnd::Stalled
                                       : PhaseEnd::Budget;
    record_call();
    return s;
  };
  if (trace_.phases.empty()) throw CtlError("phase_step called before start_phase");
  if (converged()) return close(Step::Converged);

  double phi = upper_;
  const bool fresh = query_ != incumbent_;
  if (fresh) {
    if (calls_ >= params_.max_calls) return close(Step::Budget);
    call_oracle(query_, phi);
  }
  ++phase_iterations_;
  if (converged()) return close(Step::Converged);
  if (phi - level_ <= params_.theta_up * delta_up_ + slack(phi))
    return close(fresh ? Step::UpperProgress : Step::Stalled);

  const std::optional<AffineForm> cut = current_cut();
  LevelLpResult lp;
  try {
    lp = solve_level_lp(bundle_, problem_.psi, problem_.domain, cut);
  } catch (const SubsolverError& e) {
    throw CtlError(std::string(e.what()) + "\n" + snapshot());
  }
  lower_ = std::max(lower_, std::min(lp.value, level_));
  if (converged()) return close(Step::Converged);
  if (level_ - lower_ <= params_.theta_low * delta_low_ + slack(level_)) return close(Step::LowerProgress);

  try {
    auto project = [&] {
      return mirror_ ? solve_projection_mirror(prox_center_, bundle_, problem_.psi, level_, problem_.domain, *mirror_,
                                               cut, lp.y)
                     : solve_projection_qp(prox_center_, bundle_, problem_.psi, level_, problem_.domain, cut, lp.y);
    };
    ProjectionResult pr = project();
    if (pr.y == prox_center_ &&
        std::none_of(bundle_.begin(), bundle_.end(), [&](const PiecewiseModel& p) { return p == incumbent_piece_; })) {
      // a small bundle lost the incumbent's piece, so the center looks feasible
      add_piece(incumbent_piece_);
      pr = project();
    }
    if (pr.y == prox_center_) return close(Step::Stalled);
    query_ = pr.y;
  } catch (const SubsolverError& e) {
    throw CtlError(std::string(e.what()) + "\n" + snapshot());
  }
  record_call();
  if (params_.record_iterations) {
    IterationRecord r;
    r.phase = phase_;
    r.prox_center = prox_center_;
    r.query = query_;
    r.level = level_;
    r.cut = current_cut();
    trace_.iterations.push_back(std::move(r));
  }
  return Step::Moved;
}

std::string CtlEngine::snapshot() const {
  std::ostringstream os;
  os << std::setprecision(12) << "state: calls=" << calls_ << " phase=" << phase_ << " iteration=" << phase_iterations_
     << " upper=" << upper_ << " lower=" << lower_ << " level=" << level_ << " bundle=" << bundle_.size();
  const Eigen::IOFormat fmt(Eigen::StreamPrecision, Eigen::DontAlignCols, ", ", ", ", "", "", "[", "]");
  if (query_.size()) os << "\nquery=" << query_.format(fmt);
  if (prox_center_.size()) os << "\nprox_center=" << prox_center_.format(fmt);
  return os.str();
}

CtlResult run(const CompositeProblem& problem, const CtlParams& params) {
  CtlEngine engine(problem, params);
  engine.initialize();
  CtlResult res;
  while (!engine.converged()) {
    engine.start_phase();
    CtlEngine::Step s;
    do {
      s = engine.phase_step();
    } while (s == CtlEngine::Step::Moved);
    if (s == CtlEngine::Step::Budget) {
      res.budget_exhausted = true;
      break;
    }
    if (s == CtlEngine::Step::Stalled) {
      res.stalled = true;
      break;
    }
    if (s == CtlEngine::Step::Converged) break;
  }
  res.x = engine.incumbent();
  res.upper = engine.upper();
  res.lower = engine.lower();
  res.calls = engine.calls();
  res.phases = engine.phase();
  res.trace = std::move(engine.trace());
  res.wall_ms = res.trace.calls.empty() ? 0.0 : res.trace.calls.back().wall_ms;
  return res;
}

}  // namespace polyest

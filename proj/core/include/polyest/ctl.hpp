#pragma once

#include <chrono>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "polyest/subsolve.hpp"

namespace polyest {

enum class ProxSetup { Euclidean, L1L2 };

struct CtlParams {
  double lambda_level = 0.5;
  double theta_up = 0.5;
  double theta_low = 0.5;
  Index tau = 10;  ///< bundle capacity
  Index rho = 10;  ///< oracle complexity, forwarded to the oracle by problem builders
  double target_ratio = 1.1;
  double abs_tol = 1e-9;
  int max_calls = 1000;
  ProxSetup setup = ProxSetup::Euclidean;
  bool record_iterations = false;

  void validate() const;
};

/// Oracle answer: f(x) and a piece f_x with f_x <= f on X and f_x(x) = f(x).
struct OracleAnswer {
  double f_value = 0.0;
  PiecewiseModel piece;
};

/// min { psi(y) + f(y) : y in domain }.
struct CompositeProblem {
  Polytope domain;
  PsiRep psi;
  using OracleFn = std::function<OracleAnswer(const Vector&)>;
  OracleFn oracle;
  Vector start;

  double phi(const Vector& y) const { return psi.eval(y) + oracle(y).f_value; }
};

struct CallRecord {
  int call = 0;
  int phase = 0;
  double upper = 0.0;
  double lower = 0.0;
  double gap = 0.0;
  double wall_ms = 0.0;
};

enum class PhaseEnd { UpperProgress, LowerProgress, Converged, Budget, Stalled };

struct PhaseRecord {
  int phase = 0;
  double start_gap = 0.0;
  double end_gap = 0.0;
  double level = 0.0;
  int iterations = 0;
  int calls = 0;
  double lipschitz = 0.0;  ///< L_phi estimate at the end of the phase
  double omega = 0.0;
  PhaseEnd end = PhaseEnd::Converged;
};

/// State of one non-terminating iteration, kept for replaying the level relation.
struct IterationRecord {
  int phase = 0;
  Vector prox_center;
  Vector query;
  double level = 0.0;
  std::optional<AffineForm> cut;  ///< cut(y) >= 0 for the points the next query may reach
};

struct CtlTrace {
  std::vector<CallRecord> calls;
  std::vector<PhaseRecord> phases;
  std::vector<IterationRecord> iterations;

  void write_calls_csv(std::ostream& os) const;
};

struct CtlResult {
  Vector x;
  double upper = 0.0;
  double lower = 0.0;
  int calls = 0;
  int phases = 0;
  bool budget_exhausted = false;
  bool stalled = false;
  double wall_ms = 0.0;
  CtlTrace trace;

  double ratio() const { return lower > 0.0 ? upper / lower : std::numeric_limits<double>::infinity(); }
};

/// Subproblem failure inside the solver loop; the message carries a state snapshot.
class CtlError : public Error {
 public:
  using Error::Error;
};

/// Phase-structured solver state. `run` drives it; tests may step it by hand.
class CtlEngine {
 public:
  /// Stalled: the gap is below what the subproblem solvers resolve, no further progress is possible.
  enum class Step { UpperProgress, LowerProgress, Moved, Converged, Budget, Stalled };

  CtlEngine(const CompositeProblem& problem, CtlParams params);

  void initialize();
  /// Recomputes the level and resets the query to the prox-center.
  void start_phase();
  /// One iteration of the current phase.
  Step phase_step();
  bool converged() const;

  double upper() const { return upper_; }
  double lower() const { return lower_; }
  double level() const { return level_; }
  double gap() const { return upper_ - lower_; }
  const Vector& incumbent() const { return incumbent_; }
  const Vector& query() const { return query_; }
  const Vector& prox_center() const { return prox_center_; }
  const Bundle& bundle() const { return bundle_; }
  int calls() const { return calls_; }
  int phase() const { return phase_; }
  int phase_iterations() const { return phase_iterations_; }
  double lipschitz_estimate() const;
  double omega_estimate() const;
  const CtlTrace& trace() const { return trace_; }
  CtlTrace& trace() { return trace_; }
  std::string snapshot() const;

 private:
  void call_oracle(const Vector& x, double& phi_value);
  void add_piece(const PiecewiseModel& piece);
  std::optional<AffineForm> current_cut() const;
  Vector dgf_gradient(const Vector& y) const;
  void record_call();

  const CompositeProblem& problem_;
  CtlParams params_;
  std::optional<L1L2Setup> mirror_;
  double dual_exponent_ = 2.0;

  double upper_ = 0.0, lower_ = 0.0, level_ = 0.0;
  double delta_up_ = 0.0, delta_low_ = 0.0;
  Vector incumbent_, prox_center_, query_;
  PiecewiseModel incumbent_piece_;
  Bundle bundle_;
  std::vector<int> bundle_age_;
  int next_age_ = 0;
  int calls_ = 0;
  int phase_ = 0;
  int phase_iterations_ = 0;
  int phase_calls_ = 0;
  double max_piece_lipschitz_ = 0.0;
  std::chrono::steady_clock::time_point t0_;
  CtlTrace trace_;
};

CtlResult run(const CompositeProblem& problem, const CtlParams& params = {});

/// Gap contraction per completed phase: max[1 - l*tu, 1 - l*(1 - tu), tl + l*(1 - tl)].
double contraction_factor(const CtlParams& params);

/// ceil((L * Omega / (theta_up * lambda_level * gap))^2)
long long iteration_bound(double lipschitz, double omega, double gap, const CtlParams& params);

}  // namespace polyest

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyest/ctl.hpp"
#include "polyest/design.hpp"
#include "polyest/rng.hpp"

namespace polyest {

/// Bad or missing configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Sampling { Boundary, Interior };

struct ExperimentConfig {
  Index n = 0;
  Index K = 0;
  double alpha = 1.0;
  double sigma = 0.1;
  double eps = 0.05;
  std::uint64_t seed = 1;
  Index rho = 10;
  Index tau = 10;
  ProxSetup setup = ProxSetup::Euclidean;
  double target_ratio = 1.1;
  int max_calls = 1000;
  int trials = 1000;
  Sampling sampling = Sampling::Boundary;
  std::string out = "out";

  CtlParams ctl_params() const;
};

using ConfigValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError on malformed lines.
ConfigValues parse_config(std::istream& in);
ConfigValues read_config_file(const std::string& path);
/// Builds a config; `n` and `K` are required, unknown keys are rejected.
ExperimentConfig make_config(const ConfigValues& values);
ConfigValues to_values(const ExperimentConfig& cfg);

struct Instance {
  DesignSpec spec;
  int regenerations = 0;  ///< draws of A rejected for cond(A) > 1e8
};

/// A with i.i.d. N(0,1) entries, B = I, block-weighted signal set, unit Euclidean norm ball.
Instance gen_instance(const ExperimentConfig& cfg);

struct DesignResult {
  ExperimentConfig config;
  Vector mu_bar;          ///< minimizer of the reduced objective
  double reduced_upper = 0.0;
  double reduced_lower = 0.0;
  double certified_bound = 0.0;  ///< polyhedral risk bound 2 sqrt(reduced_upper)
  double lower_bound = 0.0;      ///< 2 sqrt(reduced_lower)
  Vector lambda;
  Vector mu;
  Matrix theta;
  Matrix h;
  Vector upsilon;
  int calls = 0;
  int phases = 0;
  double wall_ms = 0.0;
  bool budget_exhausted = false;
  bool near_radius = false;  ///< solution within 1% of the artificial radius
  int regenerations = 0;
  CtlTrace trace;
};

/// Reduced solve by CTL, lambda re-introduction, Theta recovery and contrast extraction.
DesignResult run_design(const DesignSpec& spec, const ExperimentConfig& cfg);

/// CTL on the full objective Upsilon(lambda, mu).
CtlResult solve_general(const DesignSpec& spec, const CtlParams& params, bool* near_radius = nullptr);

/// Point x with max_k x^T T_k x = 1 (unit box) or ||(x^T T_k x)_k||_q = 1, along a Gaussian direction.
Vector sample_boundary(const Ellitope& set, Rng& rng);
Vector sample_signal(const Ellitope& set, Rng& rng, Sampling mode);

struct RiskSummary {
  std::vector<double> errors;
  double quantile = 0.0;  ///< empirical (1 - eps)-quantile
  double mean = 0.0;
  int unconverged = 0;  ///< inner solves that hit their iteration cap
};

enum class EstimatorKind { Polyhedral, Linear };

/// Trial t draws (x, xi) from Rng(seed, 1, t). `h` is the polyhedral contrast (m x m)
/// or the linear contrast (m x nu).
RiskSummary monte_carlo_risk(const DesignSpec& spec, const Matrix& h, EstimatorKind kind, int trials,
                             std::uint64_t seed, Sampling mode = Sampling::Boundary, unsigned workers = 0);

/// Order statistic ceil(p n) of the sample (1-based), the usual empirical p-quantile.
double empirical_quantile(std::vector<double> values, double p);

/// Percentile-bootstrap interval for the empirical p-quantile.
std::pair<double, double> bootstrap_quantile_ci(const std::vector<double>& values, double p, int reps,
                                                std::uint64_t seed, double level = 0.9);

std::string design_to_json(const DesignResult& r);
DesignResult design_from_json(const std::string& text);
std::string risk_to_json(const RiskSummary& r, const DesignResult& d, const std::string& estimator);
void write_errors_csv(std::ostream& os, const RiskSummary& r);

struct SweepCell {
  Index rho = 0;
  Index tau = 0;
  int calls = 0;
  int phases = 0;
  double wall_ms = 0.0;
  double ratio = 0.0;
  bool budget_exhausted = false;
};

/// One design solve per (rho, tau) on the instance of `cfg`.
std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::vector<Index>& rhos,
                                 const std::vector<Index>& taus, unsigned workers = 0);
void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells);

}  // namespace polyest

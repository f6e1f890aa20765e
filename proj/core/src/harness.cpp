#include "polyest/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "polyest/parallel.hpp"
#include "polyest/problems.hpp"
#include "polyest/recover.hpp"

namespace polyest {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  is >> out;
  if (is.fail() || !is.eof()) throw ConfigError("invalid value for key '" + key + "': '" + v + "'");
  return out;
}

const char* setup_name(ProxSetup s) { return s == ProxSetup::Euclidean ? "euclid" : "l1l2"; }
const char* sampling_name(Sampling s) { return s == Sampling::Boundary ? "boundary" : "interior"; }

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Matrix json_mat(const json& j) {
  const Index r = static_cast<Index>(j.size());
  if (r == 0) return Matrix();
  const Index c = static_cast<Index>(j[0].size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const Vector row = json_vec(j[static_cast<size_t>(i)]);
    require_dims(row.size() == c, "ragged matrix in JSON");
    m.row(i) = row.transpose();
  }
  return m;
}

json config_json(const ExperimentConfig& c) {
  json j;
  for (const auto& [k, v] : to_values(c)) j[k] = v;
  return j;
}

}  // namespace

CtlParams ExperimentConfig::ctl_params() const {
  CtlParams p;
  p.rho = rho;
  p.tau = tau;
  p.setup = setup;
  p.target_ratio = target_ratio;
  p.max_calls = max_calls;
  return p;
}

ConfigValues parse_config(std::istream& in) {
  ConfigValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

ConfigValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

ExperimentConfig make_config(const ConfigValues& values) {
  for (const char* key : {"n", "K"})
    if (!values.count(key)) throw ConfigError(std::string("missing required key '") + key + "'");
  ExperimentConfig c;
  for (const auto& [k, v] : values) {
    if (k == "n") c.n = parse_number<Index>(k, v);
    else if (k == "K") c.K = parse_number<Index>(k, v);
    else if (k == "alpha") c.alpha = parse_number<double>(k, v);
    else if (k == "sigma") c.sigma = parse_number<double>(k, v);
    else if (k == "eps") c.eps = parse_number<double>(k, v);
    else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "rho") c.rho = parse_number<Index>(k, v);
    else if (k == "tau") c.tau = parse_number<Index>(k, v);
    else if (k == "target_ratio") c.target_ratio = parse_number<double>(k, v);
    else if (k == "max_calls") c.max_calls = parse_number<int>(k, v);
    else if (k == "trials") c.trials = parse_number<int>(k, v);
    else if (k == "out") c.out = v;
    else if (k == "setup") {
      if (v == "euclid") c.setup = ProxSetup::Euclidean;
      else if (v == "l1l2") c.setup = ProxSetup::L1L2;
      else throw ConfigError("invalid value for key 'setup': '" + v + "' (expected euclid or l1l2)");
    } else if (k == "sampling") {
      if (v == "boundary") c.sampling = Sampling::Boundary;
      else if (v == "interior") c.sampling = Sampling::Interior;
      else throw ConfigError("invalid value for key 'sampling': '" + v + "'");
    } else {
      throw ConfigError("unknown key '" + k + "'");
    }
  }
  if (c.n < 1 || c.K < 1) throw ConfigError("n and K must be positive");
  if (c.n % c.K) throw ConfigError("K must divide n");
  if (!(c.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw ConfigError("eps must lie in (0,1)");
  if (c.rho < 1 || c.tau < 1) throw ConfigError("rho and tau must be positive");
  if (!(c.target_ratio >= 1.0)) throw ConfigError("target_ratio must be at least 1");
  if (c.max_calls < 1) throw ConfigError("max_calls must be positive");
  if (c.trials < 1) throw ConfigError("trials must be positive");
  return c;
}

ConfigValues to_values(const ExperimentConfig& c) {
  auto num = [](double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  };
  return {{"n", std::to_string(c.n)},
          {"K", std::to_string(c.K)},
          {"alpha", num(c.alpha)},
          {"sigma", num(c.sigma)},
          {"eps", num(c.eps)},
          {"seed", std::to_string(c.seed)},
          {"rho", std::to_string(c.rho)},
          {"tau", std::to_string(c.tau)},
          {"setup", setup_name(c.setup)},
          {"target_ratio", num(c.target_ratio)},
          {"max_calls", std::to_string(c.max_calls)},
          {"trials", std::to_string(c.trials)},
          {"sampling", sampling_name(c.sampling)},
          {"out", c.out}};
}

Instance gen_instance(const ExperimentConfig& cfg) {
  const Index n = cfg.n;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    Rng rng(cfg.seed, 0, static_cast<std::uint64_t>(attempt));
    Matrix a = rng.normal_matrix(n, n);
    const Eigen::JacobiSVD<Matrix> svd(a);
    const Vector sv = svd.singularValues();
    if (sv(n - 1) == 0.0 || sv(0) / sv(n - 1) > 1e8) {
      std::clog << "gen_instance: cond(A) > 1e8 on draw " << attempt << ", redrawing\n";
      continue;
    }
    return Instance{DesignSpec(std::move(a), Matrix::Identity(n, n), cfg.sigma, cfg.eps,
                               make_block_weighted(n, cfg.K, cfg.alpha), make_euclidean_ball(n)),
                    attempt};
  }
  throw Error("gen_instance: more than 10 ill-conditioned draws of A");
}

DesignResult run_design(const DesignSpec& spec, const ExperimentConfig& cfg) {
  if (spec.num_norm_forms() != 1 || spec.norm_polar().params().kind() != ParamSet::Kind::UnitBox ||
      !spec.norm_polar().form(0).isIdentity(0.0))
    throw InvalidArgument("run_design expects the Euclidean error norm");
  DesignResult out;
  out.config = cfg;
  const ReducedProblem rp = make_reduced_problem(spec, cfg.rho);
  CtlResult r = run(rp.problem, cfg.ctl_params());
  out.mu_bar = r.x;
  out.reduced_upper = r.upper;
  out.reduced_lower = r.lower;
  out.calls = r.calls;
  out.phases = r.phases;
  out.wall_ms = r.wall_ms;
  out.budget_exhausted = r.budget_exhausted;
  out.near_radius = rp.near_radius(r.x);
  if (out.near_radius) std::clog << "run_design: solution within 1% of the domain radius\n";
  out.trace = std::move(r.trace);

  const ReducedSolution red = reduced_to_lambda_free(out.mu_bar, spec);
  const L2Lift lift = l2_lift(red.mu_bar, red.theta_bar, spec);
  out.lambda = lift.point.lambda;
  out.mu = lift.point.mu;
  out.theta = lift.theta.mat();
  const Contrast c = extract_contrast(lift.theta, spec.sigma() * spec.chi());
  out.h = c.h;
  out.upsilon = c.upsilon;
  out.certified_bound = lift.objective;
  out.lower_bound = 2.0 * std::sqrt(std::max(out.reduced_lower, 0.0));
  return out;
}

CtlResult solve_general(const DesignSpec& spec, const CtlParams& params, bool* near_radius) {
  const GeneralProblem gp = make_general_problem(spec, params.rho);
  CtlResult r = run(gp.problem, params);
  if (near_radius) *near_radius = gp.near_radius(r.x);
  return r;
}

Vector sample_boundary(const Ellitope& set, Rng& rng) {
  for (;;) {
    const Vector d = rng.normal_vector(set.dim());
    const Vector q = set.quadratic_values(d);
    const ParamSet& ps = set.params();
    double level;
    if (ps.kind() == ParamSet::Kind::UnitBox)
      level = q.maxCoeff();
    else if (std::isinf(ps.q()))
      level = q.maxCoeff();
    else
      level = std::pow(q.array().pow(ps.q()).sum(), 1.0 / ps.q());
    // x^T T_k x is 2-homogeneous, so c d hits the boundary for c = level^{-1/2}
    if (level > 0.0) return d / std::sqrt(level);
  }
}

Vector sample_signal(const Ellitope& set, Rng& rng, Sampling mode) {
  Vector x = sample_boundary(set, rng);
  if (mode == Sampling::Interior) x *= std::pow(rng.uniform(), 1.0 / static_cast<double>(set.dim()));
  return x;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("empirical_quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  return values[k - 1];
}

std::pair<double, double> bootstrap_quantile_ci(const std::vector<double>& values, double p, int reps,
                                                std::uint64_t seed, double level) {
  if (values.empty() || reps < 2) throw InvalidArgument("bootstrap needs data and at least 2 replicates");
  std::vector<double> stats(static_cast<size_t>(reps));
  std::vector<double> sample(values.size());
  for (int r = 0; r < reps; ++r) {
    Rng rng(seed, 2, static_cast<std::uint64_t>(r));
    for (auto& s : sample) s = values[static_cast<size_t>(rng.next() % values.size())];
    stats[static_cast<size_t>(r)] = empirical_quantile(sample, p);
  }
  const double a = 0.5 * (1.0 - level);
  return {empirical_quantile(stats, a), empirical_quantile(stats, 1.0 - a)};
}

RiskSummary monte_carlo_risk(const DesignSpec& spec, const Matrix& h, EstimatorKind kind, int trials,
                             std::uint64_t seed, Sampling mode, unsigned workers) {
  if (trials < 1) throw InvalidArgument("trials must be positive");
  std::optional<PolyhedralEstimator> poly;
  if (kind == EstimatorKind::Polyhedral) poly.emplace(h, spec);
  else require_dims(h.rows() == spec.m() && h.cols() == spec.nu(), "linear contrast shape");
  RiskSummary out;
  out.errors.assign(static_cast<size_t>(trials), 0.0);
  std::vector<char> failed(static_cast<size_t>(trials), 0);
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t t) {
        Rng rng(seed, 1, t);
        const Vector x = sample_signal(spec.signal_set(), rng, mode);
        const Vector omega = spec.a() * x + spec.sigma() * rng.normal_vector(spec.m());
        Vector w;
        if (poly) {
          const PolyApplyResult r = poly->apply(omega);
          failed[t] = !r.converged;
          w = r.w;
        } else {
          w = linear_apply(h, omega);
        }
        out.errors[t] = (w - spec.b() * x).norm();
      },
      workers);
  out.unconverged = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
  out.quantile = empirical_quantile(out.errors, 1.0 - spec.eps());
  double sum = 0.0;
  for (double e : out.errors) sum += e;
  out.mean = sum / static_cast<double>(trials);
  return out;
}

std::string design_to_json(const DesignResult& r) {
  json j;
  j["config"] = config_json(r.config);
  j["certified_bound"] = r.certified_bound;
  j["lower_bound"] = r.lower_bound;
  j["reduced"] = {{"upper", r.reduced_upper}, {"lower", r.reduced_lower}, {"mu_bar", vec_json(r.mu_bar)}};
  j["calls"] = r.calls;
  j["phases"] = r.phases;
  j["wall_ms"] = r.wall_ms;
  j["budget_exhausted"] = r.budget_exhausted;
  j["near_radius"] = r.near_radius;
  j["regenerations"] = r.regenerations;
  j["lambda"] = vec_json(r.lambda);
  j["mu"] = vec_json(r.mu);
  j["upsilon"] = vec_json(r.upsilon);
  j["theta"] = mat_json(r.theta);
  j["h"] = mat_json(r.h);
  return j.dump(1);
}

DesignResult design_from_json(const std::string& text) {
  DesignResult r;
  try {
    const json j = json::parse(text);
    ConfigValues values;
    for (const auto& [k, v] : j.at("config").items()) values[k] = v.get<std::string>();
    r.config = make_config(values);
    r.certified_bound = j.at("certified_bound").get<double>();
    r.lower_bound = j.at("lower_bound").get<double>();
    r.reduced_upper = j.at("reduced").at("upper").get<double>();
    r.reduced_lower = j.at("reduced").at("lower").get<double>();
    r.mu_bar = json_vec(j.at("reduced").at("mu_bar"));
    r.calls = j.at("calls").get<int>();
    r.phases = j.at("phases").get<int>();
    r.wall_ms = j.at("wall_ms").get<double>();
    r.budget_exhausted = j.at("budget_exhausted").get<bool>();
    r.near_radius = j.at("near_radius").get<bool>();
    r.regenerations = j.at("regenerations").get<int>();
    r.lambda = json_vec(j.at("lambda"));
    r.mu = json_vec(j.at("mu"));
    r.upsilon = json_vec(j.at("upsilon"));
    r.theta = json_mat(j.at("theta"));
    r.h = json_mat(j.at("h"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed design result: ") + e.what());
  }
  return r;
}

std::string risk_to_json(const RiskSummary& r, const DesignResult& d, const std::string& estimator) {
  json j;
  j["config"] = config_json(d.config);
  j["estimator"] = estimator;
  j["certified_bound"] = d.certified_bound;
  j["trials"] = r.errors.size();
  j["quantile"] = r.quantile;
  j["level"] = 1.0 - d.config.eps;
  j["mean_error"] = r.mean;
  j["unconverged"] = r.unconverged;
  return j.dump(1);
}

void write_errors_csv(std::ostream& os, const RiskSummary& r) {
  os << "trial,error\n" << std::setprecision(17);
  for (size_t i = 0; i < r.errors.size(); ++i) os << i << ',' << r.errors[i] << '\n';
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::vector<Index>& rhos,
                                 const std::vector<Index>& taus, unsigned workers) {
  const Instance inst = gen_instance(cfg);
  std::vector<SweepCell> cells;
  for (Index r : rhos)
    for (Index t : taus) cells.push_back(SweepCell{r, t});
  parallel_for(
      cells.size(),
      [&](std::size_t i) {
        ExperimentConfig c = cfg;
        c.rho = cells[i].rho;
        c.tau = cells[i].tau;
        const ReducedProblem rp = make_reduced_problem(inst.spec, c.rho);
        const CtlResult res = run(rp.problem, c.ctl_params());
        cells[i].calls = res.calls;
        cells[i].phases = res.phases;
        cells[i].wall_ms = res.wall_ms;
        cells[i].ratio = res.ratio();
        cells[i].budget_exhausted = res.budget_exhausted;
      },
      workers);
  return cells;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << "rho,tau,calls,phases,wall_ms,ratio,budget_exhausted\n" << std::setprecision(10);
  for (const auto& c : cells)
    os << c.rho << ',' << c.tau << ',' << c.calls << ',' << c.phases << ',' << c.wall_ms << ',' << c.ratio << ','
       << (c.budget_exhausted ? 1 : 0) << '\n';
}

}  // namespace polyest

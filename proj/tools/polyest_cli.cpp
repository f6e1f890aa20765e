#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "polyest/harness.hpp"
#include "polyest/recover.hpp"

using namespace polyest;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitBudget = 2;
constexpr int kExitCheck = 3;

struct Flags {
  std::string config;
  std::map<std::string, std::string> values;
  bool check = false;
};

void add_instance_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value config file");
  for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{{"--n", "n"},
                                                                                 {"--K", "K"},
                                                                                 {"--alpha", "alpha"},
                                                                                 {"--sigma", "sigma"},
                                                                                 {"--eps", "eps"},
                                                                                 {"--seed", "seed"},
                                                                                 {"--setup", "setup"},
                                                                                 {"--ratio", "target_ratio"},
                                                                                 {"--trials", "trials"},
                                                                                 {"--max-calls", "max_calls"},
                                                                                 {"--sampling", "sampling"},
                                                                                 {"--out", "out"}}) {
    cmd->add_option_function<std::string>(flag, [&f, key = key](const std::string& v) { f.values[key] = v; });
  }
  cmd->add_flag("--check", f.check, "exit 3 when the run fails its acceptance check");
}

ExperimentConfig resolve(const Flags& f) {
  ConfigValues v = f.config.empty() ? ConfigValues{} : read_config_file(f.config);
  for (const auto& [k, val] : f.values) v[k] = val;
  return make_config(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<Index> parse_list(const std::string& s, const char* what) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("invalid ") + what + " list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return out;
}

int cmd_design(const Flags& f) {
  const ExperimentConfig cfg = resolve(f);
  const Instance inst = gen_instance(cfg);
  DesignResult r = run_design(inst.spec, cfg);
  r.regenerations = inst.regenerations;
  const fs::path out(cfg.out);
  write_file(out / "design.json", design_to_json(r));
  std::ostringstream trace;
  r.trace.write_calls_csv(trace);
  write_file(out / "trace.csv", trace.str());
  std::cout << "calls " << r.calls << "  phases " << r.phases << "  wall " << r.wall_ms / 1e3 << " s\n"
            << "certified bound " << r.certified_bound << "  lower bound " << r.lower_bound << "\n"
            << "wrote " << (out / "design.json").string() << ", " << (out / "trace.csv").string() << "\n";
  if (r.budget_exhausted) {
    std::cerr << "call budget exhausted before reaching the target ratio\n";
    return kExitBudget;
  }
  if (f.check) {
    const double sc = inst.spec.sigma() * inst.spec.chi();
    bool ok = r.reduced_lower > 0.0 && r.reduced_upper <= cfg.target_ratio * r.reduced_lower * (1.0 + 1e-12);
    for (Index j = 0; j < r.h.cols(); ++j) ok = ok && std::abs(r.h.col(j).norm() * sc - 1.0) <= 1e-8;
    if (!ok) {
      std::cerr << "check failed: ratio or contrast normalization\n";
      return kExitCheck;
    }
  }
  return 0;
}

int cmd_risk(const Flags& f, const std::string& input, bool linear) {
  DesignResult d = design_from_json(read_file(input));
  ConfigValues v = to_values(d.config);
  if (!f.config.empty())
    for (const auto& [k, val] : read_config_file(f.config)) v[k] = val;
  for (const auto& [k, val] : f.values) v[k] = val;
  d.config = make_config(v);
  const Instance inst = gen_instance(d.config);
  const DesignSpec& spec = inst.spec;
  Matrix h = d.h;
  double bound = d.certified_bound;
  if (linear) {
    const LinearDesign lin = poly_to_linear(DualPoint{d.lambda, d.mu}, SymMatrix::symmetrize(d.theta), spec);
    h = lin.h;
    bound = linear_objective(lin.point, lin.theta, kappa(spec.eps()), spec);
    d.certified_bound = bound;
  }
  const RiskSummary r = monte_carlo_risk(spec, h, linear ? EstimatorKind::Linear : EstimatorKind::Polyhedral,
                                         d.config.trials, d.config.seed, d.config.sampling);
  const fs::path out(d.config.out);
  write_file(out / "risk.json", risk_to_json(r, d, linear ? "linear" : "polyhedral"));
  std::ostringstream csv;
  write_errors_csv(csv, r);
  write_file(out / "errors.csv", csv.str());
  std::cout << "trials " << r.errors.size() << "  " << 1.0 - spec.eps() << "-quantile " << r.quantile << "  mean "
            << r.mean << "  bound " << bound << "\n";
  if (r.unconverged) std::cerr << r.unconverged << " inner solves stopped at the iteration cap\n";
  if (f.check && !(r.quantile <= bound)) {
    std::cerr << "check failed: empirical quantile exceeds the certified bound\n";
    return kExitCheck;
  }
  return 0;
}

int cmd_sweep(const Flags& f, const std::string& rhos, const std::string& taus) {
  Flags g = f;
  g.values.erase("rho");
  g.values.erase("tau");
  const ExperimentConfig cfg = resolve(g);
  const auto cells = run_sweep(cfg, parse_list(rhos, "rho"), parse_list(taus, "tau"));
  std::ostringstream csv;
  write_sweep_csv(csv, cells);
  write_file(fs::path(cfg.out) / "sweep.csv", csv.str());
  std::cout << "rho  tau  calls/phases/seconds\n";
  bool budget = false;
  for (const auto& c : cells) {
    std::cout << c.rho << "  " << c.tau << "  " << c.calls << "/" << c.phases << "/" << c.wall_ms / 1e3 << "\n";
    budget = budget || c.budget_exhausted;
  }
  return budget ? kExitBudget : 0;
}

int cmd_convert(const Flags& f, const std::string& input) {
  const DesignResult d = design_from_json(read_file(input));
  const Instance inst = gen_instance(d.config);
  const DesignSpec& spec = inst.spec;
  const LinearDesign lin = poly_to_linear(DualPoint{d.lambda, d.mu}, SymMatrix::symmetrize(d.theta), spec);
  const double bound = linear_objective(lin.point, lin.theta, kappa(spec.eps()), spec);
  const double lmi_min = min_eig(linear_lmi(lin.point, lin.h, lin.theta, spec));
  nlohmann::json j;
  j["config"] = nlohmann::json::object();
  for (const auto& [k, v] : to_values(d.config)) j["config"][k] = v;
  j["risk_bound"] = bound;
  j["q_norm"] = lin.q_norm;
  j["mu_floor"] = lin.mu_floor;
  j["lmi_min_eig"] = lmi_min;
  j["lambda"] = std::vector<double>(lin.point.lambda.data(), lin.point.lambda.data() + lin.point.lambda.size());
  j["mu"] = std::vector<double>(lin.point.mu.data(), lin.point.mu.data() + lin.point.mu.size());
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < lin.h.rows(); ++i) {
    const Vector row = lin.h.row(i).transpose();
    rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["h"] = rows;
  const fs::path out = fs::path(d.config.out) / "linear.json";
  write_file(out, j.dump(1));
  std::cout << "linear risk bound " << bound << "  ||Q|| " << lin.q_norm << "  LMI min eig " << lmi_min << "\nwrote "
            << out.string() << "\n";
  if (f.check) {
    const double scale = std::max(1.0, std::abs(max_eig(linear_lmi(lin.point, lin.h, lin.theta, spec))));
    if (!(lin.q_norm <= 1.0 + 1e-7) || lmi_min < -1e-6 * scale) {
      std::cerr << "check failed: converted design is not feasible\n";
      return kExitCheck;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polyhedral and linear estimate design by the composite truncated level method"};
  app.require_subcommand(1);

  Flags design_flags, risk_flags, sweep_flags, convert_flags;
  std::string rhos = "1,10", taus = "1,10", risk_input, convert_input;
  bool linear = false;

  auto* design = app.add_subcommand("design", "solve one design problem");
  add_instance_flags(design, design_flags);
  design->add_option_function<std::string>("--rho", [&](const std::string& v) { design_flags.values["rho"] = v; });
  design->add_option_function<std::string>("--tau", [&](const std::string& v) { design_flags.values["tau"] = v; });

  auto* risk = app.add_subcommand("risk", "Monte-Carlo risk of a saved design");
  add_instance_flags(risk, risk_flags);
  risk->add_option("--input", risk_input, "design.json from the design subcommand")->required();
  risk->add_flag("--linear", linear, "evaluate the converted linear estimate");

  auto* sweep = app.add_subcommand("sweep", "calls/phases/time over a rho x tau grid");
  add_instance_flags(sweep, sweep_flags);
  sweep->add_option("--rho", rhos, "comma-separated oracle complexities");
  sweep->add_option("--tau", taus, "comma-separated bundle sizes");

  auto* convert = app.add_subcommand("convert", "turn a saved polyhedral design into a linear one");
  convert->add_option("--input", convert_input, "design.json from the design subcommand")->required();
  convert->add_flag("--check", convert_flags.check, "exit 3 when the converted design is infeasible");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*design) return cmd_design(design_flags);
    if (*risk) return cmd_risk(risk_flags, risk_input, linear);
    if (*sweep) return cmd_sweep(sweep_flags, rhos, taus);
    if (*convert) return cmd_convert(convert_flags, convert_input);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

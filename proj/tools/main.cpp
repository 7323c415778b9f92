#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "app/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string scenario;
  std::vector<std::string> params;
  std::string horizon;
  std::string tol;
  std::string out;
  std::optional<double> radius;
  std::optional<double> T;
  bool refine = false;
};

void add_problem_flags(CLI::App* cmd, Flags& f, bool analysis) {
  cmd->add_option("-c,--config", f.config, "Config file");
  cmd->add_option("-s,--scenario", f.scenario, "Built-in scenario (see `trajkit scenarios`)");
  cmd->add_option("-p,--param", f.params, "Scenario parameter name=value (repeatable)");
  cmd->add_option("--horizon", f.horizon, "Time horizon t_min,t_max");
  cmd->add_option("--tol", f.tol, "Tolerances rel,abs");
  cmd->add_option("-o,--out", f.out, "Output directory");
  if (analysis) {
    cmd->add_option("--radius", f.radius, "Analysis ball radius");
    cmd->add_option("--T", f.T, "Analysis time half-width");
    cmd->add_flag("--refine", f.refine, "Halve the sampling stride");
  }
}

trajkit::app::RunConfig load(const Flags& f) {
  using namespace trajkit::app;
  Overrides ov;
  if (!f.scenario.empty()) ov.scenario = f.scenario;
  for (const auto& p : f.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("<command line>", 0, 0, "--param expects name=value, got '" + p + "'");
    ov.params.emplace_back(p.substr(0, eq), p.substr(eq + 1));
  }
  try {
    if (!f.horizon.empty()) ov.horizon = parse_pair(f.horizon);
  } catch (const std::exception&) {
    throw ConfigError("<command line>", 0, 0, "--horizon expects a,b, got '" + f.horizon + "'");
  }
  try {
    if (!f.tol.empty()) ov.tolerances = parse_pair(f.tol);
  } catch (const std::exception&) {
    throw ConfigError("<command line>", 0, 0, "--tol expects rel,abs, got '" + f.tol + "'");
  }
  if (!f.out.empty()) ov.out_dir = f.out;
  ov.radius = f.radius;
  ov.T = f.T;
  ov.refine = f.refine;
  std::optional<ConfigFile> file;
  if (!f.config.empty()) file = ConfigFile::load(f.config);
  return build_config(file ? &*file : nullptr, ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory completeness toolkit"};
  app.require_subcommand(1);

  Flags run_flags, cert_flags;
  auto* run = app.add_subcommand("run", "Integrate a trajectory and detect blow-up");
  add_problem_flags(run, run_flags, false);
  auto* cert = app.add_subcommand("certify", "Check growth hypotheses for completeness");
  add_problem_flags(cert, cert_flags, true);

  std::string kind;
  double eps = 1.0;
  auto* oracle = app.add_subcommand("oracle", "Closed-form or quadrature blow-up time");
  oracle->add_option("kind", kind, "ex1 or ex2")->required();
  oracle->add_option("--eps", eps, "Exponent parameter (positive)");

  auto* list = app.add_subcommand("scenarios", "List built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return trajkit::app::cmd_run(load(run_flags), std::cout, std::cerr);
    if (cert->parsed()) return trajkit::app::cmd_certify(load(cert_flags), std::cout, std::cerr);
    if (oracle->parsed()) return trajkit::app::cmd_oracle(kind, eps, std::cout, std::cerr);
    if (list->parsed()) return trajkit::app::cmd_scenarios(std::cout);
  } catch (const trajkit::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 1;
}

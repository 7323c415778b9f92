#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "report.hpp"

namespace trajkit::app {

namespace fs = std::filesystem;

namespace {

// Files are rendered in memory first and written once at the end.
void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("cannot write " + path.string());
}

std::string fmt(double x, int digits = 12) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const TrajectoryProblem& problem = *config.problem;
  const IntegrationResult result = integrate(problem);
  const RunSummary summary = summarize(config.label, problem, result);

  std::ostringstream csv;
  write_samples_csv(csv, problem, result);
  const fs::path dir(config.out_dir);
  try {
    write_file(dir / "samples.csv", csv.str());
    write_file(dir / "summary.json", to_json(summary).dump(2) + "\n");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  out << "scenario: " << summary.scenario << "\n";
  out << "status: " << summary.status << "\n";
  if (summary.t_est) out << "t_est: " << fmt(*summary.t_est) << "\n";
  for (const LegSummary* leg : {&summary.backward, &summary.forward}) {
    out << leg->direction << ": " << leg->status << " on [" << fmt(leg->t_lo) << ", "
        << fmt(leg->t_hi) << "], " << leg->accepted_steps << " steps";
    if (!leg->reason.empty()) out << ", " << leg->reason;
    out << "\n";
  }
  out << "energy residual: " << fmt(summary.energy_residual, 3) << "\n";
  out << "wrote " << (dir / "samples.csv").string() << " and " << (dir / "summary.json").string()
      << "\n";
  return exit_code(summary);
}

int cmd_certify(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const TrajectoryProblem& problem = *config.problem;
  analysis::Region region;
  region.p0 = config.analysis.p0 ? *config.analysis.p0 : problem.position;
  region.radius = config.analysis.radius;
  const double T = config.analysis.T
                       ? *config.analysis.T
                       : std::max(std::abs(problem.t_min), std::abs(problem.t_max));

  analysis::CompletenessCertificate cert;
  try {
    cert = analysis::certify(problem, region, T, config.analysis.grid);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const fs::path path = fs::path(config.out_dir) / "certificate.json";
  try {
    write_file(path, to_json(cert).dump(2) + "\n");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  out << "verdict: " << analysis::name_of(cert.verdict) << "\n";
  if (cert.theorem) {
    out << "theorem: " << analysis::name_of(*cert.theorem);
    for (auto t : cert.also) out << ", " << analysis::name_of(t);
    out << "\n";
  }
  out << "direction: " << analysis::name_of(cert.direction) << "\n";
  if (!cert.reason.empty()) out << "reason: " << cert.reason << "\n";
  if (cert.witness) {
    out << "witness: (";
    for (int i = 0; i < cert.witness->point.size(); ++i)
      out << (i ? ", " : "") << fmt(cert.witness->point[i]);
    out << ") at t = " << fmt(cert.witness->time) << ": " << cert.witness->description << "\n";
  }
  out << "wrote " << path.string() << "\n";
  return exit_code(cert);
}

int cmd_oracle(const std::string& kind, double eps, std::ostream& out, std::ostream& err) {
  const auto k = scenarios::oracle_kind(kind);
  if (!k) {
    err << "error: unknown oracle '" << kind << "' (accepted: ex1, ex2)\n";
    return 1;
  }
  try {
    out << fmt(scenarios::blowup_oracle(*k, eps)) << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_scenarios(std::ostream& out) {
  for (const auto& s : scenarios::catalog()) {
    out << s.name << ": " << s.summary << "\n";
    if (!s.parameters.empty()) {
      out << "   ";
      for (const auto& [k, v] : s.parameters) out << " " << k << "=" << v;
      out << "\n";
    }
  }
  return 0;
}

}  // namespace trajkit::app

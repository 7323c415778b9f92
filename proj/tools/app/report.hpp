#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "trajkit/analysis.hpp"

namespace trajkit::app {

struct ResidualSummary {
  double max_abs = 0.0;
  double scale = 0.0;
  double relative = 0.0;
  double worst_t = 0.0;
  std::size_t points = 0;

  bool operator==(const ResidualSummary&) const = default;
};

struct LegSummary {
  std::string direction;  // "forward" | "backward"
  std::string status;     // "ReachedHorizon" | "BlowUp" | "StepFailure"
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::optional<double> t_est;
  std::optional<double> t_last;
  std::optional<double> failure_t;
  std::string reason;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::vector<std::pair<double, double>> crossings;  // (threshold, t)
  ResidualSummary energy_residual;

  bool operator==(const LegSummary&) const = default;
};

struct RunSummary {
  std::string scenario;
  std::vector<std::string> coordinates;
  std::string time;
  double t0 = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  // StepFailure, BlowUpForward, BlowUpBackward, BlowUpBoth or
  // ReachedHorizon; a step failure on either leg wins.
  std::string status;
  std::optional<double> t_est;   // forward estimate first, then backward
  LegSummary forward;
  LegSummary backward;
  double energy_residual = 0.0;  // worse relative residual of the two legs
  // Largest deviations from the initial values over the samples, relative
  // to max(1, |initial|). `energy_conserved` says whether the force system
  // should keep u/2 + V constant (autonomous, no X, S = 0 on the samples).
  double speed_drift = 0.0;
  double energy_drift = 0.0;
  bool energy_conserved = false;
  std::size_t samples = 0;

  bool operator==(const RunSummary&) const = default;
};

RunSummary summarize(const std::string& label, const TrajectoryProblem& problem,
                     const IntegrationResult& result);

// 0, 10 (blow-up) or 20 (step failure).
int exit_code(const RunSummary& summary);

nlohmann::json to_json(const RunSummary& summary);
RunSummary summary_from_json(const nlohmann::json& j);

void write_samples_csv(std::ostream& out, const TrajectoryProblem& problem,
                       const IntegrationResult& result);

nlohmann::json to_json(const analysis::CompletenessCertificate& cert);

// 0 (Certified), 11 (CertifiedHeuristic) or 12 (NotCertified).
int exit_code(const analysis::CompletenessCertificate& cert);

}  // namespace trajkit::app

#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace trajkit::app {

using nlohmann::json;

namespace {

// JSON has no infinities; they are written as strings and read back.
json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double read_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    return std::nan("");
  }
  return j.get<double>();
}

json optional_number(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return read_number(j.at(key));
}

ResidualSummary residual(const analysis::EnergyResidual& r) {
  return {r.max_abs, r.scale, r.relative, r.worst_t, r.points};
}

LegSummary leg_summary(const Leg& leg, const TrajectoryProblem& problem) {
  LegSummary s;
  s.direction = std::string(name_of(leg.direction));
  s.t_lo = leg.t_lo();
  s.t_hi = leg.t_hi();
  s.accepted_steps = leg.accepted_steps;
  s.rejected_steps = leg.rejected_steps;
  for (const auto& c : leg.crossings) s.crossings.emplace_back(c.threshold, c.t);
  if (const auto* b = std::get_if<BlowUp>(&leg.status)) {
    s.status = "BlowUp";
    s.t_est = b->t_est;
    s.t_last = b->t_last;
  } else if (const auto* f = std::get_if<StepFailure>(&leg.status)) {
    s.status = "StepFailure";
    s.failure_t = f->t;
    s.reason = f->reason;
  } else {
    s.status = "ReachedHorizon";
  }
  s.energy_residual = residual(analysis::energy_residual(leg, problem));
  return s;
}

json to_json(const ResidualSummary& r) {
  return {{"max_abs", number(r.max_abs)},
          {"scale", number(r.scale)},
          {"relative", number(r.relative)},
          {"worst_t", number(r.worst_t)},
          {"points", r.points}};
}

ResidualSummary residual_from(const json& j) {
  return {read_number(j.at("max_abs")), read_number(j.at("scale")), read_number(j.at("relative")),
          read_number(j.at("worst_t")), j.at("points").get<std::size_t>()};
}

json to_json(const LegSummary& s) {
  json crossings = json::array();
  for (const auto& [threshold, t] : s.crossings) crossings.push_back({number(threshold), number(t)});
  return {{"direction", s.direction},
          {"status", s.status},
          {"t_lo", number(s.t_lo)},
          {"t_hi", number(s.t_hi)},
          {"t_est", optional_number(s.t_est)},
          {"t_last", optional_number(s.t_last)},
          {"failure_t", optional_number(s.failure_t)},
          {"reason", s.reason},
          {"accepted_steps", s.accepted_steps},
          {"rejected_steps", s.rejected_steps},
          {"crossings", crossings},
          {"energy_residual", to_json(s.energy_residual)}};
}

LegSummary leg_from(const json& j) {
  LegSummary s;
  s.direction = j.at("direction").get<std::string>();
  s.status = j.at("status").get<std::string>();
  s.t_lo = read_number(j.at("t_lo"));
  s.t_hi = read_number(j.at("t_hi"));
  s.t_est = read_optional(j, "t_est");
  s.t_last = read_optional(j, "t_last");
  s.failure_t = read_optional(j, "failure_t");
  s.reason = j.at("reason").get<std::string>();
  s.accepted_steps = j.at("accepted_steps").get<std::size_t>();
  s.rejected_steps = j.at("rejected_steps").get<std::size_t>();
  for (const auto& c : j.at("crossings")) s.crossings.emplace_back(read_number(c.at(0)), read_number(c.at(1)));
  s.energy_residual = residual_from(j.at("energy_residual"));
  return s;
}

}  // namespace

RunSummary summarize(const std::string& label, const TrajectoryProblem& problem,
                     const IntegrationResult& result) {
  RunSummary s;
  s.scenario = label;
  s.coordinates = problem.chart.coordinates();
  s.time = problem.forces.time_name();
  s.t0 = problem.t0;
  s.t_min = problem.t_min;
  s.t_max = problem.t_max;
  s.rel_tol = problem.tol.rel;
  s.abs_tol = problem.tol.abs;
  s.forward = leg_summary(result.forward, problem);
  s.backward = leg_summary(result.backward, problem);

  const bool fb = result.forward.blew_up(), bb = result.backward.blew_up();
  if (result.any_failure()) {
    s.status = "StepFailure";
  } else if (fb && bb) {
    s.status = "BlowUpBoth";
  } else if (fb) {
    s.status = "BlowUpForward";
  } else if (bb) {
    s.status = "BlowUpBackward";
  } else {
    s.status = "ReachedHorizon";
  }
  s.t_est = fb ? s.forward.t_est : s.backward.t_est;
  s.energy_residual = std::max(s.forward.energy_residual.relative, s.backward.energy_residual.relative);

  const auto samples = result.samples();
  s.samples = samples.size();
  const Vector& p0 = problem.position;
  const Vector& v0 = problem.velocity;
  auto u_of = [&](const Vector& p, const Vector& v) { return v.dot(problem.chart.metric_at(p) * v); };
  auto energy = [&](const Vector& p, const Vector& v, double t) {
    return 0.5 * u_of(p, v) + (problem.forces.has_V() ? problem.forces.V_at(p, t) : 0.0);
  };
  const bool riemannian = problem.chart.riemannian();
  double u_init = 0.0, e_init = 0.0;
  try {
    u_init = riemannian ? u_of(p0, v0) : v0.dot(problem.chart.raw_metric_at(p0) * v0);
    e_init = riemannian ? energy(p0, v0, problem.t0) : 0.5 * u_init;
  } catch (const Error&) {
  }
  bool conserved = problem.forces.autonomous() && !problem.forces.has_X();
  for (const auto& smp : samples) {
    try {
      const Matrix g = problem.chart.raw_metric_at(smp.position);
      const double u = smp.velocity.dot(g * smp.velocity);
      const double e =
          0.5 * u + (problem.forces.has_V() ? problem.forces.V_at(smp.position, smp.t) : 0.0);
      s.speed_drift = std::max(s.speed_drift, std::abs(u - u_init) / std::max(1.0, std::abs(u_init)));
      s.energy_drift = std::max(s.energy_drift, std::abs(e - e_init) / std::max(1.0, std::abs(e_init)));
      if (conserved && problem.forces.has_F()) {
        const auto d = decompose(problem.forces, problem.chart, smp.position, smp.t);
        if (d.S.cwiseAbs().maxCoeff() > 1e-12) conserved = false;
      }
    } catch (const Error&) {
      // Points where the fields cannot be evaluated do not contribute.
    }
  }
  s.energy_conserved = conserved;
  return s;
}

int exit_code(const RunSummary& summary) {
  if (summary.status == "StepFailure") return 20;
  if (summary.status.rfind("BlowUp", 0) == 0) return 10;
  return 0;
}

json to_json(const RunSummary& s) {
  return {{"scenario", s.scenario},
          {"coordinates", s.coordinates},
          {"time", s.time},
          {"t0", number(s.t0)},
          {"t_min", number(s.t_min)},
          {"t_max", number(s.t_max)},
          {"rel_tol", number(s.rel_tol)},
          {"abs_tol", number(s.abs_tol)},
          {"status", s.status},
          {"t_est", optional_number(s.t_est)},
          {"forward", to_json(s.forward)},
          {"backward", to_json(s.backward)},
          {"energy_residual", number(s.energy_residual)},
          {"speed_drift", number(s.speed_drift)},
          {"energy_drift", number(s.energy_drift)},
          {"energy_conserved", s.energy_conserved},
          {"samples", s.samples}};
}

RunSummary summary_from_json(const json& j) {
  RunSummary s;
  s.scenario = j.at("scenario").get<std::string>();
  s.coordinates = j.at("coordinates").get<std::vector<std::string>>();
  s.time = j.at("time").get<std::string>();
  s.t0 = read_number(j.at("t0"));
  s.t_min = read_number(j.at("t_min"));
  s.t_max = read_number(j.at("t_max"));
  s.rel_tol = read_number(j.at("rel_tol"));
  s.abs_tol = read_number(j.at("abs_tol"));
  s.status = j.at("status").get<std::string>();
  s.t_est = read_optional(j, "t_est");
  s.forward = leg_from(j.at("forward"));
  s.backward = leg_from(j.at("backward"));
  s.energy_residual = read_number(j.at("energy_residual"));
  s.speed_drift = read_number(j.at("speed_drift"));
  s.energy_drift = read_number(j.at("energy_drift"));
  s.energy_conserved = j.at("energy_conserved").get<bool>();
  s.samples = j.at("samples").get<std::size_t>();
  return s;
}

void write_samples_csv(std::ostream& out, const TrajectoryProblem& problem,
                       const IntegrationResult& result) {
  const int n = problem.chart.dim();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i) out << ",v" << i;
  out << ",speed\n";
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
  };
  for (const auto& s : result.samples()) {
    put(s.t);
    for (int i = 0; i < n; ++i) out << ',', put(s.position[i]);
    for (int i = 0; i < n; ++i) out << ',', put(s.velocity[i]);
    out << ',';
    double speed = std::nan("");
    try {
      speed = detector_speed(problem.chart, s.position, s.velocity);
    } catch (const Error&) {
    }
    put(speed);
    out << '\n';
  }
}

json to_json(const analysis::CompletenessCertificate& c) {
  json constants = json::object();
  for (const auto& [k, v] : c.constants) constants[k] = number(v);
  json also = json::array();
  for (auto t : c.also) also.push_back(std::string(analysis::name_of(t)));
  json checks = json::array();
  for (const auto& ch : c.checks) checks.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
  json witness = nullptr;
  if (c.witness) {
    json point = json::array();
    for (int i = 0; i < c.witness->point.size(); ++i) point.push_back(number(c.witness->point[i]));
    witness = {{"point", point},
               {"time", number(c.witness->time)},
               {"value", number(c.witness->value)},
               {"description", c.witness->description}};
  }
  json p0 = json::array();
  for (int i = 0; i < c.region.p0.size(); ++i) p0.push_back(number(c.region.p0[i]));
  return {{"verdict", std::string(analysis::name_of(c.verdict))},
          {"theorem", c.theorem ? json(std::string(analysis::name_of(*c.theorem))) : json(nullptr)},
          {"also", also},
          {"direction", std::string(analysis::name_of(c.direction))},
          {"requested", std::string(analysis::name_of(c.requested))},
          {"reason", c.reason},
          {"witness", witness},
          {"constants", constants},
          {"assumptions", c.assumptions},
          {"checks", checks},
          {"region", {{"p0", p0}, {"radius", number(c.region.radius)}}},
          {"T", number(c.T)},
          {"grid",
           {{"shells", c.grid.shells},
            {"directions", c.grid.directions},
            {"times", c.grid.times},
            {"seed", c.grid.seed}}}};
}

int exit_code(const analysis::CompletenessCertificate& cert) {
  switch (cert.verdict) {
    case analysis::Verdict::Certified:
      return 0;
    case analysis::Verdict::CertifiedHeuristic:
      return 11;
    case analysis::Verdict::NotCertified:
      return 12;
  }
  return 12;
}

}  // namespace trajkit::app

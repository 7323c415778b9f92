#include "trajkit/analysis.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "trajkit/quadrature.hpp"

namespace trajkit::analysis {

namespace {

constexpr double kInflation = 1.05;

struct GridPoint {
  Vector p;
  int shell = 0;
  double distance = 0.0;
};

struct Grid {
  std::vector<GridPoint> points;
  std::vector<double> times;
  int shells = 0;
  bool exact = true;
  std::size_t skipped = 0;
};

std::vector<Vector> unit_directions(int n, const GridSpec& spec) {
  std::vector<Vector> dirs;
  if (n == 1) {
    dirs.push_back(Vector::Constant(1, 1.0));
    dirs.push_back(Vector::Constant(1, -1.0));
    return dirs;
  }
  const int count = std::max(spec.directions, 2);
  if (n == 2) {
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * std::numbers::pi * j / count;
      Vector e(2);
      e << std::cos(a), std::sin(a);
      dirs.push_back(e);
    }
    return dirs;
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int axis = 0; axis < n && static_cast<int>(dirs.size()) < count; ++axis) {
    dirs.push_back(Vector::Unit(n, axis));
    if (static_cast<int>(dirs.size()) < count) dirs.push_back(-Vector::Unit(n, axis));
  }
  while (static_cast<int>(dirs.size()) < count) {
    Vector e(n);
    for (int i = 0; i < n; ++i) e[i] = normal(rng);
    const double len = e.norm();
    if (len > 1e-8) dirs.push_back(e / len);
  }
  return dirs;
}

void require_riemannian(const ManifoldChart& chart) {
  if (!chart.riemannian())
    throw PreconditionError("analysis requires a Riemannian chart; pseudo-Riemannian charts are rejected");
}

Grid build_grid(const ManifoldChart& chart, const Region& region, double T, const GridSpec& spec,
                bool autonomous) {
  require_riemannian(chart);
  const int n = chart.dim();
  if (region.p0.size() != n) throw PreconditionError("region centre has wrong dimension");
  if (!(region.radius > 0.0) || !std::isfinite(region.radius))
    throw PreconditionError("region radius must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw PreconditionError("time window must be finite");
  if (spec.shells < 2 || spec.shells % 2 != 0)
    throw PreconditionError("shell count must be even and at least 2");

  const Matrix g0 = chart.metric_at(region.p0);
  const Eigen::LLT<Matrix> llt(g0);
  // e' = L^-T e has unit length in g0.
  auto to_unit = [&](const Vector& e) -> Vector {
    return llt.matrixU().solve(e);
  };

  Grid grid;
  grid.shells = spec.shells;
  grid.exact = chart.distance_mode() == DistanceMode::ExactFlat;
  const auto dirs = unit_directions(n, spec);

  grid.points.push_back({region.p0, 0, 0.0});
  for (int i = 1; i <= spec.shells; ++i) {
    const double r = region.radius * i / spec.shells;
    for (const auto& e : dirs) {
      GridPoint gp;
      gp.p = region.p0 + r * to_unit(e);
      gp.shell = i;
      try {
        (void)chart.metric_at(gp.p);
        gp.distance = grid.exact ? r : chart_distance(chart, region.p0, gp.p).value;
      } catch (const Error&) {
        ++grid.skipped;
        continue;
      }
      if (!std::isfinite(gp.distance)) {
        ++grid.skipped;
        continue;
      }
      grid.points.push_back(std::move(gp));
    }
  }

  const int slices = (autonomous || T == 0.0) ? 1 : std::max(spec.times, 1);
  if (slices == 1) {
    grid.times.push_back(0.0);
  } else {
    for (int j = 0; j < slices; ++j) grid.times.push_back(-T + 2.0 * T * j / (slices - 1));
  }
  return grid;
}

struct Value {
  std::size_t point = 0;
  double t = 0.0;
  double y = 0.0;
};

// Evaluates U on the grid; samples where U throws or is not finite count as
// skipped.
std::vector<Value> sample(const Grid& grid, const ScalarField& U, std::size_t& skipped) {
  std::vector<Value> out;
  out.reserve(grid.points.size() * grid.times.size());
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    for (double t : grid.times) {
      double y;
      try {
        y = U(grid.points[i].p, t);
      } catch (const Error&) {
        ++skipped;
        continue;
      }
      if (!std::isfinite(y)) {
        ++skipped;
        continue;
      }
      out.push_back({i, t, y});
    }
  }
  return out;
}

GrowthFit fit_values(const Grid& grid, const std::vector<Value>& values, GrowthKind kind,
                     const Region& region, double T, std::size_t skipped,
                     const std::string& label) {
  const int k = power_of(kind);
  GrowthFit fit;
  fit.kind = kind;
  fit.p0 = region.p0;
  fit.T = T;
  fit.radius = region.radius;
  fit.samples = values.size();
  fit.skipped = skipped + grid.skipped;
  fit.exact_distance = grid.exact;
  if (values.empty()) return fit;

  const int S = grid.shells;
  const double lowest = -std::numeric_limits<double>::infinity();
  std::vector<double> shell_max(static_cast<std::size_t>(S + 1), lowest);
  std::vector<double> shell_z(static_cast<std::size_t>(S + 1), 0.0);
  std::vector<std::size_t> shell_arg(static_cast<std::size_t>(S + 1), 0);
  fit.max_value = lowest;
  for (std::size_t idx = 0; idx < values.size(); ++idx) {
    const auto& v = values[idx];
    const auto& gp = grid.points[v.point];
    const auto s = static_cast<std::size_t>(gp.shell);
    shell_z[s] = std::max(shell_z[s], std::pow(gp.distance, k));
    if (v.y > shell_max[s]) {
      shell_max[s] = v.y;
      shell_arg[s] = idx;
    }
    fit.max_value = std::max(fit.max_value, v.y);
  }

  // Cumulative envelope over balls.
  std::vector<double> env(shell_max.size(), lowest);
  std::vector<std::size_t> env_arg(shell_max.size(), 0);
  double running = lowest;
  std::size_t running_arg = 0;
  for (std::size_t s = 0; s < shell_max.size(); ++s) {
    if (shell_max[s] > running) {
      running = shell_max[s];
      running_arg = shell_arg[s];
    }
    env[s] = running;
    env_arg[s] = running_arg;
  }

  // Least-squares slope of the envelope against d^k.
  if (k > 0) {
    double sz = 0, sy = 0, szz = 0, szy = 0;
    int m = 0;
    for (std::size_t s = 0; s < env.size(); ++s) {
      if (!std::isfinite(env[s]) || shell_max[s] == lowest) continue;
      sz += shell_z[s];
      sy += env[s];
      szz += shell_z[s] * shell_z[s];
      szy += shell_z[s] * env[s];
      ++m;
    }
    const double var = szz - sz * sz / std::max(m, 1);
    if (m >= 2 && var > 0.0) fit.A_raw = std::max(0.0, (szy - sz * sy / m) / var);
  }
  double c = lowest;
  for (const auto& v : values) {
    const double z = k > 0 ? std::pow(grid.points[v.point].distance, k) : 0.0;
    c = std::max(c, v.y - fit.A_raw * z);
  }
  fit.C_raw = std::max(0.0, c);
  fit.A = kInflation * fit.A_raw;
  fit.C = kInflation * fit.C_raw;

  const auto Sz = static_cast<std::size_t>(S);
  const double base = env[0];
  if (std::isfinite(base) && std::isfinite(env[Sz / 2])) {
    const double e_full = env[Sz] - base;
    const double e_half = env[Sz / 2] - base;
    const double tol = 1e-10 * std::max({1.0, std::abs(base), std::abs(env[Sz])});
    if (e_full > kInflation * std::pow(2.0, k) * std::max(e_half, 0.0) + tol) {
      const auto& v = values[env_arg[Sz]];
      Witness w;
      w.point = grid.points[v.point].p;
      w.time = v.t;
      w.value = v.y;
      std::ostringstream os;
      os.precision(6);
      os << label << " envelope grows faster than "
         << (k == 0 ? std::string("a bound") : "d^" + std::to_string(k)) << ": rise " << e_full
         << " on radius " << region.radius << " against " << e_half << " on radius "
         << region.radius / 2;
      w.description = os.str();
      fit.violation = std::move(w);
    }
  }
  return fit;
}

Directions from_flags(bool forward, bool backward) {
  if (forward && backward) return Directions::Both;
  if (forward) return Directions::Forward;
  if (backward) return Directions::Backward;
  return Directions::None;
}

bool has_forward(Directions d) { return d == Directions::Forward || d == Directions::Both; }
bool has_backward(Directions d) { return d == Directions::Backward || d == Directions::Both; }

Directions intersect(Directions a, Directions b) {
  return from_flags(has_forward(a) && has_forward(b), has_backward(a) && has_backward(b));
}

double g_norm(const Matrix& g, const Vector& x) { return std::sqrt(std::max(x.dot(g * x), 0.0)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

bool F_time_independent(const ForceSystem& fs) {
  if (!fs.fields().F) return true;
  for (const auto& row : *fs.fields().F)
    for (const auto& e : row)
      if (e.mentions(fs.time_name())) return false;
  return true;
}

}  // namespace

GridSpec GridSpec::refined() const {
  GridSpec g = *this;
  g.shells *= 2;
  g.directions *= 2;
  g.times = 2 * (times - 1) + 1;
  return g;
}

std::string_view name_of(GrowthKind kind) {
  switch (kind) {
    case GrowthKind::Bounded: return "Bounded";
    case GrowthKind::Linear: return "Linear";
    case GrowthKind::Quadratic: return "Quadratic";
  }
  return "?";
}

int power_of(GrowthKind kind) {
  switch (kind) {
    case GrowthKind::Bounded: return 0;
    case GrowthKind::Linear: return 1;
    case GrowthKind::Quadratic: return 2;
  }
  return 0;
}

GrowthFit fit_growth(const ScalarField& U, GrowthKind kind, const ManifoldChart& chart,
                     const Region& region, double T, const GridSpec& spec, bool autonomous) {
  const Grid grid = build_grid(chart, region, T, spec, autonomous);
  std::size_t skipped = 0;
  const auto values = sample(grid, U, skipped);
  return fit_values(grid, values, kind, region, T, skipped, "field");
}

GrowthFit fit_linear_growth(const ScalarField& norm_of_X, const ManifoldChart& chart,
                            const Region& region, double T, const GridSpec& spec,
                            bool autonomous) {
  return fit_growth(norm_of_X, GrowthKind::Linear, chart, region, T, spec, autonomous);
}

GrowthFit fit_linear_growth(const ForceSystem& system, const ManifoldChart& chart,
                            const Region& region, double T, const GridSpec& spec) {
  const Grid grid = build_grid(chart, region, T, spec, system.autonomous());
  std::size_t skipped = 0;
  const auto values = sample(
      grid,
      [&](const Vector& p, double t) {
        return g_norm(chart.metric_at(p), external_field(system, chart, p, t));
      },
      skipped);
  return fit_values(grid, values, GrowthKind::Linear, region, T, skipped, "|X|");
}

GrowthFit fit_quadratic_growth(const ScalarField& U, const ManifoldChart& chart,
                               const Region& region, double T, const GridSpec& spec,
                               bool autonomous) {
  return fit_growth(U, GrowthKind::Quadratic, chart, region, T, spec, autonomous);
}

SBounds bound_S(const ForceSystem& system, const ManifoldChart& chart, const Region& region,
                double T, const GridSpec& spec) {
  require_riemannian(chart);
  SBounds out;
  if (!system.has_F()) return out;
  const Grid grid = build_grid(chart, region, T, spec, system.autonomous());

  std::vector<Value> hi, lo;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const Vector& p = grid.points[i].p;
    Matrix g;
    try {
      g = chart.metric_at(p);
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    for (double t : grid.times) {
      Matrix F;
      try {
        F = system.F_at(p, t);
      } catch (const Error&) {
        ++skipped;
        continue;
      }
      if (!F.allFinite()) {
        ++skipped;
        continue;
      }
      const Matrix A = g * F;
      const Matrix sym = 0.5 * (A + A.transpose());
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sym, g);
      const auto& ev = es.eigenvalues();
      hi.push_back({i, t, ev[ev.size() - 1]});
      lo.push_back({i, t, -ev[0]});
    }
  }
  out.samples = hi.size();
  if (hi.empty()) return out;

  out.sup = -std::numeric_limits<double>::infinity();
  out.inf = std::numeric_limits<double>::infinity();
  for (const auto& v : hi) out.sup = std::max(out.sup, v.y);
  for (const auto& v : lo) out.inf = std::min(out.inf, -v.y);
  out.norm = std::max(std::abs(out.inf), std::abs(out.sup));

  auto sup_fit = fit_values(grid, hi, GrowthKind::Bounded, region, T, skipped, "sup g(v,Sv)");
  auto inf_fit = fit_values(grid, lo, GrowthKind::Bounded, region, T, skipped, "-inf g(v,Sv)");
  out.sup_violation = std::move(sup_fit.violation);
  if (inf_fit.violation) {
    inf_fit.violation->value = -inf_fit.violation->value;
    out.inf_violation = std::move(inf_fit.violation);
  }
  return out;
}

std::string_view name_of(CompletenessVerdict v) {
  switch (v) {
    case CompletenessVerdict::SufficientQuadratic: return "SufficientQuadratic";
    case CompletenessVerdict::NumericallyDivergent: return "NumericallyDivergent";
    case CompletenessVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

PositiveCompleteness positively_complete_check(const expr::Expression& V0,
                                               const std::string& variable, double s_max) {
  if (!(s_max > 0.0) || !std::isfinite(s_max)) throw PreconditionError("s_max must be positive");
  const std::vector<std::string> slots{variable};
  const expr::Program prog(V0, slots);
  auto V = [&](double s) { return prog(std::span<const double>(&s, 1)); };

  constexpr int kSamples = 4096;
  double prev = V(0.0);
  for (int i = 1; i <= kSamples; ++i) {
    const double s = s_max * i / kSamples;
    const double v = V(s);
    if (!std::isfinite(v)) throw PreconditionError("V0 is not finite at s = " + fmt(s));
    if (v > prev + 1e-12 * std::max(1.0, std::abs(prev)))
      throw PreconditionError("V0 is not non-increasing near s = " + fmt(s));
    prev = v;
  }

  PositiveCompleteness out;
  const double v0 = V(0.0);
  constexpr int kDoublings = 6;
  const double s_first = s_max / std::pow(2.0, kDoublings);

  // Envelope ratio test with k = 2 on -V0, over every doubling.
  bool quadratic = true;
  for (int j = 0; j < kDoublings; ++j) {
    const double r = s_first * std::pow(2.0, j);
    const double e_half = -V(r) + v0;
    const double e_full = -V(2.0 * r) + v0;
    const double tol = 1e-10 * std::max({1.0, std::abs(v0), std::abs(e_full)});
    if (e_full > kInflation * 4.0 * std::max(e_half, 0.0) + tol) quadratic = false;
  }
  {
    double sz = 0, sy = 0, szz = 0, szy = 0;
    const int m = kSamples + 1;
    for (int i = 0; i <= kSamples; ++i) {
      const double s = s_max * i / kSamples;
      const double z = s * s, y = -V(s);
      sz += z;
      sy += y;
      szz += z * z;
      szy += z * y;
    }
    const double var = szz - sz * sz / m;
    out.A = var > 0.0 ? std::max(0.0, (szy - sz * sy / m) / var) : 0.0;
    double c = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kSamples; ++i) {
      const double s = s_max * i / kSamples;
      c = std::max(c, -V(s) - out.A * s * s);
    }
    out.C = std::max(0.0, c);
  }

  out.alpha = v0 + 1.0;
  const double alpha = out.alpha;
  auto integrand = [&](double s) { return 1.0 / std::sqrt(alpha - V(s)); };
  quadrature::AdaptiveOptions qo;
  qo.rel_tol = 1e-12;
  double I = quadrature::integrate(integrand, 0.0, s_first, qo).value;
  out.levels.push_back(s_first);
  out.integrals.push_back(I);
  for (int j = 1; j <= kDoublings; ++j) {
    const double a = s_first * std::pow(2.0, j - 1), b = 2.0 * a;
    I += quadrature::integrate(integrand, a, b, qo).value;
    out.levels.push_back(b);
    out.integrals.push_back(I);
  }

  if (quadratic) {
    out.verdict = CompletenessVerdict::SufficientQuadratic;
    out.heuristic = false;
    return out;
  }

  // Increments decaying no faster than harmonically: the reciprocals of
  // successive increments grow at most linearly.
  std::vector<double> inc, d;
  for (std::size_t j = 1; j < out.integrals.size(); ++j)
    inc.push_back(out.integrals[j] - out.integrals[j - 1]);
  bool divergent = true;
  for (double x : inc)
    if (!(x > 0.0)) divergent = false;
  if (divergent) {
    for (std::size_t j = 0; j + 1 < inc.size(); ++j) d.push_back(1.0 / inc[j + 1] - 1.0 / inc[j]);
    double dmax = 0.0;
    for (double x : d) dmax = std::max(dmax, std::abs(x));
    for (std::size_t j = 0; j + 1 < d.size(); ++j)
      if (d[j + 1] > kInflation * std::abs(d[j]) + 1e-12 * std::max(dmax, 1e-300))
        divergent = false;
  }
  out.verdict =
      divergent ? CompletenessVerdict::NumericallyDivergent : CompletenessVerdict::Inconclusive;
  out.heuristic = true;
  return out;
}

EnergyResidual energy_residual(const Leg& leg, const TrajectoryProblem& problem,
                               std::optional<TimeWindow> window) {
  EnergyResidual out;
  const auto times = leg.step_times();
  if (times.size() < 2) return out;

  TimeWindow w;
  if (window) {
    w = *window;
  } else if (const auto* b = std::get_if<BlowUp>(&leg.status)) {
    const double t0 = leg.t0();
    if (leg.direction == Direction::Forward)
      w.hi = t0 + 0.9 * (b->t_last - t0);
    else
      w.lo = t0 - 0.9 * (t0 - b->t_last);
  }

  const auto& chart = problem.chart;
  const auto& fs = problem.forces;
  auto energy = [&](double t) {
    const auto [p, v] = leg.state(t);
    return 0.5 * v.dot(chart.raw_metric_at(p) * v) + fs.V_at(p, t);
  };

  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double a = times[i], b = times[i + 1];
    const double m = 0.5 * (a + b);
    if (m < w.lo || m > w.hi || !(b > a)) continue;
    const double h = (b - a) / 10.0;
    const double deriv =
        (energy(m - 2 * h) - 8 * energy(m - h) + 8 * energy(m + h) - energy(m + 2 * h)) / (12 * h);
    const auto [p, v] = leg.state(m);
    const Matrix g = chart.raw_metric_at(p);
    const Vector gv = g * v;
    const double work = fs.has_F() ? gv.dot(fs.F_at(p, m) * v) : 0.0;
    double rhs = work;
    if (fs.has_V())
      rhs += fs.dVdt_at(p, m);
    else if (fs.has_X())
      rhs += gv.dot(fs.X_at(p, m));
    double du = 2.0 * (work + gv.dot(external_field(fs, chart, p, m)));
    if (!chart.riemannian()) {
      // Null and near-null motion keeps u close to 0 through cancellation of
      // large terms, so the scale is the sum of the magnitudes of the terms
      // of du/dt = dg(xdot)(v, v) + 2 g(a, v).
      const Vector acc = ode_rhs(problem, p, v, m);
      const auto dg = chart.metric_derivatives_at(p);
      double gross = 0.0;
      for (int k = 0; k < v.size(); ++k)
        gross += (dg[k].cwiseAbs() * v.cwiseAbs()).dot(v.cwiseAbs()) * std::abs(v[k]);
      gross += 2.0 * (g.cwiseAbs() * v.cwiseAbs()).dot(acc.cwiseAbs());
      du = std::max(std::abs(du), gross);
    }
    const double r = std::abs(deriv - rhs);
    if (r > out.max_abs) {
      out.max_abs = r;
      out.worst_t = m;
    }
    out.scale = std::max(out.scale, std::abs(du));
    ++out.points;
  }
  out.relative = out.max_abs / std::max(out.scale, 1.0);
  return out;
}

EnergyResidual energy_residual(const IntegrationResult& result, const TrajectoryProblem& problem,
                               std::optional<TimeWindow> window) {
  const auto f = energy_residual(result.forward, problem, window);
  const auto b = energy_residual(result.backward, problem, window);
  EnergyResidual out;
  out.max_abs = std::max(f.max_abs, b.max_abs);
  out.worst_t = f.max_abs >= b.max_abs ? f.worst_t : b.worst_t;
  out.scale = std::max(f.scale, b.scale);
  out.points = f.points + b.points;
  out.relative = out.max_abs / std::max(out.scale, 1.0);
  return out;
}

namespace {

// Running maximum still at least doubling over the last quarter of the
// samples ordered outward from t0.
bool still_growing(const std::vector<double>& running) {
  if (running.size() < 8) return false;
  const double end = running.back();
  const double quarter = running[running.size() * 3 / 4];
  return end > 2.0 * quarter && end > 1e-12;
}

}  // namespace

TrajectoryHypotheses check_trajectory_hypotheses(const IntegrationResult& result,
                                                 const TrajectoryProblem& problem,
                                                 std::optional<Vector> p0_in,
                                                 const DistanceFunction& distance) {
  const auto& chart = problem.chart;
  const auto& fs = problem.forces;
  const Vector p0 = p0_in.value_or(problem.position);
  auto dist = [&](const Vector& q) {
    if (distance) return distance(p0, q);
    return chart_distance(chart, p0, q).value;
  };

  TrajectoryHypotheses out;
  const double V_p0 = fs.has_V() ? fs.V_at(p0, problem.t0) : 0.0;
  out.potential_C = std::max(0.0, -V_p0);

  auto witness = [](const Sample& s, double value, std::string what) {
    return Witness{s.position, s.t, value, std::move(what)};
  };

  const double d0 = dist(problem.position);
  std::vector<ArcPoint> fwd_arc, bwd_arc;
  for (const Leg* leg : {&result.backward, &result.forward}) {
    const bool forward = leg->direction == Direction::Forward;
    std::vector<Sample> ordered = leg->samples;
    if (!forward) std::reverse(ordered.begin(), ordered.end());

    std::vector<double> run_cf, run_cb, run_r, run_A;
    double cf = 0, cb = 0, rr = 0, AA = 0;
    double length = d0;
    std::vector<ArcPoint> arc;
    const Sample* prev = nullptr;
    for (const auto& s : ordered) {
      const Matrix g = chart.raw_metric_at(s.position);
      const double u = s.velocity.dot(g * s.velocity);
      if (fs.has_F()) {
        const double sv = (g * s.velocity).dot(fs.F_at(s.position, s.t) * s.velocity);
        const double ratio = u > 1e-300 ? sv / u : 0.0;
        cf = std::max(cf, ratio);
        cb = std::max(cb, -ratio);
      }
      const double d = dist(s.position);
      const double xn = g_norm(g, external_field(fs, chart, s.position, s.t));
      rr = std::max(rr, xn / (1.0 + d));
      if (fs.has_V() && d > 1e-12)
        AA = std::max(AA, (-fs.V_at(s.position, s.t) - out.potential_C) / (d * d));
      run_cf.push_back(cf);
      run_cb.push_back(cb);
      run_r.push_back(rr);
      run_A.push_back(AA);

      if (prev) {
        // Trapezoid on 16 sub-intervals of each sample interval.
        constexpr int kSub = 16;
        const double a = prev->t, b = s.t;
        double acc = 0.0;
        double f_prev = std::sqrt(std::max(
            prev->velocity.dot(chart.raw_metric_at(prev->position) * prev->velocity), 0.0));
        for (int k = 1; k <= kSub; ++k) {
          const double tk = a + (b - a) * k / kSub;
          const auto [p, v] = leg->state(tk);
          const double fk = std::sqrt(std::max(v.dot(chart.raw_metric_at(p) * v), 0.0));
          acc += 0.5 * (f_prev + fk) * std::abs(b - a) / kSub;
          f_prev = fk;
        }
        length += acc;
      }
      arc.push_back({s.t, d, length});
      if (!out.distance_violation && d > length * (1.0 + 1e-8) + 1e-12)
        out.distance_violation =
            witness(s, d, "distance " + fmt(d) + " exceeds arc bound " + fmt(length));
      prev = &s;
    }

    out.c_forward = std::max(out.c_forward, cf);
    out.c_backward = std::max(out.c_backward, cb);
    out.r = std::max(out.r, rr);
    out.potential_A = std::max(out.potential_A, AA);
    if (leg->blew_up() && !ordered.empty()) {
      const Sample& last = ordered.back();
      if (forward && still_growing(run_cf) && !out.c_forward_violation)
        out.c_forward_violation =
            witness(last, cf, "g(v,Sv)/g(v,v) keeps growing towards the blow-up");
      if (!forward && still_growing(run_cb) && !out.c_backward_violation)
        out.c_backward_violation =
            witness(last, cb, "-g(v,Sv)/g(v,v) keeps growing towards the blow-up");
      if (still_growing(run_r) && !out.r_violation)
        out.r_violation = witness(last, rr, "|X|/(1+d) keeps growing towards the blow-up");
      if (fs.has_V() && still_growing(run_A) && !out.potential_violation)
        out.potential_violation =
            witness(last, AA, "-V/d^2 keeps growing towards the blow-up");
    }
    if (forward)
      fwd_arc = std::move(arc);
    else
      bwd_arc = std::move(arc);
  }

  std::reverse(bwd_arc.begin(), bwd_arc.end());
  out.arc = std::move(bwd_arc);
  for (auto& a : fwd_arc)
    if (out.arc.empty() || a.t > out.arc.back().t) out.arc.push_back(a);
  return out;
}

std::string_view name_of(Theorem t) {
  switch (t) {
    case Theorem::LinearGrowth: return "Thm-A1";
    case Theorem::QuadraticPotential: return "Thm-A02";
    case Theorem::TrajectoryLinear: return "Thm-2.4-trajectory";
    case Theorem::TrajectoryPotential: return "Thm-2.9-trajectory";
    case Theorem::AutonomousPotential: return "Cor-2.12";
    case Theorem::BoundedBelowPotential: return "Prop-G01";
  }
  return "?";
}

std::string_view name_of(Directions d) {
  switch (d) {
    case Directions::None: return "None";
    case Directions::Forward: return "Forward";
    case Directions::Backward: return "Backward";
    case Directions::Both: return "Both";
  }
  return "?";
}

bool covers(Directions have, Directions want) {
  if (want == Directions::None) return true;
  return (!has_forward(want) || has_forward(have)) && (!has_backward(want) || has_backward(have));
}

std::string_view name_of(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "Certified";
    case Verdict::CertifiedHeuristic: return "CertifiedHeuristic";
    case Verdict::NotCertified: return "NotCertified";
  }
  return "?";
}

CompletenessCertificate certify(const TrajectoryProblem& problem, const Region& region, double T,
                                const GridSpec& grid, Directions requested) {
  const auto& chart = problem.chart;
  const auto& fs = problem.forces;
  require_riemannian(chart);

  CompletenessCertificate cert;
  cert.region = region;
  cert.T = T;
  cert.grid = grid;
  cert.requested = requested;
  cert.assumptions.push_back("metric completeness asserted by user");
  cert.assumptions.push_back("sampling-based: valid on the sampled region and window only");
  const bool flat = chart.distance_mode() == DistanceMode::ExactFlat;
  if (!flat) cert.assumptions.push_back("curved-chart distance heuristic");
  if (fs.has_nonsmooth()) cert.assumptions.push_back("non-smooth field: derivatives hold piecewise");

  const bool autonomous = fs.autonomous();
  std::vector<std::optional<Witness>> witnesses;
  auto check = [&](std::string name, bool passed, std::string detail,
                   const std::optional<Witness>& w = std::nullopt) {
    cert.checks.push_back({std::move(name), passed, std::move(detail)});
    if (!passed && w) witnesses.push_back(w);
  };
  auto note_fit = [&](const std::string& key, const GrowthFit& fit) {
    cert.constants["A_T" + key] = fit.A;
    cert.constants["C_T" + key] = fit.C;
    cert.constants["A_T_raw" + key] = fit.A_raw;
    cert.constants["C_T_raw" + key] = fit.C_raw;
  };

  const SBounds sb = bound_S(fs, chart, region, T, grid);
  cert.constants["N_T"] = sb.norm;
  cert.constants["S_sup"] = sb.sup;
  cert.constants["S_inf"] = sb.inf;
  check("S bounded above", sb.upper_bounded(),
        sb.sup_violation ? sb.sup_violation->description : "sup " + fmt(sb.sup), sb.sup_violation);
  check("S bounded below", sb.lower_bounded(),
        sb.inf_violation ? sb.inf_violation->description : "inf " + fmt(sb.inf), sb.inf_violation);
  const Directions s_dirs = from_flags(sb.upper_bounded(), sb.lower_bounded());

  struct Candidate {
    Theorem theorem;
    Directions dirs;
  };
  std::vector<Candidate> candidates;

  if (!fs.has_V()) {
    const GrowthFit fx = fit_linear_growth(fs, chart, region, T, grid);
    note_fit("", fx);
    check("X grows at most linearly", fx.ok(),
          fx.violation ? fx.violation->description
                       : "A_T " + fmt(fx.A) + ", C_T " + fmt(fx.C),
          fx.violation);
    candidates.push_back({Theorem::LinearGrowth, fx.ok() ? s_dirs : Directions::None});
  } else {
    auto minusV = [&](const Vector& p, double t) { return -fs.V_at(p, t); };
    const GrowthFit fv = fit_quadratic_growth(minusV, chart, region, T, grid, autonomous);
    note_fit("", fv);
    check("-V grows at most quadratically", fv.ok(),
          fv.violation ? fv.violation->description : "A_T " + fmt(fv.A) + ", C_T " + fmt(fv.C),
          fv.violation);

    Directions dv_dirs = Directions::Both;
    if (!autonomous) {
      auto dvdt = [&](const Vector& p, double t) { return fs.dVdt_at(p, t); };
      auto mdvdt = [&](const Vector& p, double t) { return -fs.dVdt_at(p, t); };
      auto adVdt = [&](const Vector& p, double t) { return std::abs(fs.dVdt_at(p, t)); };
      const GrowthFit fp = fit_quadratic_growth(dvdt, chart, region, T, grid);
      const GrowthFit fm = fit_quadratic_growth(mdvdt, chart, region, T, grid);
      const GrowthFit fa = fit_quadratic_growth(adVdt, chart, region, T, grid);
      note_fit("[dV/dt]", fp);
      note_fit("[-dV/dt]", fm);
      note_fit("[|dV/dt|]", fa);
      check("dV/dt grows at most quadratically", fp.ok(),
            fp.violation ? fp.violation->description : "A_T " + fmt(fp.A), fp.violation);
      check("-dV/dt grows at most quadratically", fm.ok(),
            fm.violation ? fm.violation->description : "A_T " + fmt(fm.A), fm.violation);
      check("|dV/dt| grows at most quadratically", fa.ok(),
            fa.violation ? fa.violation->description : "A_T " + fmt(fa.A), fa.violation);
      dv_dirs = fa.ok() ? Directions::Both : from_flags(fp.ok(), fm.ok());
    }
    const Directions a02 = fv.ok() ? intersect(s_dirs, dv_dirs) : Directions::None;
    candidates.push_back({Theorem::QuadraticPotential, a02});

    if (!covers(a02, requested)) {
      // V bounded below with |dV/dt| <= alpha0 (V - beta0), F time-independent.
      bool g01 = F_time_independent(fs) && sb.bounded();
      const GrowthFit below = fit_growth(minusV, GrowthKind::Bounded, chart, region, T, grid,
                                         autonomous);
      check("V bounded below", below.ok(),
            below.violation ? below.violation->description : "min V " + fmt(-below.max_value),
            below.violation);
      g01 = g01 && below.ok();
      if (g01) {
        const double vmin = -below.max_value;
        const double beta0 = vmin - 0.05 * std::max(1.0, std::abs(vmin));
        auto ratio = [&](const Vector& p, double t) {
          return std::abs(fs.dVdt_at(p, t)) / (fs.V_at(p, t) - beta0);
        };
        const GrowthFit fr = fit_growth(ratio, GrowthKind::Bounded, chart, region, T, grid,
                                        autonomous);
        cert.constants["beta0"] = beta0;
        cert.constants["alpha0"] = kInflation * std::max(fr.max_value, 0.0);
        check("|dV/dt| <= alpha0 (V - beta0)", fr.ok(),
              fr.violation ? fr.violation->description : "alpha0 " + fmt(fr.max_value),
              fr.violation);
        g01 = fr.ok();
      }
      candidates.push_back({Theorem::BoundedBelowPotential, g01 ? Directions::Both : Directions::None});

      const GrowthFit fx = fit_linear_growth(fs, chart, region, T, grid);
      note_fit("[grad V]", fx);
      check("grad V grows at most linearly", fx.ok(),
            fx.violation ? fx.violation->description : "A_T " + fmt(fx.A), fx.violation);
      candidates.push_back({Theorem::LinearGrowth, fx.ok() ? s_dirs : Directions::None});
    }
  }

  const Candidate* chosen = nullptr;
  for (const auto& c : candidates)
    if (covers(c.dirs, requested)) {
      chosen = &c;
      break;
    }
  if (!chosen) {
    // Report the candidate establishing the most.
    auto rank = [](Directions d) { return d == Directions::Both ? 2 : d == Directions::None ? 0 : 1; };
    for (const auto& c : candidates)
      if (!chosen || rank(c.dirs) > rank(chosen->dirs)) chosen = &c;
  }
  cert.theorem = chosen->theorem;
  cert.direction = chosen->dirs;
  if (chosen->theorem == Theorem::QuadraticPotential && autonomous &&
      chosen->dirs == Directions::Both)
    cert.also.push_back(Theorem::AutonomousPotential);

  if (covers(cert.direction, requested) && cert.direction != Directions::None) {
    cert.verdict = flat ? Verdict::Certified : Verdict::CertifiedHeuristic;
  } else {
    cert.verdict = Verdict::NotCertified;
    std::string reason;
    for (const auto& c : cert.checks)
      if (!c.passed) reason += (reason.empty() ? "" : "; ") + c.name + " fails: " + c.detail;
    if (cert.direction != Directions::None)
      reason += (reason.empty() ? "" : "; ") + std::string("only ") +
                std::string(name_of(cert.direction)) + " completeness is established";
    cert.reason = reason.empty() ? "hypotheses not established" : reason;
    for (const auto& w : witnesses)
      if (w) {
        cert.witness = w;
        break;
      }
  }
  return cert;
}

CompletenessCertificate certify_trajectory(const IntegrationResult& result,
                                           const TrajectoryProblem& problem,
                                           std::optional<Vector> p0,
                                           const DistanceFunction& distance) {
  const auto& fs = problem.forces;
  require_riemannian(problem.chart);
  const auto hyp = check_trajectory_hypotheses(result, problem, p0, distance);

  CompletenessCertificate cert;
  cert.region = Region{p0.value_or(problem.position), 0.0};
  cert.T = std::max(std::abs(problem.t_max - problem.t0), std::abs(problem.t0 - problem.t_min));
  cert.theorem = fs.has_V() ? Theorem::TrajectoryPotential : Theorem::TrajectoryLinear;
  cert.assumptions.push_back("metric completeness asserted by user");
  cert.assumptions.push_back("sampled along the computed trajectory only");
  if (problem.chart.distance_mode() != DistanceMode::ExactFlat && !distance)
    cert.assumptions.push_back("curved-chart distance heuristic");
  cert.constants["c_gamma"] = hyp.c_forward;
  cert.constants["c_gamma_backward"] = hyp.c_backward;
  cert.constants["r_gamma"] = hyp.r;
  if (fs.has_V()) {
    cert.constants["A_T"] = hyp.potential_A;
    cert.constants["C_T"] = hyp.potential_C;
  }

  auto add = [&](std::string name, const std::optional<Witness>& w) {
    cert.checks.push_back({std::move(name), !w, w ? w->description : "holds on samples"});
    if (w && !cert.witness) cert.witness = w;
  };
  const bool autonomous = fs.autonomous();
  cert.checks.push_back({"time-independent fields", autonomous,
                         autonomous ? "yes" : "fields depend on time; lift to M x R first"});
  add("forward S condition", hyp.c_forward_violation);
  add("backward S condition", hyp.c_backward_violation);
  if (fs.has_V())
    add("positively complete quadratic minorant", hyp.potential_violation);
  else
    add("|X| at most linear along the run", hyp.r_violation);
  add("d <= l along the run", hyp.distance_violation);

  const bool field_ok = fs.has_V() ? !hyp.potential_violation : !hyp.r_violation;
  const bool base_ok = autonomous && field_ok && !hyp.distance_violation;
  const bool fwd = base_ok && !hyp.c_forward_violation && !result.forward.blew_up() &&
                   !result.forward.failed();
  const bool bwd = base_ok && !hyp.c_backward_violation && !result.backward.blew_up() &&
                   !result.backward.failed();
  cert.direction = from_flags(fwd, bwd);
  if (cert.direction == Directions::Both) {
    cert.verdict = Verdict::Certified;
  } else {
    cert.verdict = Verdict::NotCertified;
    cert.reason = cert.direction == Directions::None
                      ? "along-trajectory hypotheses fail in both directions"
                      : "only " + std::string(name_of(cert.direction)) + " completeness is supported";
  }
  return cert;
}

double SampledFunction::operator()(double at) const {
  if (t.empty()) return 0.0;
  if (at <= t.front()) return f.front();
  if (at >= t.back()) return f.back();
  const auto it = std::upper_bound(t.begin(), t.end(), at);
  const std::size_t i = static_cast<std::size_t>(it - t.begin());
  const double w = (at - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * f[i - 1] + w * f[i];
}

SampledFunction dominating_solution(const expr::Expression& phi, double f0, double span,
                                    const std::string& variable, std::size_t samples) {
  if (!(span > 0.0) || samples < 2) throw PreconditionError("span must be positive");
  const std::vector<std::string> slots{variable};
  const expr::Program prog(phi, slots);
  auto eval = [&](double s) { return prog(std::span<const double>(&s, 1)); };

  double last_f = f0, last_phi = eval(f0);
  if (!(last_phi > 0.0)) throw PreconditionError("phi must be positive; phi(f0) = " + fmt(last_phi));

  std::string failure;
  ode::Rhs rhs = [&](double, std::span<const double> y, std::span<double> dy) { dy[0] = eval(y[0]); };
  ode::StepObserver obs = [&](const ode::DenseStep&, std::span<const double> y) {
    const double p = eval(y[0]);
    if (!(p > 0.0)) {
      failure = "phi must be positive; phi(" + fmt(y[0]) + ") = " + fmt(p);
      return false;
    }
    if (y[0] >= last_f && p < last_phi - 1e-12 * std::max(1.0, std::abs(last_phi))) {
      failure = "phi must be non-decreasing on the computed values";
      return false;
    }
    last_f = y[0];
    last_phi = p;
    return true;
  };
  ode::Options opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  ode::DenseOutput dense;
  const double y0[] = {f0};
  const auto rep = ode::integrate(rhs, 0.0, span, y0, opt, obs, &dense);
  if (!failure.empty()) throw PreconditionError(failure);
  if (rep.status != ode::Status::Completed)
    throw PreconditionError("comparison solution does not reach the end of the span: " + rep.reason);

  SampledFunction out;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = span * static_cast<double>(k) / static_cast<double>(samples - 1);
    out.t.push_back(t);
    out.f.push_back(dense.evaluate(t)[0]);
  }
  return out;
}

}  // namespace trajkit::analysis

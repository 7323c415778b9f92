#include "trajkit/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace trajkit {

namespace {

constexpr int kMaxDecade = 300;

double sigma(Direction d) { return d == Direction::Forward ? 1.0 : -1.0; }

// State of the reversed or direct system at parameter s, mapped back to the
// original time and velocity orientation.
struct Orientation {
  Direction direction;
  double t0;
  int n;
  double time(double s) const { return t0 + sigma(direction) * s; }
  void split(std::span<const double> y, Vector& p, Vector& v) const {
    p = Eigen::Map<const Vector>(y.data(), n);
    v = sigma(direction) * Eigen::Map<const Vector>(y.data() + n, n);
  }
};

double quadratic_speed(const ManifoldChart& chart, const Vector& p, const Vector& v) {
  return v.dot(chart.raw_metric_at(p) * v);
}

}  // namespace

std::string_view name_of(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

void TrajectoryProblem::validate() const {
  const int n = chart.dim();
  if (forces.dim() != n) throw PreconditionError("force system and chart differ in dimension");
  if (forces.coordinates() != chart.coordinates())
    throw PreconditionError("force system and chart use different coordinate names");
  if (position.size() != n || velocity.size() != n)
    throw PreconditionError("initial data dimensions do not match the chart");
  if (!position.allFinite() || !velocity.allFinite())
    throw PreconditionError("initial data must be finite");
  if (!(std::isfinite(t0) && std::isfinite(t_min) && std::isfinite(t_max)))
    throw PreconditionError("horizon must be finite");
  if (!(t_min <= t0 && t0 <= t_max)) throw PreconditionError("t0 must lie in [t_min, t_max]");
  if (!(tol.rel > 0.0) || !(tol.abs >= 0.0)) throw PreconditionError("invalid tolerances");
  if (samples < 2) throw PreconditionError("at least two samples per run are required");
  if (!(blowup.speed_ceiling > 0.0) || !(blowup.min_step_scale > 0.0))
    throw PreconditionError("invalid blow-up thresholds");
  (void)chart.metric_at(position);
}

double Leg::t_lo() const {
  if (!dense_ || dense_->empty()) return t0_;
  return direction == Direction::Forward ? t0_ : t0_ - dense_->t_end();
}

double Leg::t_hi() const {
  if (!dense_ || dense_->empty()) return t0_;
  return direction == Direction::Forward ? dense_->t_end() : t0_;
}

void Leg::set_dense(double t0, int dim, std::shared_ptr<const ode::DenseOutput> dense) {
  t0_ = t0;
  dim_ = dim;
  dense_ = std::move(dense);
}

std::pair<Vector, Vector> Leg::state(double t) const {
  if (!dense_ || dense_->empty()) {
    if (!samples.empty()) return {samples.front().position, samples.front().velocity};
    throw PreconditionError("leg holds no trajectory");
  }
  const Orientation o{direction, t0_, dim_};
  const double s = sigma(direction) * (t - t0_);
  std::vector<double> y(static_cast<std::size_t>(2 * dim_));
  dense_->evaluate(s, y);
  Vector p, v;
  o.split(y, p, v);
  return {p, v};
}

std::vector<double> Leg::step_times() const {
  std::vector<double> out;
  if (!dense_ || dense_->empty()) return out;
  const Orientation o{direction, t0_, dim_};
  out.push_back(o.time(dense_->t_begin()));
  for (const auto& st : dense_->steps()) out.push_back(o.time(st.t_end()));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Sample> IntegrationResult::samples() const {
  std::vector<Sample> out = backward.samples;
  for (const auto& s : forward.samples) {
    if (!out.empty() && !(s.t > out.back().t)) continue;
    out.push_back(s);
  }
  return out;
}

std::vector<std::pair<double, double>> IntegrationResult::speed_series() const {
  auto out = backward.speed_series;
  for (const auto& s : forward.speed_series) {
    if (!out.empty() && !(s.first > out.back().first)) continue;
    out.push_back(s);
  }
  return out;
}

double detector_speed(const ManifoldChart& chart, const Vector& p, const Vector& v) {
  if (chart.riemannian()) return std::sqrt(std::max(quadratic_speed(chart, p, v), 0.0));
  return v.norm();
}

Vector ode_rhs(const TrajectoryProblem& problem, const Vector& position, const Vector& velocity,
               double t) {
  Vector a = eval_force(problem.forces, problem.chart, position, velocity, t);
  if (problem.chart.distance_mode() != DistanceMode::ExactFlat) {
    a -= problem.chart.christoffel(position).contract(velocity, velocity);
  } else {
    (void)problem.chart.metric_at(position);
  }
  return a;
}

Leg integrate_leg(const TrajectoryProblem& problem, Direction direction) {
  problem.validate();
  const int n = problem.chart.dim();
  const double sg = sigma(direction);
  const Orientation orient{direction, problem.t0, n};
  const double s_end = direction == Direction::Forward ? problem.t_max - problem.t0
                                                       : problem.t0 - problem.t_min;
  const BlowupCriteria& crit = problem.blowup;

  Leg leg;
  leg.direction = direction;

  ode::Rhs rhs = [&](double s, std::span<const double> y, std::span<double> dy) {
    Vector p, v;
    orient.split(y, p, v);
    const Vector a = ode_rhs(problem, p, v, orient.time(s));
    for (int i = 0; i < n; ++i) {
      dy[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(n + i)];
      dy[static_cast<std::size_t>(n + i)] = a[i];
    }
  };

  std::vector<double> y0(static_cast<std::size_t>(2 * n));
  for (int i = 0; i < n; ++i) {
    y0[static_cast<std::size_t>(i)] = problem.position[i];
    y0[static_cast<std::size_t>(n + i)] = sg * problem.velocity[i];
  }

  auto speed_of = [&](std::span<const double> y) {
    Vector p, v;
    orient.split(y, p, v);
    return detector_speed(problem.chart, p, v);
  };

  const double speed0 = speed_of(y0);
  int next_decade = crit.first_decade;
  while (next_decade <= kMaxDecade && std::pow(10.0, next_decade) <= speed0) ++next_decade;

  std::deque<double> recent{speed0};
  bool ceiling_blowup = false;
  std::vector<double> buffer(y0.size());

  // The last two ratios of successive crossing intervals must both show
  // contraction; exponential growth gives ratios near 1.
  auto contracting = [&]() {
    const auto& c = leg.crossings;
    const std::size_t m = c.size();
    if (m < 3) return true;
    const std::size_t ratios = std::min<std::size_t>(2, m - 2);
    for (std::size_t j = 0; j < ratios; ++j) {
      const double d1 = std::abs(c[m - 2 - j].t - c[m - 3 - j].t);
      const double d2 = std::abs(c[m - 1 - j].t - c[m - 2 - j].t);
      if (!(d2 < crit.contraction * d1)) return false;
    }
    return true;
  };

  ode::StepObserver observer = [&](const ode::DenseStep& step, std::span<const double> y) {
    const double speed = speed_of(y);
    recent.push_back(speed);
    if (recent.size() > crit.growth_window + 1) recent.pop_front();

    bool new_crossing = false;
    while (next_decade <= kMaxDecade && speed >= std::pow(10.0, next_decade)) {
      const double threshold = std::pow(10.0, next_decade);
      double lo = step.t_begin(), hi = step.t_end();
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        step.evaluate(mid, buffer);
        if (speed_of(buffer) >= threshold)
          hi = mid;
        else
          lo = mid;
      }
      leg.crossings.push_back({threshold, orient.time(0.5 * (lo + hi))});
      ++next_decade;
      new_crossing = true;
    }
    if (speed > crit.speed_ceiling && (new_crossing || leg.crossings.size() < 3) &&
        contracting()) {
      ceiling_blowup = true;
      return false;
    }
    return true;
  };

  ode::Options opt;
  opt.rel_tol = problem.tol.rel;
  opt.abs_tol = problem.tol.abs;
  opt.min_step_scale = crit.min_step_scale;
  // Fields that vanish identically give a zero error estimate, and the step
  // would otherwise grow until it jumps over a compactly supported force.
  if (s_end > 0.0) opt.max_step = s_end * problem.tol.max_step_fraction;

  auto dense = std::make_shared<ode::DenseOutput>();
  ode::Report report;
  if (s_end > 0.0) {
    report = ode::integrate(rhs, 0.0, s_end, y0, opt, observer, dense.get());
  } else {
    report.t = 0.0;
    report.y = y0;
  }
  leg.accepted_steps = report.accepted;
  leg.rejected_steps = report.rejected;

  const double t_last = orient.time(report.t);
  switch (report.status) {
    case ode::Status::Completed:
      leg.status = ReachedHorizon{};
      break;
    case ode::Status::Stopped:
      leg.status = BlowUp{estimate_blowup(leg.crossings, direction, t_last), t_last};
      break;
    case ode::Status::StepTooSmall: {
      const double grown = recent.front() > 0.0 ? recent.back() / recent.front()
                                                : (recent.back() > 0.0 ? HUGE_VAL : 1.0);
      if (ceiling_blowup || grown >= crit.growth_factor)
        leg.status = BlowUp{estimate_blowup(leg.crossings, direction, t_last), t_last};
      else
        leg.status = StepFailure{t_last, report.reason};
      break;
    }
    case ode::Status::EvaluationFailure:
    case ode::Status::TooManySteps:
      leg.status = StepFailure{t_last, report.reason};
      break;
  }

  // Uniform resampling of the covered parameter range.
  const double s_reached = report.t;
  const std::size_t count = s_reached > 0.0 ? problem.samples : 1;
  leg.samples.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double s = count == 1 ? 0.0
                                : (k + 1 == count ? s_reached
                                                  : s_reached * static_cast<double>(k) /
                                                        static_cast<double>(count - 1));
    std::vector<double> y = dense->empty() ? y0 : dense->evaluate(s);
    Sample smp;
    smp.t = orient.time(s);
    orient.split(y, smp.position, smp.velocity);
    leg.samples.push_back(std::move(smp));
  }
  if (direction == Direction::Backward) std::reverse(leg.samples.begin(), leg.samples.end());
  leg.speed_series.reserve(leg.samples.size());
  for (const auto& smp : leg.samples)
    leg.speed_series.emplace_back(smp.t, quadratic_speed(problem.chart, smp.position, smp.velocity));

  leg.set_dense(problem.t0, n, std::move(dense));
  return leg;
}

IntegrationResult integrate(const TrajectoryProblem& problem) {
  IntegrationResult r;
  r.forward = integrate_leg(problem, Direction::Forward);
  r.backward = integrate_leg(problem, Direction::Backward);
  return r;
}

double estimate_blowup(const std::vector<Crossing>& crossings, Direction direction,
                       double t_last) {
  const double sg = sigma(direction);
  if (crossings.size() < 3) return t_last;
  const std::size_t m = crossings.size();
  const double s1 = sg * crossings[m - 3].t;
  const double s2 = sg * crossings[m - 2].t;
  const double s3 = sg * crossings[m - 1].t;
  const double d1 = s2 - s1, d2 = s3 - s2;
  const double denom = d2 - d1;
  double s_inf = sg * t_last;
  if (denom < 0.0 && std::isfinite(denom)) {
    const double cand = s3 - d2 * d2 / denom;
    if (std::isfinite(cand)) s_inf = std::max(cand, sg * t_last);
  }
  return sg * s_inf;
}

double estimate_blowup(const Leg& leg) {
  const auto* b = std::get_if<BlowUp>(&leg.status);
  if (!b) throw PreconditionError("estimate_blowup requires a leg that blew up");
  return estimate_blowup(leg.crossings, leg.direction, b->t_last);
}

TrajectoryProblem lift_to_product(const TrajectoryProblem& problem, double extra_velocity) {
  problem.validate();
  const ForceSystem& fs = problem.forces;
  const std::string& tau = fs.time_name();
  const int n = fs.dim();

  std::vector<std::string> coords = fs.coordinates();
  coords.push_back(tau);
  std::string fresh = "s";
  while (std::find(coords.begin(), coords.end(), fresh) != coords.end()) fresh += "_";

  const auto& f = fs.fields();
  ForceSystem::Fields lifted;
  const expr::Expression zero = expr::Expression::constant(0.0);
  if (f.F) {
    ExprMatrix F(static_cast<std::size_t>(n + 1), ExprVector(static_cast<std::size_t>(n + 1), zero));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        F[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            (*f.F)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    lifted.F = std::move(F);
  }
  if (f.X) {
    ExprVector X = *f.X;
    X.push_back(zero);
    lifted.X = std::move(X);
  }
  if (f.V) lifted.V = *f.V;

  TrajectoryProblem out{charts::product_with_line(problem.chart, tau),
                        ForceSystem(coords, fresh, std::move(lifted), n),
                        Vector(n + 1),
                        Vector(n + 1)};
  out.position << problem.position, problem.t0;
  out.velocity << problem.velocity, extra_velocity;
  out.t0 = 0.0;
  out.t_min = problem.t_min - problem.t0;
  out.t_max = problem.t_max - problem.t0;
  out.tol = problem.tol;
  out.blowup = problem.blowup;
  out.samples = problem.samples;
  out.name = problem.name.empty() ? std::string("lifted") : problem.name + "-lifted";
  return out;
}

}  // namespace trajkit

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "trajkit/forces.hpp"
#include "trajkit/geometry.hpp"
#include "trajkit/ode.hpp"

namespace trajkit {

struct Tolerances {
  double rel = 1e-10;
  double abs = 1e-12;
  double max_step_fraction = 1.0 / 128;  // of the leg's span
};

// Thresholds of the blow-up detector. A leg is declared blown up when the
// speed passes `speed_ceiling` while the times between successive decade
// crossings contract geometrically (finite accumulation point), or when the
// step size collapses below min_step_scale * max(1, |t|) after the speed grew
// by `growth_factor` over the last `growth_window` accepted steps.
struct BlowupCriteria {
  double speed_ceiling = 1e8;
  double min_step_scale = 1e-13;
  double growth_factor = 10.0;
  std::size_t growth_window = 100;
  int first_decade = 3;
  double contraction = 0.75;
};

struct TrajectoryProblem {
  TrajectoryProblem(ManifoldChart chart_, ForceSystem forces_, Vector position_, Vector velocity_)
      : chart(std::move(chart_)),
        forces(std::move(forces_)),
        position(std::move(position_)),
        velocity(std::move(velocity_)) {}

  ManifoldChart chart;
  ForceSystem forces;
  Vector position;
  Vector velocity;
  double t0 = 0.0;
  double t_min = 0.0;
  double t_max = 1.0;
  Tolerances tol{};
  BlowupCriteria blowup{};
  std::size_t samples = 512;
  std::string name;

  // Throws PreconditionError on inconsistent dimensions or horizon.
  void validate() const;
};

enum class Direction { Forward, Backward };
std::string_view name_of(Direction d);

struct ReachedHorizon {};
struct BlowUp {
  double t_est = 0.0;
  double t_last = 0.0;
};
struct StepFailure {
  double t = 0.0;
  std::string reason;
};
using LegStatus = std::variant<ReachedHorizon, BlowUp, StepFailure>;

struct Sample {
  double t = 0.0;
  Vector position;
  Vector velocity;
};

// Time at which the speed first reached `threshold`.
struct Crossing {
  double threshold = 0.0;
  double t = 0.0;
};

// One integration leg, forward from t0 towards t_max or backward towards
// t_min. All times are in the problem's original time variable.
class Leg {
 public:
  Direction direction = Direction::Forward;
  LegStatus status = ReachedHorizon{};
  std::vector<Sample> samples;                      // ascending in t
  std::vector<std::pair<double, double>> speed_series;  // (t, u = g(v, v))
  std::vector<Crossing> crossings;                  // in order of occurrence
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  bool reached_horizon() const { return std::holds_alternative<ReachedHorizon>(status); }
  bool blew_up() const { return std::holds_alternative<BlowUp>(status); }
  bool failed() const { return std::holds_alternative<StepFailure>(status); }

  // Covered time interval [t_lo, t_hi].
  double t_lo() const;
  double t_hi() const;
  double t0() const { return t0_; }

  // Dense-output state at time t (clamped to the covered interval).
  std::pair<Vector, Vector> state(double t) const;
  // Times of the accepted step boundaries, ascending in t.
  std::vector<double> step_times() const;

  void set_dense(double t0, int dim, std::shared_ptr<const ode::DenseOutput> dense);

 private:
  double t0_ = 0.0;
  int dim_ = 0;
  std::shared_ptr<const ode::DenseOutput> dense_;
};

struct IntegrationResult {
  Leg forward;
  Leg backward;

  // Backward samples then forward samples, strictly ascending in t.
  std::vector<Sample> samples() const;
  std::vector<std::pair<double, double>> speed_series() const;
  bool any_blowup() const { return forward.blew_up() || backward.blew_up(); }
  bool any_failure() const { return forward.failed() || backward.failed(); }
};

// Speed used by the detector: sqrt(g(v, v)) on Riemannian charts, the
// coordinate norm of v on pseudo-Riemannian ones.
double detector_speed(const ManifoldChart& chart, const Vector& p, const Vector& v);

// Coordinate acceleration a^i = -Gamma^i_jk v^j v^k + F^i_j v^j + X^i.
Vector ode_rhs(const TrajectoryProblem& problem, const Vector& position, const Vector& velocity,
               double t);

Leg integrate_leg(const TrajectoryProblem& problem, Direction direction);
IntegrationResult integrate(const TrajectoryProblem& problem);

// Aitken-accelerated limit of the last three decade crossings, never earlier
// than t_last; t_last itself when fewer than three crossings exist. Throws
// PreconditionError unless the leg blew up.
double estimate_blowup(const Leg& leg);
double estimate_blowup(const std::vector<Crossing>& crossings, Direction direction, double t_last);

// Product lift to M x R with metric g + dtau^2: the time variable becomes the
// extra coordinate, F and X are extended by zero, the initial data gain
// (t0, extra_velocity), and the lifted time starts at 0.
TrajectoryProblem lift_to_product(const TrajectoryProblem& problem, double extra_velocity = 1.0);

}  // namespace trajkit

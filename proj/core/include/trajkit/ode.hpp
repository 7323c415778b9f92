#pragma once

// Dormand-Prince 5(4) with PI step-size control and the classical
// 4th-order continuous extension (Hairer, Norsett & Wanner, DOPRI5).
// Integrates forward in the independent variable only.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace trajkit::ode {

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double initial_step = 0.0;  // 0 selects automatically
  double max_step = std::numeric_limits<double>::infinity();
  double min_step_scale = 1e-13;  // h_min = scale * max(1, |t|)
  std::size_t max_steps = 5'000'000;
};

// Dense output of one accepted step.
class DenseStep {
 public:
  DenseStep() = default;
  DenseStep(double t0, double h, std::vector<double> coefficients);

  double t_begin() const { return t0_; }
  double t_end() const { return t0_ + h_; }
  double h() const { return h_; }
  std::size_t size() const { return coeff_.size() / 5; }

  void evaluate(double t, std::span<double> out) const;
  double component(double t, std::size_t i) const;

 private:
  double t0_ = 0.0;
  double h_ = 0.0;
  std::vector<double> coeff_;
};

class DenseOutput {
 public:
  void append(DenseStep step) { steps_.push_back(std::move(step)); }
  bool empty() const { return steps_.empty(); }
  double t_begin() const { return steps_.front().t_begin(); }
  double t_end() const { return steps_.back().t_end(); }
  const std::vector<DenseStep>& steps() const { return steps_; }
  std::size_t dimension() const { return steps_.empty() ? 0 : steps_.front().size(); }

  // Clamps t to the covered interval.
  void evaluate(double t, std::span<double> out) const;
  std::vector<double> evaluate(double t) const;
  const DenseStep& step_at(double t) const;

 private:
  std::vector<DenseStep> steps_;
};

enum class Status { Completed, Stopped, StepTooSmall, EvaluationFailure, TooManySteps };

struct Report {
  Status status = Status::Completed;
  double t = 0.0;
  std::vector<double> y;
  std::string reason;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double last_step = 0.0;
};

// Called after every accepted step with that step's dense output and the
// new state; returning false ends the integration with Status::Stopped.
using StepObserver = std::function<bool(const DenseStep& step, std::span<const double> y)>;

Report integrate(const Rhs& rhs, double t0, double t_end, std::span<const double> y0,
                 const Options& options, const StepObserver& observer = {},
                 DenseOutput* dense = nullptr);

}  // namespace trajkit::ode

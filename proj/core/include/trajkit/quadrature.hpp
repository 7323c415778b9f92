#pragma once

#include <cstddef>
#include <functional>

namespace trajkit::quadrature {

struct Estimate {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// A single 7-point Gauss / 15-point Kronrod rule on [a, b].
Estimate gauss_kronrod15(const std::function<double(double)>& f, double a, double b);

struct AdaptiveOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  std::size_t max_intervals = 4000;
};

// Globally adaptive bisection driven by the Kronrod-Gauss difference of the
// worst interval. Finite intervals only; improper integrals are mapped by
// the caller.
Estimate integrate(const std::function<double(double)>& f, double a, double b,
                   const AdaptiveOptions& options = {});

}  // namespace trajkit::quadrature

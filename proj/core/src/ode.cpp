#include "trajkit/ode.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace trajkit::ode {

namespace {

// Butcher tableau.
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kMinShrink = 0.2;  // h_new >= 0.2 h
constexpr double kMaxGrow = 10.0;   // h_new <= 10 h

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

DenseStep::DenseStep(double t0, double h, std::vector<double> coefficients)
    : t0_(t0), h_(h), coeff_(std::move(coefficients)) {}

void DenseStep::evaluate(double t, std::span<double> out) const {
  const std::size_t n = size();
  const double theta = (t - t0_) / h_;
  const double theta1 = 1.0 - theta;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = coeff_[i] +
             theta * (coeff_[n + i] +
                      theta1 * (coeff_[2 * n + i] +
                                theta * (coeff_[3 * n + i] + theta1 * coeff_[4 * n + i])));
  }
}

double DenseStep::component(double t, std::size_t i) const {
  const std::size_t n = size();
  const double theta = (t - t0_) / h_;
  const double theta1 = 1.0 - theta;
  return coeff_[i] +
         theta * (coeff_[n + i] +
                  theta1 * (coeff_[2 * n + i] +
                            theta * (coeff_[3 * n + i] + theta1 * coeff_[4 * n + i])));
}

const DenseStep& DenseOutput::step_at(double t) const {
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                             [](double value, const DenseStep& s) { return value < s.t_end(); });
  if (it == steps_.end()) return steps_.back();
  return *it;
}

void DenseOutput::evaluate(double t, std::span<double> out) const {
  const double tc = std::clamp(t, t_begin(), t_end());
  step_at(tc).evaluate(tc, out);
}

std::vector<double> DenseOutput::evaluate(double t) const {
  std::vector<double> out(dimension());
  evaluate(t, out);
  return out;
}

Report integrate(const Rhs& rhs, double t0, double t_end, std::span<const double> y0,
                 const Options& opt, const StepObserver& observer, DenseOutput* dense) {
  const std::size_t n = y0.size();
  Report report;
  report.t = t0;
  report.y.assign(y0.begin(), y0.end());
  if (!(t_end > t0)) return report;

  std::vector<double> y(y0.begin(), y0.end()), ynew(n), ytmp(n), err(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  auto eval = [&](double t, std::span<const double> state, std::span<double> out) {
    rhs(t, state, out);
    if (!all_finite(out)) throw std::domain_error("non-finite right-hand side");
  };

  try {
    eval(t0, y, k1);
  } catch (const std::exception& ex) {
    report.status = Status::EvaluationFailure;
    report.reason = ex.what();
    return report;
  }

  auto scale = [&](double a, double b) {
    return opt.abs_tol + opt.rel_tol * std::max(std::abs(a), std::abs(b));
  };

  double t = t0;
  double h = opt.initial_step;
  if (!(h > 0.0)) {
    // Starting step heuristic of DOPRI5.
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = scale(y[i], y[i]);
      dnf += (k1[i] / sk) * (k1[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, opt.max_step);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k1[i];
    double der2 = 0.0;
    try {
      eval(t + h, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) {
        const double sk = scale(y[i], y[i]);
        der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
      }
      der2 = std::sqrt(der2) / h;
    } catch (const std::exception&) {
      der2 = 1.0 / (h * h);
    }
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100.0 * h, h1, opt.max_step});
  }
  h = std::min(h, t_end - t0);

  double facold = 1e-4;
  bool last_rejected = false;
  std::string last_failure;

  while (true) {
    if (report.accepted + report.rejected >= opt.max_steps) {
      report.status = Status::TooManySteps;
      report.reason = "step budget exhausted";
      break;
    }
    const double h_min = opt.min_step_scale * std::max(1.0, std::abs(t));
    if (h < h_min) {
      report.status = Status::StepTooSmall;
      report.reason = last_failure.empty() ? "step size below minimum" : last_failure;
      break;
    }
    bool last = false;
    if (t + 1.01 * h >= t_end) {
      h = t_end - t;
      last = true;
    }

    double errnorm = 0.0;
    bool stage_ok = true;
    try {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
      eval(t + c2 * h, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      eval(t + c3 * h, ytmp, k3);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      eval(t + c4 * h, ytmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      eval(t + c5 * h, ytmp, k5);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      eval(t + h, ytmp, k6);
      for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      eval(t + h, ynew, k7);
      for (std::size_t i = 0; i < n; ++i) {
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sk = scale(y[i], ynew[i]);
        errnorm += (err[i] / sk) * (err[i] / sk);
      }
      errnorm = std::sqrt(errnorm / static_cast<double>(n));
      if (!std::isfinite(errnorm)) throw std::domain_error("non-finite error estimate");
    } catch (const std::exception& ex) {
      stage_ok = false;
      last_failure = ex.what();
    }

    if (!stage_ok) {
      ++report.rejected;
      last_rejected = true;
      h *= 0.25;
      continue;
    }

    const double fac11 = std::pow(errnorm, kExpo);
    if (errnorm <= 1.0) {
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxGrow, 1.0 / kMinShrink);
      double hnew = h / fac;
      facold = std::max(errnorm, 1e-4);

      std::vector<double> coeff(5 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        coeff[i] = y[i];
        coeff[n + i] = ydiff;
        coeff[2 * n + i] = bspl;
        coeff[3 * n + i] = ydiff - h * k7[i] - bspl;
        coeff[4 * n + i] =
            h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      DenseStep step(t, h, std::move(coeff));

      ++report.accepted;
      report.last_step = h;
      t = last ? t_end : t + h;
      y.swap(ynew);
      k1.swap(k7);
      last_failure.clear();

      bool keep_going = true;
      if (observer) keep_going = observer(step, y);
      if (dense) dense->append(std::move(step));
      if (!keep_going) {
        report.status = Status::Stopped;
        break;
      }
      if (last) {
        report.status = Status::Completed;
        break;
      }
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, opt.max_step);
    } else {
      ++report.rejected;
      last_rejected = true;
      h /= std::min(1.0 / kMinShrink, fac11 / kSafety);
      last_failure = "local error above tolerance";
    }
  }

  report.t = t;
  report.y = y;
  return report;
}

}  // namespace trajkit::ode

#include "trajkit/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace trajkit::quadrature {

namespace {

// Kronrod abscissae in [0, 1); odd indices are the Gauss-7 nodes.
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr std::array<double, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double a, b;
  Estimate est;
  bool operator<(const Piece& o) const { return est.error < o.est.error; }
};

}  // namespace

Estimate gauss_kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrod[7];
  double gauss = fc * kGauss[3];
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = half * kNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrod[i] * sum;
    if (i % 2 == 1) gauss += kGauss[i / 2] * sum;
  }
  Estimate est;
  est.value = kronrod * half;
  est.error = std::abs((kronrod - gauss) * half);
  est.evaluations = 15;
  est.converged = true;
  return est;
}

Estimate integrate(const std::function<double(double)>& f, double a, double b,
                   const AdaptiveOptions& options) {
  if (a == b) return Estimate{0.0, 0.0, 0, true};
  std::priority_queue<Piece> queue;
  Estimate first = gauss_kronrod15(f, a, b);
  double total = first.value;
  double error = first.error;
  std::size_t evaluations = first.evaluations;
  queue.push({a, b, first});
  auto tolerance = [&] { return std::max(options.abs_tol, options.rel_tol * std::abs(total)); };

  while (error > tolerance() && queue.size() < options.max_intervals) {
    Piece worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Interval cannot be split further in floating point.
      queue.push(worst);
      break;
    }
    Estimate left = gauss_kronrod15(f, worst.a, mid);
    Estimate right = gauss_kronrod15(f, mid, worst.b);
    evaluations += left.evaluations + right.evaluations;
    total += left.value + right.value - worst.est.value;
    error += left.error + right.error - worst.est.error;
    queue.push({worst.a, mid, left});
    queue.push({mid, worst.b, right});
  }

  // Re-sum to shed the drift of the running updates.
  double value = 0.0;
  double err = 0.0;
  while (!queue.empty()) {
    value += queue.top().est.value;
    err += queue.top().est.error;
    queue.pop();
  }
  Estimate out;
  out.value = value;
  out.error = err;
  out.evaluations = evaluations;
  out.converged = err <= std::max(options.abs_tol, options.rel_tol * std::abs(value));
  return out;
}

}  // namespace trajkit::quadrature

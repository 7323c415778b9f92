#pragma once

// Sampling-based checks of completeness hypotheses. Every result is relative
// to the sampled region and time window; nothing here is a proof.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajkit/dynamics.hpp"

namespace trajkit::analysis {

// Ball of coordinate points p0 + r e, |e|_g(p0) = 1, r <= radius.
struct Region {
  Vector p0;
  double radius = 10.0;
};

struct GridSpec {
  int shells = 64;      // radial shells (even)
  int directions = 32;  // 2 in one dimension
  int times = 33;       // slices of [-T, T]; autonomous fields use one
  std::uint64_t seed = 20240917;

  // Half the sampling stride: twice as many shells, directions and slices.
  GridSpec refined() const;
};

struct Witness {
  Vector point;
  double time = 0.0;
  double value = 0.0;
  std::string description;
};

enum class GrowthKind { Bounded, Linear, Quadratic };
std::string_view name_of(GrowthKind kind);
int power_of(GrowthKind kind);

struct GrowthFit {
  GrowthKind kind = GrowthKind::Linear;
  Vector p0;
  double T = 0.0;
  double radius = 0.0;
  double A = 0.0;  // inflated by 5%
  double C = 0.0;
  double A_raw = 0.0;
  double C_raw = 0.0;
  double max_value = 0.0;
  std::size_t samples = 0;
  std::size_t skipped = 0;  // grid points outside the fields' domain
  bool exact_distance = true;
  std::optional<Witness> violation;

  bool ok() const { return !violation; }
};

using ScalarField = std::function<double(const Vector& p, double t)>;

// Fit U(p, t) <= A d(p, p0)^k + C over region x [-T, T] (k from `kind`) and
// flag a violation when the shell envelope grows faster than r^k.
GrowthFit fit_growth(const ScalarField& U, GrowthKind kind, const ManifoldChart& chart,
                     const Region& region, double T, const GridSpec& grid = {},
                     bool autonomous = false);

// |X|_g of the external field (X or -grad V).
GrowthFit fit_linear_growth(const ForceSystem& system, const ManifoldChart& chart,
                            const Region& region, double T, const GridSpec& grid = {});
GrowthFit fit_linear_growth(const ScalarField& norm_of_X, const ManifoldChart& chart,
                            const Region& region, double T, const GridSpec& grid = {},
                            bool autonomous = false);
GrowthFit fit_quadratic_growth(const ScalarField& U, const ManifoldChart& chart,
                               const Region& region, double T, const GridSpec& grid = {},
                               bool autonomous = false);

struct SBounds {
  double inf = 0.0;   // min over samples of the smallest eigenvalue of S
  double sup = 0.0;   // max over samples of the largest one
  double norm = 0.0;  // N_T = max(|inf|, |sup|)
  std::optional<Witness> sup_violation;  // S not bounded above on the samples
  std::optional<Witness> inf_violation;  // S not bounded below
  std::size_t samples = 0;

  bool upper_bounded() const { return !sup_violation; }
  bool lower_bounded() const { return !inf_violation; }
  bool bounded() const { return upper_bounded() && lower_bounded(); }
};

// Extremes of g(v, S v) over g-unit v, computed exactly per sample as the
// generalized eigenvalues of (g S, g). A system without F gives zeros.
SBounds bound_S(const ForceSystem& system, const ManifoldChart& chart, const Region& region,
                double T, const GridSpec& grid = {});

enum class CompletenessVerdict { SufficientQuadratic, NumericallyDivergent, Inconclusive };
std::string_view name_of(CompletenessVerdict v);

struct PositiveCompleteness {
  CompletenessVerdict verdict = CompletenessVerdict::Inconclusive;
  bool heuristic = true;
  double alpha = 0.0;
  double A = 0.0;  // quadratic fit -V0 <= A s^2 + C when it holds
  double C = 0.0;
  std::vector<double> levels;     // S_j
  std::vector<double> integrals;  // I(S_j)
};

// Decides numerically whether V0 (an expression in `variable`) is
// positively complete on [0, s_max]. Throws PreconditionError when the
// samples are not non-increasing.
PositiveCompleteness positively_complete_check(const expr::Expression& V0,
                                               const std::string& variable = "s",
                                               double s_max = 1e3);

struct EnergyResidual {
  double max_abs = 0.0;
  double scale = 0.0;  // max |du/dt| (term magnitudes on pseudo-Riemannian charts)
  double relative = 0.0;  // max_abs / max(scale, 1)
  double worst_t = 0.0;
  std::size_t points = 0;
};

struct TimeWindow {
  double lo = -HUGE_VAL;
  double hi = HUGE_VAL;
};

// Residual of d/dt(u/2 + V) = g(v, S v) + dV/dt (with V) or
// d/dt(u/2) = g(v, S v) + g(v, X) (with X), by 4th-order central differences
// of the dense output at the accepted steps' midpoints. Blown-up legs are
// truncated at 90% of their span unless a window is given.
EnergyResidual energy_residual(const Leg& leg, const TrajectoryProblem& problem,
                               std::optional<TimeWindow> window = std::nullopt);
EnergyResidual energy_residual(const IntegrationResult& result, const TrajectoryProblem& problem,
                               std::optional<TimeWindow> window = std::nullopt);

using DistanceFunction = std::function<double(const Vector& p, const Vector& q)>;

struct ArcPoint {
  double t = 0.0;
  double distance = 0.0;  // d(gamma(t), p0)
  double length = 0.0;    // l(t) = d(gamma(t0), p0) + arc length from t0
};

struct TrajectoryHypotheses {
  double c_forward = 0.0;   // sup g(v,Sv)/g(v,v), at least 0
  double c_backward = 0.0;  // sup -g(v,Sv)/g(v,v), at least 0
  double r = 0.0;           // sup |X| / (1 + d)
  double potential_A = 0.0; // -V(gamma) <= A d^2 + C along the run
  double potential_C = 0.0;
  std::vector<ArcPoint> arc;
  std::optional<Witness> c_forward_violation;
  std::optional<Witness> c_backward_violation;
  std::optional<Witness> r_violation;
  std::optional<Witness> potential_violation;
  std::optional<Witness> distance_violation;  // d > l somewhere
};

// Constants of the along-trajectory hypotheses and the distance bound
// d(gamma(t), p0) <= l(t). `distance` replaces chart_distance when given
// (closed forms on curved charts). Constants whose running maximum still
// doubles over the last quarter of a blown-up leg are reported as violations.
TrajectoryHypotheses check_trajectory_hypotheses(const IntegrationResult& result,
                                                 const TrajectoryProblem& problem,
                                                 std::optional<Vector> p0 = std::nullopt,
                                                 const DistanceFunction& distance = {});

enum class Theorem {
  LinearGrowth,
  QuadraticPotential,
  TrajectoryLinear,
  TrajectoryPotential,
  AutonomousPotential,
  BoundedBelowPotential
};
std::string_view name_of(Theorem t);

enum class Directions { None, Forward, Backward, Both };
std::string_view name_of(Directions d);
bool covers(Directions have, Directions want);

enum class Verdict { Certified, CertifiedHeuristic, NotCertified };
std::string_view name_of(Verdict v);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CompletenessCertificate {
  std::optional<Theorem> theorem;
  std::vector<Theorem> also;
  Directions direction = Directions::None;
  Directions requested = Directions::Both;
  std::map<std::string, double> constants;
  std::vector<std::string> assumptions;
  std::vector<Check> checks;
  Verdict verdict = Verdict::NotCertified;
  std::string reason;
  std::optional<Witness> witness;
  Region region;
  double T = 0.0;
  GridSpec grid;
};

// Region-relative certificate for the problem's force system. Throws
// PreconditionError on pseudo-Riemannian charts.
CompletenessCertificate certify(const TrajectoryProblem& problem, const Region& region, double T,
                                const GridSpec& grid = {},
                                Directions requested = Directions::Both);

// Certificate from the along-trajectory hypotheses of a computed run.
CompletenessCertificate certify_trajectory(const IntegrationResult& result,
                                           const TrajectoryProblem& problem,
                                           std::optional<Vector> p0 = std::nullopt,
                                           const DistanceFunction& distance = {});

struct SampledFunction {
  std::vector<double> t;
  std::vector<double> f;
  double operator()(double at) const;  // linear interpolation
};

// Solution of f' = phi(f), f(0) = f0 on [0, span], sampled at `samples`
// points. Throws PreconditionError if phi is non-positive or decreasing on
// the computed values.
SampledFunction dominating_solution(const expr::Expression& phi, double f0, double span,
                                    const std::string& variable = "s", std::size_t samples = 512);

}  // namespace trajkit::analysis

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajkit/dynamics.hpp"

namespace trajkit::scenarios {

using Params = std::map<std::string, std::string, std::less<>>;

class ScenarioError : public Error {
 public:
  enum class Kind { UnknownName, InvalidParameter };
  ScenarioError(Kind kind, std::string what) : Error(std::move(what)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ScenarioInfo {
  std::string name;
  std::string summary;
  // Accepted parameters with their defaults.
  std::vector<std::pair<std::string, std::string>> parameters;
};

const std::vector<ScenarioInfo>& catalog();

// Assembled problem for a built-in scenario. Parameter values are numbers,
// except where the catalog documents expressions (plane-wave coefficients
// in u, pp-wave profiles in x, y, u, chart names).
TrajectoryProblem builtin(std::string_view name, const Params& params = {});

struct PpWaveSpec {
  enum class Kind { Generic, PlaneWave };
  Kind kind = Kind::Generic;
  expr::Expression H;  // in x, y, u
  std::optional<expr::Expression> f11, f22, f12;

  static PpWaveSpec generic(expr::Expression H);
  // H = f11(u) x^2 - f22(u) y^2 + 2 f12(u) x y.
  static PpWaveSpec plane_wave(expr::Expression f11, expr::Expression f22, expr::Expression f12);
};

struct ReducedInit {
  Vector position = (Vector(2) << 1.0, 0.0).finished();
  Vector velocity = Vector::Zero(2);
  double u0 = 0.0;
  double u_min = 0.0;
  double u_max = 50.0;
};

// Euclidean R^2 in (x, y) with time u, F = 0 and V = -H/2.
TrajectoryProblem ppwave_reduce(const PpWaveSpec& spec, const ReducedInit& init = {});

// Geodesic problem on the chart (x, y, u, v) with parameter s. Position and
// velocity are 4-vectors.
TrajectoryProblem ppwave_full(const PpWaveSpec& spec, const Vector& position,
                              const Vector& velocity, double s_min, double s_max);

// The 4D problem whose (x, y) components reproduce `reduced` at equal u:
// u(0) = u0, du/ds = u_dot (nonzero), v(0) = 0 and dv/ds from the null
// condition. The parameter range covers the reduced horizon.
TrajectoryProblem ppwave_full_from(const PpWaveSpec& spec, const ReducedInit& reduced,
                                   double u_dot = 1.0);

enum class OracleKind { Ex1, Ex2 };
std::optional<OracleKind> oracle_kind(std::string_view name);

// Blow-up time of the optimality examples from x(0) = 1: Ex2 is 1/eps in
// closed form, Ex1 the improper integral of 1/sqrt(s^(2+2 eps) - 1) over
// [1, inf) by adaptive Gauss-Kronrod quadrature. Throws PreconditionError
// when eps <= 0.
double blowup_oracle(OracleKind kind, double eps);

}  // namespace trajkit::scenarios

#include "trajkit/scenarios.hpp"

#include <cmath>
#include <set>

#include "trajkit/quadrature.hpp"

namespace trajkit::scenarios {

namespace {

using expr::BinaryOp;
using expr::Expression;
using expr::UnaryOp;

Expression num(double v) { return Expression::constant(v); }
Expression var(const char* name) { return Expression::variable(name); }
Expression power(const Expression& base, double p) {
  return Expression::binary(BinaryOp::Pow, base, num(p));
}
Expression abs_of(const Expression& e) { return Expression::unary(UnaryOp::Abs, e); }

// Branch-free pieces of the extension below x = 1: b = max(x, 1) and
// m = min(x - 1, 0).
Expression upper_part(const Expression& x) { return (x + num(1) + abs_of(x - num(1))) / num(2); }
Expression lower_part(const Expression& x) { return (x - num(1) - abs_of(x - num(1))) / num(2); }

// b^p continued below x = 1 by its Taylor polynomial at 1 of the given
// order (2 or 3), so that the result is C^order at x = 1.
Expression continued_power(const Expression& x, double p, int order) {
  const Expression b = upper_part(x);
  const Expression m = lower_part(x);
  Expression e = power(b, p) + num(p) * m + num(p * (p - 1) / 2) * power(m, 2);
  if (order >= 3) e = e + num(p * (p - 1) * (p - 2) / 6) * power(m, 3);
  return e;
}

class Reader {
 public:
  Reader(std::string scenario, const Params& params, std::vector<std::string> allowed)
      : scenario_(std::move(scenario)), params_(params), allowed_(allowed.begin(), allowed.end()) {
    for (const auto& [key, value] : params_) {
      if (!allowed_.count(key)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ScenarioError(ScenarioError::Kind::InvalidParameter,
                            "scenario '" + scenario_ + "' has no parameter '" + key +
                                "' (accepted: " + (list.empty() ? "none" : list) + ")");
      }
    }
  }

  double number(const std::string& key, double fallback) const {
    auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    try {
      expr::ParseOptions opt;
      opt.variables = std::vector<std::string>{};
      const double v = expr::parse(it->second, opt).evaluate({});
      if (!std::isfinite(v)) throw Error("not finite");
      return v;
    } catch (const Error& ex) {
      throw ScenarioError(ScenarioError::Kind::InvalidParameter,
                          "parameter '" + key + "' of scenario '" + scenario_ +
                              "' must be a number, got '" + it->second + "': " + ex.what());
    }
  }

  Expression expression(const std::string& key, const std::string& fallback,
                        std::vector<std::string> variables) const {
    auto it = params_.find(key);
    const std::string& src = it == params_.end() ? fallback : it->second;
    try {
      expr::ParseOptions opt;
      opt.variables = std::move(variables);
      return expr::parse(src, opt);
    } catch (const Error& ex) {
      throw ScenarioError(ScenarioError::Kind::InvalidParameter,
                          "parameter '" + key + "' of scenario '" + scenario_ + "': " + ex.what());
    }
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }

  [[noreturn]] void invalid(const std::string& what) const {
    throw ScenarioError(ScenarioError::Kind::InvalidParameter,
                        "scenario '" + scenario_ + "': " + what);
  }

 private:
  std::string scenario_;
  const Params& params_;
  std::set<std::string> allowed_;
};

TrajectoryProblem line_problem(std::string name, ForceSystem::Fields fields, double x0, double v0,
                               double t_min, double t_max) {
  TrajectoryProblem p{charts::euclidean(1), ForceSystem({"x"}, "t", std::move(fields)),
                      Vector::Constant(1, x0), Vector::Constant(1, v0)};
  p.t0 = 0.0;
  p.t_min = t_min;
  p.t_max = t_max;
  p.name = std::move(name);
  return p;
}

double positive_eps(const Reader& r) {
  const double eps = r.number("eps", 1.0);
  if (!(eps > 0.0)) r.invalid("eps must be positive");
  return eps;
}

ManifoldChart chart_named(const Reader& r, const std::string& name) {
  if (name == "euclidean") return charts::euclidean(2);
  if (name == "polar") return charts::polar();
  if (name == "hyperbolic") return charts::hyperbolic();
  r.invalid("unknown chart '" + name + "' (accepted: euclidean, polar, hyperbolic)");
}

// Initial data of the planar chart scenarios.
void planar_initial(const std::string& chart, Vector& p, Vector& v) {
  p.resize(2);
  v.resize(2);
  if (chart == "polar") {
    p << 1.0, 0.0;
    v << 0.3, 1.0;
  } else if (chart == "hyperbolic") {
    p << 0.0, 1.0;
    v << 0.04, 0.03;
  } else {
    p << 0.0, 0.0;
    v << 1.0, 0.5;
  }
}

TrajectoryProblem make_ex1(const Params& params) {
  Reader r("ex1", params, {"eps", "potential", "x0", "v0"});
  const double eps = positive_eps(r);
  const double mode = r.number("potential", 0.0);
  const Expression x = var("x");
  ForceSystem::Fields f;
  if (mode == 0.0) {
    f.X = ExprVector{num(1 + eps) * continued_power(x, 1 + 2 * eps, 2)};
  } else if (mode == 1.0) {
    f.V = num(-0.5) * continued_power(x, 2 + 2 * eps, 3);
  } else {
    r.invalid("potential must be 0 or 1");
  }
  return line_problem("ex1", std::move(f), r.number("x0", 1.0), r.number("v0", 0.0), -10.0, 10.0);
}

TrajectoryProblem make_ex2(const Params& params) {
  Reader r("ex2", params, {"eps", "x0", "v0"});
  const double eps = positive_eps(r);
  ForceSystem::Fields f;
  f.F = ExprMatrix{{num(1 + eps) * continued_power(var("x"), eps, 2)}};
  return line_problem("ex2", std::move(f), r.number("x0", 1.0), r.number("v0", 1.0), -10.0, 10.0);
}

TrajectoryProblem make_ex3(const Params& params) {
  Reader r("ex3", params, {"x0", "v0"});
  ForceSystem::Fields f;
  f.F = ExprMatrix{{-abs_of(var("x"))}};
  return line_problem("ex3", std::move(f), r.number("x0", 2.0), r.number("v0", -2.0), -2.0, 100.0);
}

TrajectoryProblem make_spring(const Params& params) {
  Reader r("linear-spring", params, {"k", "x0", "v0"});
  const double k = r.number("k", 1.0);
  ForceSystem::Fields f;
  f.V = num(-k / 2) * power(var("x"), 2);
  return line_problem("linear-spring", std::move(f), r.number("x0", 1.0), r.number("v0", 0.0),
                      0.0, 20.0);
}

TrajectoryProblem make_magnetic(const Params& params) {
  Reader r("magnetic-2d", params, {"B", "chart"});
  const double B = r.number("B", 1.0);
  const std::string chart = r.text("chart", "euclidean");
  ManifoldChart mc = chart_named(r, chart);
  ForceSystem::Fields f;
  if (chart == "polar") {
    // g^-1 of the area form B r dr ^ dtheta.
    f.F = ExprMatrix{{num(0), num(B) * var("r")}, {num(-B) / var("r"), num(0)}};
  } else {
    f.F = ExprMatrix{{num(0), num(B)}, {num(-B), num(0)}};
  }
  TrajectoryProblem p{mc, ForceSystem(mc.coordinates(), "t", std::move(f)), Vector(), Vector()};
  planar_initial(chart, p.position, p.velocity);
  p.t_min = 0.0;
  p.t_max = 100.0;
  p.name = "magnetic-2d";
  return p;
}

TrajectoryProblem make_geodesic(const Params& params) {
  Reader r("geodesic", params, {"chart"});
  const std::string chart = r.text("chart", "euclidean");
  ManifoldChart mc = chart_named(r, chart);
  TrajectoryProblem p{mc, ForceSystem(mc.coordinates(), "t", {}), Vector(), Vector()};
  planar_initial(chart, p.position, p.velocity);
  p.t_min = 0.0;
  p.t_max = 100.0;
  p.name = "geodesic";
  return p;
}

TrajectoryProblem make_planewave(const Params& params) {
  Reader r("planewave", params, {"f11", "f22", "f12", "x0", "y0", "vx0", "vy0"});
  const std::vector<std::string> u{"u"};
  auto spec = PpWaveSpec::plane_wave(r.expression("f11", "1", u), r.expression("f22", "1", u),
                                     r.expression("f12", "0", u));
  ReducedInit init;
  init.position << r.number("x0", 1.0), r.number("y0", 0.5);
  init.velocity << r.number("vx0", 0.0), r.number("vy0", 0.0);
  auto p = ppwave_reduce(spec, init);
  p.name = "planewave";
  return p;
}

TrajectoryProblem make_ppwave(const Params& params) {
  Reader r("ppwave", params, {"H", "reduced", "x0", "y0", "vx0", "vy0", "udot"});
  auto spec = PpWaveSpec::generic(r.expression("H", "x^2 - y^2", {"x", "y", "u"}));
  ReducedInit init;
  init.position << r.number("x0", 1.0), r.number("y0", 0.5);
  init.velocity << r.number("vx0", 0.0), r.number("vy0", 0.0);
  const double reduced = r.number("reduced", 0.0);
  TrajectoryProblem p = [&] {
    if (reduced == 1.0) return ppwave_reduce(spec, init);
    if (reduced != 0.0) r.invalid("reduced must be 0 or 1");
    const double udot = r.number("udot", 1.0);
    if (udot == 0.0) r.invalid("udot must be nonzero");
    return ppwave_full_from(spec, init, udot);
  }();
  p.name = "ppwave";
  return p;
}

TrajectoryProblem make_compact(const Params& params) {
  Reader r("compact-support", params, {"a"});
  const double a = r.number("a", 1.0);
  const Expression x = var("x"), y = var("y");
  const Expression q = num(1) - x * x - y * y;
  // (max(0, 1 - |p|^2))^2: C^1, supported in the unit disc.
  const Expression bump = power((q + abs_of(q)) / num(2), 2);
  ForceSystem::Fields f;
  f.F = ExprMatrix{{num(a) * bump, num(2 * a) * bump}, {num(-2 * a) * bump, num(-a) * bump}};
  f.X = ExprVector{num(3 * a) * bump, num(a) * bump};
  ManifoldChart mc = charts::euclidean(2);
  TrajectoryProblem p{mc, ForceSystem(mc.coordinates(), "t", std::move(f)),
                      (Vector(2) << -3.0, 0.1).finished(), (Vector(2) << 1.0, 0.0).finished()};
  p.t_min = -20.0;
  p.t_max = 20.0;
  p.name = "compact-support";
  return p;
}

}  // namespace

const std::vector<ScenarioInfo>& catalog() {
  static const std::vector<ScenarioInfo> list = {
      {"ex1", "x'' = (1+eps) x^(1+2eps), x(0)=1, x'(0)=0; finite-time blow-up",
       {{"eps", "1"}, {"potential", "0"}, {"x0", "1"}, {"v0", "0"}}},
      {"ex2", "x'' = (1+eps) x^eps x', x(0)=x'(0)=1; forward blow-up at 1/eps",
       {{"eps", "1"}, {"x0", "1"}, {"v0", "1"}}},
      {"ex3", "x'' = -|x| x'; forward complete, backward blow-up at t=-1",
       {{"x0", "2"}, {"v0", "-2"}}},
      {"linear-spring", "x'' = k x from V = -k x^2/2", {{"k", "1"}, {"x0", "1"}, {"v0", "0"}}},
      {"magnetic-2d", "uniform magnetic field on a planar chart",
       {{"B", "1"}, {"chart", "euclidean"}}},
      {"geodesic", "free motion on a planar chart", {{"chart", "euclidean"}}},
      {"planewave", "reduced plane wave, V = -H/2 with coefficients in u",
       {{"f11", "1"}, {"f22", "1"}, {"f12", "0"}, {"x0", "1"}, {"y0", "0.5"}, {"vx0", "0"},
        {"vy0", "0"}}},
      {"ppwave", "pp-wave geodesic on (x, y, u, v); reduced=1 gives the planar system",
       {{"H", "x^2 - y^2"}, {"reduced", "0"}, {"x0", "1"}, {"y0", "0.5"}, {"vx0", "0"},
        {"vy0", "0"}, {"udot", "1"}}},
      {"compact-support", "F and X supported in the unit disc", {{"a", "1"}}},
  };
  return list;
}

TrajectoryProblem builtin(std::string_view name, const Params& params) {
  if (name == "ex1") return make_ex1(params);
  if (name == "ex2") return make_ex2(params);
  if (name == "ex3") return make_ex3(params);
  if (name == "linear-spring") return make_spring(params);
  if (name == "magnetic-2d") return make_magnetic(params);
  if (name == "geodesic") return make_geodesic(params);
  if (name == "planewave") return make_planewave(params);
  if (name == "ppwave") return make_ppwave(params);
  if (name == "compact-support") return make_compact(params);
  std::string list;
  for (const auto& s : catalog()) list += (list.empty() ? "" : ", ") + s.name;
  throw ScenarioError(ScenarioError::Kind::UnknownName,
                      "unknown scenario '" + std::string(name) + "' (known: " + list + ")");
}

PpWaveSpec PpWaveSpec::generic(Expression H) {
  PpWaveSpec s;
  s.kind = Kind::Generic;
  s.H = std::move(H);
  return s;
}

PpWaveSpec PpWaveSpec::plane_wave(Expression f11, Expression f22, Expression f12) {
  PpWaveSpec s;
  s.kind = Kind::PlaneWave;
  const Expression x = var("x"), y = var("y");
  s.H = f11 * power(x, 2) - f22 * power(y, 2) + num(2) * f12 * x * y;
  s.f11 = std::move(f11);
  s.f22 = std::move(f22);
  s.f12 = std::move(f12);
  return s;
}

TrajectoryProblem ppwave_reduce(const PpWaveSpec& spec, const ReducedInit& init) {
  for (const auto& v : spec.H.free_variables())
    if (v != "x" && v != "y" && v != "u")
      throw PreconditionError("pp-wave profile may only use x, y and u, found '" + v + "'");
  ForceSystem::Fields f;
  f.V = num(-0.5) * spec.H;
  ManifoldChart mc = charts::euclidean(2);
  TrajectoryProblem p{mc, ForceSystem(mc.coordinates(), "u", std::move(f)), init.position,
                      init.velocity};
  p.t0 = init.u0;
  p.t_min = init.u_min;
  p.t_max = init.u_max;
  p.name = "ppwave-reduced";
  return p;
}

TrajectoryProblem ppwave_full(const PpWaveSpec& spec, const Vector& position,
                              const Vector& velocity, double s_min, double s_max) {
  ManifoldChart mc = charts::pp_wave(spec.H);
  TrajectoryProblem p{mc, ForceSystem(mc.coordinates(), "s", {}), position, velocity};
  p.t0 = 0.0;
  p.t_min = s_min;
  p.t_max = s_max;
  p.name = "ppwave";
  return p;
}

TrajectoryProblem ppwave_full_from(const PpWaveSpec& spec, const ReducedInit& reduced,
                                   double u_dot) {
  if (u_dot == 0.0) throw PreconditionError("the pp-wave cross-check needs du/ds != 0");
  Vector pos(4), vel(4);
  pos << reduced.position[0], reduced.position[1], reduced.u0, 0.0;
  const double xd = u_dot * reduced.velocity[0], yd = u_dot * reduced.velocity[1];
  const double H0 = spec.H.evaluate({{"x", pos[0]}, {"y", pos[1]}, {"u", pos[2]}});
  // Null: xd^2 + yd^2 + 2 ud vd + H ud^2 = 0.
  const double vd = -(xd * xd + yd * yd + H0 * u_dot * u_dot) / (2.0 * u_dot);
  vel << xd, yd, u_dot, vd;
  double s_lo = (reduced.u_min - reduced.u0) / u_dot;
  double s_hi = (reduced.u_max - reduced.u0) / u_dot;
  if (s_lo > s_hi) std::swap(s_lo, s_hi);
  return ppwave_full(spec, pos, vel, s_lo, s_hi);
}

std::optional<OracleKind> oracle_kind(std::string_view name) {
  if (name == "ex1") return OracleKind::Ex1;
  if (name == "ex2") return OracleKind::Ex2;
  return std::nullopt;
}

double blowup_oracle(OracleKind kind, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw PreconditionError("eps must be positive");
  if (kind == OracleKind::Ex2) return 1.0 / eps;

  const double q = 2.0 + 2.0 * eps;
  quadrature::AdaptiveOptions opt;
  opt.rel_tol = 1e-13;
  // [1, 2] through sigma = 1 + s^2, which removes the inverse square root.
  const auto head = quadrature::integrate(
      [&](double s) { return 2.0 * s / std::sqrt(std::expm1(q * std::log1p(s * s))); }, 0.0, 1.0,
      opt);
  // [2, inf) through w = sigma^-eps.
  const double r = 2.0 * (1.0 + eps) / eps;
  const auto tail = quadrature::integrate(
      [&](double w) { return 1.0 / std::sqrt(-std::expm1(r * std::log(w))); }, 0.0,
      std::pow(2.0, -eps), opt);
  return head.value + tail.value / eps;
}

}  // namespace trajkit::scenarios

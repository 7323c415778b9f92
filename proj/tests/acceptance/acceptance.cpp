// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Expected values come from closed forms or from
// quadratures independent of the library's own.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "app/report.hpp"
#include "trajkit/analysis.hpp"
#include "trajkit/scenarios.hpp"

using namespace trajkit;
namespace sc = trajkit::scenarios;
namespace an = trajkit::analysis;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

std::string g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const BlowUp* blowup_of(const Leg& leg) { return std::get_if<BlowUp>(&leg.status); }

// int_1^inf ds / sqrt(s^m - 1) = B(1/2 - 1/m, 1/2) / m after w = s^-m.
double ex1_closed_form(double eps) {
  const double m = 2.0 + 2.0 * eps;
  return std::beta(0.5 - 1.0 / m, 0.5) / m;
}

// The same integral for eps = 1 as int_0^1 dt / sqrt(1 - t^4) by
// double-exponential quadrature, with the endpoint distance passed
// separately to avoid cancellation near t = 1.
double lemniscate_tanh_sinh() {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [](double t, double tc) {
    const double one_minus = tc > 0 ? tc : 1.0 - t;
    return 1.0 / std::sqrt(one_minus * (1.0 + t) * (1.0 + t * t));
  };
  return ts.integrate(f, 0.0, 1.0);
}

double max_speed(const Leg& leg) {
  double m = 0.0;
  for (const auto& [t, u] : leg.speed_series) m = std::max(m, std::sqrt(std::abs(u)));
  return m;
}

double relative_speed_drift(const IntegrationResult& r) {
  const auto series = r.speed_series();
  double u0 = 0.0;
  for (const auto* leg : {&r.forward, &r.backward})
    if (!leg->speed_series.empty()) u0 = leg->speed_series.front().second;
  double d = 0.0;
  for (const auto& [t, u] : series) d = std::max(d, std::abs(u - u0) / u0);
  return d;
}

double polar_distance(const Vector& p, const Vector& q) {
  // Universal cover of the punctured plane: straight chord when the
  // angular gap is below pi, otherwise through the puncture.
  const double dth = std::abs(p[1] - q[1]);
  if (dth >= M_PI) return p[0] + q[0];
  return std::sqrt(p[0] * p[0] + q[0] * q[0] - 2.0 * p[0] * q[0] * std::cos(dth));
}

double hyperbolic_distance(const Vector& p, const Vector& q) {
  const double dx = p[0] - q[0], dy = p[1] - q[1];
  return std::acosh(1.0 + (dx * dx + dy * dy) / (2.0 * p[1] * q[1]));
}

an::DistanceFunction distance_for(const std::string& chart) {
  if (chart == "polar") return polar_distance;
  if (chart == "hyperbolic") return hyperbolic_distance;
  return {};
}

struct Run {
  std::string label;
  std::string chart;  // for closed-form distances
  TrajectoryProblem problem;
};

std::vector<Run> riemannian_runs() {
  std::vector<Run> runs;
  auto add = [&](const std::string& label, const std::string& name, sc::Params params = {},
                 std::string chart = "euclidean") {
    runs.push_back({label, chart, sc::builtin(name, params)});
  };
  add("ex1", "ex1");
  add("ex1 potential", "ex1", {{"potential", "1"}});
  add("ex2", "ex2");
  add("ex3", "ex3");
  add("linear-spring", "linear-spring");
  for (const char* ch : {"euclidean", "polar", "hyperbolic"}) {
    add(std::string("magnetic-2d ") + ch, "magnetic-2d", {{"chart", ch}}, ch);
    add(std::string("geodesic ") + ch, "geodesic", {{"chart", ch}}, ch);
  }
  add("planewave", "planewave");
  add("planewave time-dependent", "planewave",
      {{"f11", "cos(u)"}, {"f22", "1 + sin(u)/2"}, {"f12", "sin(2*u)/3"}});
  add("ppwave reduced", "ppwave", {{"reduced", "1"}, {"H", "(1 + sin(u)/2)*x^2 - y^2*cos(u)"}});
  add("ppwave quartic", "ppwave", {{"reduced", "1"}, {"H", "x^4"}});
  add("compact-support", "compact-support");
  return runs;
}

// 1. Ex2 blow-up at 1/eps.
void ex2_blowup(Outcome& o) {
  for (double eps : {0.25, 0.5, 1.0, 2.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = sc::builtin("ex2", {{"eps", std::to_string(eps)}});
    const auto r = integrate(p);
    const double secs = seconds_since(t0);
    const auto* b = blowup_of(r.forward);
    const double oracle = 1.0 / eps;
    const double rel = b ? std::abs(b->t_est - oracle) / oracle : HUGE_VAL;
    o.detail << " eps=" << eps << ": rel " << g(rel) << " in " << g(secs) << "s;";
    o.require(b != nullptr, "no forward blow-up at eps=" + std::to_string(eps));
    o.require(rel <= 1e-3, "t_est off at eps=" + std::to_string(eps));
    o.require(secs < 1.0, "too slow at eps=" + std::to_string(eps));
  }
}

// 2. Ex1 blow-up at the quadrature oracle.
void ex1_blowup(Outcome& o) {
  for (double eps : {0.5, 1.0, 2.0}) {
    const double Q = sc::blowup_oracle(sc::OracleKind::Ex1, eps);
    const double closed = ex1_closed_form(eps);
    o.require(std::abs(Q - closed) <= 1e-9 * closed, "library quadrature disagrees with the Beta form");
    for (const char* pot : {"0", "1"}) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto p = sc::builtin("ex1", {{"eps", std::to_string(eps)}, {"potential", pot}});
      const auto r = integrate(p);
      const double secs = seconds_since(t0);
      const auto* b = blowup_of(r.forward);
      const double rel = b ? std::abs(b->t_est - Q) / Q : HUGE_VAL;
      o.detail << " eps=" << eps << (pot[0] == '1' ? " V" : " X") << ": rel " << g(rel) << " in "
               << g(secs) << "s;";
      o.require(b != nullptr, "no forward blow-up");
      o.require(rel <= 1e-3, "t_est off");
      o.require(secs < 2.0, "too slow");
    }
  }
  const double gk = sc::blowup_oracle(sc::OracleKind::Ex1, 1.0);
  const double ts = lemniscate_tanh_sinh();
  const double agree = std::abs(gk - ts) / ts;
  o.detail << " eps=1 routes agree to " << g(agree);
  o.require(agree <= 1e-8, "quadrature routes disagree");
}

// 3. Forward complete, blow-up backward at t = -1.
void ex3_asymmetry(Outcome& o) {
  const auto p = sc::builtin("ex3");
  const auto r = integrate(p);
  const auto s = app::summarize("ex3", p, r);
  o.require(r.forward.reached_horizon() && r.forward.t_hi() == 100.0, "forward did not reach 100");
  const double vmax = max_speed(r.forward);
  o.require(std::isfinite(vmax) && vmax < p.blowup.speed_ceiling, "forward speed unbounded");
  o.require(s.status == "BlowUpBackward", "status " + s.status);
  const double t_est = s.t_est.value_or(HUGE_VAL);
  o.require(std::abs(t_est + 1.0) <= 1e-3, "backward t_est off");
  o.detail << " forward max speed " << g(vmax) << ", status " << s.status << ", t_est "
           << t_est;
}

// 4. Speed conservation for geodesic and magnetic runs.
void conservation(Outcome& o) {
  for (const char* ch : {"euclidean", "polar", "hyperbolic"}) {
    for (const char* name : {"geodesic", "magnetic-2d"}) {
      const auto p = sc::builtin(name, {{"chart", ch}});
      const auto r = integrate(p);
      const double drift = relative_speed_drift(r);
      o.detail << " " << name << "/" << ch << " " << g(drift) << ";";
      o.require(r.forward.t_hi() - r.forward.t_lo() >= 100.0, "horizon shorter than 100");
      o.require(drift <= 1e-8, std::string("drift on ") + name + "/" + ch);
    }
  }
}

// 5. Energy identity residual on every scenario.
void energy_identity(Outcome& o) {
  double worst = 0.0;
  std::string worst_label;
  auto check = [&](const std::string& label, const TrajectoryProblem& p) {
    const auto r = integrate(p);
    const auto e = an::energy_residual(r, p);
    if (e.relative > worst) worst = e.relative, worst_label = label;
    o.require(e.relative <= 1e-5, "residual on " + label + " = " + g(e.relative));
  };
  for (const auto& run : riemannian_runs()) check(run.label, run.problem);
  check("ppwave 4D", sc::builtin("ppwave"));
  // A potential with explicit time dependence.
  const auto td = sc::builtin("planewave", {{"f11", "cos(u)"}, {"f22", "1 + sin(u)/2"}});
  o.require(td.forces.has_V() && !td.forces.autonomous(), "time-dependent V scenario missing");
  o.detail << " worst " << g(worst) << " (" << worst_label << ")";
}

// 6. Product lift reproduces the base motion with tau = t.
void product_lift(Outcome& o) {
  const std::vector<std::pair<std::string, TrajectoryProblem>> problems = {
      {"planewave time-dependent",
       sc::builtin("planewave", {{"f11", "cos(u)"}, {"f22", "1 + sin(u)/2"}, {"f12", "sin(2*u)/3"}})},
      {"linear-spring", sc::builtin("linear-spring")},
      {"compact-support", sc::builtin("compact-support")},
  };
  for (const auto& [label, base] : problems) {
    const auto lifted = lift_to_product(base);
    const auto direct = integrate(base);
    const auto lift = integrate(lifted);
    const int n = base.chart.dim();
    double tau_err = 0.0, base_err = 0.0;
    for (const auto& s : direct.samples()) {
      const double sl = s.t - base.t0;
      const Leg& leg = sl >= 0 ? lift.forward : lift.backward;
      const auto [x, v] = leg.state(sl);
      tau_err = std::max(tau_err, std::abs(x[n] - s.t) / std::max(1.0, std::abs(s.t)));
      for (int i = 0; i < n; ++i)
        base_err = std::max(base_err, std::abs(x[i] - s.position[i]) / std::max(1.0, std::abs(s.position[i])));
    }
    o.detail << " " << label << ": tau " << g(tau_err) << ", base " << g(base_err) << ";";
    o.require(lift.forward.reached_horizon() && lift.backward.reached_horizon(), label + " lifted run incomplete");
    o.require(tau_err <= 1e-8, label + " tau not affine");
    o.require(base_err <= 1e-8, label + " base mismatch");
  }
}

// 7. Christoffel symbols against the analytic values.
void christoffel_values(Outcome& o) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.1, 5.0), any(-5.0, 5.0);
  double worst = 0.0;
  const auto polar = charts::polar();
  const auto hyp = charts::hyperbolic();
  for (int trial = 0; trial < 200; ++trial) {
    Vector p(2);
    p << pos(rng), any(rng);
    const auto G = polar.christoffel(p);
    const double r = p[0];
    double expect[2][2][2] = {};
    expect[0][1][1] = -r;
    expect[1][0][1] = expect[1][1][0] = 1.0 / r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          worst = std::max(worst, std::abs(G(i, j, k) - expect[i][j][k]) / std::max(1.0, std::abs(expect[i][j][k])));

    Vector q(2);
    q << any(rng), pos(rng);
    const auto H = hyp.christoffel(q);
    const double y = q[1];
    double hx[2][2][2] = {};
    hx[0][0][1] = hx[0][1][0] = -1.0 / y;
    hx[1][0][0] = 1.0 / y;
    hx[1][1][1] = -1.0 / y;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          worst = std::max(worst, std::abs(H(i, j, k) - hx[i][j][k]) / std::max(1.0, std::abs(hx[i][j][k])));
  }
  bool flat_zero = true;
  for (int dim = 1; dim <= 4; ++dim) {
    const auto e = charts::euclidean(dim);
    for (int trial = 0; trial < 20; ++trial) {
      Vector p(dim);
      for (int i = 0; i < dim; ++i) p[i] = any(rng);
      const auto G = e.christoffel(p);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          for (int k = 0; k < dim; ++k) flat_zero = flat_zero && G(i, j, k) == 0.0;
    }
  }
  o.detail << " curved worst " << g(worst) << ", euclidean zero " << (flat_zero ? "yes" : "no");
  o.require(worst <= 1e-9, "curved mismatch");
  o.require(flat_zero, "euclidean symbols not identically zero");
}

// 8. pp-wave suite.
void ppwave_suite(Outcome& o) {
  for (const auto& params : std::vector<sc::Params>{
           {}, {{"f11", "cos(u)"}, {"f22", "1 + sin(u)/2"}, {"f12", "sin(2*u)/3"}}}) {
    const auto p = sc::builtin("planewave", params);
    const auto r = integrate(p);
    o.require(r.forward.reached_horizon() && r.forward.t_hi() == 50.0, "plane wave did not reach u = 50");
    const auto c = an::certify(p, {p.position, 10.0}, 50.0);
    o.require(c.verdict == an::Verdict::Certified && c.theorem == an::Theorem::QuadraticPotential,
              "plane wave not certified under Thm-A02: " + c.reason);
  }
  o.detail << " plane waves complete and certified;";

  // x'' = 2 x^3 from x = 1 at rest: int_1^inf dx / sqrt(x^4 - 1) = B(1/4, 1/2) / 4.
  const double oracle = std::beta(0.25, 0.5) / 4.0;
  const auto q = sc::builtin("ppwave", {{"reduced", "1"}, {"H", "x^4"}});
  const auto rq = integrate(q);
  const auto* b = blowup_of(rq.forward);
  const double rel = b ? std::abs(b->t_est - oracle) / oracle : HUGE_VAL;
  o.detail << " quartic rel " << g(rel) << ";";
  o.require(rel <= 1e-3, "quartic blow-up time off");

  const std::vector<std::string> profiles = {"x^2 - y^2", "(1 + sin(u)/2)*x^2 - y^2*cos(u) + x*y/3"};
  for (const auto& H : profiles) {
    for (double u_dot : {1.0, 2.0}) {
      const auto spec = sc::PpWaveSpec::generic(expr::parse(H));
      sc::ReducedInit init;
      init.position << 1.0, 0.5;
      init.velocity << 0.2, -0.1;
      init.u_max = 20.0;
      const auto red = integrate(sc::ppwave_reduce(spec, init));
      const auto full = integrate(sc::ppwave_full_from(spec, init, u_dot));
      double err = 0.0;
      for (const auto& s : red.samples()) {
        const double sp = (s.t - init.u0) / u_dot;
        const auto [x, v] = (sp >= 0 ? full.forward : full.backward).state(sp);
        err = std::max(err, std::abs(x[2] - s.t) / std::max(1.0, std::abs(s.t)));
        for (int i = 0; i < 2; ++i)
          err = std::max(err, std::abs(x[i] - s.position[i]) / std::max(1.0, std::abs(s.position[i])));
      }
      o.detail << " 4D vs reduced " << g(err) << ";";
      o.require(err <= 1e-6, "4D geodesic differs from the reduced system for H = " + H);
    }
  }
}

// 9. Certification discrimination, stable under refinement.
void certification(Outcome& o) {
  struct Case {
    std::string name;
    sc::Params params;
    bool expect_certified;
  };
  const std::vector<Case> cases = {{"planewave", {}, true},
                                   {"compact-support", {}, true},
                                   {"ex1", {}, false},
                                   {"ex2", {}, false}};
  for (const auto& c : cases) {
    const auto p = sc::builtin(c.name, c.params);
    const an::Region region{p.position, 10.0};
    const double T = std::max(std::abs(p.t_min), std::abs(p.t_max));
    const an::GridSpec grid;
    const auto base = an::certify(p, region, T, grid);
    const auto fine = an::certify(p, region, T, grid.refined());
    o.detail << " " << c.name << " " << an::name_of(base.verdict) << "/" << an::name_of(fine.verdict) << ";";
    if (c.expect_certified) {
      o.require(base.verdict == an::Verdict::Certified, c.name + " not certified: " + base.reason);
    } else {
      o.require(base.verdict == an::Verdict::NotCertified, c.name + " certified");
      const bool concrete = base.witness && base.witness->point.size() == p.chart.dim() &&
                            base.witness->point.allFinite();
      o.require(concrete, c.name + " has no concrete witness");
    }
    o.require(base.verdict == fine.verdict, c.name + " verdict changes under refinement");
  }
}

// 10. Comparison principles and the distance bound.
void comparison_suites(Outcome& o) {
  // Subsolution ordering: f' = a f + b - c with c >= 0 and f(0) <= h(0)
  // stays below h' = a h + b.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 1.0);
  int ordered = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double a0 = U(rng), a1 = U(rng), w = 0.5 + 3 * P(rng);
    const double b0 = U(rng), b1 = U(rng);
    const double c0 = P(rng), c1 = P(rng) * c0;
    const double h0 = 2 * U(rng), f0 = h0 - P(rng);
    auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
      const double a = a0 + a1 * std::sin(w * t), b = b0 + b1 * std::cos(w * t);
      const double c = c0 + c1 * std::sin(3 * w * t);
      dy[0] = a * y[0] + b - c;
      dy[1] = a * y[1] + b;
    };
    ode::DenseOutput dense;
    const std::vector<double> y0 = {f0, h0};
    const auto rep = ode::integrate(rhs, 0.0, 5.0, y0, {}, {}, &dense);
    bool ok = rep.status == ode::Status::Completed;
    for (int i = 0; i <= 400 && ok; ++i) {
      const auto y = dense.evaluate(5.0 * i / 400);
      const double gap = y[0] - y[1];
      worst_gap = std::max(worst_gap, gap);
      ok = gap <= 1e-9 * std::max(1.0, std::abs(y[1]));
    }
    ordered += ok;
  }
  o.detail << " ordering " << ordered << "/50;";
  o.require(ordered == 50, "subsolution ordering violated");

  // Dominating solution on x'' = x with p0 at the origin: u/2 = E - V and
  // -V <= A d^2 + C give l' <= sqrt(2 (alpha + A l^2 + C)).
  const auto spring = sc::builtin("linear-spring");
  const auto rs = integrate(spring);
  const Vector origin = Vector::Zero(1);
  const auto hyp = an::check_trajectory_hypotheses(rs, spring, origin);
  const double E0 = 0.5 * spring.velocity.squaredNorm() + spring.forces.V_at(spring.position, spring.t0);
  const double alpha = E0 + 1.0;
  std::ostringstream phi;
  phi.precision(17);
  phi << "sqrt(2*(" << alpha << " + " << hyp.potential_A << "*s^2 + " << hyp.potential_C << "))";
  double l0 = 0.0;
  for (const auto& a : hyp.arc)
    if (a.t == spring.t0) l0 = a.length;
  const auto f = an::dominating_solution(expr::parse(phi.str()), l0, spring.t_max - spring.t0);
  double worst = -HUGE_VAL;
  for (const auto& a : hyp.arc) {
    if (a.t < spring.t0) continue;
    const double bound = f(a.t - spring.t0);
    worst = std::max(worst, (a.length - bound) / std::max(1.0, bound));
  }
  o.detail << " l - f worst " << g(worst) << ";";
  o.require(!hyp.arc.empty() && worst <= 1e-8, "dominating solution does not bound the arc length");

  int runs = 0, clean = 0;
  for (const auto& run : riemannian_runs()) {
    const auto r = integrate(run.problem);
    const auto h = an::check_trajectory_hypotheses(r, run.problem, std::nullopt, distance_for(run.chart));
    ++runs;
    if (!h.distance_violation && !h.arc.empty()) ++clean;
    else o.require(false, "d > l on " + run.label);
  }
  o.detail << " d <= l on " << clean << "/" << runs << " runs";
}

// 11. Positive-completeness regression.
void positive_completeness(Outcome& o) {
  using V = an::CompletenessVerdict;
  const auto a = an::positively_complete_check(expr::parse("-s^2"));
  const auto b = an::positively_complete_check(expr::parse("-s^2*log(1+s)^2"));
  const auto c = an::positively_complete_check(expr::parse("-s^4"));
  o.detail << " -s^2 " << an::name_of(a.verdict) << ", -s^2 log^2 " << an::name_of(b.verdict)
           << ", -s^4 " << an::name_of(c.verdict);
  o.require(a.verdict == V::SufficientQuadratic, "-s^2");
  o.require(b.verdict == V::NumericallyDivergent, "-s^2 log^2(1+s)");
  o.require(c.verdict != V::SufficientQuadratic, "-s^4");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"ex2 blow-up time", ex2_blowup},
      {"ex1 blow-up time", ex1_blowup},
      {"ex3 forward/backward asymmetry", ex3_asymmetry},
      {"speed conservation", conservation},
      {"energy identity", energy_identity},
      {"product lift", product_lift},
      {"christoffel symbols", christoffel_values},
      {"pp-wave suite", ppwave_suite},
      {"certification discrimination", certification},
      {"comparison principles and distance bound", comparison_suites},
      {"positive completeness", positive_completeness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s %2zu %s (%.2fs):%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(t0), o.detail.str().c_str());
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

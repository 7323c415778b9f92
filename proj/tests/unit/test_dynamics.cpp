#include <cmath>

#include <gtest/gtest.h>

#include "trajkit/dynamics.hpp"
#include "trajkit/scenarios.hpp"

using namespace trajkit;

namespace {

ForceSystem forces(const std::vector<std::string>& coords, ForceSystem::Fields f) {
  return ForceSystem(coords, "t", std::move(f));
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ExprMatrix matrix(std::vector<std::vector<std::string>> rows) {
  ExprMatrix m;
  for (const auto& r : rows) {
    ExprVector row;
    for (const auto& s : r) row.push_back(expr::parse(s));
    m.push_back(row);
  }
  return m;
}

}  // namespace

TEST(Ode, ExponentialAndDenseOutput) {
  auto rhs = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0]; };
  ode::DenseOutput dense;
  const std::vector<double> y0 = {1.0};
  const auto rep = ode::integrate(rhs, 0.0, 2.0, y0, {}, {}, &dense);
  ASSERT_EQ(rep.status, ode::Status::Completed);
  EXPECT_NEAR(rep.y[0], std::exp(2.0), 1e-9 * std::exp(2.0));
  for (double t = 0; t <= 2.0; t += 0.037) EXPECT_NEAR(dense.evaluate(t)[0], std::exp(t), 1e-8 * std::exp(t));
  for (std::size_t i = 1; i < dense.steps().size(); ++i)
    EXPECT_DOUBLE_EQ(dense.steps()[i].t_begin(), dense.steps()[i - 1].t_end());
}

TEST(Ode, MaxStepIsHonoured) {
  auto rhs = [](double, std::span<const double>, std::span<double> dy) { dy[0] = 0.0; };
  ode::Options opt;
  opt.max_step = 0.1;
  ode::DenseOutput dense;
  const std::vector<double> y0 = {1.0};
  ode::integrate(rhs, 0.0, 1.0, y0, opt, {}, &dense);
  for (const auto& s : dense.steps()) EXPECT_LE(s.h(), 0.1 + 1e-15);
}

TEST(Rhs, HandEvaluatedAccelerations) {
  const auto e2 = charts::euclidean(2);
  TrajectoryProblem free{e2, forces(e2.coordinates(), {}), vec({1, 2}), vec({3, -1})};
  EXPECT_EQ(ode_rhs(free, vec({0.3, 0.7}), vec({1, 5}), 0.0), Vector::Zero(2));

  const auto e1 = charts::euclidean(1);
  ForceSystem::Fields fv;
  fv.V = expr::parse("-x^2");
  TrajectoryProblem pot{e1, forces(e1.coordinates(), fv), vec({1}), vec({0})};
  EXPECT_DOUBLE_EQ(ode_rhs(pot, vec({1}), vec({0}), 0.0)[0], 2.0);

  const auto polar = charts::polar();
  TrajectoryProblem geo{polar, forces(polar.coordinates(), {}), vec({1, 0}), vec({0, 1})};
  const Vector a = ode_rhs(geo, vec({1, 0}), vec({0, 1}), 0.0);
  EXPECT_NEAR(a[0], 1.0, 1e-15);
  EXPECT_NEAR(a[1], 0.0, 1e-15);
}

TEST(Problem, ValidationRejectsBadInput) {
  const auto e1 = charts::euclidean(1);
  TrajectoryProblem p{e1, forces(e1.coordinates(), {}), vec({1, 2}), vec({0})};
  EXPECT_THROW(p.validate(), PreconditionError);
  TrajectoryProblem q{e1, forces(e1.coordinates(), {}), vec({1}), vec({0})};
  q.t0 = 5.0;
  q.t_min = 0.0;
  q.t_max = 1.0;
  EXPECT_THROW(q.validate(), PreconditionError);
}

TEST(Integrate, LinearSpringMatchesCosh) {
  const auto p = scenarios::builtin("linear-spring");
  const auto r = integrate(p);
  ASSERT_TRUE(r.forward.reached_horizon());
  const auto [x, v] = r.forward.state(20.0);
  EXPECT_LE(std::abs(x[0] - std::cosh(20.0)) / std::cosh(20.0), 1e-6);
  EXPECT_LE(std::abs(v[0] - std::sinh(20.0)) / std::sinh(20.0), 1e-6);
}

TEST(Integrate, ResultInvariants) {
  for (const auto& info : scenarios::catalog()) {
    const auto p = scenarios::builtin(info.name);
    const auto r = integrate(p);
    const auto samples = r.samples();
    for (std::size_t i = 1; i < samples.size(); ++i) ASSERT_LT(samples[i - 1].t, samples[i].t) << info.name;
    if (p.chart.riemannian())
      for (const auto& [t, u] : r.speed_series()) ASSERT_GE(u, 0.0) << info.name;
    for (const Leg* leg : {&r.forward, &r.backward}) {
      EXPECT_FALSE(leg->failed()) << info.name;
      if (const auto* b = std::get_if<BlowUp>(&leg->status)) {
        EXPECT_GT(b->t_last, p.t_min) << info.name;
        EXPECT_LT(b->t_last, p.t_max) << info.name;
      }
    }
  }
}

TEST(Integrate, HalvingTheToleranceKeepsStatuses) {
  for (const auto& info : scenarios::catalog()) {
    auto p = scenarios::builtin(info.name);
    const auto a = integrate(p);
    p.tol.rel /= 2;
    const auto b = integrate(p);
    EXPECT_EQ(a.forward.status.index(), b.forward.status.index()) << info.name;
    EXPECT_EQ(a.backward.status.index(), b.backward.status.index()) << info.name;
  }
}

TEST(Blowup, Ex2EstimateAndErrors) {
  const auto p = scenarios::builtin("ex2");
  const auto r = integrate(p);
  ASSERT_TRUE(r.forward.blew_up());
  EXPECT_LE(std::abs(estimate_blowup(r.forward) - 1.0), 1e-3);
  EXPECT_TRUE(r.backward.reached_horizon());
  EXPECT_THROW(estimate_blowup(r.backward), PreconditionError);
  const auto& c = r.forward.crossings;
  ASSERT_GE(c.size(), 3u);
  for (std::size_t i = 1; i < c.size(); ++i) {
    EXPECT_DOUBLE_EQ(c[i].threshold, 10.0 * c[i - 1].threshold);
    EXPECT_GT(c[i].t, c[i - 1].t);
  }
}

TEST(Blowup, AitkenOnGeometricCrossings) {
  // Crossings t_k = 1 - 2^-k accumulate at 1.
  std::vector<Crossing> cs;
  for (int k = 1; k <= 5; ++k) cs.push_back({std::pow(10.0, k + 2), 1.0 - std::pow(2.0, -k)});
  EXPECT_NEAR(estimate_blowup(cs, Direction::Forward, cs.back().t), 1.0, 1e-14);
  // Too few crossings fall back to t_last.
  EXPECT_DOUBLE_EQ(estimate_blowup({cs[0], cs[1]}, Direction::Forward, 0.9), 0.9);
  // Never earlier than t_last in the leg's direction.
  std::vector<Crossing> back = {{1e3, -0.5}, {1e4, -0.75}, {1e5, -0.875}};
  EXPECT_NEAR(estimate_blowup(back, Direction::Backward, -0.875), -1.0, 1e-14);
}

TEST(Blowup, StepCollapseWithoutSpeedGrowthIsFailure) {
  const auto e1 = charts::euclidean(1);
  ForceSystem::Fields f;
  f.X = ExprVector{expr::parse("-1/sqrt(x)")};
  TrajectoryProblem p{e1, forces(e1.coordinates(), f), vec({1}), vec({0})};
  p.t_max = 5.0;
  const auto r = integrate(p);
  EXPECT_TRUE(r.forward.failed());
  EXPECT_FALSE(r.any_blowup());
  const auto& sf = std::get<StepFailure>(r.forward.status);
  EXPECT_NEAR(sf.t, 4.0 / 3.0, 1e-3);  // x reaches 0 at t = 4/3
  EXPECT_FALSE(sf.reason.empty());
}

TEST(Blowup, FastGrowthWithoutContractionReachesHorizon) {
  // x'' = x from x = 1 passes speed 1e8 near t = 19.1 but is complete.
  auto p = scenarios::builtin("linear-spring");
  p.t_max = 25.0;
  const auto r = integrate(p);
  EXPECT_TRUE(r.forward.reached_horizon());
}

TEST(Duality, BackwardRunIsForwardRunOfReversedSystem) {
  const auto chart = charts::euclidean(2);
  ForceSystem::Fields f, g;
  f.F = matrix({{"0.1", "1 + x/5"}, {"-1", "0.2*sin(y)"}});
  g.F = matrix({{"-0.1", "-(1 + x/5)"}, {"1", "-0.2*sin(y)"}});
  f.X = g.X = ExprVector{expr::parse("sin(y)"), expr::parse("-x/(1 + x^2)")};
  const Vector p0 = vec({0.3, -0.2}), v0 = vec({0.5, 1.0});
  TrajectoryProblem a{chart, forces(chart.coordinates(), f), p0, v0};
  a.t_min = -5.0;
  a.t_max = 0.0;
  TrajectoryProblem b{chart, forces(chart.coordinates(), g), p0, -v0};
  b.t_min = 0.0;
  b.t_max = 5.0;
  const auto ra = integrate(a), rb = integrate(b);
  ASSERT_TRUE(ra.backward.reached_horizon());
  ASSERT_TRUE(rb.forward.reached_horizon());
  for (const auto& s : rb.forward.samples) {
    const auto [x, v] = ra.backward.state(-s.t);
    EXPECT_LE((x - s.position).norm(), 1e-8);
    EXPECT_LE((v + s.velocity).norm(), 1e-8);
  }
}

TEST(Lift, EuclideanGeodesicGainsAffineTau) {
  const auto chart = charts::euclidean(2);
  TrajectoryProblem p{chart, forces(chart.coordinates(), {}), vec({0, 0}), vec({1, 2})};
  p.t0 = 3.0;
  p.t_min = 0.0;
  p.t_max = 10.0;
  const auto lifted = lift_to_product(p);
  EXPECT_EQ(lifted.chart.dim(), 3);
  EXPECT_EQ(lifted.chart.coordinates().back(), "t");
  EXPECT_EQ(lifted.forces.time_name(), "s");
  EXPECT_DOUBLE_EQ(lifted.position[2], 3.0);
  EXPECT_DOUBLE_EQ(lifted.velocity[2], 1.0);
  const auto r = integrate(lifted);
  for (const auto& s : r.samples()) {
    EXPECT_NEAR(s.position[2], 3.0 + s.t, 1e-12);
    EXPECT_NEAR(s.position[0], s.t, 1e-12);
    EXPECT_NEAR(s.position[1], 2 * s.t, 1e-12);
  }
}

TEST(Lift, ExtraVelocityScalesTau) {
  const auto polar = charts::polar();
  TrajectoryProblem p{polar, forces(polar.coordinates(), {}), vec({1, 0}), vec({0.3, 1})};
  p.t_max = 10.0;
  const auto lifted = lift_to_product(p, 2.0);
  const auto r = integrate(lifted);
  const auto direct = integrate(p);
  // Least-squares slope of tau against s.
  double st = 0, ss = 0, n = 0, sx = 0, sy = 0;
  for (const auto& s : r.samples()) {
    sx += s.t;
    sy += s.position[2];
    st += s.t * s.position[2];
    ss += s.t * s.t;
    n += 1;
  }
  const double slope = (n * st - sx * sy) / (n * ss - sx * sx);
  EXPECT_NEAR(slope, 2.0, 1e-10);
  // Without t-dependence the base is the direct geodesic.
  for (const auto& s : direct.samples()) {
    const auto [x, v] = r.forward.state(s.t);
    EXPECT_NEAR(x[0], s.position[0], 1e-8);
    EXPECT_NEAR(x[1], s.position[1], 1e-8);
  }
}

TEST(Lift, Ex1BaseMatchesDirectRun) {
  const auto p = scenarios::builtin("ex1");
  const auto lifted = lift_to_product(p);
  const auto direct = integrate(p), lr = integrate(lifted);
  ASSERT_TRUE(direct.forward.blew_up());
  ASSERT_TRUE(lr.forward.blew_up());
  // The solution is even, so both legs blow up; stay clear of either end.
  const double cut = 0.9 * std::get<BlowUp>(direct.forward.status).t_last;
  for (const auto& s : direct.samples()) {
    if (std::abs(s.t) > cut) continue;
    const auto [x, v] = (s.t >= 0 ? lr.forward : lr.backward).state(s.t);
    EXPECT_LE(std::abs(x[0] - s.position[0]) / std::max(1.0, std::abs(s.position[0])), 1e-8);
    EXPECT_NEAR(x[1], s.t, 1e-8 * std::max(1.0, std::abs(s.t)));
  }
}

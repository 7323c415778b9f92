#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "trajkit/forces.hpp"
#include "trajkit/geometry.hpp"

using namespace trajkit;

namespace {

ManifoldChart chart_from(std::vector<std::string> coords, std::vector<std::vector<std::string>> rows,
                         Signature sig = Signature::Riemannian) {
  ExprMatrix g;
  for (const auto& r : rows) {
    ExprVector row;
    for (const auto& s : r) row.push_back(expr::parse(s));
    g.push_back(row);
  }
  return ManifoldChart(std::move(coords), std::move(g), sig);
}

// Gamma from central differences of the evaluated metric.
double fd_christoffel(const ManifoldChart& c, const Vector& p, int i, int j, int k) {
  const int n = c.dim();
  const double h = 1e-5;
  std::vector<Matrix> dg(n);
  for (int m = 0; m < n; ++m) {
    Vector a = p, b = p;
    a[m] += h;
    b[m] -= h;
    dg[m] = (c.raw_metric_at(a) - c.raw_metric_at(b)) / (2 * h);
  }
  const Matrix ginv = c.raw_metric_at(p).inverse();
  double s = 0;
  for (int l = 0; l < n; ++l) s += 0.5 * ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
  return s;
}

}  // namespace

TEST(Chart, MetricEvaluation) {
  const auto polar = charts::polar();
  Vector p(2);
  p << 2.0, 0.3;
  const Matrix g = polar.metric_at(p);
  EXPECT_DOUBLE_EQ(g(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g(1, 1), 4.0);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.0);
  Vector v(2), w(2);
  v << 1.0, 1.0;
  w << 0.5, 2.0;
  EXPECT_DOUBLE_EQ(polar.inner(p, v, w), 0.5 + 8.0);
}

TEST(Chart, RejectsDegenerateAndIndefiniteMetrics) {
  const auto polar = charts::polar();
  Vector origin(2);
  origin << 0.0, 1.0;
  try {
    polar.metric_at(origin);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::Degenerate);
  }
  const auto bad = chart_from({"x", "y"}, {{"1", "0"}, {"0", "-1"}});
  Vector p = Vector::Zero(2);
  try {
    bad.metric_at(p);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::NotPositiveDefinite);
  }
  const auto lorentz = chart_from({"x", "y"}, {{"1", "0"}, {"0", "-1"}}, Signature::PseudoRiemannian);
  EXPECT_NO_THROW(lorentz.metric_at(p));
  EXPECT_FALSE(lorentz.riemannian());
}

TEST(Chart, RejectsMalformedDefinitions) {
  EXPECT_THROW(chart_from({"x", "y"}, {{"1", "0"}}), Error);
  EXPECT_THROW(chart_from({"x", "y"}, {{"1", "x"}, {"0", "1"}}), Error);  // not symmetric
  EXPECT_THROW(chart_from({"x", "x"}, {{"1", "0"}, {"0", "1"}}), Error);  // repeated name
  EXPECT_THROW(chart_from({"x"}, {{"1 + z"}}), Error);                      // foreign variable
}

TEST(Christoffel, EuclideanIsExactlyZero) {
  for (int n = 1; n <= 5; ++n) {
    const auto e = charts::euclidean(n);
    EXPECT_EQ(e.distance_mode(), DistanceMode::ExactFlat);
    Vector p = Vector::LinSpaced(n, -1.0, 2.0);
    const auto G = e.christoffel(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) EXPECT_EQ(G(i, j, k), 0.0);
  }
}

TEST(Christoffel, PolarAndHyperbolicClosedForms) {
  Vector p(2);
  p << 1.5, -0.7;
  const auto G = charts::polar().christoffel(p);
  EXPECT_NEAR(G(0, 1, 1), -1.5, 1e-15);
  EXPECT_NEAR(G(1, 0, 1), 1 / 1.5, 1e-15);
  EXPECT_NEAR(G(1, 1, 0), 1 / 1.5, 1e-15);
  EXPECT_EQ(G(0, 0, 0), 0.0);
  Vector q(2);
  q << 0.2, 0.5;
  const auto H = charts::hyperbolic().christoffel(q);
  EXPECT_NEAR(H(0, 0, 1), -2.0, 1e-14);
  EXPECT_NEAR(H(1, 0, 0), 2.0, 1e-14);
  EXPECT_NEAR(H(1, 1, 1), -2.0, 1e-14);
  EXPECT_EQ(H(1, 0, 1), 0.0);
}

TEST(Christoffel, GeneralMetricMatchesFiniteDifferences) {
  const auto c = chart_from({"x", "y", "z"}, {{"2 + sin(x)*y^2", "x*y/5", "0.1*z"},
                                              {"x*y/5", "3 + cos(z)", "0"},
                                              {"0.1*z", "0", "1 + x^2"}});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.8, 0.8);
  for (int trial = 0; trial < 10; ++trial) {
    Vector p(3);
    p << U(rng), U(rng), U(rng);
    const auto G = c.christoffel(p);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          EXPECT_NEAR(G(i, j, k), fd_christoffel(c, p, i, j, k), 1e-8);
          EXPECT_EQ(G(i, j, k), G(i, k, j));
        }
  }
}

TEST(Christoffel, ContractionMatchesComponents) {
  Vector p(2), v(2), w(2);
  p << 2.0, 0.1;
  v << 0.3, -1.0;
  w << 1.0, 2.0;
  const auto G = charts::polar().christoffel(p);
  const Vector c = G.contract(v, w);
  for (int i = 0; i < 2; ++i) {
    double s = 0;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) s += G(i, j, k) * v[j] * w[k];
    EXPECT_DOUBLE_EQ(c[i], s);
  }
}

TEST(Distance, FlatChartsAreExact) {
  Vector p(2), q(2);
  p << 0.0, 0.0;
  q << 3.0, 4.0;
  const auto d = chart_distance(charts::euclidean(2), p, q);
  EXPECT_TRUE(d.exact);
  EXPECT_NEAR(d.value, 5.0, 1e-12);
}

TEST(Distance, CurvedChartsGiveUpperBounds) {
  Vector p(2), q(2);
  p << 0.0, 1.0;
  q << 2.0, 1.0;
  const auto d = chart_distance(charts::hyperbolic(), p, q);
  EXPECT_FALSE(d.exact);
  const double exact = std::acosh(1.0 + 4.0 / 2.0);
  EXPECT_GE(d.value, exact - 1e-12);
  EXPECT_NEAR(d.value, 2.0, 1e-8);  // the horizontal segment has length 2
}

TEST(Charts, PpWaveAndProduct) {
  const auto pp = charts::pp_wave(expr::parse("x^2 - y^2"));
  EXPECT_FALSE(pp.riemannian());
  EXPECT_EQ(pp.dim(), 4);
  Vector p(4);
  p << 2.0, 1.0, 0.0, 0.0;
  const Matrix g = pp.metric_at(p);
  EXPECT_DOUBLE_EQ(g(2, 2), 3.0);
  EXPECT_DOUBLE_EQ(g(2, 3), 1.0);
  const auto prod = charts::product_with_line(charts::polar(), "tau");
  EXPECT_EQ(prod.coordinates().back(), "tau");
  Vector q(3);
  q << 2.0, 0.0, 5.0;
  const Matrix h = prod.metric_at(q);
  EXPECT_DOUBLE_EQ(h(1, 1), 4.0);
  EXPECT_DOUBLE_EQ(h(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(h(0, 2), 0.0);
}

TEST(Forces, DecompositionIsSelfAndSkewAdjoint) {
  const auto chart = charts::polar();
  ForceSystem::Fields f;
  f.F = ExprMatrix{{expr::parse("r"), expr::parse("t")}, {expr::parse("1"), expr::parse("sin(theta)")}};
  const ForceSystem fs(chart.coordinates(), "t", f);
  Vector p(2);
  p << 1.7, 0.4;
  const auto d = decompose(fs, chart, p, 0.9);
  const Matrix g = chart.metric_at(p);
  EXPECT_LT(((g * d.S) - (g * d.S).transpose()).norm(), 1e-13);
  EXPECT_LT(((g * d.H) + (g * d.H).transpose()).norm(), 1e-13);
  EXPECT_LT((d.S + d.H - fs.F_at(p, 0.9)).norm(), 1e-14);
  EXPECT_FALSE(fs.autonomous());
}

TEST(Forces, PotentialGivesMinusGradient) {
  const auto chart = charts::polar();
  ForceSystem::Fields f;
  f.V = expr::parse("r^2*cos(theta) + t*r");
  const ForceSystem fs(chart.coordinates(), "t", f);
  Vector p(2), v = Vector::Zero(2);
  p << 2.0, 0.5;
  const double t = 0.3;
  const Vector force = eval_force(fs, chart, p, v, t);
  // g^-1 dV with g = diag(1, r^2).
  const double dVr = 2 * 2.0 * std::cos(0.5) + t, dVth = -4.0 * std::sin(0.5);
  EXPECT_NEAR(force[0], -dVr, 1e-14);
  EXPECT_NEAR(force[1], -dVth / 4.0, 1e-14);
  EXPECT_NEAR(fs.dVdt_at(p, t), 2.0, 1e-14);
  EXPECT_TRUE(external_field(fs, chart, p, t).isApprox(force));
}

TEST(Forces, RejectsInconsistentFields) {
  ForceSystem::Fields both;
  both.X = ExprVector{expr::parse("1")};
  both.V = expr::parse("x");
  EXPECT_THROW(ForceSystem({"x"}, "t", both), Error);
  ForceSystem::Fields wrong;
  wrong.X = ExprVector{expr::parse("1"), expr::parse("2")};
  EXPECT_THROW(ForceSystem({"x"}, "t", wrong), Error);
  ForceSystem::Fields foreign;
  foreign.X = ExprVector{expr::parse("q")};
  EXPECT_THROW(ForceSystem({"x"}, "t", foreign), Error);
}

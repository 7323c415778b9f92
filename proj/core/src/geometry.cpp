#include "trajkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trajkit/quadrature.hpp"

namespace trajkit {

GeometryError::GeometryError(Kind kind, double determinant, std::string what)
    : Error(std::move(what)), kind_(kind), determinant_(determinant) {}

Vector Christoffel::contract(const Vector& v, const Vector& w) const {
  Vector out = Vector::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) {
      if (v[j] == 0.0) continue;
      for (int k = 0; k < dim_; ++k) s += (*this)(i, j, k) * v[j] * w[k];
    }
    out[i] = s;
  }
  return out;
}

ManifoldChart::ManifoldChart(std::vector<std::string> coordinates, ExprMatrix metric,
                             Signature signature)
    : coords_(std::move(coordinates)), metric_(std::move(metric)), signature_(signature) {
  const int n = dim();
  if (n <= 0) throw PreconditionError("chart dimension must be positive");
  for (int i = 0; i < n; ++i) {
    const auto& name = coords_[i];
    if (name.empty()) throw PreconditionError("coordinate names must be non-empty");
    const auto& fns = expr::function_names();
    if (std::find(fns.begin(), fns.end(), name) != fns.end())
      throw PreconditionError("coordinate name '" + name + "' is a function name");
    if (std::find(coords_.begin(), coords_.begin() + i, name) != coords_.begin() + i)
      throw PreconditionError("coordinate '" + name + "' is repeated");
  }
  if (static_cast<int>(metric_.size()) != n)
    throw PreconditionError("metric must have one row per coordinate");
  for (const auto& row : metric_)
    if (static_cast<int>(row.size()) != n) throw PreconditionError("metric must be square");

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!expr::same_tree(metric_[i][j], metric_[j][i]) &&
          metric_[i][j].to_string() != metric_[j][i].to_string()) {
        std::ostringstream os;
        os << "metric is not symmetric: g" << i + 1 << j + 1 << " = " << metric_[i][j].to_string()
           << " but g" << j + 1 << i + 1 << " = " << metric_[j][i].to_string();
        throw PreconditionError(os.str());
      }
    }
  }

  bool constant = true;
  g_.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g_.emplace_back(metric_[i][j], coords_);
  dg_.reserve(static_cast<std::size_t>(n * n * n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        auto d = expr::differentiate(metric_[i][j], coords_[k]);
        if (!d.is_constant(0.0)) constant = false;
        dg_.emplace_back(d, coords_);
      }
    }
  }
  mode_ = constant ? DistanceMode::ExactFlat : DistanceMode::ChordUpperBound;
}

Matrix ManifoldChart::raw_metric_at(const Vector& p) const {
  const int n = dim();
  if (p.size() != n) throw PreconditionError("point has wrong dimension");
  Matrix g(n, n);
  const std::span<const double> values(p.data(), static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = g_[static_cast<std::size_t>(i * n + j)](values);
  return g;
}

Matrix ManifoldChart::metric_at(const Vector& p) const {
  Matrix g = raw_metric_at(p);
  if (!g.allFinite())
    throw GeometryError(GeometryError::Kind::NonFinite, NAN, "metric has non-finite entries");
  const double det = g.determinant();
  if (!(std::abs(det) > kDegeneracyThreshold)) {
    std::ostringstream os;
    os << "degenerate metric: det g = " << det;
    throw GeometryError(GeometryError::Kind::Degenerate, det, os.str());
  }
  if (riemannian()) {
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "metric is not positive definite (det g = " << det << ")";
      throw GeometryError(GeometryError::Kind::NotPositiveDefinite, det, os.str());
    }
  }
  return g;
}

std::vector<Matrix> ManifoldChart::metric_derivatives_at(const Vector& p) const {
  const int n = dim();
  std::vector<Matrix> dg(static_cast<std::size_t>(n), Matrix(n, n));
  const std::span<const double> values(p.data(), static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dg[static_cast<std::size_t>(k)](i, j) =
            dg_[static_cast<std::size_t>((k * n + i) * n + j)](values);
  return dg;
}

Christoffel ManifoldChart::christoffel(const Vector& p) const {
  const int n = dim();
  const Matrix g = metric_at(p);
  Christoffel gamma(n);
  if (mode_ == DistanceMode::ExactFlat) return gamma;
  const Matrix ginv = g.inverse();
  const auto dg = metric_derivatives_at(p);
  // First kind: [jk, l] = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
  std::vector<double> first(static_cast<std::size_t>(n * n * n));
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        first[static_cast<std::size_t>((l * n + j) * n + k)] =
            0.5 * (dg[static_cast<std::size_t>(j)](l, k) + dg[static_cast<std::size_t>(k)](l, j) -
                   dg[static_cast<std::size_t>(l)](j, k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(i, l) * first[static_cast<std::size_t>((l * n + j) * n + k)];
        gamma(i, j, k) = s;
        gamma(i, k, j) = s;
      }
  return gamma;
}

double ManifoldChart::inner(const Vector& p, const Vector& v, const Vector& w) const {
  return v.dot(raw_metric_at(p) * w);
}

Matrix metric_at(const ManifoldChart& chart, const Vector& p) { return chart.metric_at(p); }

Christoffel christoffel(const ManifoldChart& chart, const Vector& p) {
  return chart.christoffel(p);
}

ChartDistance chart_distance(const ManifoldChart& chart, const Vector& p, const Vector& q) {
  const Vector delta = q - p;
  if (chart.distance_mode() == DistanceMode::ExactFlat) {
    const double s = chart.inner(p, delta, delta);
    return {std::sqrt(std::max(s, 0.0)), true};
  }
  auto speed = [&](double s) {
    const Vector x = p + s * delta;
    return std::sqrt(std::abs(chart.inner(x, delta, delta)));
  };
  quadrature::AdaptiveOptions opts;
  opts.rel_tol = 1e-12;
  opts.abs_tol = 1e-15;
  return {quadrature::integrate(speed, 0.0, 1.0, opts).value, false};
}

namespace charts {

using expr::Expression;

namespace {

ExprMatrix zeros(int n) {
  return ExprMatrix(static_cast<std::size_t>(n),
                    ExprVector(static_cast<std::size_t>(n), Expression::constant(0.0)));
}

}  // namespace

ManifoldChart euclidean(int dim) {
  std::vector<std::string> names;
  if (dim == 1) {
    names = {"x"};
  } else if (dim == 2) {
    names = {"x", "y"};
  } else if (dim == 3) {
    names = {"x", "y", "z"};
  } else {
    for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  }
  ExprMatrix g = zeros(dim);
  for (int i = 0; i < dim; ++i) g[i][i] = Expression::constant(1.0);
  return ManifoldChart(std::move(names), std::move(g));
}

ManifoldChart polar() {
  ExprMatrix g = zeros(2);
  g[0][0] = Expression::constant(1.0);
  g[1][1] = expr::parse("r^2");
  return ManifoldChart({"r", "theta"}, std::move(g));
}

ManifoldChart hyperbolic() {
  ExprMatrix g = zeros(2);
  g[0][0] = expr::parse("1/y^2");
  g[1][1] = expr::parse("1/y^2");
  return ManifoldChart({"x", "y"}, std::move(g));
}

ManifoldChart pp_wave(const Expression& profile) {
  ExprMatrix g = zeros(4);
  g[0][0] = Expression::constant(1.0);
  g[1][1] = Expression::constant(1.0);
  g[2][2] = profile;
  g[2][3] = Expression::constant(1.0);
  g[3][2] = Expression::constant(1.0);
  return ManifoldChart({"x", "y", "u", "v"}, std::move(g), Signature::PseudoRiemannian);
}

ManifoldChart product_with_line(const ManifoldChart& base, const std::string& extra) {
  const int n = base.dim();
  ExprMatrix g = zeros(n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g[i][j] = base.metric()[i][j];
  g[n][n] = Expression::constant(1.0);
  auto names = base.coordinates();
  names.push_back(extra);
  return ManifoldChart(std::move(names), std::move(g), base.signature());
}

}  // namespace charts

}  // namespace trajkit

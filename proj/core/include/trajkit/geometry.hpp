#pragma once

#include <string>
#include <vector>

#include "trajkit/error.hpp"
#include "trajkit/expr.hpp"
#include "trajkit/linalg.hpp"

namespace trajkit {

enum class Signature { Riemannian, PseudoRiemannian };

// ExactFlat: the metric has constant entries, so straight chart segments are
// minimizing and their length is the Riemannian distance.
enum class DistanceMode { ExactFlat, ChordUpperBound };

class GeometryError : public Error {
 public:
  enum class Kind { Degenerate, NotPositiveDefinite, NonFinite };
  GeometryError(Kind kind, double determinant, std::string what);
  Kind kind() const { return kind_; }
  double determinant() const { return determinant_; }

 private:
  Kind kind_;
  double determinant_;
};

// Christoffel symbols of the second kind, Gamma^i_{jk}, stored densely.
class Christoffel {
 public:
  explicit Christoffel(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim), 0.0) {}
  int dim() const { return dim_; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }

  // Returns the vector Gamma^i_{jk} v^j w^k.
  Vector contract(const Vector& v, const Vector& w) const;

 private:
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>((i * dim_ + j) * dim_ + k);
  }
  int dim_;
  std::vector<double> data_;
};

using ExprMatrix = std::vector<std::vector<expr::Expression>>;
using ExprVector = std::vector<expr::Expression>;

// A manifold covered by one global chart, with a time-independent metric
// given symbolically in the chart coordinates.
class ManifoldChart {
 public:
  ManifoldChart(std::vector<std::string> coordinates, ExprMatrix metric,
                Signature signature = Signature::Riemannian);

  int dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<std::string>& coordinates() const { return coords_; }
  const ExprMatrix& metric() const { return metric_; }
  Signature signature() const { return signature_; }
  DistanceMode distance_mode() const { return mode_; }
  bool riemannian() const { return signature_ == Signature::Riemannian; }

  // Evaluated metric; throws GeometryError when |det g| <= 1e-12 or, for
  // Riemannian charts, when g is not positive definite.
  Matrix metric_at(const Vector& p) const;
  // Evaluated metric without the nondegeneracy checks.
  Matrix raw_metric_at(const Vector& p) const;
  // dg[k](i, j) = d g_ij / d x^k, from exact symbolic derivatives.
  std::vector<Matrix> metric_derivatives_at(const Vector& p) const;
  Christoffel christoffel(const Vector& p) const;

  double inner(const Vector& p, const Vector& v, const Vector& w) const;

 private:
  std::vector<std::string> coords_;
  ExprMatrix metric_;
  Signature signature_;
  DistanceMode mode_ = DistanceMode::ChordUpperBound;
  std::vector<expr::Program> g_;   // dim*dim
  std::vector<expr::Program> dg_;  // dim*dim*dim, index (k*dim + i)*dim + j
};

inline constexpr double kDegeneracyThreshold = 1e-12;

Matrix metric_at(const ManifoldChart& chart, const Vector& p);
Christoffel christoffel(const ManifoldChart& chart, const Vector& p);

struct ChartDistance {
  double value = 0.0;
  bool exact = false;
};

// Metric length of the straight chart segment from p to q. Equal to the
// distance for ExactFlat charts, an upper bound otherwise.
ChartDistance chart_distance(const ManifoldChart& chart, const Vector& p, const Vector& q);

namespace charts {

ManifoldChart euclidean(int dim);
// Coordinates (r, theta), g = dr^2 + r^2 dtheta^2.
ManifoldChart polar();
// Upper half-plane (x, y), g = (dx^2 + dy^2) / y^2.
ManifoldChart hyperbolic();
// Coordinates (x, y, u, v), ds^2 = dx^2 + dy^2 + 2 du dv + H(x, y, u) du^2.
ManifoldChart pp_wave(const expr::Expression& profile);
// Block metric g + ds^2 on M x R, the extra coordinate named `extra`.
ManifoldChart product_with_line(const ManifoldChart& base, const std::string& extra);

}  // namespace charts

}  // namespace trajkit

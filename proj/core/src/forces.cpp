#include "trajkit/forces.hpp"

#include <algorithm>

namespace trajkit {

ForceSystem::ForceSystem(std::vector<std::string> coordinates, std::string time, Fields fields,
                         std::optional<int> gradient_dims)
    : coords_(std::move(coordinates)), time_(std::move(time)), fields_(std::move(fields)) {
  const int n = dim();
  if (std::find(coords_.begin(), coords_.end(), time_) != coords_.end())
    throw PreconditionError("time variable '" + time_ + "' clashes with a coordinate");
  if (fields_.X && fields_.V)
    throw PreconditionError("a force system carries X or V, not both");
  gradient_dims_ = gradient_dims.value_or(n);
  if (gradient_dims_ < 0 || gradient_dims_ > n)
    throw PreconditionError("gradient_dims out of range");

  std::vector<std::string> names = coords_;
  names.push_back(time_);
  auto note = [&](const expr::Expression& e) {
    if (e.mentions(time_)) autonomous_ = false;
  };

  if (fields_.F) {
    if (static_cast<int>(fields_.F->size()) != n)
      throw PreconditionError("F must have one row per coordinate");
    for (const auto& row : *fields_.F) {
      if (static_cast<int>(row.size()) != n) throw PreconditionError("F must be square");
      for (const auto& e : row) {
        note(e);
        F_.emplace_back(e, names);
      }
    }
  }
  if (fields_.X) {
    if (static_cast<int>(fields_.X->size()) != n)
      throw PreconditionError("X must have one component per coordinate");
    for (const auto& e : *fields_.X) {
      note(e);
      X_.emplace_back(e, names);
    }
  }
  if (fields_.V) {
    note(*fields_.V);
    V_ = expr::Program(*fields_.V, names);
    for (int i = 0; i < n; ++i) {
      if (i < gradient_dims_)
        dV_.emplace_back(expr::differentiate(*fields_.V, coords_[static_cast<std::size_t>(i)]), names);
      else
        dV_.emplace_back(expr::Expression::constant(0.0), names);
    }
    dVdt_ = expr::Program(expr::differentiate(*fields_.V, time_), names);
  }
}

bool ForceSystem::has_nonsmooth() const {
  if (fields_.F)
    for (const auto& row : *fields_.F)
      for (const auto& e : row)
        if (e.has_nonsmooth()) return true;
  if (fields_.X)
    for (const auto& e : *fields_.X)
      if (e.has_nonsmooth()) return true;
  return fields_.V && fields_.V->has_nonsmooth();
}

std::vector<double> ForceSystem::slots(const Vector& p, double t) const {
  if (p.size() != dim()) throw PreconditionError("point has wrong dimension");
  std::vector<double> s(p.data(), p.data() + p.size());
  s.push_back(t);
  return s;
}

Matrix ForceSystem::F_at(const Vector& p, double t) const {
  const int n = dim();
  Matrix F = Matrix::Zero(n, n);
  if (!fields_.F) return F;
  const auto s = slots(p, t);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) F(i, j) = F_[static_cast<std::size_t>(i * n + j)](s);
  return F;
}

Vector ForceSystem::X_at(const Vector& p, double t) const {
  const int n = dim();
  Vector X = Vector::Zero(n);
  if (!fields_.X) return X;
  const auto s = slots(p, t);
  for (int i = 0; i < n; ++i) X[i] = X_[static_cast<std::size_t>(i)](s);
  return X;
}

double ForceSystem::V_at(const Vector& p, double t) const {
  if (!fields_.V) return 0.0;
  return V_(slots(p, t));
}

Vector ForceSystem::dV_at(const Vector& p, double t) const {
  const int n = dim();
  Vector d = Vector::Zero(n);
  if (!fields_.V) return d;
  const auto s = slots(p, t);
  for (int i = 0; i < n; ++i) d[i] = dV_[static_cast<std::size_t>(i)](s);
  return d;
}

double ForceSystem::dVdt_at(const Vector& p, double t) const {
  if (!fields_.V) return 0.0;
  return dVdt_(slots(p, t));
}

Decomposition decompose(const Matrix& F, const Matrix& g) {
  const Matrix adjoint = g.inverse() * F.transpose() * g;
  Decomposition d;
  d.S = 0.5 * (F + adjoint);
  d.H = F - d.S;
  return d;
}

Decomposition decompose(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                        double t) {
  if (!system.has_F()) throw PreconditionError("decompose requires a force tensor F");
  return decompose(system.F_at(p, t), chart.metric_at(p));
}

Vector gradient_field(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                      double t) {
  if (!system.has_V()) throw PreconditionError("gradient_field requires a potential V");
  const Matrix g = chart.metric_at(p);
  return g.partialPivLu().solve(system.dV_at(p, t));
}

Vector external_field(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                      double t) {
  if (system.has_V()) return -gradient_field(system, chart, p, t);
  return system.X_at(p, t);
}

Vector eval_force(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                  const Vector& v, double t) {
  if (v.size() != system.dim()) throw PreconditionError("velocity has wrong dimension");
  Vector out = external_field(system, chart, p, t);
  if (system.has_F()) out += system.F_at(p, t) * v;
  return out;
}

}  // namespace trajkit

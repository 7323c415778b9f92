#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trajkit/geometry.hpp"

namespace trajkit {

// The velocity-linear force tensor F(p, t), the external field X(p, t) and
// the optional potential V(p, t) of a trajectory equation. When V is set the
// external field is -grad V (spatial gradient only) and is never stored.
class ForceSystem {
 public:
  struct Fields {
    std::optional<ExprMatrix> F;
    std::optional<ExprVector> X;
    std::optional<expr::Expression> V;
  };

  ForceSystem() = default;
  // `coordinates` and `time` name the variables the expressions may use.
  // `gradient_dims` restricts grad V to the leading coordinates (used by the
  // product lift, whose extra coordinate is the former time).
  ForceSystem(std::vector<std::string> coordinates, std::string time, Fields fields,
              std::optional<int> gradient_dims = std::nullopt);

  int dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<std::string>& coordinates() const { return coords_; }
  const std::string& time_name() const { return time_; }
  const Fields& fields() const { return fields_; }
  int gradient_dims() const { return gradient_dims_; }

  bool has_F() const { return fields_.F.has_value(); }
  bool has_X() const { return fields_.X.has_value(); }
  bool has_V() const { return fields_.V.has_value(); }
  // No expression mentions the time variable.
  bool autonomous() const { return autonomous_; }
  bool has_nonsmooth() const;

  Matrix F_at(const Vector& p, double t) const;
  Vector X_at(const Vector& p, double t) const;
  double V_at(const Vector& p, double t) const;
  // Coordinate partials dV/dx^i (zero beyond gradient_dims).
  Vector dV_at(const Vector& p, double t) const;
  // dV/dt; exposed for the analysis module, never part of the force.
  double dVdt_at(const Vector& p, double t) const;

 private:
  std::vector<double> slots(const Vector& p, double t) const;

  std::vector<std::string> coords_;
  std::string time_ = "t";
  Fields fields_;
  int gradient_dims_ = 0;
  bool autonomous_ = true;
  std::vector<expr::Program> F_;
  std::vector<expr::Program> X_;
  expr::Program V_;
  std::vector<expr::Program> dV_;
  expr::Program dVdt_;
};

struct Decomposition {
  Matrix S;  // g-self-adjoint part
  Matrix H;  // g-skew-adjoint part
};

// S = (F + g^-1 F^T g) / 2, H = F - S.
Decomposition decompose(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                        double t);
Decomposition decompose(const Matrix& F, const Matrix& g);

// g^-1 dV, the metric gradient of p -> V(p, t).
Vector gradient_field(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                      double t);

// F v + X, with X = -grad V when a potential is present.
Vector eval_force(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                  const Vector& v, double t);

// The external field alone (X or -grad V, zero when neither is present).
Vector external_field(const ForceSystem& system, const ManifoldChart& chart, const Vector& p,
                      double t);

}  // namespace trajkit

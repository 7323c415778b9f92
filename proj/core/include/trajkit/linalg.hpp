#pragma once

#include <Eigen/Dense>

namespace trajkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace trajkit

#pragma once

#include <Eigen/Dense>

namespace smn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace smn

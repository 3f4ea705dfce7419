#pragma once

#include <Eigen/Dense>

namespace deltacert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace deltacert

#pragma once

#include <Eigen/Dense>

namespace polydist {

using Eigen::ArrayXd;
using Eigen::ArrayXi;
using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace polydist

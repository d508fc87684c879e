#pragma once

#include <Eigen/Core>

namespace cobras {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace cobras

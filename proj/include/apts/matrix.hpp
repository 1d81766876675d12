#pragma once

#include <Eigen/Core>

namespace apts {

/// Row-major dense matrix; rows are samples.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace apts

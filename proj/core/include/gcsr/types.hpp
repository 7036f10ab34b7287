#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace gcsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Labels = std::vector<int>;
using NodeList = std::vector<int>;

}  // namespace gcsr

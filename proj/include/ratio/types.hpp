#ifndef RATIO_TYPES_HPP
#define RATIO_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ratio {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Point2 = Eigen::Vector2d;

enum class PriorKind { Uniform, Gaussian };

} // namespace ratio

#endif

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hamlearn/poly_basis.hpp"

namespace hamlearn::detail {

// Fills g (dim_v x (count * dims), column-major) with the gradients of the
// nonconstant basis functions at points[begin, begin + count): column
// k * dims + m holds d phi_j / d x_m at point k.
void gradient_columns(const TotalDegreeBasis& basis, std::span<const double> points,
                      std::size_t begin, std::size_t count, Eigen::MatrixXd& g, unsigned threads);

// Mean gradient Gram (1/P) sum_x sum_m g_m g_m^T over points, optionally
// weighted (weights.size() == P, replacing 1/P).
Eigen::MatrixXd gradient_gram(const TotalDegreeBasis& basis, std::span<const double> points,
                              std::span<const double> weights, unsigned threads);

// Inverse square root of a symmetric positive definite Gram matrix; throws
// RankDeficiencyError naming the basis functions that dominate null directions.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& gram, const TotalDegreeBasis& basis,
                             double rel_cutoff = 1e-12);

}  // namespace hamlearn::detail

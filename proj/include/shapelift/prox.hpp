#pragma once

#include "shapelift/types.hpp"

#include <Eigen/Core>

namespace shapelift {

/// Thin SVD a = left * singulars.asDiagonal() * right', singular values in
/// nonincreasing order; left is m x r, right is n x r with r = min(m, n).
struct SingularDecomposition {
  Eigen::MatrixXd left;
  Eigen::VectorXd singulars;
  Eigen::MatrixXd right;
};

SingularDecomposition thin_svd(const Eigen::MatrixXd& a);

/// Euclidean projection onto { x : ||x||_1 <= radius }. Exact
/// sort-and-threshold solution; radius must be positive.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

/// prox of lambda * ||.||_inf. Computed through the Moreau identity as
/// v - lambda * P_l1(v / lambda); lambda must be positive.
Eigen::VectorXd prox_linf(const Eigen::VectorXd& v, double lambda);

/// prox of lambda * ||.||_2 (matrix spectral norm): the unique minimizer of
/// 0.5 * ||y - x||_F^2 + lambda * ||x||_2. Applies prox_linf to the singular
/// values and recomposes.
Eigen::MatrixXd prox_spectral(const Eigen::MatrixXd& y, double lambda);

/// Same operator specialized to two-row matrices: the singular structure is
/// read off a closed-form 2x2 symmetric eigendecomposition of y*y', avoiding
/// a general SVD. Agrees with prox_spectral to rounding error.
Matrix23d prox_spectral_2x3(const Matrix23d& y, double lambda);

}  // namespace shapelift

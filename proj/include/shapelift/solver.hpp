#pragma once

#include "shapelift/types.hpp"

#include <vector>

namespace shapelift {

/// One motion block M_i = c_i * Rbar_i: a nonnegative scale times the first
/// two rows of a rotation.
using MotionMatrix = Matrix23d;

/// Motion blocks concatenated as column-triplets of a 2 x 3k matrix.
struct StackedMotion {
  Eigen::Matrix2Xd stacked;

  StackedMotion() = default;
  explicit StackedMotion(Eigen::Matrix2Xd m);
  static StackedMotion zero(Eigen::Index k);

  Eigen::Index block_count() const { return stacked.cols() / 3; }
  MotionMatrix block(Eigen::Index i) const { return stacked.middleCols<3>(3 * i); }
  void set_block(Eigen::Index i, const MotionMatrix& m) {
    stacked.middleCols<3>(3 * i) = m;
  }

  /// Largest spectral norm over blocks.
  double max_block_norm() const;
};

struct SolverOptions {
  double lambda = 0.1;       ///< spectral-norm penalty weight (penalized fit)
  double mu_init = 1.0;      ///< initial augmented-Lagrangian parameter
  double tolerance = 1e-4;   ///< scaled primal/dual residual threshold
  int max_iterations = 500;
  bool adaptive_mu = true;   ///< residual-balancing updates of mu
};

/// ADMM iterates. m_tilde carries the prox-constrained variable, z the
/// data-coupled copy, y the scaled-by-mu dual on m_tilde = z.
struct SolverState {
  Eigen::Matrix2Xd m_tilde;
  Eigen::Matrix2Xd z;
  Eigen::Matrix2Xd y;
  double mu = 1.0;
  int iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

enum class FitMode { Penalized, Constrained };

struct PoseRecovery {
  double coeff = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  bool active = false;
};

struct SolveResult {
  StackedMotion motion;
  Eigen::VectorXd coeffs;                  ///< spectral norms, one per block
  std::vector<Eigen::Matrix3d> rotations;  ///< identity for inactive blocks
  Shape3D shape;                           ///< composed from the recovered poses
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXd tightness;  ///< sigma1/sigma2 - 1 per block, 0 when inactive
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
};

/// Penalized fit: min over M of 0.5 * ||W - sum_i M_i B_i||_F^2 (visible
/// landmarks only) + lambda * sum_i ||M_i||_2, solved by ADMM. The input is
/// centralized first; the dictionary must hold centered bases.
SolveResult solve_noisy(const LandmarkSet2D& w, const ShapeDictionary& dict,
                        double lambda, const SolverOptions& opts = {});

/// Noiseless fit: min sum_i ||M_i||_2 subject to W = sum_i M_i B_i. Requires
/// all landmarks visible and a consistent (feasible) observation; throws
/// std::runtime_error("infeasible constraint") otherwise.
SolveResult solve_noiseless(const LandmarkSet2D& w, const ShapeDictionary& dict,
                            const SolverOptions& opts = {});

/// One prox step: blockwise prox of the spectral norm at level lambda / mu,
/// applied to z - y / mu.
StackedMotion admm_update_m(const SolverState& state, double lambda);

/// Quadratic (penalized) or affine-projection (constrained) update of z given
/// the current m_tilde and y. b_tilde is the 3k x p stacked dictionary; w
/// supplies the observed columns and their visibility.
Eigen::Matrix2Xd admm_update_z(const SolverState& state, const LandmarkSet2D& w,
                               const Eigen::MatrixXd& b_tilde, FitMode mode);

/// Splits a motion block into coeff = sigma_1(m) and the nearest rotation
/// (polar factor completed by cross product). Blocks with coeff below the
/// threshold are reported inactive with identity rotation and coeff 0.
PoseRecovery recover_pose(const MotionMatrix& m, double inactive_threshold = 1e-12);

/// Recovers every pose and composes sum_i c_i Rbar_i B_i. Inactive blocks use
/// a relative threshold max(1e-12, 1e-6 * max_j ||M_j||_2).
Shape3D reconstruct_shape(const StackedMotion& motion, const ShapeDictionary& dict);

}  // namespace shapelift

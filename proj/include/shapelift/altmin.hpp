#pragma once

#include "shapelift/solver.hpp"
#include "shapelift/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace shapelift {

struct AltMinOptions {
  int max_outer_iterations = 200;
  double outer_tolerance = 1e-6;     ///< relative objective decrease
  int max_lasso_iterations = 5000;
  double lasso_gap = 1e-8;           ///< duality-gap target of the l1 subproblem
  int max_rotation_steps = 100;
  double rotation_tolerance = 1e-8;  ///< Riemannian gradient norm
};

/// Iterates of the alternating baseline: per-basis coefficients and one
/// shared truncated rotation with orthonormal rows.
struct AltMinState {
  Eigen::VectorXd coeffs;
  Matrix23d rbar = Matrix23d::Zero();
  std::vector<double> objective_history;  ///< nonincreasing per alternation
};

/// Initialization policy: the dictionary mean shape, or a warm start from a
/// previous solve (typically the convex solver's output). A warm start built
/// from a SolveResult also seeds the rotation with the dominant active
/// block's pose; otherwise the rotation starts from a polar fit of the
/// initialization shape against the observations.
struct AltMinInit {
  enum class Kind { MeanShape, WarmStart };
  Kind kind = Kind::MeanShape;
  Shape3D shape;                       ///< starting shape when warm-started
  std::optional<Matrix23d> rbar_seed;  ///< starting rotation, when known

  static AltMinInit mean_shape() { return {}; }
  static AltMinInit warm_start(const SolveResult& from);
  static AltMinInit warm_start(Shape3D s) {
    return {Kind::WarmStart, std::move(s), std::nullopt};
  }
};

struct AltMinResult {
  AltMinState state;
  Shape3D shape;  ///< completed rotation applied to sum_i c_i B_i
};

/// Local minimization of 0.5 * ||W - Rbar * sum_i c_i B_i||_F^2 (visible
/// landmarks) + lambda * ||c||_1 over c and Rbar with orthonormal rows, by
/// alternating the two updates below. Always returns a local optimum.
AltMinResult solve_altmin(const LandmarkSet2D& w, const ShapeDictionary& dict,
                          double lambda, const AltMinInit& init = {},
                          const AltMinOptions& opts = {});

/// Solves the coefficient lasso for fixed rbar by proximal gradient with
/// backtracking, warm-started at `coeffs`, to the configured duality gap.
/// Coefficients are unconstrained in sign.
Eigen::VectorXd update_coeffs_l1(const LandmarkSet2D& w, const ShapeDictionary& dict,
                                 const Matrix23d& rbar, const Eigen::VectorXd& coeffs,
                                 double lambda, const AltMinOptions& opts = {});

/// Monotone descent on 0.5 * ||W - Rbar * S||_F^2 over { Rbar : Rbar Rbar' = I }
/// by projected gradient with polar retraction and Armijo backtracking, where
/// S = sum_i coeffs[i] B_i. A zero composite shape returns the input unchanged.
Matrix23d update_rotation_stiefel(const LandmarkSet2D& w, const ShapeDictionary& dict,
                                  const Eigen::VectorXd& coeffs, const Matrix23d& rbar,
                                  const AltMinOptions& opts = {});

}  // namespace shapelift

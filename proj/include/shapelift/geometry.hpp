#pragma once

#include "shapelift/types.hpp"

namespace shapelift {

/// Shifts each row so that its visible columns have zero mean; invisible
/// columns are moved by the same per-row offset. Throws std::invalid_argument
/// ("no visible landmarks") when the mask is all false.
LandmarkSet2D centralize(const LandmarkSet2D& landmarks);

/// Shifts each coordinate row of the shape to zero mean.
Shape3D centralize_shape(const Shape3D& shape);

/// Weak perspective: the first two rows of alpha * (R * S + t * 1'). Every
/// output landmark is marked visible. Throws std::invalid_argument when the
/// camera rotation is not a proper rotation or alpha <= 0.
LandmarkSet2D project_weak_perspective(const Shape3D& shape,
                                       const CameraModel& camera);

/// S = sum_i coeffs[i] * rotations[i] * bases[i]. Sizes must agree with the
/// dictionary.
Shape3D compose_shape(const ShapeDictionary& dict, const Eigen::VectorXd& coeffs,
                      const std::vector<Eigen::Matrix3d>& rotations);

struct ProcrustesResult {
  SimilarityTransform transform;
  Shape3D aligned;   ///< transform applied to the source
  double residual;   ///< Frobenius distance to the target after alignment
};

/// Best similarity registration of source onto target: minimizes
/// ||target - (s R source + t 1')||_F over s >= 0, proper rotation R and
/// translation t. Throws std::runtime_error("degenerate shape") when the
/// centered source has no extent or the optimal scale collapses to zero.
ProcrustesResult procrustes_align(const Shape3D& source, const Shape3D& target);

/// Similarity-invariant relative error: Frobenius distance between the
/// aligned estimate and the truth, divided by the Frobenius norm of the
/// centered truth. A degenerate estimate yields 1 (the aligned estimate is
/// taken as the zero shape); a degenerate truth is invalid_argument.
double reconstruction_error(const Shape3D& estimate, const Shape3D& truth);

/// Completes a 2x3 matrix with orthonormal rows to a proper rotation: the
/// third row is the cross product of the first two.
Eigen::Matrix3d complete_rotation(const Matrix23d& rbar);

}  // namespace shapelift

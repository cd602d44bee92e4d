#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>
#include <utility>
#include <vector>

namespace shapelift {

using Matrix23d = Eigen::Matrix<double, 2, 3>;
using VisibilityMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Landmarks observed in one image: a 2 x p matrix of image coordinates and a
/// per-landmark visibility mask. Coordinates of invisible landmarks are kept
/// but carry no information.
struct LandmarkSet2D {
  Eigen::Matrix2Xd points;
  VisibilityMask visibility;

  LandmarkSet2D() = default;
  explicit LandmarkSet2D(Eigen::Matrix2Xd pts)
      : points(std::move(pts)),
        visibility(VisibilityMask::Constant(points.cols(), true)) {}
  LandmarkSet2D(Eigen::Matrix2Xd pts, VisibilityMask vis);

  Eigen::Index landmark_count() const { return points.cols(); }
  Eigen::Index visible_count() const { return visibility.count(); }

  /// Visible columns packed left to right, in landmark order.
  Eigen::Matrix2Xd visible_points() const;
};

/// A 3D shape: 3 x p matrix whose columns are points.
struct Shape3D {
  Eigen::Matrix3Xd points;

  Shape3D() = default;
  explicit Shape3D(Eigen::Matrix3Xd pts) : points(std::move(pts)) {}

  Eigen::Index landmark_count() const { return points.cols(); }
};

/// An ordered set of basis shapes sharing one landmark layout.
struct ShapeDictionary {
  std::vector<Shape3D> bases;
  std::vector<std::string> labels;  ///< optional landmark names, empty or one per landmark

  Eigen::Index size() const { return static_cast<Eigen::Index>(bases.size()); }
  Eigen::Index landmark_count() const {
    return bases.empty() ? 0 : bases.front().landmark_count();
  }

  /// Bases stacked as row-triplets: rows 3i..3i+2 hold basis i. 3k x p.
  Eigen::MatrixXd stacked() const;

  /// Plain average of the basis shapes.
  Shape3D mean_shape() const;

  /// True when every basis has (near) zero mean in each coordinate row.
  bool is_centered(double tol = 1e-8) const;

  /// Throws std::invalid_argument when empty, landmark counts disagree, or a
  /// label list of the wrong length is present.
  void validate() const;
};

/// Weak-perspective camera: scaled orthographic projection after a rigid move.
struct CameraModel {
  double alpha = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Shape3D apply(const Shape3D& shape) const;
};

/// True when r'r = I and det(r) = 1 within tol.
bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

}  // namespace shapelift

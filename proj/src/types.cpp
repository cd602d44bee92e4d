#include "shapelift/types.hpp"

#include <cmath>
#include <stdexcept>

namespace shapelift {

LandmarkSet2D::LandmarkSet2D(Eigen::Matrix2Xd pts, VisibilityMask vis)
    : points(std::move(pts)), visibility(std::move(vis)) {
  if (visibility.size() != points.cols()) {
    throw std::invalid_argument("visibility mask size mismatch");
  }
}

Eigen::Matrix2Xd LandmarkSet2D::visible_points() const {
  Eigen::Matrix2Xd out(2, visible_count());
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    if (visibility[i]) out.col(j++) = points.col(i);
  }
  return out;
}

Eigen::MatrixXd ShapeDictionary::stacked() const {
  const Eigen::Index p = landmark_count();
  Eigen::MatrixXd b(3 * size(), p);
  for (Eigen::Index i = 0; i < size(); ++i) {
    b.middleRows<3>(3 * i) = bases[static_cast<std::size_t>(i)].points;
  }
  return b;
}

Shape3D ShapeDictionary::mean_shape() const {
  if (bases.empty()) throw std::invalid_argument("empty dictionary");
  Eigen::Matrix3Xd acc = Eigen::Matrix3Xd::Zero(3, landmark_count());
  for (const Shape3D& b : bases) acc += b.points;
  return Shape3D(acc / static_cast<double>(size()));
}

bool ShapeDictionary::is_centered(double tol) const {
  for (const Shape3D& b : bases) {
    const Eigen::Vector3d means = b.points.rowwise().mean();
    const double scale = std::max(1.0, b.points.norm());
    if (means.cwiseAbs().maxCoeff() > tol * scale) return false;
  }
  return true;
}

void ShapeDictionary::validate() const {
  if (bases.empty()) throw std::invalid_argument("empty dictionary");
  const Eigen::Index p = bases.front().landmark_count();
  if (p < 3) throw std::invalid_argument("dictionary needs at least 3 landmarks");
  for (const Shape3D& b : bases) {
    if (b.landmark_count() != p) {
      throw std::invalid_argument("dictionary bases disagree on landmark count");
    }
    if (!b.points.allFinite()) {
      throw std::invalid_argument("dictionary contains non-finite entries");
    }
  }
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != p) {
    throw std::invalid_argument("label list length mismatch");
  }
}

Shape3D SimilarityTransform::apply(const Shape3D& shape) const {
  Eigen::Matrix3Xd out = scale * (rotation * shape.points);
  out.colwise() += translation;
  return Shape3D(std::move(out));
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace shapelift

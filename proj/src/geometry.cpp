#include "shapelift/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace shapelift {
namespace {

// Proper-rotation Procrustes core on centered point sets: the rotation and
// scale minimizing ||yc - s R xc||_F. trds = sum of sign-corrected singular
// values of yc * xc'; s = trds / ||xc||^2 (zero when degenerate).
struct ProcrustesCore {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale = 0.0;
};

ProcrustesCore procrustes_core(const Eigen::Matrix3Xd& xc, const Eigen::Matrix3Xd& yc) {
  ProcrustesCore out;
  const double xnorm2 = xc.squaredNorm();
  if (xnorm2 == 0.0) return out;

  const Eigen::Matrix3d m = yc * xc.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d[2] = -1.0;
  out.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  out.scale = svd.singularValues().dot(d) / xnorm2;
  return out;
}

}  // namespace

LandmarkSet2D centralize(const LandmarkSet2D& landmarks) {
  const Eigen::Index nv = landmarks.visible_count();
  if (nv == 0) throw std::invalid_argument("no visible landmarks");

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < landmarks.landmark_count(); ++i) {
    if (landmarks.visibility[i]) mean += landmarks.points.col(i);
  }
  mean /= static_cast<double>(nv);

  LandmarkSet2D out = landmarks;
  out.points.colwise() -= mean;
  return out;
}

Shape3D centralize_shape(const Shape3D& shape) {
  Eigen::Matrix3Xd pts = shape.points;
  pts.colwise() -= Eigen::Vector3d(pts.rowwise().mean());
  return Shape3D(std::move(pts));
}

LandmarkSet2D project_weak_perspective(const Shape3D& shape, const CameraModel& camera) {
  if (!is_rotation(camera.rotation)) {
    throw std::invalid_argument("camera rotation is not a proper rotation");
  }
  if (!(camera.alpha > 0.0)) throw std::invalid_argument("camera alpha must be positive");

  Eigen::Matrix3Xd moved = camera.rotation * shape.points;
  moved.colwise() += camera.translation;
  return LandmarkSet2D(camera.alpha * moved.topRows<2>());
}

Shape3D compose_shape(const ShapeDictionary& dict, const Eigen::VectorXd& coeffs,
                      const std::vector<Eigen::Matrix3d>& rotations) {
  dict.validate();
  if (coeffs.size() != dict.size() ||
      static_cast<Eigen::Index>(rotations.size()) != dict.size()) {
    throw std::invalid_argument("coefficient/rotation count mismatch");
  }
  Eigen::Matrix3Xd acc = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
  for (Eigen::Index i = 0; i < dict.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    acc += coeffs[i] * (rotations[idx] * dict.bases[idx].points);
  }
  return Shape3D(std::move(acc));
}

ProcrustesResult procrustes_align(const Shape3D& source, const Shape3D& target) {
  if (source.landmark_count() != target.landmark_count()) {
    throw std::invalid_argument("landmark count mismatch");
  }
  const Eigen::Vector3d xbar = source.points.rowwise().mean();
  const Eigen::Vector3d ybar = target.points.rowwise().mean();
  const Eigen::Matrix3Xd xc = source.points.colwise() - xbar;
  const Eigen::Matrix3Xd yc = target.points.colwise() - ybar;

  const ProcrustesCore core = procrustes_core(xc, yc);
  if (!(core.scale > 0.0)) throw std::runtime_error("degenerate shape");

  ProcrustesResult out;
  out.transform.scale = core.scale;
  out.transform.rotation = core.rotation;
  out.transform.translation = ybar - core.scale * (core.rotation * xbar);
  out.aligned = out.transform.apply(source);
  out.residual = (target.points - out.aligned.points).norm();
  return out;
}

double reconstruction_error(const Shape3D& estimate, const Shape3D& truth) {
  if (estimate.landmark_count() != truth.landmark_count()) {
    throw std::invalid_argument("landmark count mismatch");
  }
  const Eigen::Matrix3Xd yc =
      truth.points.colwise() - Eigen::Vector3d(truth.points.rowwise().mean());
  const double ynorm = yc.norm();
  if (ynorm == 0.0) throw std::invalid_argument("degenerate truth shape");

  const Eigen::Matrix3Xd xc =
      estimate.points.colwise() - Eigen::Vector3d(estimate.points.rowwise().mean());
  const ProcrustesCore core = procrustes_core(xc, yc);
  // A degenerate estimate aligns best as the zero shape: relative error 1.
  if (!(core.scale > 0.0)) return 1.0;
  return (yc - core.scale * (core.rotation * xc)).norm() / ynorm;
}

Eigen::Matrix3d complete_rotation(const Matrix23d& rbar) {
  const double defect = (rbar * rbar.transpose() - Eigen::Matrix2d::Identity()).norm();
  if (defect > 1e-8) throw std::invalid_argument("rows are not orthonormal");
  Eigen::Matrix3d r;
  r.topRows<2>() = rbar;
  r.row(2) = rbar.row(0).cross(rbar.row(1));
  return r;
}

}  // namespace shapelift

#include "shapelift/prox.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shapelift {

SingularDecomposition thin_svd(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  const Eigen::VectorXd mag = v.cwiseAbs();
  if (mag.sum() <= radius) return v;

  // Sort magnitudes descending and find the largest prefix whose soft
  // threshold stays positive: theta = (csum_rho - radius) / rho.
  Eigen::VectorXd u = mag;
  std::sort(u.data(), u.data() + u.size(), std::greater<double>());
  double csum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    csum += u[j];
    const double cand = (csum - radius) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) {
      theta = cand;
    } else {
      break;
    }
  }
  return v.unaryExpr([theta](double x) {
    const double shrunk = std::max(std::abs(x) - theta, 0.0);
    return x < 0.0 ? -shrunk : shrunk;
  });
}

Eigen::VectorXd prox_linf(const Eigen::VectorXd& v, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (lambda == 0.0) return v;
  return v - lambda * project_l1_ball(v / lambda, 1.0);
}

Eigen::MatrixXd prox_spectral(const Eigen::MatrixXd& y, double lambda) {
  if (!y.allFinite()) throw std::invalid_argument("non-finite input");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (lambda == 0.0) return y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd shrunk = prox_linf(svd.singularValues(), lambda);
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

namespace {

// prox of the l_inf norm on an ordered pair s1 >= s2 >= 0: either nothing
// survives, only the top value shrinks, or both are clipped to a common tau.
inline void shrink_pair(double s1, double s2, double lambda, double& o1, double& o2) {
  if (s1 + s2 <= lambda) {
    o1 = o2 = 0.0;
  } else if (s1 - s2 >= lambda) {
    o1 = s1 - lambda;
    o2 = s2;
  } else {
    o1 = o2 = 0.5 * (s1 + s2 - lambda);
  }
}

}  // namespace

Matrix23d prox_spectral_2x3(const Matrix23d& y, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (lambda == 0.0) return y;

  // Singular structure from the 2x2 symmetric eigenproblem of y*y'.
  const double a = y.row(0).squaredNorm();
  const double c = y.row(1).squaredNorm();
  const double b = y.row(0).dot(y.row(1));
  const double mid = 0.5 * (a + c);
  const double root = std::hypot(0.5 * (a - c), b);
  const double s1 = std::sqrt(std::max(mid + root, 0.0));
  const double s2 = std::sqrt(std::max(mid - root, 0.0));

  double n1 = 0.0;
  double n2 = 0.0;
  shrink_pair(s1, s2, lambda, n1, n2);
  if (n1 == 0.0) return Matrix23d::Zero();

  const double f1 = s1 > 0.0 ? n1 / s1 : 0.0;
  const double f2 = s2 > 0.0 ? n2 / s2 : 0.0;
  // Equal shrink factors act as a scalar multiple; this also covers tied
  // singular values, where individual eigenvectors are ill-determined but the
  // operator is not.
  if (f1 == f2) return f1 * y;

  // Eigenvector for the top eigenvalue of [[a, b], [b, c]], picked from the
  // better-conditioned formula.
  Eigen::Vector2d u1;
  const double l1 = mid + root;
  if (std::abs(l1 - a) >= std::abs(l1 - c)) {
    u1 << b, l1 - a;
  } else {
    u1 << l1 - c, b;
  }
  const double len = u1.norm();
  if (len == 0.0) return f1 * y;  // isotropic: any basis works
  u1 /= len;
  const Eigen::Vector2d u2(-u1[1], u1[0]);

  // x = sum_i (n_i / s_i) * u_i * (u_i' y); the expansion over any orthonormal
  // pair is exact, so near-ties stay stable as f1 -> f2.
  return f1 * (u1 * (u1.transpose() * y)) + f2 * (u2 * (u2.transpose() * y));
}

}  // namespace shapelift

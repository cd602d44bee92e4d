#include "shapelift/dict_learn.hpp"

#include "shapelift/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace shapelift {
namespace {

double max_eigenvalue(const Eigen::MatrixXd& sym) {
  if (sym.size() == 0) return 0.0;
  return sym.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
}

// Nonnegative lasso on one coefficient column:
//   0.5 c'Gc - b'c + beta 1'c  s.t.  c >= 0,
// by projected gradient with step 1/L, run to the KKT tolerance.
void update_column(const Eigen::MatrixXd& g, const Eigen::VectorXd& b, double beta,
                   double lip, const DictLearnOptions& opts, Eigen::VectorXd& c) {
  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  for (int it = 0; it < opts.max_inner_iterations; ++it) {
    const Eigen::VectorXd grad = g * c - b + Eigen::VectorXd::Constant(c.size(), beta);

    bool ok = true;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const bool active = c[i] > 0.0;
      if ((active && std::abs(grad[i]) > opts.kkt_tolerance * scale) ||
          (!active && grad[i] < -opts.kkt_tolerance * scale)) {
        ok = false;
        break;
      }
    }
    if (ok) return;
    c = (c - grad / lip).cwiseMax(0.0);
  }
}

// Least squares over unit-Frobenius-ball atoms:
//   0.5 ||s - d c||_F^2  s.t.  ||d_i|| <= 1 per column,
// by projected gradient with step 1/lambda_max(cc').
void update_atoms(const Eigen::MatrixXd& s, const Eigen::MatrixXd& c,
                  const DictLearnOptions& opts, Eigen::MatrixXd& d) {
  const Eigen::MatrixXd cct = c * c.transpose();
  const double lip = max_eigenvalue(cct);
  if (lip <= 1e-15) return;  // zero coefficients: objective constant in d

  const Eigen::MatrixXd sct = s * c.transpose();
  const double scale = std::max(1.0, sct.colwise().norm().maxCoeff());
  for (int it = 0; it < opts.max_inner_iterations; ++it) {
    const Eigen::MatrixXd grad = d * cct - sct;

    bool ok = true;
    for (Eigen::Index i = 0; i < d.cols() && ok; ++i) {
      const Eigen::VectorXd gi = grad.col(i);
      const Eigen::VectorXd di = d.col(i);
      if (di.norm() < 1.0 - 1e-9) {
        ok = gi.norm() <= opts.kkt_tolerance * scale;
      } else {
        // On the boundary the gradient must point inward along the atom.
        const double radial = gi.dot(di);
        ok = (gi - radial * di).norm() <= opts.kkt_tolerance * scale &&
             radial <= opts.kkt_tolerance * scale;
      }
    }
    if (ok) return;

    d -= grad / lip;
    for (Eigen::Index i = 0; i < d.cols(); ++i) {
      const double norm = d.col(i).norm();
      if (norm > 1.0) d.col(i) /= norm;
    }
  }
}

}  // namespace

std::vector<Shape3D> align_training_set(const std::vector<Shape3D>& shapes) {
  if (shapes.empty()) throw std::invalid_argument("no shapes");
  const Eigen::Index p = shapes.front().landmark_count();
  for (const Shape3D& s : shapes) {
    if (s.landmark_count() != p) {
      throw std::invalid_argument("landmark count mismatch");
    }
  }

  std::vector<Shape3D> out;
  out.reserve(shapes.size());
  out.push_back(centralize_shape(shapes.front()));
  if (out.front().points.norm() == 0.0) throw std::runtime_error("degenerate shape");
  for (std::size_t j = 1; j < shapes.size(); ++j) {
    out.push_back(centralize_shape(procrustes_align(shapes[j], out.front()).aligned));
  }
  return out;
}

DictLearnResult learn_dictionary(const std::vector<Shape3D>& shapes, Eigen::Index k,
                                 double beta, const DictLearnOptions& opts) {
  const auto n = static_cast<Eigen::Index>(shapes.size());
  if (n < 1) throw std::invalid_argument("no shapes");
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (k > n) throw std::invalid_argument("k exceeds training set size");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const Eigen::Index p = shapes.front().landmark_count();
  if (p < 3) throw std::invalid_argument("too few landmarks");

  // Training shapes as vec columns, centered defensively.
  Eigen::MatrixXd s(3 * p, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Shape3D c = centralize_shape(shapes[static_cast<std::size_t>(j)]);
    if (c.landmark_count() != p) throw std::invalid_argument("landmark count mismatch");
    s.col(j) = Eigen::Map<const Eigen::VectorXd>(c.points.data(), 3 * p);
  }

  // Atoms start from k uniformly spaced training shapes, inside the ball.
  Eigen::MatrixXd d(3 * p, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    d.col(j) = s.col((j * n) / k);
    const double norm = d.col(j).norm();
    if (norm > 1.0) d.col(j) /= norm;
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, n);

  DictLearnResult result;
  const auto objective = [&] {
    return 0.5 * (s - d * c).squaredNorm() + beta * c.sum();
  };

  const auto update_all_columns = [&] {
    const Eigen::MatrixXd gram = d.transpose() * d;
    const double lip = std::max(max_eigenvalue(gram), 1e-12);
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd cj = c.col(j);
      update_column(gram, d.transpose() * s.col(j), beta, lip, opts, cj);
      c.col(j) = cj;
    }
  };

  result.objective_history.push_back(objective());
  for (int it = 0; it < opts.max_alternations; ++it) {
    update_all_columns();
    update_atoms(s, c, opts, d);
    const double prev = result.objective_history.back();
    const double f = objective();
    result.objective_history.push_back(f);
    if (prev - f <= opts.tolerance * std::max(prev, 1e-30)) break;
  }
  // Final polish so the returned coefficients are optimal for the returned
  // atoms (the loop leaves them one atom update stale).
  update_all_columns();
  result.objective_history.push_back(objective());

  result.coefficients = std::move(c);
  result.dictionary.bases.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    result.dictionary.bases.emplace_back(
        Eigen::Map<const Eigen::Matrix3Xd>(d.col(j).data(), 3, p));
  }
  return result;
}

}  // namespace shapelift

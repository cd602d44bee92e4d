#include "shapelift/altmin.hpp"

#include "shapelift/geometry.hpp"
#include "shapelift/prox.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace shapelift {
namespace {

Eigen::Matrix3Xd visible_shape_columns(const Eigen::Matrix3Xd& s,
                                       const VisibilityMask& vis) {
  Eigen::Matrix3Xd out(3, vis.count());
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < vis.size(); ++i) {
    if (vis[i]) out.col(j++) = s.col(i);
  }
  return out;
}

// Orthonormal-rows polar factor of a 2x3 matrix.
Matrix23d polar_rows(const Matrix23d& a) {
  const SingularDecomposition svd = thin_svd(a);
  return svd.left * svd.right.transpose();
}

void check_rbar(const Matrix23d& rbar) {
  if ((rbar * rbar.transpose() - Eigen::Matrix2d::Identity()).norm() > 1e-6) {
    throw std::invalid_argument("rbar rows are not orthonormal");
  }
}

// Design data of the coefficient lasso in Gram space: column i of the
// implicit design is vec(rbar * B_i) over visible landmarks.
struct LassoData {
  Eigen::MatrixXd gram;  // k x k
  Eigen::VectorXd bvec;  // k
  double w2 = 0.0;       // ||W||_F^2
};

void check_landmarks(const LandmarkSet2D& w, const ShapeDictionary& dict) {
  dict.validate();
  if (w.landmark_count() != dict.landmark_count()) {
    throw std::invalid_argument("landmark count mismatch");
  }
  if (w.visibility.size() != w.landmark_count()) {
    throw std::invalid_argument("visibility mask size mismatch");
  }
}

LassoData lasso_data(const LandmarkSet2D& w, const ShapeDictionary& dict,
                     const Matrix23d& rbar) {
  const Eigen::Index k = dict.size();
  const Eigen::Matrix2Xd w_v = w.visible_points();
  LassoData out;
  out.gram.resize(k, k);
  out.bvec.resize(k);
  out.w2 = w_v.squaredNorm();

  std::vector<Eigen::Matrix2Xd> cols;
  cols.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Matrix3Xd b_v =
        visible_shape_columns(dict.bases[static_cast<std::size_t>(i)].points,
                              w.visibility);
    cols.push_back(rbar * b_v);
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    out.bvec[i] = (w_v.array() * cols[static_cast<std::size_t>(i)].array()).sum();
    for (Eigen::Index j = i; j < k; ++j) {
      const double g = (cols[static_cast<std::size_t>(i)].array() *
                        cols[static_cast<std::size_t>(j)].array())
                           .sum();
      out.gram(i, j) = g;
      out.gram(j, i) = g;
    }
  }
  return out;
}

inline double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Proximal gradient with backtracking on
//   0.5 c'Gc - b'c + 0.5 w2 + lambda ||c||_1,
// stopped on the scaled duality gap (gradient norm when lambda == 0).
Eigen::VectorXd lasso_solve(const LassoData& d, Eigen::VectorXd c, double lambda,
                            const AltMinOptions& opts) {
  const Eigen::Index k = c.size();
  double lip = std::max(d.gram.diagonal().maxCoeff(), 1e-12);

  const auto smooth = [&](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(d.gram * x) - d.bvec.dot(x) + 0.5 * d.w2;
  };

  for (int it = 0; it < opts.max_lasso_iterations; ++it) {
    const Eigen::VectorXd grad = d.gram * c - d.bvec;

    if (lambda > 0.0) {
      const double r2 = std::max(0.0, c.dot(d.gram * c) - 2.0 * d.bvec.dot(c) + d.w2);
      const double primal = 0.5 * r2 + lambda * c.lpNorm<1>();
      const double ginf = grad.lpNorm<Eigen::Infinity>();
      const double s = ginf > lambda ? lambda / ginf : 1.0;
      const double gap = primal + 0.5 * s * s * r2 + s * (d.bvec.dot(c) - d.w2);
      if (gap <= opts.lasso_gap * std::max(1.0, primal)) break;
    } else if (grad.lpNorm<Eigen::Infinity>() <=
               1e-10 * std::max(1.0, d.bvec.lpNorm<Eigen::Infinity>())) {
      break;
    }

    const double f0 = smooth(c);
    Eigen::VectorXd next(k);
    for (int bt = 0; bt < 60; ++bt) {
      for (Eigen::Index i = 0; i < k; ++i) {
        next[i] = soft(c[i] - grad[i] / lip, lambda / lip);
      }
      const Eigen::VectorXd delta = next - c;
      const double quad = f0 + grad.dot(delta) + 0.5 * lip * delta.squaredNorm();
      if (smooth(next) <= quad + 1e-12 * std::abs(quad)) break;
      lip *= 2.0;
    }
    if ((next - c).lpNorm<Eigen::Infinity>() == 0.0) break;  // fixed point
    c = next;
    lip *= 0.9;  // probe smaller curvature next round
  }
  return c;
}

struct RotationData {
  Eigen::Matrix3d sst;  // S S'
  Matrix23d wst;        // W S'
  double w2 = 0.0;
};

double rotation_objective(const RotationData& d, const Matrix23d& r) {
  const double cross = (r.array() * d.wst.array()).sum();
  const double quad = ((r * d.sst).array() * r.array()).sum();
  return 0.5 * (d.w2 - 2.0 * cross + quad);
}

}  // namespace

AltMinInit AltMinInit::warm_start(const SolveResult& from) {
  AltMinInit init{Kind::WarmStart, from.shape, std::nullopt};
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < from.coeffs.size(); ++i) {
    if (from.coeffs[i] > 1e-12 && (best < 0 || from.coeffs[i] > from.coeffs[best])) {
      best = i;
    }
  }
  if (best >= 0) {
    init.rbar_seed =
        Matrix23d(from.rotations[static_cast<std::size_t>(best)].topRows<2>());
  }
  return init;
}

Eigen::VectorXd update_coeffs_l1(const LandmarkSet2D& w, const ShapeDictionary& dict,
                                 const Matrix23d& rbar, const Eigen::VectorXd& coeffs,
                                 double lambda, const AltMinOptions& opts) {
  check_landmarks(w, dict);
  if (coeffs.size() != dict.size()) {
    throw std::invalid_argument("coefficient count mismatch");
  }
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  check_rbar(rbar);
  return lasso_solve(lasso_data(w, dict, rbar), coeffs, lambda, opts);
}

Matrix23d update_rotation_stiefel(const LandmarkSet2D& w, const ShapeDictionary& dict,
                                  const Eigen::VectorXd& coeffs, const Matrix23d& rbar,
                                  const AltMinOptions& opts) {
  check_landmarks(w, dict);
  if (coeffs.size() != dict.size()) {
    throw std::invalid_argument("coefficient count mismatch");
  }
  check_rbar(rbar);

  Eigen::Matrix3Xd composite = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
  for (Eigen::Index i = 0; i < dict.size(); ++i) {
    composite += coeffs[i] * dict.bases[static_cast<std::size_t>(i)].points;
  }
  const Eigen::Matrix3Xd s_v = visible_shape_columns(composite, w.visibility);
  if (s_v.norm() == 0.0) return rbar;  // objective is constant in rbar

  RotationData d;
  d.sst = s_v * s_v.transpose();
  d.wst = w.visible_points() * s_v.transpose();
  d.w2 = w.visible_points().squaredNorm();

  Matrix23d r = polar_rows(rbar);  // keep iterates exactly on the manifold
  double f = rotation_objective(d, r);
  double step = 1.0 / (d.sst.selfadjointView<Eigen::Lower>()
                           .eigenvalues()
                           .maxCoeff() +
                       1e-12);

  for (int it = 0; it < opts.max_rotation_steps; ++it) {
    const Matrix23d egrad = r * d.sst - d.wst;
    // Tangent projection at r on { r : r r' = I }.
    const Eigen::Matrix2d sym =
        0.5 * (egrad * r.transpose() + r * egrad.transpose());
    const Matrix23d rgrad = egrad - sym * r;
    const double gnorm2 = rgrad.squaredNorm();
    if (std::sqrt(gnorm2) < opts.rotation_tolerance) break;

    // Armijo backtracking along the polar retraction.
    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 40; ++bt) {
      const Matrix23d candidate = polar_rows(r - t * rgrad);
      const double fc = rotation_objective(d, candidate);
      if (fc <= f - 1e-4 * t * gnorm2) {
        r = candidate;
        f = fc;
        step = 2.0 * t;  // optimistic growth, trimmed by later backtracks
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no admissible descent step at this scale
  }
  return r;
}

AltMinResult solve_altmin(const LandmarkSet2D& w_raw, const ShapeDictionary& dict,
                          double lambda, const AltMinInit& init,
                          const AltMinOptions& opts) {
  check_landmarks(w_raw, dict);
  if (!w_raw.points.allFinite()) throw std::invalid_argument("non-finite input");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!dict.is_centered()) {
    throw std::invalid_argument("dictionary bases must be centered");
  }

  const LandmarkSet2D w = centralize(w_raw);

  AltMinState state;
  if (init.rbar_seed) {
    state.rbar = polar_rows(*init.rbar_seed);
  } else {
    const Shape3D s_init = init.kind == AltMinInit::Kind::WarmStart
                               ? centralize_shape(init.shape)
                               : dict.mean_shape();
    if (s_init.landmark_count() != dict.landmark_count()) {
      throw std::invalid_argument("landmark count mismatch");
    }
    const Eigen::Matrix3Xd s_v = visible_shape_columns(s_init.points, w.visibility);
    state.rbar = polar_rows(w.visible_points() * s_v.transpose());
  }
  state.coeffs = Eigen::VectorXd::Zero(dict.size());

  const auto objective = [&](const Eigen::VectorXd& c, const Matrix23d& r) {
    Eigen::Matrix3Xd composite = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
    for (Eigen::Index i = 0; i < dict.size(); ++i) {
      composite += c[i] * dict.bases[static_cast<std::size_t>(i)].points;
    }
    const Eigen::Matrix3Xd s_v = visible_shape_columns(composite, w.visibility);
    return 0.5 * (w.visible_points() - r * s_v).squaredNorm() + lambda * c.lpNorm<1>();
  };

  state.objective_history.push_back(objective(state.coeffs, state.rbar));
  for (int outer = 0; outer < opts.max_outer_iterations; ++outer) {
    state.coeffs = update_coeffs_l1(w, dict, state.rbar, state.coeffs, lambda, opts);
    state.rbar = update_rotation_stiefel(w, dict, state.coeffs, state.rbar, opts);
    const double prev = state.objective_history.back();
    const double f = objective(state.coeffs, state.rbar);
    state.objective_history.push_back(f);
    if (prev - f <= opts.outer_tolerance * std::max(prev, 1e-30)) break;
  }

  Eigen::Matrix3Xd composite = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
  for (Eigen::Index i = 0; i < dict.size(); ++i) {
    composite += state.coeffs[i] * dict.bases[static_cast<std::size_t>(i)].points;
  }
  const Eigen::Matrix3d r_full = complete_rotation(polar_rows(state.rbar));
  AltMinResult out;
  out.shape = Shape3D(r_full * composite);
  out.state = std::move(state);
  return out;
}

}  // namespace shapelift

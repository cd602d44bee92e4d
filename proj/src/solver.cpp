#include "shapelift/solver.hpp"

#include "shapelift/geometry.hpp"
#include "shapelift/prox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

namespace shapelift {
namespace {

// Ordered singular values of a two-row block, via the 2x2 eigenproblem.
inline std::pair<double, double> block_sigmas(const Matrix23d& m) {
  const double a = m.row(0).squaredNorm();
  const double c = m.row(1).squaredNorm();
  const double b = m.row(0).dot(m.row(1));
  const double mid = 0.5 * (a + c);
  const double root = std::hypot(0.5 * (a - c), b);
  return {std::sqrt(std::max(mid + root, 0.0)), std::sqrt(std::max(mid - root, 0.0))};
}

Eigen::MatrixXd visible_columns(const Eigen::MatrixXd& m, const VisibilityMask& vis) {
  Eigen::MatrixXd out(m.rows(), vis.count());
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < vis.size(); ++i) {
    if (vis[i]) out.col(j++) = m.col(i);
  }
  return out;
}

// Rank-tolerant pseudoinverse: singular values below cutoff * sigma_max are
// treated as zero. Also reports whether w lies in the row space of b.
struct AffineProjector {
  Eigen::MatrixXd pinv;  // p x 3k
  Eigen::MatrixXd v_r;   // p x r, orthonormal row-space basis

  explicit AffineProjector(const Eigen::MatrixXd& b, double cutoff = 1e-10) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = sv.size() > 0 ? cutoff * sv[0] : 0.0;
    Eigen::Index r = 0;
    while (r < sv.size() && sv[r] > tol) ++r;
    v_r = svd.matrixV().leftCols(r);
    pinv = v_r * sv.head(r).cwiseInverse().asDiagonal() *
           svd.matrixU().leftCols(r).transpose();
  }

  bool contains_rows(const Eigen::Matrix2Xd& w, double tol = 1e-8) const {
    const double scale = std::max(1.0, w.norm());
    return (w * v_r * v_r.transpose() - w).norm() <= tol * scale;
  }

  // Frobenius projection of p onto { z : z * b = w }.
  Eigen::Matrix2Xd project(const Eigen::Matrix2Xd& p, const Eigen::MatrixXd& b,
                           const Eigen::Matrix2Xd& w) const {
    return p - (p * b - w) * pinv;
  }
};

StackedMotion prox_blocks(const Eigen::Matrix2Xd& q, double level) {
  StackedMotion out = StackedMotion::zero(q.cols() / 3);
  for (Eigen::Index i = 0; i < out.block_count(); ++i) {
    out.set_block(i, prox_spectral_2x3(q.middleCols<3>(3 * i), level));
  }
  return out;
}

void validate_inputs(const LandmarkSet2D& w, const ShapeDictionary& dict) {
  dict.validate();
  if (w.landmark_count() != dict.landmark_count()) {
    throw std::invalid_argument("landmark count mismatch");
  }
  if (w.visibility.size() != w.landmark_count()) {
    throw std::invalid_argument("visibility mask size mismatch");
  }
  if (!w.points.allFinite()) throw std::invalid_argument("non-finite input");
  if (!dict.is_centered()) {
    throw std::invalid_argument("dictionary bases must be centered");
  }
}

SolveResult run_admm(const LandmarkSet2D& w_raw, const ShapeDictionary& dict,
                     double lambda, const SolverOptions& opts, FitMode mode) {
  validate_inputs(w_raw, dict);
  if (!(opts.mu_init > 0.0) || !(opts.tolerance > 0.0) || opts.max_iterations < 1) {
    throw std::invalid_argument("invalid solver options");
  }

  const LandmarkSet2D w = centralize(w_raw);
  const Eigen::Index k = dict.size();
  const Eigen::MatrixXd b = dict.stacked();
  const Eigen::Matrix2Xd w_v = w.visible_points();
  const Eigen::MatrixXd b_v = visible_columns(b, w.visibility);

  std::optional<AffineProjector> projector;
  Eigen::MatrixXd gram;      // b_v * b_v'
  Eigen::Matrix2Xd wbt;      // w_v * b_v'
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (mode == FitMode::Constrained) {
    if (w.visible_count() != w.landmark_count()) {
      throw std::invalid_argument("noiseless solve requires all landmarks visible");
    }
    projector.emplace(b);
    if (!projector->contains_rows(w.points)) {
      throw std::runtime_error("infeasible constraint");
    }
  } else {
    gram = b_v * b_v.transpose();
    wbt = w_v * b_v.transpose();
  }

  double mu = opts.mu_init;
  const auto refactor = [&] {
    if (mode == FitMode::Penalized) {
      Eigen::MatrixXd reg = gram;
      reg.diagonal().array() += mu;
      llt.compute(reg);
    }
  };
  refactor();

  SolverState state;
  state.m_tilde = Eigen::Matrix2Xd::Zero(2, 3 * k);
  state.z = Eigen::Matrix2Xd::Zero(2, 3 * k);
  state.y = Eigen::Matrix2Xd::Zero(2, 3 * k);
  state.mu = mu;

  SolveResult result;
  int iters_since_mu_change = 0;
  for (int t = 0; t < opts.max_iterations; ++t) {
    const Eigen::Matrix2Xd q = state.z - state.y / state.mu;
    const StackedMotion m = prox_blocks(q, lambda / state.mu);
    state.m_tilde = m.stacked;

    const Eigen::Matrix2Xd z_prev = state.z;
    if (mode == FitMode::Penalized) {
      const Eigen::Matrix2Xd rhs = wbt + state.mu * state.m_tilde + state.y;
      state.z = llt.solve(rhs.transpose()).transpose();
    } else {
      const Eigen::Matrix2Xd p = state.m_tilde + state.y / state.mu;
      state.z = projector->project(p, b, w.points);
    }
    state.y += state.mu * (state.m_tilde - state.z);
    state.iteration = t + 1;

    state.primal_residual = (state.m_tilde - state.z).norm() /
                            std::max(1.0, state.m_tilde.norm());
    state.dual_residual = state.mu * (state.z - z_prev).norm() /
                          std::max(1.0, state.y.norm());
    result.primal_residuals.push_back(state.primal_residual);
    result.dual_residuals.push_back(state.dual_residual);

    if (state.primal_residual < opts.tolerance && state.dual_residual < opts.tolerance) {
      result.converged = true;
      break;
    }

    // Residual balancing: nudge mu so neither residual starves the other.
    ++iters_since_mu_change;
    if (opts.adaptive_mu && iters_since_mu_change >= 10) {
      if (state.primal_residual > 10.0 * state.dual_residual) {
        state.mu *= 2.0;
      } else if (state.dual_residual > 10.0 * state.primal_residual) {
        state.mu *= 0.5;
      } else {
        continue;
      }
      mu = state.mu;
      iters_since_mu_change = 0;
      refactor();
    }
  }
  result.iterations = state.iteration;

  // Split each block into coefficient and completed rotation; compose the
  // shape from the active ones.
  result.motion = StackedMotion(state.m_tilde);
  result.coeffs = Eigen::VectorXd::Zero(k);
  result.tightness = Eigen::VectorXd::Zero(k);
  result.rotations.assign(static_cast<std::size_t>(k), Eigen::Matrix3d::Identity());
  const double eps_c = std::max(1e-12, 1e-6 * result.motion.max_block_norm());
  for (Eigen::Index i = 0; i < k; ++i) {
    const Matrix23d block = result.motion.block(i);
    const auto [s1, s2] = block_sigmas(block);
    result.coeffs[i] = s1;
    const PoseRecovery pose = recover_pose(block, eps_c);
    if (pose.active) {
      result.rotations[static_cast<std::size_t>(i)] = pose.rotation;
      result.tightness[i] =
          s2 > 0.0 ? s1 / s2 - 1.0 : std::numeric_limits<double>::infinity();
    }
  }
  result.shape = reconstruct_shape(result.motion, dict);

  double penalty = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) penalty += result.coeffs[i];
  if (mode == FitMode::Penalized) {
    const double fit = (w_v - state.m_tilde * b_v).squaredNorm();
    result.objective = 0.5 * fit + lambda * penalty;
  } else {
    result.objective = penalty;
  }
  return result;
}

}  // namespace

StackedMotion::StackedMotion(Eigen::Matrix2Xd m) : stacked(std::move(m)) {
  if (stacked.cols() % 3 != 0) {
    throw std::invalid_argument("stacked motion needs column triplets");
  }
}

StackedMotion StackedMotion::zero(Eigen::Index k) {
  StackedMotion out;
  out.stacked = Eigen::Matrix2Xd::Zero(2, 3 * k);
  return out;
}

double StackedMotion::max_block_norm() const {
  double best = 0.0;
  for (Eigen::Index i = 0; i < block_count(); ++i) {
    best = std::max(best, block_sigmas(block(i)).first);
  }
  return best;
}

SolveResult solve_noisy(const LandmarkSet2D& w, const ShapeDictionary& dict,
                        double lambda, const SolverOptions& opts) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  return run_admm(w, dict, lambda, opts, FitMode::Penalized);
}

SolveResult solve_noiseless(const LandmarkSet2D& w, const ShapeDictionary& dict,
                            const SolverOptions& opts) {
  // The constrained objective sum_i ||M_i||_2 carries unit weight.
  return run_admm(w, dict, 1.0, opts, FitMode::Constrained);
}

StackedMotion admm_update_m(const SolverState& state, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (!(state.mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (state.z.cols() != state.y.cols() || state.z.cols() % 3 != 0) {
    throw std::invalid_argument("inconsistent solver state");
  }
  const Eigen::Matrix2Xd q = state.z - state.y / state.mu;
  return prox_blocks(q, lambda / state.mu);
}

Eigen::Matrix2Xd admm_update_z(const SolverState& state, const LandmarkSet2D& w,
                               const Eigen::MatrixXd& b_tilde, FitMode mode) {
  if (!(state.mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (b_tilde.rows() != state.m_tilde.cols() ||
      b_tilde.cols() != w.landmark_count()) {
    throw std::invalid_argument("dimension mismatch");
  }

  if (mode == FitMode::Penalized) {
    const Eigen::MatrixXd b_v = visible_columns(b_tilde, w.visibility);
    const Eigen::Matrix2Xd w_v = w.visible_points();
    Eigen::MatrixXd reg = b_v * b_v.transpose();
    reg.diagonal().array() += state.mu;
    const Eigen::Matrix2Xd rhs =
        w_v * b_v.transpose() + state.mu * state.m_tilde + state.y;
    return Eigen::Matrix2Xd(reg.llt().solve(rhs.transpose()).transpose());
  }

  if (w.visible_count() != w.landmark_count()) {
    throw std::invalid_argument("constrained update requires all landmarks visible");
  }
  const AffineProjector projector(b_tilde);
  if (!projector.contains_rows(w.points)) {
    throw std::runtime_error("infeasible constraint");
  }
  const Eigen::Matrix2Xd p = state.m_tilde + state.y / state.mu;
  return projector.project(p, b_tilde, w.points);
}

PoseRecovery recover_pose(const MotionMatrix& m, double inactive_threshold) {
  PoseRecovery out;
  const SingularDecomposition svd = thin_svd(m);
  const double s1 = svd.singulars[0];
  if (!(s1 > std::max(inactive_threshold, 0.0))) return out;

  out.active = true;
  out.coeff = s1;
  const Matrix23d rbar = svd.left * svd.right.transpose();
  out.rotation = complete_rotation(rbar);
  return out;
}

Shape3D reconstruct_shape(const StackedMotion& motion, const ShapeDictionary& dict) {
  dict.validate();
  if (motion.block_count() != dict.size()) {
    throw std::invalid_argument("block count mismatch");
  }
  const double eps_c = std::max(1e-12, 1e-6 * motion.max_block_norm());
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(dict.size());
  std::vector<Eigen::Matrix3d> rotations(static_cast<std::size_t>(dict.size()),
                                         Eigen::Matrix3d::Identity());
  for (Eigen::Index i = 0; i < dict.size(); ++i) {
    const PoseRecovery pose = recover_pose(motion.block(i), eps_c);
    coeffs[i] = pose.coeff;
    rotations[static_cast<std::size_t>(i)] = pose.rotation;
  }
  return compose_shape(dict, coeffs, rotations);
}

}  // namespace shapelift

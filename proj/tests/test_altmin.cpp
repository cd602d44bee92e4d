#include "shapelift/altmin.hpp"

#include "shapelift/geometry.hpp"
#include "shapelift/synth.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace shapelift;
using testsupport::TestRng;

namespace {

// Visible-column composite R * sum_i c_i B_i and the resulting objective.
Eigen::Matrix2Xd model_visible(const LandmarkSet2D& w, const ShapeDictionary& dict,
                               const Matrix23d& rbar, const Eigen::VectorXd& c) {
  Eigen::Matrix3Xd composite = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
  for (Eigen::Index i = 0; i < dict.size(); ++i) {
    composite += c[i] * dict.bases[i].points;
  }
  Eigen::Matrix2Xd projected = rbar * composite;
  Eigen::Matrix2Xd out(2, w.visible_count());
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < w.landmark_count(); ++j) {
    if (w.visibility[j]) out.col(col++) = projected.col(j);
  }
  return out;
}

double altmin_objective(const LandmarkSet2D& w, const ShapeDictionary& dict,
                        const Matrix23d& rbar, const Eigen::VectorXd& c,
                        double lambda) {
  const Eigen::Matrix2Xd model = model_visible(w, dict, rbar, c);
  return 0.5 * (w.visible_points() - model).squaredNorm() +
         lambda * c.lpNorm<1>();
}

// Plain fixed-step ISTA, long horizon: an independent lasso reference.
Eigen::VectorXd ista_reference(const LandmarkSet2D& w, const ShapeDictionary& dict,
                               const Matrix23d& rbar, double lambda, int iters) {
  const Eigen::Index k = dict.size();
  Eigen::MatrixXd a(2 * w.visible_count(), k);  // vec of visible R * B_i
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Matrix2Xd cols = rbar * dict.bases[i].points;
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < w.landmark_count(); ++j) {
      if (!w.visibility[j]) continue;
      a(2 * col, i) = cols(0, j);
      a(2 * col + 1, i) = cols(1, j);
      ++col;
    }
  }
  const Eigen::Matrix2Xd wv = w.visible_points();
  Eigen::VectorXd b(2 * w.visible_count());
  for (Eigen::Index col = 0; col < w.visible_count(); ++col) {
    b[2 * col] = wv(0, col);
    b[2 * col + 1] = wv(1, col);
  }

  const double step =
      1.0 / (a.transpose() * a).selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  for (int t = 0; t < iters; ++t) {
    const Eigen::VectorXd g = a.transpose() * (a * c - b);
    const Eigen::VectorXd u = c - step * g;
    c = u.array().sign() * (u.array().abs() - step * lambda).max(0.0);
  }
  return c;
}

ShapeDictionary centered_dict(TestRng& rng, Eigen::Index k, Eigen::Index p) {
  ShapeDictionary dict;
  for (Eigen::Index i = 0; i < k; ++i) {
    dict.bases.push_back(centralize_shape(Shape3D(rng.gaussian(3, p))));
  }
  return dict;
}

}  // namespace

TEST_CASE("coefficient lasso matches a long fixed-step reference") {
  TestRng rng(51);
  const ShapeDictionary dict = centered_dict(rng, 5, 15);
  Eigen::Matrix2Xd pts = rng.gaussian(2, 15);
  VisibilityMask vis = VisibilityMask::Constant(15, true);
  vis[3] = false;
  const LandmarkSet2D w(pts, vis);
  const Matrix23d rbar = rng.rotation().topRows<2>();
  const double lambda = 0.8;

  const Eigen::VectorXd c =
      update_coeffs_l1(w, dict, rbar, Eigen::VectorXd::Zero(5), lambda);
  const Eigen::VectorXd ref = ista_reference(w, dict, rbar, lambda, 50000);

  const double f_ours = altmin_objective(w, dict, rbar, c, lambda);
  const double f_ref = altmin_objective(w, dict, rbar, ref, lambda);
  CHECK(f_ours <= f_ref + 1e-7 * std::max(1.0, f_ref));
  CHECK((c - ref).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("coefficient lasso satisfies the subgradient conditions") {
  TestRng rng(52);
  const ShapeDictionary dict = centered_dict(rng, 6, 18);
  const LandmarkSet2D w(Eigen::Matrix2Xd(rng.gaussian(2, 18)));
  const Matrix23d rbar = rng.rotation().topRows<2>();
  const double lambda = 0.5;

  const Eigen::VectorXd c =
      update_coeffs_l1(w, dict, rbar, Eigen::VectorXd::Zero(6), lambda);
  const Eigen::Matrix2Xd resid = model_visible(w, dict, rbar, c) - w.visible_points();
  for (Eigen::Index i = 0; i < 6; ++i) {
    const double g = (rbar * dict.bases[i].points).cwiseProduct(resid).sum();
    if (c[i] > 1e-10) {
      CHECK(std::abs(g + lambda) < 1e-3);
    } else if (c[i] < -1e-10) {
      CHECK(std::abs(g - lambda) < 1e-3);
    } else {
      CHECK(std::abs(g) <= lambda + 1e-3);
    }
  }
}

TEST_CASE("coefficient update with zero penalty solves least squares") {
  TestRng rng(53);
  const ShapeDictionary dict = centered_dict(rng, 4, 20);
  const LandmarkSet2D w(Eigen::Matrix2Xd(rng.gaussian(2, 20)));
  const Matrix23d rbar = rng.rotation().topRows<2>();

  const Eigen::VectorXd c =
      update_coeffs_l1(w, dict, rbar, Eigen::VectorXd::Zero(4), 0.0);

  Eigen::MatrixXd gram(4, 4);
  Eigen::VectorXd rhs(4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const Eigen::Matrix2Xd ai = rbar * dict.bases[i].points;
    rhs[i] = ai.cwiseProduct(w.points).sum();
    for (Eigen::Index j = 0; j < 4; ++j) {
      gram(i, j) = ai.cwiseProduct(rbar * dict.bases[j].points).sum();
    }
  }
  const Eigen::VectorXd exact = gram.ldlt().solve(rhs);
  CHECK((c - exact).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("coefficient update validates sizes") {
  TestRng rng(54);
  const ShapeDictionary dict = centered_dict(rng, 3, 10);
  const LandmarkSet2D w(Eigen::Matrix2Xd(rng.gaussian(2, 10)));
  const Matrix23d rbar = rng.rotation().topRows<2>();
  CHECK_THROWS_WITH_AS(
      update_coeffs_l1(w, dict, rbar, Eigen::VectorXd::Zero(5), 0.1),
      "coefficient count mismatch", std::invalid_argument);
  Matrix23d skewed;
  skewed << 1, 0, 0, 1, 1, 0;
  CHECK_THROWS_WITH_AS(
      update_coeffs_l1(w, dict, skewed, Eigen::VectorXd::Zero(3), 0.1),
      "rbar rows are not orthonormal", std::invalid_argument);
}

TEST_CASE("rotation update descends and stays on the manifold") {
  TestRng rng(55);
  const ShapeDictionary dict = centered_dict(rng, 3, 14);
  const LandmarkSet2D w(Eigen::Matrix2Xd(rng.gaussian(2, 14)));
  Eigen::VectorXd c(3);
  c << 1.0, -0.4, 0.8;
  const Matrix23d start = rng.rotation().topRows<2>();

  const Matrix23d out = update_rotation_stiefel(w, dict, c, start);
  CHECK((out * out.transpose() - Eigen::Matrix2d::Identity()).norm() < 1e-12);
  const double f0 = altmin_objective(w, dict, start, c, 0.0);
  const double f1 = altmin_objective(w, dict, out, c, 0.0);
  CHECK(f1 <= f0 + 1e-12);

  // No small rotation of the result does better: a local-minimum certificate.
  bool improved = false;
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::Vector3d axis;
    axis << rng.normal(), rng.normal(), rng.normal();
    axis.normalize();
    const Eigen::Matrix3d full = complete_rotation(out);
    const Matrix23d nearby =
        (Eigen::AngleAxisd(1e-5, axis).toRotationMatrix() * full).topRows<2>();
    if (altmin_objective(w, dict, nearby, c, 0.0) < f1 - 1e-9) improved = true;
  }
  CHECK_FALSE(improved);
}

TEST_CASE("rotation update recovers an exactly fitting pose") {
  TestRng rng(56);
  const ShapeDictionary dict = centered_dict(rng, 3, 12);
  Eigen::VectorXd c(3);
  c << 0.9, 0.5, 1.4;
  const Eigen::Matrix3d truth = rng.rotation();
  Eigen::Matrix3Xd composite = Eigen::Matrix3Xd::Zero(3, 12);
  for (Eigen::Index i = 0; i < 3; ++i) composite += c[i] * dict.bases[i].points;
  const LandmarkSet2D w(Eigen::Matrix2Xd(truth.topRows<2>() * composite));

  // Start from a perturbed pose and descend back to a perfect fit.
  const Matrix23d start =
      (Eigen::AngleAxisd(0.1, Eigen::Vector3d(1, 2, -1).normalized())
           .toRotationMatrix() *
       truth)
          .topRows<2>();
  const Matrix23d out = update_rotation_stiefel(w, dict, c, start);
  CHECK(altmin_objective(w, dict, out, c, 0.0) < 1e-10);
  CHECK((out - truth.topRows<2>()).norm() < 1e-5);

  // Starting exactly at the optimum is a fixed point.
  const Matrix23d fixed =
      update_rotation_stiefel(w, dict, c, Matrix23d(truth.topRows<2>()));
  CHECK((fixed - truth.topRows<2>()).norm() < 1e-12);
}

TEST_CASE("rotation update returns the input for a zero composite") {
  TestRng rng(57);
  const ShapeDictionary dict = centered_dict(rng, 2, 10);
  const LandmarkSet2D w(Eigen::Matrix2Xd(rng.gaussian(2, 10)));
  const Matrix23d rbar = rng.rotation().topRows<2>();
  const Matrix23d out =
      update_rotation_stiefel(w, dict, Eigen::VectorXd::Zero(2), rbar);
  CHECK((out - rbar).norm() < 1e-12);
}

TEST_CASE("altmin objective history is nonincreasing") {
  SynthOptions opt;
  opt.noise_sigma = 0.1;
  const SyntheticInstance inst = synth_instance(6, 20, 2, 61, opt);
  const AltMinResult res = solve_altmin(inst.w, inst.dict, 0.05);

  REQUIRE(res.state.objective_history.size() >= 2);
  for (std::size_t i = 1; i < res.state.objective_history.size(); ++i) {
    CHECK(res.state.objective_history[i] <=
          res.state.objective_history[i - 1] + 1e-9);
  }
  CHECK((res.state.rbar * res.state.rbar.transpose() - Eigen::Matrix2d::Identity())
            .norm() < 1e-9);
}

TEST_CASE("altmin converges immediately on a one-atom exact fit") {
  TestRng rng(66);
  ShapeDictionary dict;
  dict.bases.push_back(centralize_shape(Shape3D(rng.gaussian(3, 12))));
  const Eigen::Matrix3d truth = rng.rotation();
  const LandmarkSet2D w(Eigen::Matrix2Xd(truth.topRows<2>() * dict.bases[0].points));

  AltMinInit init;
  init.kind = AltMinInit::Kind::WarmStart;
  init.shape = Shape3D(truth * dict.bases[0].points);
  init.rbar_seed = Matrix23d(truth.topRows<2>());

  const AltMinResult res = solve_altmin(w, dict, 1e-12, init);
  CHECK(res.state.objective_history.back() < 1e-9);
  CHECK(res.state.coeffs[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("altmin drives an exactly representable instance near zero") {
  SynthOptions opt;
  opt.shared_rotation = true;
  const SyntheticInstance inst = synth_instance(6, 20, 2, 62, opt);

  const Shape3D composite =
      compose_shape(inst.dict, inst.true_coeffs, inst.true_rotations);
  AltMinInit init;
  init.kind = AltMinInit::Kind::WarmStart;
  init.shape = composite;
  init.rbar_seed = Matrix23d(inst.true_rotations.front().topRows<2>());

  AltMinOptions deep;
  deep.lasso_gap = 1e-12;
  deep.rotation_tolerance = 1e-10;
  const AltMinResult res = solve_altmin(inst.w, inst.dict, 1e-12, init, deep);
  CHECK(res.state.objective_history.back() < 1e-9);
  CHECK((res.state.coeffs - inst.true_coeffs).lpNorm<Eigen::Infinity>() < 1e-4);
  CHECK(reconstruction_error(res.shape, composite) < 1e-4);
}

TEST_CASE("altmin final shape composes the completed rotation") {
  const SyntheticInstance inst = synth_instance(5, 16, 2, 63);
  const AltMinResult res = solve_altmin(inst.w, inst.dict, 0.1);

  Eigen::Matrix3Xd composite = Eigen::Matrix3Xd::Zero(3, 16);
  for (Eigen::Index i = 0; i < 5; ++i) {
    composite += res.state.coeffs[i] * inst.dict.bases[i].points;
  }
  const Eigen::Matrix3Xd expected = complete_rotation(res.state.rbar) * composite;
  CHECK((res.shape.points - expected).norm() < 1e-10);
}

TEST_CASE("warm start seeds the dominant block rotation") {
  TestRng rng(58);
  SolveResult sr;
  sr.coeffs = Eigen::VectorXd(2);
  sr.coeffs << 0.2, 1.5;
  sr.rotations = {rng.rotation(), rng.rotation()};
  sr.shape = Shape3D(rng.gaussian(3, 9));

  const AltMinInit init = AltMinInit::warm_start(sr);
  CHECK(init.kind == AltMinInit::Kind::WarmStart);
  REQUIRE(init.rbar_seed.has_value());
  CHECK((*init.rbar_seed - sr.rotations[1].topRows<2>()).norm() == 0.0);
  CHECK((init.shape.points - sr.shape.points).norm() == 0.0);
}

TEST_CASE("altmin is sensitive to its initialization") {
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 60 && !found; ++seed) {
    SynthOptions opt;
    opt.shared_rotation = true;
    const SyntheticInstance inst = synth_instance(6, 20, 2, seed, opt);

    const AltMinResult cold = solve_altmin(inst.w, inst.dict, 0.01);

    AltMinInit truth_init;
    truth_init.kind = AltMinInit::Kind::WarmStart;
    truth_init.shape = compose_shape(inst.dict, inst.true_coeffs, inst.true_rotations);
    truth_init.rbar_seed = Matrix23d(inst.true_rotations.front().topRows<2>());
    const AltMinResult warm = solve_altmin(inst.w, inst.dict, 0.01, truth_init);

    const double f_cold = cold.state.objective_history.back();
    const double f_warm = warm.state.objective_history.back();
    if (std::abs(f_cold - f_warm) > 0.1 * std::max(f_warm, 1e-12)) found = true;
  }
  CHECK(found);
}

TEST_CASE("altmin validates its inputs") {
  const SyntheticInstance inst = synth_instance(4, 12, 1, 64);
  CHECK_THROWS_WITH_AS(solve_altmin(inst.w, inst.dict, 0.0), "lambda must be positive",
                       std::invalid_argument);

  AltMinInit bad_warm;
  bad_warm.kind = AltMinInit::Kind::WarmStart;
  bad_warm.shape = Shape3D(Eigen::Matrix3Xd::Zero(3, 5));
  CHECK_THROWS_WITH_AS(solve_altmin(inst.w, inst.dict, 0.1, bad_warm),
                       "landmark count mismatch", std::invalid_argument);

  LandmarkSet2D nan_w = inst.w;
  nan_w.points(0, 0) = std::nan("");
  CHECK_THROWS_WITH_AS(solve_altmin(nan_w, inst.dict, 0.1), "non-finite input",
                       std::invalid_argument);
}

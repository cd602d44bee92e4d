#include "shapelift/altmin.hpp"
#include "shapelift/dict_learn.hpp"
#include "shapelift/geometry.hpp"
#include "shapelift/prox.hpp"
#include "shapelift/solver.hpp"
#include "shapelift/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <vector>

namespace py = pybind11;
using namespace shapelift;

namespace {

ShapeDictionary make_dict(const std::vector<Eigen::Matrix3Xd>& bases) {
  ShapeDictionary dict;
  dict.bases.reserve(bases.size());
  for (const auto& b : bases) dict.bases.emplace_back(b);
  dict.validate();
  return dict;
}

LandmarkSet2D make_landmarks(const Eigen::Matrix2Xd& points,
                             const std::vector<bool>& visibility) {
  VisibilityMask mask(static_cast<Eigen::Index>(visibility.size()));
  for (std::size_t i = 0; i < visibility.size(); ++i) {
    mask[static_cast<Eigen::Index>(i)] = visibility[i];
  }
  return {points, mask};
}

py::dict solve_dict(const SolveResult& r) {
  py::list rotations;
  for (const auto& rot : r.rotations) rotations.append(Eigen::Matrix3d(rot));
  py::dict out;
  out["coeffs"] = r.coeffs;
  out["rotations"] = rotations;
  out["shape"] = Eigen::Matrix3Xd(r.shape.points);
  out["objective"] = r.objective;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["tightness"] = r.tightness;
  return out;
}

}  // namespace

PYBIND11_MODULE(_shapelift, m) {
  m.doc() = "3D shape estimation from 2D landmarks";

  m.def(
      "solve_noisy",
      [](const Eigen::Matrix2Xd& points, const std::vector<bool>& visibility,
         const std::vector<Eigen::Matrix3Xd>& bases, double lam, double tol,
         int max_iter) {
        SolverOptions opts;
        opts.tolerance = tol;
        opts.max_iterations = max_iter;
        return solve_dict(
            solve_noisy(make_landmarks(points, visibility), make_dict(bases), lam, opts));
      },
      py::arg("points"), py::arg("visibility"), py::arg("bases"), py::arg("lam") = 0.1,
      py::arg("tol") = 1e-4, py::arg("max_iter") = 500,
      "Penalized convex solve of the spectral-norm regularized inverse problem");

  m.def(
      "solve_noiseless",
      [](const Eigen::Matrix2Xd& points, const std::vector<bool>& visibility,
         const std::vector<Eigen::Matrix3Xd>& bases, double tol, int max_iter) {
        SolverOptions opts;
        opts.tolerance = tol;
        opts.max_iterations = max_iter;
        return solve_dict(
            solve_noiseless(make_landmarks(points, visibility), make_dict(bases), opts));
      },
      py::arg("points"), py::arg("visibility"), py::arg("bases"), py::arg("tol") = 1e-4,
      py::arg("max_iter") = 500,
      "Equality-constrained convex solve for noiseless landmarks");

  m.def(
      "solve_altmin",
      [](const Eigen::Matrix2Xd& points, const std::vector<bool>& visibility,
         const std::vector<Eigen::Matrix3Xd>& bases, double lam, bool warm) {
        const LandmarkSet2D w = make_landmarks(points, visibility);
        const ShapeDictionary dict = make_dict(bases);
        AltMinInit init = AltMinInit::mean_shape();
        if (warm) init = AltMinInit::warm_start(solve_noisy(w, dict, lam));
        const AltMinResult r = solve_altmin(w, dict, lam, init);
        py::dict out;
        out["coeffs"] = r.state.coeffs;
        out["rotation"] = Eigen::Matrix3d(complete_rotation(r.state.rbar));
        out["shape"] = Eigen::Matrix3Xd(r.shape.points);
        out["objective_history"] = r.state.objective_history;
        return out;
      },
      py::arg("points"), py::arg("visibility"), py::arg("bases"), py::arg("lam") = 0.1,
      py::arg("warm") = false,
      "Alternating baseline with a single shared rotation; optional convex warm start");

  m.def(
      "synth_instance",
      [](int k, int p, int z, std::uint64_t seed, bool shared_rotation,
         double noise_sigma) {
        SynthOptions opts;
        opts.shared_rotation = shared_rotation;
        opts.noise_sigma = noise_sigma;
        const SyntheticInstance inst = synth_instance(k, p, z, seed, opts);
        py::list bases;
        for (const auto& b : inst.dict.bases) bases.append(Eigen::Matrix3Xd(b.points));
        std::vector<bool> visibility(static_cast<std::size_t>(inst.w.visibility.size()));
        for (Eigen::Index i = 0; i < inst.w.visibility.size(); ++i) {
          visibility[static_cast<std::size_t>(i)] = inst.w.visibility[i];
        }
        py::dict out;
        out["points"] = Eigen::Matrix2Xd(inst.w.points);
        out["visibility"] = visibility;
        out["bases"] = bases;
        out["true_motion"] = Eigen::MatrixXd(inst.true_motion.stacked);
        out["true_coeffs"] = inst.true_coeffs;
        out["seed"] = inst.seed;
        return out;
      },
      py::arg("k"), py::arg("p"), py::arg("z"), py::arg("seed"),
      py::arg("shared_rotation") = false, py::arg("noise_sigma") = 0.0,
      "Deterministic synthetic instance with known ground truth");

  m.def(
      "prox_spectral",
      [](const Eigen::MatrixXd& y, double lam) { return prox_spectral(y, lam); },
      py::arg("y"), py::arg("lam"), "Proximal operator of the spectral norm");

  m.def(
      "project_l1_ball",
      [](const Eigen::VectorXd& v, double radius) { return project_l1_ball(v, radius); },
      py::arg("v"), py::arg("radius"), "Euclidean projection onto the l1 ball");

  m.def(
      "reconstruction_error",
      [](const Eigen::Matrix3Xd& estimate, const Eigen::Matrix3Xd& truth) {
        return reconstruction_error(Shape3D(estimate), Shape3D(truth));
      },
      py::arg("estimate"), py::arg("truth"),
      "Similarity-invariant relative reconstruction error");

  m.def(
      "learn_dictionary",
      [](const std::vector<Eigen::Matrix3Xd>& shapes, int k, double beta) {
        std::vector<Shape3D> training;
        training.reserve(shapes.size());
        for (const auto& s : shapes) training.emplace_back(s);
        const DictLearnResult r = learn_dictionary(align_training_set(training), k, beta);
        py::list bases;
        for (const auto& b : r.dictionary.bases) bases.append(Eigen::Matrix3Xd(b.points));
        py::dict out;
        out["bases"] = bases;
        out["coeffs"] = Eigen::MatrixXd(r.coefficients);
        out["objective_history"] = r.objective_history;
        return out;
      },
      py::arg("shapes"), py::arg("k"), py::arg("beta") = 0.01,
      "Nonnegative sparse dictionary learning over aligned training shapes");
}

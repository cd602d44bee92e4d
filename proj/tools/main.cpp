#include "shapelift/altmin.hpp"
#include "shapelift/dict_learn.hpp"
#include "shapelift/geometry.hpp"
#include "shapelift/harness.hpp"
#include "shapelift/io.hpp"
#include "shapelift/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace shapelift;
using nlohmann::json;

struct SharedFlags {
  std::uint64_t seed = 12345;
  double lambda = 0.1;
  double tol = 1e-4;
  int max_iter = 500;
  std::string out;
};

void add_shared(CLI::App* cmd, SharedFlags& f, double tol_default, int iter_default) {
  f.tol = tol_default;
  f.max_iter = iter_default;
  cmd->add_option("--seed", f.seed, "random seed")->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "regularization weight")->capture_default_str();
  cmd->add_option("--tol", f.tol, "convergence tolerance")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "iteration cap")->capture_default_str();
  cmd->add_option("--out", f.out, "output file")->required();
}

json flatten_rotation(const Eigen::Matrix3d& r) {
  json flat = json::array();
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) flat.push_back(r(i, j));
  }
  return flat;
}

json flatten_points(const Shape3D& shape) {
  json flat = json::array();
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < shape.landmark_count(); ++j) {
      flat.push_back(shape.points(i, j));
    }
  }
  return flat;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write file: " + path);
}

void run_solve_command(const std::string& landmarks_path, const std::string& dict_path,
                       const std::string& method, const SharedFlags& flags,
                       bool tol_set, bool iter_set) {
  const LandmarkSet2D w = io::read_landmarks_csv(landmarks_path);
  const ShapeDictionary dict = io::read_dictionary_json(dict_path);

  json j;
  j["format_version"] = 1;
  j["method"] = method;
  j["k"] = dict.size();
  j["p"] = dict.landmark_count();

  SolverOptions sopts;
  sopts.tolerance = flags.tol;
  sopts.max_iterations = flags.max_iter;

  if (method == "convex") {
    const SolveResult r = solve_noisy(w, dict, flags.lambda, sopts);
    j["coefficients"] = r.coeffs;
    json rots = json::array();
    for (const Eigen::Matrix3d& rot : r.rotations) rots.push_back(flatten_rotation(rot));
    j["rotations"] = std::move(rots);
    j["points"] = flatten_points(r.shape);
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["tightness"] = r.tightness;
  } else {
    AltMinOptions aopts;
    if (tol_set) aopts.outer_tolerance = flags.tol;
    if (iter_set) aopts.max_outer_iterations = flags.max_iter;

    AltMinInit init = AltMinInit::mean_shape();
    if (method == "altmin_warm") {
      init = AltMinInit::warm_start(solve_noisy(w, dict, flags.lambda, sopts));
    }
    const AltMinResult r = solve_altmin(w, dict, flags.lambda, init, aopts);
    const int outer = static_cast<int>(r.state.objective_history.size()) - 1;
    j["coefficients"] = std::vector<double>(
        r.state.coeffs.data(), r.state.coeffs.data() + r.state.coeffs.size());
    j["rotation"] = flatten_rotation(complete_rotation(r.state.rbar));
    j["points"] = flatten_points(r.shape);
    j["objective"] = r.state.objective_history.back();
    j["iterations"] = outer;
    j["converged"] = outer < aopts.max_outer_iterations;
    j["init_source"] = method == "altmin" ? "mean_shape" : "convex";
  }

  write_json(flags.out, j);
  std::cout << "wrote " << flags.out << '\n';
}

void run_learn_dict_command(const std::string& shapes_dir, int k, double beta,
                            const SharedFlags& flags) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(shapes_dir)) {
    throw std::invalid_argument("cannot open directory: " + shapes_dir);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(shapes_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (static_cast<int>(files.size()) < k) throw std::invalid_argument("too few shapes");

  std::vector<Shape3D> shapes;
  shapes.reserve(files.size());
  for (const std::string& file : files) shapes.push_back(io::read_shape_csv(file));

  DictLearnOptions opts;
  opts.tolerance = flags.tol;
  opts.max_alternations = flags.max_iter;
  const DictLearnResult result =
      learn_dictionary(align_training_set(shapes), k, beta, opts);

  io::write_dictionary_json(flags.out, result.dictionary);
  std::cout << "final objective: " << io::format_double(result.objective_history.back())
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D shape estimation from 2D landmarks"};
  app.require_subcommand(1);

  // simulate: phase-transition grid over (p, z)
  CLI::App* simulate = app.add_subcommand(
      "simulate", "run the noiseless exact-recovery grid and write a CSV");
  SharedFlags sim_flags;
  std::vector<int> p_list{20, 40, 60, 80, 100, 120, 140, 160, 180, 200};
  std::vector<int> z_list{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int sim_k = 50;
  int trials = 10;
  add_shared(simulate, sim_flags, 1e-4, 500);
  simulate->add_option("--p-list", p_list, "landmark counts")
      ->delimiter(',')
      ->capture_default_str();
  simulate->add_option("--z-list", z_list, "support sizes")
      ->delimiter(',')
      ->capture_default_str();
  simulate->add_option("--k", sim_k, "dictionary size")->capture_default_str();
  simulate->add_option("--trials", trials, "trials per cell")->capture_default_str();
  simulate->callback([&] {
    SolverOptions opts;
    opts.tolerance = sim_flags.tol;
    opts.max_iterations = sim_flags.max_iter;
    const PhaseGridResult grid = run_phase_transition(
        p_list, z_list, sim_k, trials, sim_flags.seed, sim_flags.out, opts);
    std::cout << "wrote " << grid.cells.size() << " cells to " << sim_flags.out << '\n';
  });

  // solve: single-image reconstruction
  CLI::App* solve = app.add_subcommand("solve", "reconstruct one landmark set");
  SharedFlags solve_flags;
  std::string landmarks_path;
  std::string solve_dict_path;
  std::string method = "convex";
  add_shared(solve, solve_flags, 1e-4, 500);
  solve->add_option("--landmarks", landmarks_path, "landmark CSV")->required();
  solve->add_option("--dict", solve_dict_path, "dictionary JSON")->required();
  solve->add_option("--method", method, "convex|altmin|altmin_warm")
      ->check(CLI::IsMember({"convex", "altmin", "altmin_warm"}))
      ->capture_default_str();
  solve->callback([&] {
    run_solve_command(landmarks_path, solve_dict_path, method, solve_flags,
                      solve->count("--tol") > 0, solve->count("--max-iter") > 0);
  });

  // evaluate: dataset scoring
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score every dataset item against its ground truth");
  SharedFlags eval_flags;
  std::string dataset_dir;
  std::string eval_dict_path;
  std::vector<std::string> methods{"convex", "altmin", "altmin_warm"};
  add_shared(evaluate, eval_flags, 1e-4, 500);
  evaluate->add_option("--dataset", dataset_dir, "directory of *.landmarks.csv items")
      ->required();
  evaluate->add_option("--dict", eval_dict_path, "dictionary JSON")->required();
  evaluate->add_option("--methods", methods, "methods to score")
      ->delimiter(',')
      ->capture_default_str();
  evaluate->callback([&] {
    const ShapeDictionary dict = io::read_dictionary_json(eval_dict_path);
    SolverOptions opts;
    opts.tolerance = eval_flags.tol;
    opts.max_iterations = eval_flags.max_iter;
    const EvaluateResult res = run_evaluate(dataset_dir, dict, methods,
                                            eval_flags.lambda, eval_flags.out, opts);
    for (std::size_t m = 0; m < res.methods.size(); ++m) {
      std::cout << res.methods[m]
                << " mean error: " << io::format_double(res.mean_errors[m]) << '\n';
    }
  });

  // learn-dict: dictionary training from aligned shapes
  CLI::App* learn = app.add_subcommand("learn-dict", "learn a shape dictionary");
  SharedFlags learn_flags;
  std::string shapes_dir;
  int learn_k = 64;
  double beta = 0.01;
  add_shared(learn, learn_flags, 1e-6, 100);
  learn->add_option("--shapes", shapes_dir, "directory of shape CSV files")->required();
  learn->add_option("--k", learn_k, "number of atoms")->capture_default_str();
  learn->add_option("--beta", beta, "sparsity weight")->capture_default_str();
  learn->callback(
      [&] { run_learn_dict_command(shapes_dir, learn_k, beta, learn_flags); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "shapelift/harness.hpp"

#include "shapelift/altmin.hpp"
#include "shapelift/geometry.hpp"
#include "shapelift/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace shapelift {
namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

bool parse_field(const std::string& s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

constexpr const char* kPhaseHeader = "p,z,trials,successes,frequency,mean_rel_error";

}  // namespace

PhaseGridResult run_phase_transition(const std::vector<int>& p_list,
                                     const std::vector<int>& z_list, int k,
                                     int trials, std::uint64_t seed,
                                     const std::string& out_path,
                                     const SolverOptions& solver_opts) {
  if (p_list.empty() || z_list.empty()) throw std::invalid_argument("empty grid");
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  for (int p : p_list) {
    if (p < 3) throw std::invalid_argument("p must be at least 3");
  }
  for (int z : z_list) {
    if (z < 1 || z > k) throw std::invalid_argument("z must lie in [1, k]");
  }

  std::vector<int> ps = p_list;
  std::vector<int> zs = z_list;
  std::sort(ps.begin(), ps.end());
  std::sort(zs.begin(), zs.end());

  PhaseGridResult grid;
  grid.cells.reserve(ps.size() * zs.size());
  for (int p : ps) {
    for (int z : zs) {
      PhaseCell cell{p, z, trials, 0, 0.0, 0.0};
      double error_sum = 0.0;
      for (int t = 0; t < trials; ++t) {
        const SyntheticInstance inst =
            synth_instance(k, p, z, mix_seed(seed, static_cast<std::uint64_t>(p),
                                             static_cast<std::uint64_t>(z),
                                             static_cast<std::uint64_t>(t)));
        const SolveResult sol = solve_noiseless(inst.w, inst.dict, solver_opts);
        const double rel = (sol.motion.stacked - inst.true_motion.stacked).norm() /
                           inst.true_motion.stacked.norm();
        error_sum += rel;
        if (rel < 1e-3) ++cell.successes;
      }
      cell.frequency = static_cast<double>(cell.successes) / trials;
      cell.mean_rel_error = error_sum / trials;
      grid.cells.push_back(cell);
    }
  }

  if (!out_path.empty()) write_phase_csv(out_path, grid);
  return grid;
}

void write_phase_csv(const std::string& path, const PhaseGridResult& grid) {
  std::ofstream out = open_output(path);
  out << kPhaseHeader << '\n';
  for (const PhaseCell& c : grid.cells) {
    out << c.p << ',' << c.z << ',' << c.trials << ',' << c.successes << ','
        << io::format_double(c.frequency) << ','
        << io::format_double(c.mean_rel_error) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write file: " + path);
}

PhaseGridResult read_phase_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);

  PhaseGridResult grid;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line == kPhaseHeader) {
      first = false;
      continue;
    }
    first = false;

    std::istringstream stream(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(stream, field, ',')) {
      double v = 0.0;
      if (!parse_field(field, v)) {
        throw std::invalid_argument("malformed CSV row in " + path + ": " + line);
      }
      vals.push_back(v);
    }
    if (vals.size() != 6) {
      throw std::invalid_argument("malformed CSV row in " + path + ": " + line);
    }
    grid.cells.push_back({static_cast<int>(vals[0]), static_cast<int>(vals[1]),
                          static_cast<int>(vals[2]), static_cast<int>(vals[3]),
                          vals[4], vals[5]});
  }
  return grid;
}

EvaluateResult run_evaluate(const std::string& dataset_dir,
                            const ShapeDictionary& dict,
                            const std::vector<std::string>& methods,
                            double lambda, const std::string& out_path,
                            const SolverOptions& solver_opts) {
  if (methods.empty()) throw std::invalid_argument("no methods");
  for (const std::string& m : methods) {
    if (m != "convex" && m != "altmin" && m != "altmin_warm") {
      throw std::invalid_argument("unknown method: " + m);
    }
  }
  if (!fs::is_directory(dataset_dir)) {
    throw std::invalid_argument("cannot open directory: " + dataset_dir);
  }

  const std::string kSuffix = ".landmarks.csv";
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dataset_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string file = entry.path().filename().string();
    if (file.size() > kSuffix.size() && file.ends_with(kSuffix)) {
      names.push_back(file.substr(0, file.size() - kSuffix.size()));
    }
  }
  if (names.empty()) throw std::invalid_argument("no items");
  std::sort(names.begin(), names.end());

  EvaluateResult result;
  result.methods = methods;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (const std::string& name : names) {
    EvaluateItem item;
    item.item = name;
    item.errors.assign(methods.size(), nan);

    const fs::path gt_path = fs::path(dataset_dir) / (name + ".gt.csv");
    if (!fs::exists(gt_path)) {
      std::cerr << "warning: no ground truth for " << name << "; skipped\n";
      result.items.push_back(std::move(item));
      continue;
    }

    const LandmarkSet2D w =
        io::read_landmarks_csv((fs::path(dataset_dir) / (name + kSuffix)).string());
    const Shape3D truth = io::read_shape_csv(gt_path.string());
    item.has_ground_truth = true;

    std::optional<SolveResult> convex;
    const auto convex_result = [&]() -> const SolveResult& {
      if (!convex) convex = solve_noisy(w, dict, lambda, solver_opts);
      return *convex;
    };

    for (std::size_t m = 0; m < methods.size(); ++m) {
      Shape3D estimate;
      if (methods[m] == "convex") {
        estimate = convex_result().shape;
      } else if (methods[m] == "altmin") {
        estimate = solve_altmin(w, dict, lambda, AltMinInit::mean_shape()).shape;
      } else {
        estimate =
            solve_altmin(w, dict, lambda, AltMinInit::warm_start(convex_result())).shape;
      }
      item.errors[m] = reconstruction_error(estimate, truth);
    }
    result.items.push_back(std::move(item));
  }

  result.mean_errors.assign(methods.size(), nan);
  int scored = 0;
  for (const EvaluateItem& item : result.items) {
    if (item.has_ground_truth) ++scored;
  }
  if (scored > 0) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      double sum = 0.0;
      for (const EvaluateItem& item : result.items) {
        if (item.has_ground_truth) sum += item.errors[m];
      }
      result.mean_errors[m] = sum / scored;
    }
  }

  if (!out_path.empty()) {
    std::ofstream out = open_output(out_path);
    out << "item,status";
    for (const std::string& m : methods) out << ',' << m;
    out << '\n';
    for (const EvaluateItem& item : result.items) {
      out << item.item << ',' << (item.has_ground_truth ? "ok" : "skipped");
      for (double e : item.errors) out << ',' << io::format_double(e);
      out << '\n';
    }
    out << "__mean__,mean";
    for (double e : result.mean_errors) out << ',' << io::format_double(e);
    out << '\n';
    if (!out) throw std::runtime_error("cannot write file: " + out_path);
  }
  return result;
}

}  // namespace shapelift

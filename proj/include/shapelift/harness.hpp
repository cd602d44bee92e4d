#pragma once

#include "shapelift/solver.hpp"
#include "shapelift/synth.hpp"
#include "shapelift/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace shapelift {

struct PhaseCell {
  int p = 0;
  int z = 0;
  int trials = 0;
  int successes = 0;
  double frequency = 0.0;
  double mean_rel_error = 0.0;
};

struct PhaseGridResult {
  std::vector<PhaseCell> cells;  ///< sorted by (p, z)
};

/// Runs `trials` noiseless recovery trials per (p, z) cell; a trial succeeds
/// when the relative motion error ||Mhat - M||_F / ||M||_F is below 1e-3.
/// Writes the CSV to out_path unless it is empty. Cells are independent and
/// seeded individually from `seed`.
PhaseGridResult run_phase_transition(const std::vector<int>& p_list,
                                     const std::vector<int>& z_list, int k,
                                     int trials, std::uint64_t seed,
                                     const std::string& out_path,
                                     const SolverOptions& solver_opts = {});

struct EvaluateItem {
  std::string item;
  bool has_ground_truth = false;
  std::vector<double> errors;  ///< one per method, aligned with method list
};

struct EvaluateResult {
  std::vector<std::string> methods;
  std::vector<EvaluateItem> items;   ///< sorted by item name
  std::vector<double> mean_errors;   ///< over items with ground truth
};

/// Solves every `<item>.landmarks.csv` in dataset_dir with each method
/// ("convex", "altmin", "altmin_warm") and scores it against
/// `<item>.gt.csv`. Items without ground truth are kept, flagged, and
/// excluded from the means. Writes the CSV to out_path unless empty.
/// Throws std::invalid_argument("no items") for an empty dataset.
EvaluateResult run_evaluate(const std::string& dataset_dir,
                            const ShapeDictionary& dict,
                            const std::vector<std::string>& methods,
                            double lambda, const std::string& out_path,
                            const SolverOptions& solver_opts = {});

/// CSV with header `p,z,trials,successes,frequency,mean_rel_error`; doubles
/// use the shortest round-tripping representation, so parse(write(x)) == x.
void write_phase_csv(const std::string& path, const PhaseGridResult& grid);
PhaseGridResult read_phase_csv(const std::string& path);

}  // namespace shapelift

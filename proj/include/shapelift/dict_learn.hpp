#pragma once

#include "shapelift/types.hpp"

#include <vector>

namespace shapelift {

struct DictLearnOptions {
  int max_alternations = 100;
  double tolerance = 1e-6;          ///< relative objective decrease
  int max_inner_iterations = 5000;  ///< per subproblem
  double kkt_tolerance = 1e-6;
};

struct DictLearnResult {
  ShapeDictionary dictionary;      ///< k bases, each ||B_i||_F <= 1
  Eigen::MatrixXd coefficients;    ///< k x n, nonnegative
  std::vector<double> objective_history;  ///< nonincreasing per alternation
};

/// Centers every shape and similarity-aligns each onto the first one.
/// Throws std::runtime_error("degenerate shape") when a shape has no extent.
std::vector<Shape3D> align_training_set(const std::vector<Shape3D>& shapes);

/// Learns k basis shapes from n >= k training shapes by alternating
/// nonnegative-lasso coefficient updates with Frobenius-ball-projected
/// least-squares basis updates:
///   min sum_j 0.5 * ||S_j - sum_i C_ij B_i||_F^2 + beta * sum_ij C_ij
///   s.t. C >= 0, ||B_i||_F <= 1.
/// Bases are initialized from k uniformly spaced training shapes. Throws
/// std::invalid_argument when k > n or k < 1.
DictLearnResult learn_dictionary(const std::vector<Shape3D>& shapes, Eigen::Index k,
                                 double beta, const DictLearnOptions& opts = {});

}  // namespace shapelift

#pragma once

#include "shapelift/solver.hpp"
#include "shapelift/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace shapelift {

/// Deterministic random source. The engine (mt19937_64) is pinned by the
/// language standard, and all distribution transforms are implemented here,
/// so seeded streams are bit-identical across platforms and toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Uniform integer in [0, bound); bound must be positive.
  std::int64_t below(std::int64_t bound);

  /// Rotation drawn uniformly from SO(3) via a normalized Gaussian quaternion.
  Eigen::Matrix3d rotation();

  /// z distinct indices from [0, n), ascending.
  std::vector<Eigen::Index> choose(Eigen::Index n, Eigen::Index z);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Stable mixer for deriving independent sub-seeds (grid cells, trials).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

struct SynthOptions {
  /// One rotation shared by every basis instead of an independent rotation
  /// per basis; used by the baseline benchmark, where the single-rotation
  /// model must contain the truth.
  bool shared_rotation = false;
  /// Standard deviation of additive Gaussian noise on the observed W.
  double noise_sigma = 0.0;
};

struct SyntheticInstance {
  ShapeDictionary dict;
  StackedMotion true_motion;
  Eigen::VectorXd true_coeffs;
  std::vector<Eigen::Matrix3d> true_rotations;
  LandmarkSet2D w;
  std::uint64_t seed = 0;
};

/// Random recovery instance: k centered Gaussian bases, uniform rotations,
/// z nonzero coefficients uniform on (0,1), W assembled exactly (plus noise
/// when requested). Deterministic in the seed.
SyntheticInstance synth_instance(Eigen::Index k, Eigen::Index p, Eigen::Index z,
                                 std::uint64_t seed, const SynthOptions& opts = {});

}  // namespace shapelift

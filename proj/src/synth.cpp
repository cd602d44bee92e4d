#include "shapelift/synth.hpp"

#include "shapelift/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shapelift {
namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

double Rng::uniform01() {
  // 53 high bits scaled into [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(angle);
  has_spare_normal_ = true;
  return r * std::cos(angle);
}

std::int64_t Rng::below(std::int64_t bound) {
  if (bound <= 0) throw std::invalid_argument("bound must be positive");
  const auto b = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();  // rejection kills the modulo bias
  return static_cast<std::int64_t>(x % b);
}

Eigen::Matrix3d Rng::rotation() {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double n2 = 0.0;
  do {
    w = normal();
    x = normal();
    y = normal();
    z = normal();
    n2 = w * w + x * x + y * y + z * z;
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  w *= inv;
  x *= inv;
  y *= inv;
  z *= inv;

  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

std::vector<Eigen::Index> Rng::choose(Eigen::Index n, Eigen::Index z) {
  if (z < 0 || z > n) throw std::invalid_argument("invalid sample size");
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = 0; i < z; ++i) {
    const Eigen::Index j = i + below(n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(z));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  std::uint64_t state = seed;
  splitmix64(state);
  state ^= a * 0xA24BAED4963EE407ULL;
  splitmix64(state);
  state ^= b * 0x9FB21C651E98DF25ULL;
  splitmix64(state);
  state ^= c * 0xD6E8FEB86659FD93ULL;
  return splitmix64(state);
}

SyntheticInstance synth_instance(Eigen::Index k, Eigen::Index p, Eigen::Index z,
                                 std::uint64_t seed, const SynthOptions& opts) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (p < 3) throw std::invalid_argument("p must be at least 3");
  if (z < 1 || z > k) throw std::invalid_argument("z must lie in [1, k]");
  if (opts.noise_sigma < 0.0) throw std::invalid_argument("negative noise");

  Rng rng(seed);
  SyntheticInstance out;
  out.seed = seed;

  // Bases: i.i.d. standard normal entries, centered per row. Fill order is
  // part of the determinism contract: basis by basis, row by row.
  out.dict.bases.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Matrix3Xd b(3, p);
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < p; ++c) b(r, c) = rng.normal();
    }
    out.dict.bases.push_back(centralize_shape(Shape3D(std::move(b))));
  }

  out.true_rotations.reserve(static_cast<std::size_t>(k));
  if (opts.shared_rotation) {
    const Eigen::Matrix3d shared = rng.rotation();
    out.true_rotations.assign(static_cast<std::size_t>(k), shared);
  } else {
    for (Eigen::Index i = 0; i < k; ++i) out.true_rotations.push_back(rng.rotation());
  }

  const std::vector<Eigen::Index> support = rng.choose(k, z);
  out.true_coeffs = Eigen::VectorXd::Zero(k);
  for (const Eigen::Index i : support) out.true_coeffs[i] = rng.uniform01();

  out.true_motion = StackedMotion::zero(k);
  for (const Eigen::Index i : support) {
    const Matrix23d block =
        out.true_coeffs[i] *
        out.true_rotations[static_cast<std::size_t>(i)].topRows<2>();
    out.true_motion.set_block(i, block);
  }

  Eigen::Matrix2Xd w = out.true_motion.stacked * out.dict.stacked();
  if (opts.noise_sigma > 0.0) {
    for (Eigen::Index r = 0; r < 2; ++r) {
      for (Eigen::Index c = 0; c < p; ++c) w(r, c) += opts.noise_sigma * rng.normal();
    }
  }
  out.w = LandmarkSet2D(std::move(w));
  return out;
}

}  // namespace shapelift

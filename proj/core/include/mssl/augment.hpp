#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "mssl/volume.hpp"

namespace mssl {

struct AffineRanges {
  std::array<double, 3> rotation_deg{10.0, 10.0, 10.0};  // +/- per axis
  double translation_vox = 4.0;                          // +/- per axis
  double scale_min = 0.9;
  double scale_max = 1.1;
};

struct AugmentationPolicy {
  double p_affine = 0.5;
  AffineRanges affine{};
  double p_flip = 0.5;
  double p_noise = 0.5;
  double noise_mean = 0.0;
  double noise_std = 0.1;
  std::uint64_t rng_seed = 0;

  /// Everything off.
  static AugmentationPolicy none();
  /// DAE corruption: Gaussian noise only, always applied.
  static AugmentationPolicy dae_corruption(double std = 0.6);
};

/// Throws ArgumentError when a probability is outside [0, 1] or ranges are inverted.
void validate(const AugmentationPolicy& policy);

using Rng = std::mt19937_64;

/// Geometric parameters drawn for one sample; applied identically to paired volumes.
struct GeometricDraw {
  bool affine = false;
  std::array<double, 3> rotation_rad{};  // about D, H, W axes
  std::array<double, 3> translation{};   // voxels
  double scale = 1.0;
  bool flip = false;
};

GeometricDraw draw_geometry(const AugmentationPolicy& policy, Rng& rng);

/// Trilinear resampling about the grid centre, replicate border. Flip is applied after the affine.
Volume apply_geometry(const Volume& v, const GeometricDraw& g);

/// Adds seeded Gaussian noise (mean, std) and clamps to [0, 1].
Volume add_gaussian_noise(const Volume& v, double mean, double std, Rng& rng);

/// Fixed order: affine, flip, noise; output clamped to [0, 1].
/// Each transform fires independently with its probability.
Volume augment(const Volume& v, const AugmentationPolicy& policy, Rng& rng);

/// Seeds a fresh stream from `policy.rng_seed`.
Volume augment(const Volume& v, const AugmentationPolicy& policy);

/// Same draws applied to an (input, target) pair: geometry to both, noise to the input only.
std::pair<Volume, Volume> augment_pair(const Volume& input, const Volume& target,
                                       const AugmentationPolicy& policy, Rng& rng);

}  // namespace mssl

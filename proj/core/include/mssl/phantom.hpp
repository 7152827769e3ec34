#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mssl/sample.hpp"

namespace mssl {

enum class AnomalyKind { blob, wall_thickening, polyp_stalk };

std::string_view to_string(AnomalyKind k);
AnomalyKind parse_anomaly_kind(std::string_view s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PhantomConfig {
  std::int64_t n_patients = 100;
  double anomaly_fraction = 870.0 / 2134.0;  // anomalous share of the reference cohort
  std::int64_t grid_size = 64;
  Range cavity_radius{14.0, 19.0};
  Range wall_thickness{3.0, 6.0};
  std::set<AnomalyKind> anomaly_kinds{AnomalyKind::blob, AnomalyKind::wall_thickening,
                                      AnomalyKind::polyp_stalk};
  Range anomaly_radius{4.0, 9.0};
  double background_noise_std = 0.03;
  std::uint64_t rng_seed = 0;
  bool labelled = true;               // false: labels withheld (unlabelled pool)
  std::string id_prefix = "p";

  /// Defaults rescaled to a grid of `n` voxels per side.
  static PhantomConfig for_grid(std::int64_t n);
};

/// Throws ConfigError for invalid probabilities or geometry that does not fit the grid.
void validate(const PhantomConfig& cfg);

/// Intensity conventions before noise.
inline constexpr float kCavityIntensity = 0.1f;
inline constexpr float kShellIntensity = 0.7f;
inline constexpr float kTissueIntensity = 0.35f;

struct PhantomGeometry {
  std::array<double, 3> center{};         // cavity centre (D, H, W)
  std::array<double, 3> cavity_radii{};   // ellipsoid semi-axes
  double wall_thickness = 0.0;

  /// Normalised ellipsoidal radius of a voxel; < 1 inside the cavity.
  [[nodiscard]] double cavity_rho(double i, double j, double k) const;
  [[nodiscard]] double min_cavity_radius() const;
};

struct Phantom {
  Volume volume;
  PhantomGeometry geometry;
};

using PhantomRng = std::mt19937_64;

/// Normal (anomaly-free) phantom in canonical (left) orientation, not yet normalised.
Phantom make_normal_phantom(const PhantomConfig& cfg, PhantomRng& rng);

struct Injection {
  Volume volume;
  Mask mask;
  double radius = 0.0;  // sampled structure radius (voxels)
};

/// Inserts one structure inside the cavity. Only voxels in `mask` change.
Injection inject_anomaly(const Phantom& phantom, AnomalyKind kind, const PhantomConfig& cfg,
                         PhantomRng& rng);

/// Two samples per patient (left, then right flipped to canonical orientation),
/// normalised to [0, 1]. Exactly round_half_up(anomaly_fraction * 2 * n_patients)
/// samples are anomalous. Byte-identical for a given config.
std::vector<Sample> generate_dataset(const PhantomConfig& cfg);

/// Independent per-patient stream derived from the dataset seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mssl

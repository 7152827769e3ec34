#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mssl/models.hpp"
#include "mssl/sample.hpp"
#include "mssl/training.hpp"

namespace mssl {

struct CaeConfig {
  CaeSpec spec{};
  LarsRecipe recipe{};
};

/// Trains the autoencoder with L1 loss on normal samples only, no augmentation.
/// Throws ContractError if any sample is not labelled normal.
TrainResult train_cae(std::span<const Sample* const> normals, const CaeConfig& cfg);

/// Builds the autoencoder and loads its weights (spec hash checked).
Cae load_cae(const Checkpoint& ckpt, const CaeSpec& spec);

/// |x - reconstruction| elementwise, clamped to [0, 1].
Volume residual(const Volume& x, const Volume& reconstruction);

/// |x - A(x)| elementwise, in [0, 1].
Volume residual(Cae& cae, const Volume& x);

/// Batched variant of `residual`.
std::vector<Volume> residuals(Cae& cae, std::span<const Volume* const> xs, std::size_t batch_size = 8);

/// Median filter (kernel 1 disables) then clamp to [0, 1].
Volume postprocess_residual(const Volume& r, int kernel = 5);

struct ResidualSample {
  std::string input_ref;
  Volume residual;
  int median_kernel = 5;  // 1 = no post-processing
};

struct ResidualManifestEntry {
  std::string input_id;
  std::filesystem::path residual_path;  // relative to the manifest directory
};

struct ResidualManifest {
  std::string cae_spec_hash;
  int median_kernel = 5;
  std::vector<ResidualManifestEntry> entries;
};

/// One post-processed residual per pool volume, written under `out_dir`
/// with `manifest.json`. Throws StateError if the checkpoint file is missing.
ResidualManifest sweep_unlabelled(const std::filesystem::path& cae_checkpoint, const CaeSpec& spec,
                                  std::span<const UnlabelledItem> pool, int median_kernel,
                                  const std::filesystem::path& out_dir);

/// In-memory sweep (no files).
std::vector<ResidualSample> sweep_unlabelled(const Checkpoint& cae, const CaeSpec& spec,
                                             std::span<const UnlabelledItem> pool, int median_kernel);

void write_residual_manifest(const ResidualManifest& m, const std::filesystem::path& dir);
ResidualManifest read_residual_manifest(const std::filesystem::path& dir);
std::vector<ResidualSample> load_residuals(const std::filesystem::path& dir);

}  // namespace mssl

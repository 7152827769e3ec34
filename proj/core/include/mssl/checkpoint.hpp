#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace mssl {

enum class StageTag { cae, ssl, dae, ae, finetuned, scratch };

std::string_view to_string(StageTag t);
StageTag parse_stage_tag(std::string_view s);

/// Named weight tensors plus provenance. On disk (little-endian):
///   "MSCKPT\0\0", u32 version, u64 metadata length, metadata (JSON text),
///   u32 tensor count, then per tensor: u32 name length, name, u8 dtype,
///   u32 rank, i64 dims[rank], raw element bytes.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  StageTag stage = StageTag::scratch;
  /// Component name ("cae", "encoder", "decoder", "head") -> architecture hash.
  std::map<std::string, std::string> component_hashes;
  std::string config_json = "{}";
  std::int64_t epoch = -1;
  double val_loss = 0.0;
  /// "<component>.<parameter path>" -> tensor (CPU, contiguous).
  std::map<std::string, torch::Tensor> tensors;

  /// Hash over all component hashes.
  [[nodiscard]] std::string spec_hash() const;
  [[nodiscard]] bool has_component(const std::string& name) const;

  /// Deep copy of `module`'s parameters and buffers under `component`.
  void capture(const std::string& component, const std::string& arch_hash, const torch::nn::Module& module);

  /// Copies `component` weights into `module`; throws SpecHashError when
  /// `arch_hash` differs from the stored one or tensor names/shapes disagree.
  void restore(const std::string& component, const std::string& arch_hash, torch::nn::Module& module) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Bitwise tensor-by-tensor equality (names, dtypes, shapes, bytes).
bool same_weights(const Checkpoint& a, const Checkpoint& b);

}  // namespace mssl

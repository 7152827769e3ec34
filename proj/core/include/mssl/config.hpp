#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mssl/finetune.hpp"
#include "mssl/phantom.hpp"
#include "mssl/pretrain.hpp"
#include "mssl/splits.hpp"
#include "mssl/uad.hpp"

namespace mssl {

struct PathsConfig {
  std::string data_root = "data";
  std::string output_root = "runs";
};

/// Phantom cohort: labelled set D_l and the disjoint unlabelled pool D_u.
struct DataConfig {
  std::int64_t labelled_patients = 1067;
  std::int64_t unlabelled_patients = 1559;
  PhantomConfig phantom{};  // n_patients, rng_seed, labelled and id_prefix are filled per cohort
};

struct SplitConfig {
  int fold_count = 5;
  double val_share = 298.0 / 2134.0;
  double test_share = 641.0 / 2134.0;
  std::optional<std::uint64_t> seed;  // defaults to the global seed
};

struct ModelConfig {
  EncoderSpec encoder{};  // input_size follows data.phantom.grid_size
  std::int64_t head_hidden_dim = 256;
};

struct UadStageConfig {
  CaeSpec spec{};  // input_size follows data.phantom.grid_size
  LarsRecipe training{};
  int median_kernel = 5;
};

struct PretrainStageConfig {
  LossKind loss = LossKind::bce;
  double dae_noise_std = 0.6;
  LarsRecipe training{};
  AugmentationPolicy augmentation{};
};

struct FinetuneStageConfig {
  double lr = 1e-4;
  double weight_decay = 1e-2;
  std::int64_t epochs = 100;
  std::int64_t batch_size = 16;
  AugmentationPolicy augmentation{};
};

struct SweepConfig {
  /// Any of "residual", "ae", "dae", "scratch". The first is the headline method.
  std::vector<std::string> methods{"residual", "scratch", "ae", "dae"};
  std::vector<double> label_fractions{0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> normal_fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  double cae_sweep_label_fraction = 0.1;
  std::vector<int> folds;  // empty: all folds
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  PathsConfig paths{};
  DataConfig data{};
  SplitConfig split{};
  ModelConfig model{};
  UadStageConfig cae{};
  PretrainStageConfig pretrain{};
  FinetuneStageConfig finetune{};
  SweepConfig sweep{};
};

struct Diagnostic {
  std::string field;  // dotted path, e.g. "cae.training.warmup_epochs"
  std::string rule;

  [[nodiscard]] std::string message() const { return field + ": " + rule; }
};

ExperimentConfig default_config();

/// Pretty-printed JSON; parse_config(to_json_text(c)) reproduces c exactly.
std::string to_json_text(const ExperimentConfig& cfg);

/// Parses and validates. Throws ConfigError carrying the line and column for
/// malformed text, or every diagnostic for an invalid configuration.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Structural and semantic checks on config text. Empty iff valid.
/// Throws ConfigError (with location) only when the text is not parseable.
std::vector<Diagnostic> validate_config_text(std::string_view text);

/// Semantic checks only.
std::vector<Diagnostic> validate_config(const ExperimentConfig& cfg);

/// Run-time checks: the referenced paths exist.
std::vector<Diagnostic> check_paths(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Resolved per-stage settings; all seeds derive from the global seed.
PhantomConfig labelled_phantom(const ExperimentConfig& cfg);
PhantomConfig pool_phantom(const ExperimentConfig& cfg);
SplitOptions split_options(const ExperimentConfig& cfg);
EncoderSpec encoder_spec(const ExperimentConfig& cfg);
CaeConfig cae_config(const ExperimentConfig& cfg);
PretrainConfig pretrain_config(const ExperimentConfig& cfg, PretrainTask task);
FinetuneConfig finetune_config(const ExperimentConfig& cfg);

}  // namespace mssl

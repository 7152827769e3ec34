#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mssl/config.hpp"
#include "mssl/metrics.hpp"
#include "mssl/sweep.hpp"

namespace mssl {

enum class Stage { gen_data, split, train_cae, gen_residuals, pretrain, finetune, evaluate, cae_sweep };

/// The seven pipeline stages in execution order (the CAE-data sweep is opt-in).
inline constexpr std::array<Stage, 7> kPipelineStages{Stage::gen_data,      Stage::split,    Stage::train_cae,
                                                      Stage::gen_residuals, Stage::pretrain, Stage::finetune,
                                                      Stage::evaluate};

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

/// Deterministic name: covers the stage's own settings and every upstream stage.
std::string stage_hash(const ExperimentConfig& cfg, Stage s);
/// gen-data lives under the data root, everything else under the output root.
std::filesystem::path stage_dir(const ExperimentConfig& cfg, Stage s);

struct StageOutcome {
  enum class State { cached, completed, failed };
  Stage stage = Stage::gen_data;
  State state = State::completed;
  std::filesystem::path dir;
  double seconds = 0.0;
  std::string error;
};

struct PipelineOptions {
  std::optional<Stage> until;     // stop after this stage
  bool cae_sweep = false;         // also run the CAE-data sweep after evaluate
  std::ostream* log = nullptr;
};

struct PipelineResult {
  bool ok = true;
  std::vector<StageOutcome> stages;
  std::filesystem::path report_path;  // evaluate's metrics_report.json, once it exists
  std::vector<SweepRow> report;       // rows of that report

  /// Stages that did work (not served from cache).
  [[nodiscard]] int executed_stages() const;
};

/// Runs the stages in order, skipping any whose directory holds a completed
/// status manifest. Invalid configs and missing paths throw ConfigError before
/// anything is written; a failing stage stops the run, records the error in its
/// status manifest and leaves its partial artifacts in place.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& options = {});

/// Label-fraction sweep results as JSON and back.
std::string sweep_rows_to_json(const std::vector<SweepRow>& rows, std::string_view fraction_key);
std::vector<SweepRow> sweep_rows_from_json(const std::string& text);

}  // namespace mssl

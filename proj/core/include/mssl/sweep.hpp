#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mssl/finetune.hpp"
#include "mssl/metrics.hpp"
#include "mssl/pretrain.hpp"
#include "mssl/splits.hpp"
#include "mssl/uad.hpp"

namespace mssl {

/// Labelled cohort with its split plan plus the disjoint unlabelled pool.
class ExperimentData {
 public:
  ExperimentData(std::vector<Sample> labelled, std::vector<Sample> pool, SplitPlan plan);

  [[nodiscard]] const Sample& labelled_sample(const std::string& id) const;
  [[nodiscard]] std::vector<const Sample*> resolve(const std::vector<std::string>& ids) const;
  [[nodiscard]] std::vector<UnlabelledItem> pool_items() const;

  [[nodiscard]] const std::vector<Sample>& labelled() const { return labelled_; }
  [[nodiscard]] const std::vector<Sample>& pool() const { return pool_; }
  [[nodiscard]] const SplitPlan& plan() const { return plan_; }

 private:
  std::vector<Sample> labelled_;
  std::vector<Sample> pool_;
  SplitPlan plan_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EvalOptions {
  FinetuneConfig finetune{};
  std::vector<int> folds;  // empty: every fold of the plan
};

struct FoldRun {
  int fold = 0;
  FoldMetrics metrics;
  int test_accesses = 0;
  std::int64_t selected_epoch = -1;
};

/// Fine-tunes per fold on the stratified fraction, selects on the fold's
/// validation set, and scores the fold's test set exactly once.
MetricsReport evaluate_method(const ExperimentData& data, const Checkpoint* init, double fraction,
                              const EvalOptions& options, std::vector<FoldRun>* runs = nullptr);

struct SweepRow {
  std::string method;
  Percent fraction = 0;
  std::optional<MetricsReport> report;  // empty when skipped
  std::string note;
};

struct SweepTable {
  std::string fraction_label;  // column header, e.g. "label_fraction"
  std::vector<SweepRow> rows;  // grouped by method, fractions increasing
};

/// Initialisation for one method; `checkpoint == nullptr` means no pretraining.
struct MethodInit {
  std::string name;
  const Checkpoint* checkpoint = nullptr;
  bool available = true;  // false: listed as skipped
  std::string note;
};

SweepTable run_label_fraction_sweep(const ExperimentData& data, const std::vector<MethodInit>& methods,
                                    std::vector<double> fractions, const EvalOptions& options);

struct CaeSweepOptions {
  CaeConfig cae{};
  PretrainConfig pretrain{};
  int median_kernel = 5;
  double label_fraction = 0.1;
  int cae_fold = 0;  // training normals come from this fold
  EvalOptions eval{};
};

/// Per normal-data fraction: train the autoencoder, regenerate pool residuals,
/// pretrain, and fine-tune at `label_fraction`.
SweepTable run_cae_fraction_sweep(const ExperimentData& data, std::vector<double> normal_fractions,
                                  const CaeSweepOptions& options);

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path);

/// AUPRC and AUROC against fraction, one line per method.
void write_sweep_plots(const SweepTable& table, const std::filesystem::path& dir);

}  // namespace mssl

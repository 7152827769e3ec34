#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mssl/error.hpp"
#include "mssl/finetune.hpp"
#include "mssl/phantom.hpp"
#include "mssl/splits.hpp"
#include "mssl/sweep.hpp"

using namespace mssl;
namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kGrid = 16;

PhantomConfig phantom(std::int64_t patients, double anomaly_fraction, std::uint64_t seed, const std::string& prefix) {
  auto cfg = PhantomConfig::for_grid(kGrid);
  cfg.n_patients = patients;
  cfg.anomaly_fraction = anomaly_fraction;
  cfg.rng_seed = seed;
  cfg.id_prefix = prefix;
  return cfg;
}

std::vector<const Sample*> pointers(const std::vector<Sample>& v) {
  std::vector<const Sample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

FinetuneConfig config(std::int64_t epochs, double lr = 1e-4, std::uint64_t seed = 0) {
  FinetuneConfig c;
  c.encoder = micro_encoder(kGrid);
  c.head = head_for(c.encoder, 16);
  c.lr = lr;
  c.epochs = epochs;
  c.batch_size = 8;
  c.augmentation = AugmentationPolicy::none();
  c.seed = seed;
  return c;
}

double accuracy(const Predictions& p) {
  int ok = 0;
  for (std::size_t i = 0; i < p.labels.size(); ++i) ok += p.predictions[i] == p.labels[i];
  return static_cast<double>(ok) / static_cast<double>(p.labels.size());
}

// Normals vs large bright blobs: separable by the cavity's peak intensity.
std::vector<Sample> separable(std::int64_t patients_per_class, std::uint64_t seed, const std::string& prefix) {
  auto normal = phantom(patients_per_class, 0.0, seed, prefix + "n");
  auto anomalous = phantom(patients_per_class, 1.0, seed + 1, prefix + "a");
  anomalous.anomaly_kinds = {AnomalyKind::blob};
  anomalous.anomaly_radius = {2.0, 2.0};
  auto out = generate_dataset(normal);
  for (auto& s : generate_dataset(anomalous)) out.push_back(std::move(s));
  return out;
}

ExperimentData small_experiment() {
  auto labelled = generate_dataset(phantom(30, 0.4, 1, "l"));
  auto pool_cfg = phantom(4, 0.4, 2, "u");
  pool_cfg.labelled = false;
  auto pool = generate_dataset(pool_cfg);
  std::vector<SampleInfo> infos;
  for (const auto& s : labelled) infos.push_back(s.info);
  auto plan = make_split(infos, SplitOptions{});
  return ExperimentData(std::move(labelled), std::move(pool), std::move(plan));
}

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("mssl_finetune_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream is(p);
  std::size_t n = 0;
  for (std::string line; std::getline(is, line);) ++n;
  return n;
}

}  // namespace

TEST(Finetune, SeparableSetReachesHighTrainAccuracy) {
  const auto train = separable(10, 3, "t");
  const auto val = separable(3, 7, "v");
  const auto r = finetune(nullptr, pointers(train), pointers(val), config(40, 1e-3));
  EXPECT_EQ(r.best.stage, StageTag::scratch);
  const auto cfg = config(1);
  Classifier model = load_classifier(r.best, cfg.encoder, cfg.head);
  EXPECT_GE(accuracy(predict(model, pointers(train))), 0.95);
}

TEST(Finetune, SameSeedSelectsSameEpoch) {
  const auto train = separable(4, 3, "t");
  const auto val = separable(2, 7, "v");
  const auto a = finetune(nullptr, pointers(train), pointers(val), config(4, 1e-3, 5));
  const auto b = finetune(nullptr, pointers(train), pointers(val), config(4, 1e-3, 5));
  EXPECT_EQ(a.best.epoch, b.best.epoch);
  EXPECT_TRUE(same_weights(a.best, b.best));
}

TEST(Finetune, IncompatibleInitIsSpecHashError) {
  const auto train = separable(2, 3, "t");
  auto other = config(1);
  other.encoder.stage_channels = {4, 8, 16, 16};
  other.head = head_for(other.encoder, 16);
  const auto source = finetune(nullptr, pointers(train), pointers(train), other);
  EXPECT_EQ(source.best.stage, StageTag::scratch);
  EXPECT_THROW(finetune(&source.best, pointers(train), pointers(train), config(1)), SpecHashError);
}

TEST(Finetune, InitialisedRunIsTaggedFinetuned) {
  const auto train = separable(2, 3, "t");
  const auto source = finetune(nullptr, pointers(train), pointers(train), config(1));
  const auto r = finetune(&source.best, pointers(train), pointers(train), config(1));
  EXPECT_EQ(r.best.stage, StageTag::finetuned);
}

TEST(Finetune, TestSetCountsEveryPass) {
  const auto samples = separable(2, 3, "t");
  const auto cfg = config(1);
  Classifier model(cfg.encoder, cfg.head);
  TestSet test(pointers(samples));
  EXPECT_EQ(test.access_count(), 0);
  const auto p = test.evaluate(model);
  EXPECT_EQ(p.ids.size(), samples.size());
  EXPECT_EQ(test.access_count(), 1);
  test.evaluate(model);
  EXPECT_EQ(test.access_count(), 2);
}

TEST(Finetune, PredictRejectsUnlabelledSamples) {
  auto cfg = phantom(1, 0.0, 1, "u");
  cfg.labelled = false;
  const auto pool = generate_dataset(cfg);
  const auto f = config(1);
  Classifier model(f.encoder, f.head);
  EXPECT_ANY_THROW(predict(model, pointers(pool)));
}

TEST(Sweep, EachFoldScoresItsTestSetOnce) {
  const auto data = small_experiment();
  EvalOptions opts;
  opts.finetune = config(2);
  opts.folds = {0, 2};
  std::vector<FoldRun> runs;
  const auto report = evaluate_method(data, nullptr, 0.2, opts, &runs);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].fold, 0);
  EXPECT_EQ(runs[1].fold, 2);
  for (const auto& r : runs) {
    EXPECT_EQ(r.test_accesses, 1);
    EXPECT_GE(r.selected_epoch, 0);
  }
  EXPECT_EQ(report.n_folds, 2);
  for (const auto* iv : {&report.auroc, &report.auprc, &report.f1}) {
    EXPECT_LE(iv->ci95_low, iv->mean);
    EXPECT_LE(iv->mean, iv->ci95_high);
    EXPECT_GE(iv->ci95_low, 0.0);
    EXPECT_LE(iv->ci95_high, 1.0);
  }
}

TEST(Sweep, LabelFractionTableIsOrderedAndListsSkippedMethods) {
  const auto data = small_experiment();
  EvalOptions opts;
  opts.finetune = config(1);
  opts.folds = {0, 1};
  const std::vector<MethodInit> methods{{"scratch", nullptr, true, ""},
                                        {"ae", nullptr, false, "missing checkpoint"}};
  const auto table = run_label_fraction_sweep(data, methods, {1.0, 0.2, 0.2}, opts);
  EXPECT_EQ(table.fraction_label, "label_fraction");
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_EQ(table.rows[0].method, "scratch");
  EXPECT_EQ(table.rows[0].fraction, 20);
  EXPECT_EQ(table.rows[1].fraction, 100);
  EXPECT_TRUE(table.rows[0].report.has_value());
  EXPECT_TRUE(table.rows[1].report.has_value());
  for (std::size_t i : {2u, 3u}) {
    EXPECT_EQ(table.rows[i].method, "ae");
    EXPECT_FALSE(table.rows[i].report.has_value());
    EXPECT_EQ(table.rows[i].note, "missing checkpoint");
  }
  EXPECT_LT(table.rows[2].fraction, table.rows[3].fraction);

  const auto dir = scratch_dir("table");
  write_sweep_csv(table, dir / "sweep.csv");
  write_sweep_plots(table, dir / "plots");
  EXPECT_EQ(line_count(dir / "sweep.csv"), 5u);
  EXPECT_TRUE(fs::exists(dir / "plots" / "auprc_vs_label_fraction.svg"));
  EXPECT_TRUE(fs::exists(dir / "plots" / "auroc_vs_label_fraction.svg"));
  EXPECT_THROW(run_label_fraction_sweep(data, methods, {0.3}, opts), ArgumentError);
}

TEST(Sweep, CaeFractionTableHasOneRowPerFraction) {
  const auto data = small_experiment();
  CaeSweepOptions opts;
  opts.cae.spec = micro_cae(kGrid);
  opts.cae.recipe.epochs = 2;
  opts.cae.recipe.warmup_epochs = 1;
  opts.cae.recipe.batch_size = 4;
  opts.pretrain.encoder = micro_encoder(kGrid);
  opts.pretrain.recipe = opts.cae.recipe;
  opts.eval.finetune = config(1);
  opts.eval.folds = {0, 1};
  const auto table = run_cae_fraction_sweep(data, {1.0, 0.2}, opts);
  EXPECT_EQ(table.fraction_label, "normal_fraction");
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].fraction, 20);
  EXPECT_EQ(table.rows[1].fraction, 100);
  for (const auto& r : table.rows) {
    EXPECT_EQ(r.method, "residual");
    ASSERT_TRUE(r.report.has_value());
    EXPECT_EQ(r.report->n_folds, 2);
  }
}

TEST(Sweep, ExperimentDataRejectsInconsistentInputs) {
  auto labelled = generate_dataset(phantom(10, 0.4, 1, "l"));
  std::vector<SampleInfo> infos;
  for (const auto& s : labelled) infos.push_back(s.info);
  const auto plan = make_split(infos, SplitOptions{});

  auto overlapping = labelled;
  for (auto& s : overlapping) s.info.label = Label::unlabelled;
  EXPECT_THROW(ExperimentData(labelled, overlapping, plan), DataError);

  auto bad = labelled;
  bad.front().info.label = Label::unlabelled;
  EXPECT_THROW(ExperimentData(bad, {}, plan), ContractError);
}

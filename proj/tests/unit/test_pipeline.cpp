#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mssl/config.hpp"
#include "mssl/error.hpp"
#include "mssl/pipeline.hpp"

using namespace mssl;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = MSSL_SOURCE_DIR;

std::string read_text(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("mssl_pipeline_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ExperimentConfig tiny(const fs::path& root) {
  auto cfg = load_config(kSource / "configs" / "tiny.json");
  cfg.paths.data_root = (root / "data").string();
  cfg.paths.output_root = (root / "runs").string();
  fs::create_directories(root / "data");
  return cfg;
}

bool has_field(const std::vector<Diagnostic>& ds, const std::string& field) {
  for (const auto& d : ds)
    if (d.field == field) return true;
  return false;
}

std::string status_state(const fs::path& dir) {
  return nlohmann::json::parse(read_text(dir / "status.json")).at("state").get<std::string>();
}

#ifdef MSSL_CLI
int run_cli(const std::string& args) {
  const std::string cmd = std::string(MSSL_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
#endif

}  // namespace

TEST(Config, ShippedConfigsHaveNoDiagnostics) {
  EXPECT_TRUE(validate_config(default_config()).empty());
  for (const auto* name : {"default.json", "tiny.json", "benchmark32.json"}) {
    const auto ds = validate_config_text(read_text(kSource / "configs" / name));
    EXPECT_TRUE(ds.empty()) << name << ": " << (ds.empty() ? "" : ds.front().message());
  }
  EXPECT_EQ(load_config(kSource / "configs" / "default.json"), default_config());
}

TEST(Config, WarmupBeyondEpochsNamesBothFields) {
  auto cfg = default_config();
  cfg.pretrain.training.warmup_epochs = 30;
  cfg.pretrain.training.epochs = 10;
  const auto ds = validate_config(cfg);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].field, "pretrain.training.warmup_epochs");
  EXPECT_NE(ds[0].rule.find("pretrain.training.epochs"), std::string::npos) << ds[0].rule;
}

TEST(Config, DisallowedFractionListsAllowedSet) {
  auto cfg = default_config();
  cfg.sweep.label_fractions = {0.1, 0.3};
  const auto ds = validate_config(cfg);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_NE(ds[0].field.find("label_fractions"), std::string::npos);
  for (const auto* allowed : {"0.1", "0.2", "0.4", "0.6", "0.8", "1"}) {
    EXPECT_NE(ds[0].rule.find(allowed), std::string::npos) << ds[0].rule;
  }
}

TEST(Config, UnknownAndMistypedFieldsAreDiagnosed) {
  auto j = nlohmann::json::parse(to_json_text(default_config()));
  j["finetune"]["lr"] = "fast";
  j["cae"]["colour"] = 3;
  const auto ds = validate_config_text(j.dump());
  EXPECT_TRUE(has_field(ds, "finetune.lr"));
  EXPECT_TRUE(has_field(ds, "cae.colour"));
}

TEST(Config, ParseErrorReportsLocation) {
  try {
    parse_config("{\n  \"seed\": 1,\n  \"paths\": {\n}");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Config, RoundTripIsLossless) {
  auto cfg = default_config();
  cfg.seed = 1234567;
  cfg.split.seed = 99;
  cfg.finetune.lr = 3.3e-5;
  cfg.data.phantom.background_noise_std = 0.0123456789;
  const auto text = to_json_text(cfg);
  const auto back = parse_config(text);
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(to_json_text(back), text);
}

TEST(Config, MissingDataRootIsPathDiagnostic) {
  const auto root = scratch_dir("paths");
  auto cfg = tiny(root);
  fs::remove_all(root / "data");
  EXPECT_TRUE(has_field(check_paths(cfg), "paths.data_root"));
}

TEST(Pipeline, TinyConfigRunsAllStagesThenIsANoOp) {
  const auto root = scratch_dir("tiny");
  const auto cfg = tiny(root);
  const auto first = run_pipeline(cfg);
  ASSERT_TRUE(first.ok);
  ASSERT_EQ(first.stages.size(), kPipelineStages.size());
  EXPECT_EQ(first.executed_stages(), 7);
  for (const auto& s : first.stages) {
    EXPECT_EQ(status_state(s.dir), "complete") << to_string(s.stage);
    EXPECT_TRUE(fs::exists(s.dir / "config.json"));
    const auto prov = nlohmann::json::parse(read_text(s.dir / "provenance.json"));
    EXPECT_EQ(prov.at("seed").get<std::uint64_t>(), cfg.seed);
    EXPECT_FALSE(prov.at("code_version").get<std::string>().empty());
  }

  ASSERT_TRUE(fs::exists(first.report_path));
  const auto rows = sweep_rows_from_json(read_text(first.report_path));
  ASSERT_EQ(rows.size(), cfg.sweep.methods.size() * cfg.sweep.label_fractions.size());
  for (const auto& r : rows) {
    ASSERT_TRUE(r.report.has_value()) << r.method;
    EXPECT_EQ(r.report->n_folds, cfg.split.fold_count);
    EXPECT_LE(r.report->auprc.ci95_low, r.report->auprc.mean);
    EXPECT_LE(r.report->auprc.mean, r.report->auprc.ci95_high);
  }

  const auto second = run_pipeline(cfg);
  EXPECT_TRUE(second.ok);
  EXPECT_EQ(second.executed_stages(), 0);
  for (const auto& s : second.stages) EXPECT_EQ(s.state, StageOutcome::State::cached);
}

TEST(Pipeline, MissingDataRootWritesNothing) {
  const auto root = scratch_dir("missing");
  auto cfg = tiny(root);
  cfg.paths.data_root = (root / "absent").string();
  EXPECT_THROW(run_pipeline(cfg), ConfigError);
  EXPECT_FALSE(fs::exists(root / "runs"));
  EXPECT_FALSE(fs::exists(root / "absent"));
}

TEST(Pipeline, StageFailureIsRecordedAndPartialArtifactsKept) {
  const auto root = scratch_dir("failure");
  const auto cfg = tiny(root);
  PipelineOptions until_split;
  until_split.until = Stage::split;
  ASSERT_TRUE(run_pipeline(cfg, until_split).ok);
  write_text(stage_dir(cfg, Stage::split) / "split.json", "{ not json");

  PipelineOptions until_cae;
  until_cae.until = Stage::train_cae;
  const auto r = run_pipeline(cfg, until_cae);
  EXPECT_FALSE(r.ok);
  ASSERT_EQ(r.stages.size(), 3u);
  EXPECT_EQ(r.stages.back().state, StageOutcome::State::failed);
  EXPECT_FALSE(r.stages.back().error.empty());
  EXPECT_EQ(status_state(stage_dir(cfg, Stage::train_cae)), "failed");
  EXPECT_TRUE(fs::exists(stage_dir(cfg, Stage::gen_data)));
}

TEST(Pipeline, StageNamesDependOnUpstreamSettings) {
  const auto a = default_config();
  auto b = a;
  b.cae.training.epochs = 7;
  EXPECT_EQ(stage_hash(a, Stage::split), stage_hash(b, Stage::split));
  EXPECT_NE(stage_hash(a, Stage::train_cae), stage_hash(b, Stage::train_cae));
  EXPECT_NE(stage_hash(a, Stage::evaluate), stage_hash(b, Stage::evaluate));
  for (auto s : kPipelineStages) EXPECT_EQ(parse_stage(to_string(s)), s);
}

TEST(Cli, ExitCodes) {
#ifndef MSSL_CLI
  GTEST_SKIP() << "command line tool not built";
#else
  const auto root = scratch_dir("cli");
  const auto cfg = tiny(root);
  save_config(cfg, root / "ok.json");
  auto bad = cfg;
  bad.finetune.epochs = 0;
  save_config(bad, root / "bad.json");
  write_text(root / "broken.json", "{");
  auto missing = cfg;
  missing.paths.data_root = (root / "absent").string();
  save_config(missing, root / "missing.json");

  EXPECT_EQ(run_cli("validate " + (root / "ok.json").string()), 0);
  EXPECT_EQ(run_cli("validate " + (root / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("validate " + (root / "broken.json").string()), 2);
  EXPECT_EQ(run_cli("gen-data"), 2);
  EXPECT_EQ(run_cli("split -c " + (root / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("split -q -c " + (root / "ok.json").string()), 0);
  write_text(stage_dir(cfg, Stage::split) / "split.json", "{ not json");
  EXPECT_EQ(run_cli("train-cae -q -c " + (root / "ok.json").string()), 1);
#endif
}

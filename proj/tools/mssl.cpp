// mssl: config-driven driver for the residual-pretraining experiments.
//
// Exit codes: 0 ok, 1 stage failure, 2 configuration or usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "mssl/config.hpp"
#include "mssl/error.hpp"
#include "mssl/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kStageFailure = 1;
constexpr int kConfigError = 2;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string stage;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_stage) {
  cmd->add_option("-c,--config", c.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the global seed");
  if (with_stage) cmd->add_option("--stage", c.stage, "stop after this stage");
  cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

mssl::ExperimentConfig resolve(const Common& c) {
  auto cfg = mssl::load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void print_report(const mssl::PipelineResult& r) {
  for (const auto& row : r.report) {
    if (!row.report) {
      std::printf("%-10s %5.2f  skipped\n", row.method.c_str(), row.fraction / 100.0);
      continue;
    }
    const auto& m = *row.report;
    std::printf("%-10s %5.2f  AUROC %.3f (%.3f-%.3f)  AUPRC %.3f (%.3f-%.3f)  F1 %.3f\n", row.method.c_str(),
                row.fraction / 100.0, m.auroc.mean, m.auroc.ci95_low, m.auroc.ci95_high, m.auprc.mean,
                m.auprc.ci95_low, m.auprc.ci95_high, m.f1.mean);
  }
  if (!r.report_path.empty()) std::printf("report: %s\n", r.report_path.string().c_str());
}

int run(const Common& c, std::optional<mssl::Stage> until, bool cae_sweep) {
  const auto cfg = resolve(c);
  mssl::PipelineOptions opts;
  opts.until = until;
  if (!c.stage.empty()) opts.until = mssl::parse_stage(c.stage);
  opts.cae_sweep = cae_sweep;
  opts.log = c.quiet ? nullptr : &std::cerr;
  const auto result = mssl::run_pipeline(cfg, opts);
  if (!result.ok) {
    const auto& last = result.stages.back();
    std::cerr << "stage " << mssl::to_string(last.stage) << " failed: " << last.error << "\n"
              << "partial artifacts kept in " << last.dir.string() << "\n";
    return kStageFailure;
  }
  if (!c.quiet) print_report(result);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-reconstruction pretraining experiments on 3D volumes"};
  app.require_subcommand(1);

  Common common;
  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config and list diagnostics");
  validate->add_option("config", validate_path, "config file")->required();

  auto* print = app.add_subcommand("print-config", "print the resolved config (defaults when no --config)");
  std::string print_path;
  std::optional<std::uint64_t> print_seed;
  print->add_option("-c,--config", print_path, "experiment config (JSON)");
  print->add_option("--seed", print_seed, "override the global seed");

  struct StageCmd {
    const char* name;
    const char* help;
    std::optional<mssl::Stage> until;
    bool cae_sweep;
  };
  const StageCmd stage_cmds[] = {
      {"gen-data", "generate the phantom cohort and unlabelled pool", mssl::Stage::gen_data, false},
      {"split", "patient-level folds and nested label fractions", mssl::Stage::split, false},
      {"train-cae", "train the autoencoder on normal training volumes", mssl::Stage::train_cae, false},
      {"gen-residuals", "residual volumes for the unlabelled pool", mssl::Stage::gen_residuals, false},
      {"pretrain", "self-supervised pretraining (residual and baselines)", mssl::Stage::pretrain, false},
      {"finetune", "fine-tune classifiers per method, label fraction and fold", mssl::Stage::finetune, false},
      {"evaluate", "score the test folds and write the metrics report", mssl::Stage::evaluate, false},
      {"run", "all stages", std::nullopt, false},
      {"sweep", "all stages plus the autoencoder-data sweep", std::nullopt, true},
  };
  std::vector<CLI::App*> stage_apps;
  for (const auto& s : stage_cmds) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common, s.until == std::nullopt);
    stage_apps.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (validate->parsed()) {
      std::ifstream in(validate_path);
      if (!in) {
        std::cerr << "cannot read " << validate_path << "\n";
        return kConfigError;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      const auto diags = mssl::validate_config_text(ss.str());
      for (const auto& d : diags) std::cout << d.message() << "\n";
      if (!diags.empty()) return kConfigError;
      std::cout << "ok\n";
      return kOk;
    }
    if (print->parsed()) {
      auto cfg = print_path.empty() ? mssl::default_config() : mssl::load_config(print_path);
      if (print_seed) cfg.seed = *print_seed;
      std::cout << mssl::to_json_text(cfg);
      return kOk;
    }
    for (std::size_t i = 0; i < stage_apps.size(); ++i) {
      if (stage_apps[i]->parsed()) return run(common, stage_cmds[i].until, stage_cmds[i].cae_sweep);
    }
  } catch (const mssl::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const mssl::ArgumentError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
  return kConfigError;
}

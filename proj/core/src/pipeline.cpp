#include "mssl/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "mssl/error.hpp"
#include "mssl/manifest.hpp"
#include "mssl/phantom.hpp"

#ifndef MSSL_VERSION
#define MSSL_VERSION "unknown"
#endif
#ifndef MSSL_GIT_COMMIT
#define MSSL_GIT_COMMIT "unknown"
#endif

namespace mssl {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::gen_data: return "gen-data";
    case Stage::split: return "split";
    case Stage::train_cae: return "train-cae";
    case Stage::gen_residuals: return "gen-residuals";
    case Stage::pretrain: return "pretrain";
    case Stage::finetune: return "finetune";
    case Stage::evaluate: return "evaluate";
    case Stage::cae_sweep: return "cae-sweep";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (Stage st : kPipelineStages) {
    if (to_string(st) == s) return st;
  }
  if (s == to_string(Stage::cae_sweep)) return Stage::cae_sweep;
  throw ArgumentError("unknown stage '" + std::string(s) +
                      "' (expected gen-data, split, train-cae, gen-residuals, pretrain, finetune, evaluate)");
}

namespace {

std::vector<std::string> pretrained_methods(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& m : cfg.sweep.methods) {
    if (m != "scratch") out.push_back(m);
  }
  return out;
}

json stage_inputs(const ExperimentConfig& cfg, Stage s) {
  const json all = json::parse(to_json_text(cfg));
  switch (s) {
    case Stage::gen_data: return {{"seed", cfg.seed}, {"data", all["data"]}};
    case Stage::split: return {{"split", all["split"]}, {"split_seed", split_options(cfg).seed}};
    case Stage::train_cae: return {{"cae", all["cae"]}};
    case Stage::gen_residuals: return {{"median_kernel", cfg.cae.median_kernel}};
    case Stage::pretrain:
      return {{"pretrain", all["pretrain"]}, {"model", all["model"]}, {"methods", pretrained_methods(cfg)}};
    case Stage::finetune:
      return {{"finetune", all["finetune"]},
              {"model", all["model"]},
              {"methods", cfg.sweep.methods},
              {"label_fractions", cfg.sweep.label_fractions},
              {"folds", cfg.sweep.folds}};
    case Stage::evaluate: return json::object();
    case Stage::cae_sweep:
      return {{"cae", all["cae"]},
              {"pretrain", all["pretrain"]},
              {"model", all["model"]},
              {"finetune", all["finetune"]},
              {"normal_fractions", cfg.sweep.normal_fractions},
              {"label_fraction", cfg.sweep.cae_sweep_label_fraction},
              {"folds", cfg.sweep.folds}};
  }
  return json::object();
}

std::optional<Stage> upstream(Stage s) {
  switch (s) {
    case Stage::gen_data: return std::nullopt;
    case Stage::split: return Stage::gen_data;
    case Stage::train_cae: return Stage::split;
    case Stage::gen_residuals: return Stage::train_cae;
    case Stage::pretrain: return Stage::gen_residuals;
    case Stage::finetune: return Stage::pretrain;
    case Stage::evaluate: return Stage::finetune;
    case Stage::cae_sweep: return Stage::split;
  }
  return std::nullopt;
}

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool stage_complete(const fs::path& dir) {
  const fs::path status = dir / "status.json";
  if (!fs::exists(status)) return false;
  try {
    return json::parse(read_text(status)).value("state", "") == "complete";
  } catch (const std::exception&) {
    return false;
  }
}

json interval_json(const Interval& iv) {
  return {{"mean", iv.mean}, {"ci95_low", iv.ci95_low}, {"ci95_high", iv.ci95_high}};
}

Interval interval_from(const json& j) {
  return Interval{j.at("mean").get<double>(), j.at("ci95_low").get<double>(), j.at("ci95_high").get<double>()};
}

std::string pct_dir(Percent p) { return "frac" + std::to_string(p); }

std::vector<int> eval_folds(const ExperimentConfig& cfg) {
  if (!cfg.sweep.folds.empty()) return cfg.sweep.folds;
  std::vector<int> out;
  for (int k = 0; k < cfg.split.fold_count; ++k) out.push_back(k);
  return out;
}

std::vector<Percent> label_percents(const ExperimentConfig& cfg) {
  std::vector<Percent> out;
  for (double f : cfg.sweep.label_fractions) out.push_back(to_percent(f, kLabelFractions));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Loads upstream artifacts lazily and keeps them for the rest of the run.
class Context {
 public:
  explicit Context(const ExperimentConfig& cfg) : cfg_(cfg) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  fs::path dir(Stage s) const { return stage_dir(cfg_, s); }

  const std::vector<Sample>& pool() {
    if (data_) return data_->pool();
    if (!pool_) pool_ = std::make_unique<std::vector<Sample>>(read_dataset(dir(Stage::gen_data) / "pool"));
    return *pool_;
  }
  const ExperimentData& data() {
    if (!data_) {
      auto labelled = read_dataset(dir(Stage::gen_data) / "labelled");
      auto pool = pool_ ? std::move(*pool_) : read_dataset(dir(Stage::gen_data) / "pool");
      pool_.reset();
      data_ = std::make_unique<ExperimentData>(std::move(labelled), std::move(pool),
                                               load_split_plan(dir(Stage::split) / "split.json"));
    }
    return *data_;
  }

 private:
  const ExperimentConfig& cfg_;
  std::unique_ptr<std::vector<Sample>> pool_;
  std::unique_ptr<ExperimentData> data_;
};

void log_line(std::ostream* log, Stage s, const std::string& msg) {
  if (log) *log << '[' << to_string(s) << "] " << msg << std::endl;
}

// ---------------------------------------------------------------------------
// stages

void run_gen_data(Context& ctx, const fs::path& out) {
  const auto& cfg = ctx.cfg();
  const json prov{{"seed", cfg.seed}, {"generator", "phantom"}};
  {
    const auto samples = generate_dataset(labelled_phantom(cfg));
    write_dataset(samples, out / "labelled", prov.dump());
  }
  const auto pool = generate_dataset(pool_phantom(cfg));
  write_dataset(pool, out / "pool", prov.dump());
}

void run_split(Context& ctx, const fs::path& out) {
  const auto infos = read_dataset_info(ctx.dir(Stage::gen_data) / "labelled");
  save_split_plan(make_split(infos, split_options(ctx.cfg())), out / "split.json");
}

void run_train_cae(Context& ctx, const fs::path& out) {
  const auto& data = ctx.data();
  const auto normals = data.resolve(normal_only(data.plan(), 0, 1.0));
  const TrainResult tr = train_cae(normals, cae_config(ctx.cfg()));
  save_checkpoint(tr.best, out / "cae.ckpt");
  write_curve_csv(tr.curve, out / "curve.csv");
}

void run_gen_residuals(Context& ctx, const fs::path& out) {
  const auto items = unlabelled_view(ctx.pool());
  sweep_unlabelled(ctx.dir(Stage::train_cae) / "cae.ckpt", cae_config(ctx.cfg()).spec, items,
                   ctx.cfg().cae.median_kernel, out);
}

void run_pretrain(Context& ctx, const fs::path& out, std::ostream* log) {
  const auto items = unlabelled_view(ctx.pool());
  std::vector<ResidualSample> residuals;
  for (const auto& m : pretrained_methods(ctx.cfg())) {
    const PretrainTask task = parse_pretrain_task(m);
    if (task == PretrainTask::residual && residuals.empty() && !items.empty()) {
      residuals = load_residuals(ctx.dir(Stage::gen_residuals));
    }
    log_line(log, Stage::pretrain, "task " + m);
    const TrainResult tr = pretrain(items, residuals, pretrain_config(ctx.cfg(), task));
    save_checkpoint(tr.best, out / (m + ".ckpt"));
    write_curve_csv(tr.curve, out / (m + "_curve.csv"));
  }
}

void run_finetune(Context& ctx, const fs::path& out, std::ostream* log) {
  const auto& cfg = ctx.cfg();
  const auto& data = ctx.data();
  const FinetuneConfig base = finetune_config(cfg);
  for (const auto& m : cfg.sweep.methods) {
    std::optional<Checkpoint> init;
    if (m != "scratch") init = load_checkpoint(ctx.dir(Stage::pretrain) / (m + ".ckpt"));
    for (Percent p : label_percents(cfg)) {
      for (int k : eval_folds(cfg)) {
        const fs::path ckpt = out / m / pct_dir(p) / ("fold" + std::to_string(k) + ".ckpt");
        if (fs::exists(ckpt)) continue;  // resume inside a partially finished stage
        log_line(log, Stage::finetune, m + " " + std::to_string(p) + "% fold " + std::to_string(k));
        FinetuneConfig fc = base;
        fc.seed = derive_seed(base.seed, static_cast<std::uint64_t>(k));
        const auto train = data.resolve(take_fraction(data.plan(), k, p / 100.0));
        const auto val = data.resolve(data.plan().fold(k).val_ids);
        const TrainResult tr = finetune(init ? &*init : nullptr, train, val, fc);
        fs::create_directories(ckpt.parent_path());
        write_curve_csv(tr.curve, ckpt.parent_path() / ("fold" + std::to_string(k) + "_curve.csv"));
        save_checkpoint(tr.best, ckpt);
      }
    }
  }
}

void write_predictions(const Predictions& p, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  out << "id,label,score,prediction\n";
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    out << p.ids[i] << ',' << p.labels[i] << ',' << p.scores[i] << ',' << p.predictions[i] << '\n';
  }
}

void run_evaluate(Context& ctx, const fs::path& out) {
  const auto& cfg = ctx.cfg();
  const auto& data = ctx.data();
  const FinetuneConfig fc = finetune_config(cfg);
  SweepTable table;
  table.fraction_label = "label_fraction";
  for (const auto& m : cfg.sweep.methods) {
    for (Percent p : label_percents(cfg)) {
      std::vector<FoldMetrics> per_fold;
      for (int k : eval_folds(cfg)) {
        const auto name = "fold" + std::to_string(k);
        const Checkpoint ckpt = load_checkpoint(ctx.dir(Stage::finetune) / m / pct_dir(p) / (name + ".ckpt"));
        Classifier model = load_classifier(ckpt, fc.encoder, fc.head);
        TestSet test(data.resolve(data.plan().fold(k).test_ids));
        const Predictions preds = test.evaluate(model);
        fs::create_directories(out / "predictions" / m / pct_dir(p));
        write_predictions(preds, out / "predictions" / m / pct_dir(p) / (name + ".csv"));
        per_fold.push_back(preds.metrics());
      }
      table.rows.push_back(SweepRow{m, p, aggregate_folds(per_fold), ""});
    }
  }
  write_text_atomic(out / "metrics_report.json", sweep_rows_to_json(table.rows, table.fraction_label));
  write_sweep_csv(table, out / "label_fraction_sweep.csv");
  write_sweep_plots(table, out / "plots");
}

void run_cae_sweep(Context& ctx, const fs::path& out) {
  const auto& cfg = ctx.cfg();
  CaeSweepOptions o;
  o.cae = cae_config(cfg);
  o.pretrain = pretrain_config(cfg, PretrainTask::residual);
  o.median_kernel = cfg.cae.median_kernel;
  o.label_fraction = cfg.sweep.cae_sweep_label_fraction;
  o.eval.finetune = finetune_config(cfg);
  o.eval.folds = eval_folds(cfg);
  const SweepTable table = run_cae_fraction_sweep(ctx.data(), cfg.sweep.normal_fractions, o);
  write_text_atomic(out / "metrics_report.json", sweep_rows_to_json(table.rows, table.fraction_label));
  write_sweep_csv(table, out / "cae_fraction_sweep.csv");
  write_sweep_plots(table, out / "plots");
}

void write_status(const fs::path& dir, Stage s, const std::string& hash, const std::string& state, double seconds,
                  const std::string& error) {
  json j{{"stage", std::string(to_string(s))}, {"hash", hash}, {"state", state}, {"updated", now_iso()},
         {"seconds", seconds}};
  if (!error.empty()) j["error"] = error;
  write_text_atomic(dir / "status.json", j.dump(2) + "\n");
}

}  // namespace

std::string stage_hash(const ExperimentConfig& cfg, Stage s) {
  const auto up = upstream(s);
  const std::string parent = up ? stage_hash(cfg, *up) : std::string("root");
  return fnv1a_hex(std::string(to_string(s)) + "|" + parent + "|" + stage_inputs(cfg, s).dump());
}

fs::path stage_dir(const ExperimentConfig& cfg, Stage s) {
  const std::string hash = stage_hash(cfg, s).substr(0, 12);
  if (s == Stage::gen_data) return fs::path(cfg.paths.data_root) / ("phantom-" + hash);
  return fs::path(cfg.paths.output_root) / (std::string(to_string(s)) + "-" + hash);
}

int PipelineResult::executed_stages() const {
  int n = 0;
  for (const auto& s : stages) n += s.state != StageOutcome::State::cached;
  return n;
}

std::string sweep_rows_to_json(const std::vector<SweepRow>& rows, std::string_view fraction_key) {
  json entries = json::array();
  for (const auto& r : rows) {
    json e{{"method", r.method}, {std::string(fraction_key), r.fraction / 100.0}};
    if (r.report) {
      e["status"] = "ok";
      e["n_folds"] = r.report->n_folds;
      e["auroc"] = interval_json(r.report->auroc);
      e["auprc"] = interval_json(r.report->auprc);
      e["f1"] = interval_json(r.report->f1);
      json folds = json::array();
      for (const auto& f : r.report->per_fold) folds.push_back({{"auroc", f.auroc}, {"auprc", f.auprc}, {"f1", f.f1}});
      e["per_fold"] = folds;
    } else {
      e["status"] = "skipped";
    }
    if (!r.note.empty()) e["note"] = r.note;
    entries.push_back(e);
  }
  return json{{"fraction_key", fraction_key}, {"entries", entries}}.dump(2) + "\n";
}

std::vector<SweepRow> sweep_rows_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto key = j.at("fraction_key").get<std::string>();
    std::vector<SweepRow> rows;
    for (const auto& e : j.at("entries")) {
      SweepRow r;
      r.method = e.at("method").get<std::string>();
      r.fraction = static_cast<Percent>(std::lround(e.at(key).get<double>() * 100.0));
      r.note = e.value("note", "");
      if (e.at("status").get<std::string>() == "ok") {
        MetricsReport m;
        m.n_folds = e.at("n_folds").get<int>();
        m.auroc = interval_from(e.at("auroc"));
        m.auprc = interval_from(e.at("auprc"));
        m.f1 = interval_from(e.at("f1"));
        for (const auto& f : e.at("per_fold")) {
          m.per_fold.push_back(
              FoldMetrics{f.at("auroc").get<double>(), f.at("auprc").get<double>(), f.at("f1").get<double>()});
        }
        r.report = m;
      }
      rows.push_back(std::move(r));
    }
    return rows;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& options) {
  auto diags = validate_config(cfg);
  for (auto& d : check_paths(cfg)) diags.push_back(std::move(d));
  if (!diags.empty()) {
    std::string msg = "invalid config:";
    for (const auto& d : diags) msg += "\n  " + d.message();
    throw ConfigError(msg);
  }

  std::vector<Stage> plan(kPipelineStages.begin(), kPipelineStages.end());
  if (options.until) {
    if (*options.until == Stage::cae_sweep) {
      plan = {Stage::gen_data, Stage::split, Stage::cae_sweep};
    } else {
      plan.erase(std::find(plan.begin(), plan.end(), *options.until) + 1, plan.end());
    }
  } else if (options.cae_sweep) {
    plan.push_back(Stage::cae_sweep);
  }

  Context ctx(cfg);
  PipelineResult result;
  for (Stage s : plan) {
    const fs::path dir = stage_dir(cfg, s);
    const std::string hash = stage_hash(cfg, s);
    StageOutcome outcome{s, StageOutcome::State::cached, dir, 0.0, ""};
    if (stage_complete(dir)) {
      log_line(options.log, s, "cached: " + dir.string());
      result.stages.push_back(outcome);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    try {
      fs::create_directories(dir);
      write_status(dir, s, hash, "running", 0.0, "");
      save_config(cfg, dir / "config.json");
      const json prov{{"stage", std::string(to_string(s))},
                      {"hash", hash},
                      {"seed", cfg.seed},
                      {"code_version", MSSL_VERSION},
                      {"git_commit", MSSL_GIT_COMMIT},
                      {"upstream", upstream(s) ? stage_dir(cfg, *upstream(s)).string() : ""},
                      {"started", now_iso()}};
      write_text_atomic(dir / "provenance.json", prov.dump(2) + "\n");
      log_line(options.log, s, "running in " + dir.string());
      switch (s) {
        case Stage::gen_data: run_gen_data(ctx, dir); break;
        case Stage::split: run_split(ctx, dir); break;
        case Stage::train_cae: run_train_cae(ctx, dir); break;
        case Stage::gen_residuals: run_gen_residuals(ctx, dir); break;
        case Stage::pretrain: run_pretrain(ctx, dir, options.log); break;
        case Stage::finetune: run_finetune(ctx, dir, options.log); break;
        case Stage::evaluate: run_evaluate(ctx, dir); break;
        case Stage::cae_sweep: run_cae_sweep(ctx, dir); break;
      }
      outcome.seconds = elapsed();
      outcome.state = StageOutcome::State::completed;
      write_status(dir, s, hash, "complete", outcome.seconds, "");
      log_line(options.log, s, "complete");
    } catch (const std::exception& e) {
      outcome.seconds = elapsed();
      outcome.state = StageOutcome::State::failed;
      outcome.error = e.what();
      try {
        write_status(dir, s, hash, "failed", outcome.seconds, e.what());
      } catch (const std::exception&) {
        // the original error is what matters
      }
      log_line(options.log, s, std::string("failed: ") + e.what());
      result.stages.push_back(outcome);
      result.ok = false;
      return result;
    }
    result.stages.push_back(outcome);
  }

  const fs::path report = stage_dir(cfg, Stage::evaluate) / "metrics_report.json";
  if (fs::exists(report)) {
    result.report_path = report;
    result.report = sweep_rows_from_json(read_text(report));
  }
  return result;
}

}  // namespace mssl

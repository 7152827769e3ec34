#include "mssl/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "mssl/error.hpp"
#include "mssl/phantom.hpp"
#include "mssl/plot.hpp"

namespace mssl {

ExperimentData::ExperimentData(std::vector<Sample> labelled, std::vector<Sample> pool, SplitPlan plan)
    : labelled_(std::move(labelled)), pool_(std::move(pool)), plan_(std::move(plan)) {
  for (std::size_t i = 0; i < labelled_.size(); ++i) {
    if (labelled_[i].info.label == Label::unlabelled) {
      throw ContractError("labelled cohort contains unlabelled sample '" + labelled_[i].info.id + "'");
    }
    if (!index_.emplace(labelled_[i].info.id, i).second) {
      throw DataError("duplicate labelled sample id '" + labelled_[i].info.id + "'");
    }
  }
  for (const auto& info : plan_.samples) {
    if (!index_.count(info.id)) throw DataError("split plan refers to unknown sample '" + info.id + "'");
  }
  for (const auto& s : pool_) {
    if (index_.count(s.info.id)) throw DataError("pool sample '" + s.info.id + "' is also labelled");
  }
}

const Sample& ExperimentData::labelled_sample(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown sample '" + id + "'");
  return labelled_[it->second];
}

std::vector<const Sample*> ExperimentData::resolve(const std::vector<std::string>& ids) const {
  std::vector<const Sample*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(&labelled_sample(id));
  return out;
}

std::vector<UnlabelledItem> ExperimentData::pool_items() const {
  std::vector<UnlabelledItem> out;
  out.reserve(pool_.size());
  for (const auto& s : pool_) out.push_back(UnlabelledItem{s.info.id, s.volume});
  return out;
}

MetricsReport evaluate_method(const ExperimentData& data, const Checkpoint* init, double fraction,
                              const EvalOptions& options, std::vector<FoldRun>* runs) {
  const auto& plan = data.plan();
  std::vector<int> folds = options.folds;
  if (folds.empty()) {
    for (int k = 0; k < plan.fold_count; ++k) folds.push_back(k);
  }
  std::vector<FoldMetrics> per_fold;
  for (int k : folds) {
    const Fold& fold = plan.fold(k);
    const auto train = data.resolve(take_fraction(plan, k, fraction));
    const auto val = data.resolve(fold.val_ids);

    FinetuneConfig cfg = options.finetune;
    cfg.seed = derive_seed(options.finetune.seed, static_cast<std::uint64_t>(k));
    const TrainResult tr = finetune(init, train, val, cfg);

    Classifier model = load_classifier(tr.best, cfg.encoder, cfg.head);
    TestSet test(data.resolve(fold.test_ids));
    const FoldMetrics m = test.evaluate(model).metrics();
    per_fold.push_back(m);
    if (runs) runs->push_back(FoldRun{k, m, test.access_count(), tr.best.epoch});
  }
  return aggregate_folds(per_fold);
}

namespace {

std::vector<Percent> normalise_fractions(std::vector<double> fractions, const std::vector<Percent>& allowed) {
  std::vector<Percent> out;
  for (double f : fractions) out.push_back(to_percent(f, allowed));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

SweepTable run_label_fraction_sweep(const ExperimentData& data, const std::vector<MethodInit>& methods,
                                    std::vector<double> fractions, const EvalOptions& options) {
  const auto pcts = normalise_fractions(std::move(fractions), kLabelFractions);
  SweepTable table;
  table.fraction_label = "label_fraction";
  for (const auto& method : methods) {
    for (Percent p : pcts) {
      SweepRow row{method.name, p, std::nullopt, method.note};
      if (method.available) row.report = evaluate_method(data, method.checkpoint, p / 100.0, options);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

SweepTable run_cae_fraction_sweep(const ExperimentData& data, std::vector<double> normal_fractions,
                                  const CaeSweepOptions& options) {
  const auto pcts = normalise_fractions(std::move(normal_fractions), kNormalFractions);
  const auto pool = data.pool_items();
  SweepTable table;
  table.fraction_label = "normal_fraction";
  for (Percent p : pcts) {
    const auto normals = data.resolve(normal_only(data.plan(), options.cae_fold, p / 100.0));
    const TrainResult cae = train_cae(normals, options.cae);
    const auto res = sweep_unlabelled(cae.best, options.cae.spec, pool, options.median_kernel);
    PretrainConfig pcfg = options.pretrain;
    pcfg.task = PretrainTask::residual;
    const TrainResult pre = pretrain_residual(pool, res, pcfg);
    table.rows.push_back(
        SweepRow{"residual", p, evaluate_method(data, &pre.best, options.label_fraction, options.eval), ""});
  }
  return table;
}

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method," << table.fraction_label
      << ",status,n_folds,auroc_mean,auroc_ci_low,auroc_ci_high,auprc_mean,auprc_ci_low,auprc_ci_high,"
         "f1_mean,f1_ci_low,f1_ci_high,note\n";
  char buf[64];
  const auto put = [&](const Interval& iv) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", iv.mean, iv.ci95_low, iv.ci95_high);
    out << ',' << buf;
  };
  for (const auto& row : table.rows) {
    out << row.method << ',' << row.fraction / 100.0;
    if (row.report) {
      out << ",ok," << row.report->n_folds;
      put(row.report->auroc);
      put(row.report->auprc);
      put(row.report->f1);
    } else {
      out << ",skipped,0,,,,,,,,,";
    }
    std::string note = row.note;
    std::replace(note.begin(), note.end(), ',', ';');
    out << ',' << note << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_sweep_plots(const SweepTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const char* metric : {"auprc", "auroc"}) {
    PlotSpec spec;
    spec.title = std::string(metric == std::string("auprc") ? "AUPRC" : "AUROC") + " vs " + table.fraction_label;
    spec.x_label = table.fraction_label;
    spec.y_label = spec.title.substr(0, 5);
    for (const auto& row : table.rows) {
      if (!row.report) continue;
      auto it = std::find_if(spec.series.begin(), spec.series.end(),
                             [&](const PlotSeries& s) { return s.name == row.method; });
      if (it == spec.series.end()) {
        spec.series.push_back(PlotSeries{row.method, {}, {}, {}, {}});
        it = spec.series.end() - 1;
      }
      const Interval& iv = metric == std::string("auprc") ? row.report->auprc : row.report->auroc;
      it->x.push_back(row.fraction / 100.0);
      it->y.push_back(iv.mean);
      it->y_low.push_back(iv.ci95_low);
      it->y_high.push_back(iv.ci95_high);
    }
    const auto path = dir / (std::string(metric) + "_vs_" + table.fraction_label + ".svg");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << line_plot_svg(spec);
  }
}

}  // namespace mssl

#include "mssl/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "mssl/error.hpp"

namespace mssl {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* who) {
  if (a != b) {
    throw MetricError(std::string(who) + ": " + std::to_string(a) + " scores vs " + std::to_string(b) + " labels");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores.size(), labels.size(), "auroc");
  const auto n_pos = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; }));
  const auto n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("auroc needs both classes present");

  // Twice the mid-rank keeps every quantity integral until the final division.
  const auto idx = order_by_score(scores, false);
  double rank2_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double rank2 = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] != 0) rank2_sum += rank2;
    }
    i = j;
  }
  const double u2 = rank2_sum - n_pos * (n_pos + 1.0);
  return u2 / (2.0 * n_pos * n_neg);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores.size(), labels.size(), "auprc");
  const auto n_pos = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; }));
  if (n_pos == 0) throw MetricError("auprc needs at least one positive");

  const auto idx = order_by_score(scores, true);
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] != 0 ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double f1(std::span<const int> predictions, std::span<const int> labels) {
  check_sizes(predictions.size(), labels.size(), "f1");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] != 0, y = labels[i] != 0;
    tp += p && y;
    fp += p && !y;
    fn += !p && y;
  }
  if (tp == 0.0) return 0.0;
  const double precision = tp / (tp + fp);
  const double recall = tp / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double t_quantile_975(int dof) {
  if (dof < 1) throw AggregationError("t quantile needs dof >= 1");
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), 0.975);
}

Interval t_interval(std::span<const double> values) {
  if (values.size() < 2) throw AggregationError("need >= 2 folds to aggregate, got " + std::to_string(values.size()));
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double half = t_quantile_975(static_cast<int>(values.size()) - 1) * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

MetricsReport aggregate_folds(std::span<const FoldMetrics> per_fold) {
  if (per_fold.size() < 2) {
    throw AggregationError("need >= 2 folds to aggregate, got " + std::to_string(per_fold.size()));
  }
  MetricsReport r;
  r.per_fold.assign(per_fold.begin(), per_fold.end());
  r.n_folds = static_cast<int>(per_fold.size());
  const auto interval_of = [&](double FoldMetrics::*field) {
    std::vector<double> v;
    for (const auto& f : per_fold) v.push_back(f.*field);
    Interval i = t_interval(v);
    i.ci95_low = std::clamp(i.ci95_low, 0.0, 1.0);
    i.ci95_high = std::clamp(i.ci95_high, 0.0, 1.0);
    return i;
  };
  r.auroc = interval_of(&FoldMetrics::auroc);
  r.auprc = interval_of(&FoldMetrics::auprc);
  r.f1 = interval_of(&FoldMetrics::f1);
  return r;
}

}  // namespace mssl

#pragma once

#include <span>
#include <vector>

namespace mssl {

/// P(score+ > score-) + 0.5 P(tie), computed exactly with mid-ranks.
/// Throws MetricError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: sum over distinct thresholds (descending) of
/// (R_k - R_{k-1}) * P_k, ties grouped. Throws MetricError with no positives.
double auprc(std::span<const double> scores, std::span<const int> labels);

/// 2PR/(P+R); 0 when there are no predicted or no actual positives.
double f1(std::span<const int> predictions, std::span<const int> labels);

struct FoldMetrics {
  double auroc = 0.0;
  double auprc = 0.0;
  double f1 = 0.0;
};

struct Interval {
  double mean = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

struct MetricsReport {
  std::vector<FoldMetrics> per_fold;
  Interval auroc;
  Interval auprc;
  Interval f1;
  int n_folds = 0;
};

/// Two-sided 97.5% Student-t quantile with `dof` degrees of freedom.
double t_quantile_975(int dof);

/// Mean and Student-t 95% interval over folds, bounds clipped to [0, 1].
/// Throws AggregationError for fewer than two folds.
MetricsReport aggregate_folds(std::span<const FoldMetrics> per_fold);

/// Raw interval for one metric (no clipping).
Interval t_interval(std::span<const double> values);

}  // namespace mssl

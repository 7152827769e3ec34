#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mssl/sample.hpp"

namespace mssl {

/// Fractions as integer percentages so they can key maps exactly.
using Percent = int;

inline const std::vector<Percent> kLabelFractions{10, 20, 40, 60, 80, 100};
inline const std::vector<Percent> kNormalFractions{20, 40, 60, 80, 100};

/// Maps 0.1 -> 10 etc.; throws ArgumentError for values outside `allowed`.
Percent to_percent(double fraction, const std::vector<Percent>& allowed = kLabelFractions);

struct SplitOptions {
  int fold_count = 5;
  // Pooled sample shares of the labelled cohort: (176 + 122) / 2134 and (380 + 261) / 2134.
  double val_share = 298.0 / 2134.0;
  double test_share = 641.0 / 2134.0;
  std::uint64_t seed = 0;
};

struct Fold {
  std::vector<std::string> train_patients;
  std::vector<std::string> val_patients;
  std::vector<std::string> test_patients;
  std::vector<std::string> train_ids;  // sample ids, in stratified nesting order
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  /// Percent -> ordered sample ids; each list is a prefix of every larger one.
  std::map<Percent, std::vector<std::string>> fraction_lists;
  /// Percent -> training normals only (the autoencoder's data).
  std::map<Percent, std::vector<std::string>> normal_lists;
};

struct SplitPlan {
  int fold_count = 0;
  std::uint64_t seed = 0;
  SplitOptions options;
  std::vector<SampleInfo> samples;  // the labelled cohort the plan refers to
  std::vector<Fold> folds;

  [[nodiscard]] const SampleInfo& info(const std::string& sample_id) const;
  [[nodiscard]] const Fold& fold(int k) const;
};

/// Patient-level partition stratified by patient composition (both normal,
/// mixed, both anomalous). Fold k's test window starts k/fold_count of the way
/// through each stratum's seeded order and wraps; validation follows it; the
/// remainder trains. Throws SplitError with fewer than fold_count patients per class.
SplitPlan make_split(std::span<const SampleInfo> samples, const SplitOptions& options);

/// Stratified, nested subset of fold k's training samples (round-half-up per class).
std::vector<std::string> take_fraction(const SplitPlan& plan, int fold, double fraction);

/// Training normals of fold k, fraction from kNormalFractions (or 1.0), nested.
std::vector<std::string> normal_only(const SplitPlan& plan, int fold, double fraction);

struct ClassCounts {
  std::int64_t normal = 0;
  std::int64_t anomalous = 0;
};
ClassCounts count_classes(const SplitPlan& plan, std::span<const std::string> ids);

}  // namespace mssl

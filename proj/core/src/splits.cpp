#include "mssl/splits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "mssl/phantom.hpp"

namespace mssl {

Percent to_percent(double fraction, const std::vector<Percent>& allowed) {
  const auto pct = static_cast<Percent>(std::lround(fraction * 100.0));
  if (std::abs(fraction * 100.0 - pct) < 1e-6 &&
      std::find(allowed.begin(), allowed.end(), pct) != allowed.end()) {
    return pct;
  }
  std::string list;
  for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::to_string(a / 100.0).substr(0, 3);
  throw ArgumentError("fraction " + std::to_string(fraction) + " not in allowed set {" + list + "}");
}

const SampleInfo& SplitPlan::info(const std::string& sample_id) const {
  const auto it = std::find_if(samples.begin(), samples.end(),
                               [&](const SampleInfo& s) { return s.id == sample_id; });
  if (it == samples.end()) throw ArgumentError("unknown sample id " + sample_id);
  return *it;
}

const Fold& SplitPlan::fold(int k) const {
  if (k < 0 || k >= static_cast<int>(folds.size())) {
    throw ArgumentError("fold " + std::to_string(k) + " out of range [0, " + std::to_string(folds.size()) + ")");
  }
  return folds[static_cast<std::size_t>(k)];
}

namespace {

struct Patient {
  std::string id;
  std::vector<const SampleInfo*> samples;
  int anomalous = 0;
  int normal = 0;
};

// 0: all normal, 1: mixed, 2: all anomalous
int stratum(const Patient& p) { return p.anomalous == 0 ? 0 : (p.normal == 0 ? 2 : 1); }

}  // namespace

SplitPlan make_split(std::span<const SampleInfo> samples, const SplitOptions& options) {
  if (options.fold_count < 2) throw SplitError("fold_count must be >= 2");
  if (!(options.val_share >= 0.0 && options.test_share > 0.0 && options.val_share + options.test_share < 1.0)) {
    throw SplitError("val/test shares must be non-negative, test > 0, and sum below 1");
  }

  std::vector<Patient> patients;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : samples) {
    if (s.label == Label::unlabelled) throw SplitError("sample " + s.id + " is unlabelled");
    auto [it, inserted] = index.try_emplace(s.patient_id, patients.size());
    if (inserted) patients.push_back({s.patient_id, {}, 0, 0});
    auto& p = patients[it->second];
    p.samples.push_back(&s);
    (s.label == Label::anomalous ? p.anomalous : p.normal) += 1;
  }
  const auto with_normal = std::count_if(patients.begin(), patients.end(), [](auto& p) { return p.normal > 0; });
  const auto with_anom = std::count_if(patients.begin(), patients.end(), [](auto& p) { return p.anomalous > 0; });
  if (with_normal < options.fold_count || with_anom < options.fold_count) {
    throw SplitError("need >= " + std::to_string(options.fold_count) +
                     " patients per class; have " + std::to_string(with_normal) + " with normal and " +
                     std::to_string(with_anom) + " with anomalous samples");
  }

  // Seeded order per stratum, starting from a canonical (sorted) order.
  std::array<std::vector<std::size_t>, 3> strata;
  std::vector<std::size_t> order(patients.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return patients[a].id < patients[b].id; });
  for (auto idx : order) strata[static_cast<std::size_t>(stratum(patients[idx]))].push_back(idx);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    std::mt19937_64 rng(derive_seed(options.seed, 100 + s));
    std::shuffle(strata[s].begin(), strata[s].end(), rng);
  }

  SplitPlan plan;
  plan.fold_count = options.fold_count;
  plan.seed = options.seed;
  plan.options = options;
  plan.samples.assign(samples.begin(), samples.end());

  for (int k = 0; k < options.fold_count; ++k) {
    Fold fold;
    std::vector<const SampleInfo*> train_samples;
    for (const auto& members : strata) {
      const auto n = static_cast<std::int64_t>(members.size());
      if (n == 0) continue;
      const auto n_test = round_half_up(options.test_share * static_cast<double>(n));
      const auto n_val = std::min(round_half_up(options.val_share * static_cast<double>(n)), n - n_test);
      const auto offset = round_half_up(static_cast<double>(k) * static_cast<double>(n) / options.fold_count);
      for (std::int64_t r = 0; r < n; ++r) {
        const auto pos = static_cast<std::size_t>((offset + r) % n);
        const Patient& p = patients[members[pos]];
        auto& ids = r < n_test ? fold.test_ids : (r < n_test + n_val ? fold.val_ids : fold.train_ids);
        auto& pids = r < n_test ? fold.test_patients : (r < n_test + n_val ? fold.val_patients : fold.train_patients);
        pids.push_back(p.id);
        for (const auto* s : p.samples) {
          if (&ids == &fold.train_ids) {
            train_samples.push_back(s);
          } else {
            ids.push_back(s->id);
          }
        }
      }
    }

    // Per-class seeded order of training samples; fraction f keeps the first
    // round_half_up(f * n_class) of each class. Lists are built incrementally so
    // every smaller list is a literal prefix of the larger ones.
    std::sort(train_samples.begin(), train_samples.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::mt19937_64 rng(derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(k)));
    std::shuffle(train_samples.begin(), train_samples.end(), rng);
    std::unordered_map<const SampleInfo*, std::size_t> rank;
    for (std::size_t i = 0; i < train_samples.size(); ++i) rank[train_samples[i]] = i;
    std::vector<const SampleInfo*> normals, anomalies;
    for (const auto* s : train_samples) (s->label == Label::normal ? normals : anomalies).push_back(s);

    std::vector<std::string> running;
    std::size_t taken_n = 0, taken_a = 0;
    for (Percent pct : kLabelFractions) {
      const auto want_n = static_cast<std::size_t>(round_half_up(pct / 100.0 * static_cast<double>(normals.size())));
      const auto want_a = static_cast<std::size_t>(round_half_up(pct / 100.0 * static_cast<double>(anomalies.size())));
      // Interleave the newly admitted samples of both classes by their shuffled rank.
      std::vector<const SampleInfo*> added(normals.begin() + static_cast<std::ptrdiff_t>(taken_n),
                                           normals.begin() + static_cast<std::ptrdiff_t>(want_n));
      added.insert(added.end(), anomalies.begin() + static_cast<std::ptrdiff_t>(taken_a),
                   anomalies.begin() + static_cast<std::ptrdiff_t>(want_a));
      std::sort(added.begin(), added.end(), [&](auto* a, auto* b) { return rank.at(a) < rank.at(b); });
      for (const auto* s : added) running.push_back(s->id);
      taken_n = want_n;
      taken_a = want_a;
      fold.fraction_lists[pct] = running;
    }
    fold.train_ids = fold.fraction_lists.at(100);

    for (Percent pct : kLabelFractions) {
      const auto want = static_cast<std::size_t>(round_half_up(pct / 100.0 * static_cast<double>(normals.size())));
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < want; ++i) ids.push_back(normals[i]->id);
      fold.normal_lists[pct] = std::move(ids);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

std::vector<std::string> take_fraction(const SplitPlan& plan, int fold, double fraction) {
  const Percent pct = to_percent(fraction, kLabelFractions);
  return plan.fold(fold).fraction_lists.at(pct);
}

std::vector<std::string> normal_only(const SplitPlan& plan, int fold, double fraction) {
  const Percent pct = to_percent(fraction, kLabelFractions);
  return plan.fold(fold).normal_lists.at(pct);
}

ClassCounts count_classes(const SplitPlan& plan, std::span<const std::string> ids) {
  std::unordered_map<std::string, Label> labels;
  for (const auto& s : plan.samples) labels.emplace(s.id, s.label);
  ClassCounts c;
  for (const auto& id : ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) throw ArgumentError("unknown sample id " + id);
    (it->second == Label::anomalous ? c.anomalous : c.normal) += 1;
  }
  return c;
}

}  // namespace mssl

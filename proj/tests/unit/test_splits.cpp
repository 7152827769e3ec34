#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "mssl/error.hpp"
#include "mssl/manifest.hpp"
#include "mssl/splits.hpp"

using namespace mssl;

namespace {

// Patient compositions of the reference cohort: both sides normal, one of each, both anomalous.
std::vector<SampleInfo> cohort(int both_normal, int mixed, int both_anomalous) {
  std::vector<SampleInfo> out;
  int p = 0;
  const auto add = [&](Label l, Label r) {
    const std::string pid = "p" + std::to_string(p++);
    out.push_back({pid + "_L", pid, Side::left, l});
    out.push_back({pid + "_R", pid, Side::right, r});
  };
  for (int i = 0; i < both_normal; ++i) add(Label::normal, Label::normal);
  for (int i = 0; i < mixed; ++i) add(i % 2 ? Label::normal : Label::anomalous, i % 2 ? Label::anomalous : Label::normal);
  for (int i = 0; i < both_anomalous; ++i) add(Label::anomalous, Label::anomalous);
  return out;
}

const std::vector<SampleInfo>& reference_cohort() {
  static const auto c = cohort(489, 286, 292);
  return c;
}

bool is_prefix(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

TEST(Splits, ReferenceCohortHasTableCounts) {
  const auto& c = reference_cohort();
  ASSERT_EQ(c.size(), 2134u);
  const SplitPlan plan = make_split(c, SplitOptions{});
  ASSERT_EQ(plan.folds.size(), 5u);
  for (int k = 0; k < 5; ++k) {
    const Fold& f = plan.fold(k);
    const auto tr = count_classes(plan, f.train_ids);
    const auto va = count_classes(plan, f.val_ids);
    const auto te = count_classes(plan, f.test_ids);
    EXPECT_EQ(tr.normal, 708) << "fold " << k;
    EXPECT_EQ(va.normal, 176) << "fold " << k;
    EXPECT_EQ(te.normal, 380) << "fold " << k;
    // 487 / 122 / 261 in the reference table; patient pairing forces parity, so allow one sample.
    EXPECT_NEAR(tr.anomalous, 487, 1) << "fold " << k;
    EXPECT_NEAR(va.anomalous, 122, 1) << "fold " << k;
    EXPECT_NEAR(te.anomalous, 261, 1) << "fold " << k;
  }
}

TEST(Splits, NoPatientLeakageAndFullCoverage) {
  const auto& c = reference_cohort();
  const SplitPlan plan = make_split(c, SplitOptions{.seed = 3});
  std::set<std::string> all;
  for (const auto& s : c) all.insert(s.patient_id);
  for (const auto& f : plan.folds) {
    std::set<std::string> tr(f.train_patients.begin(), f.train_patients.end());
    std::set<std::string> va(f.val_patients.begin(), f.val_patients.end());
    std::set<std::string> te(f.test_patients.begin(), f.test_patients.end());
    for (const auto& p : te) {
      EXPECT_FALSE(tr.count(p));
      EXPECT_FALSE(va.count(p));
    }
    for (const auto& p : va) EXPECT_FALSE(tr.count(p));
    EXPECT_EQ(tr.size() + va.size() + te.size(), all.size());
    // Sample ids follow their patients.
    for (const auto& id : f.test_ids) EXPECT_TRUE(te.count(plan.info(id).patient_id));
    for (const auto& id : f.val_ids) EXPECT_TRUE(va.count(plan.info(id).patient_id));
    for (const auto& id : f.train_ids) EXPECT_TRUE(tr.count(plan.info(id).patient_id));
  }
}

TEST(Splits, DeterministicForSeed) {
  const auto c = cohort(4, 3, 3);
  const SplitOptions o{.fold_count = 5, .seed = 11};
  const SplitPlan a = make_split(c, o);
  const SplitPlan b = make_split(c, o);
  EXPECT_EQ(split_plan_to_json(a), split_plan_to_json(b));
  const SplitPlan other = make_split(c, SplitOptions{.fold_count = 5, .seed = 12});
  EXPECT_NE(split_plan_to_json(a), split_plan_to_json(other));
}

TEST(Splits, PlanJsonRoundTrip) {
  const SplitPlan a = make_split(cohort(20, 10, 10), SplitOptions{.seed = 2});
  const SplitPlan b = split_plan_from_json(split_plan_to_json(a));
  EXPECT_EQ(split_plan_to_json(a), split_plan_to_json(b));
  EXPECT_EQ(b.fold(3).fraction_lists, a.fold(3).fraction_lists);
}

TEST(Splits, TooFewPatientsPerClassThrows) {
  EXPECT_THROW((void)make_split(cohort(10, 0, 2), SplitOptions{}), SplitError);
}

TEST(Fractions, FullFractionIsTrainingSet) {
  const SplitPlan plan = make_split(reference_cohort(), SplitOptions{});
  for (int k = 0; k < 5; ++k) EXPECT_EQ(take_fraction(plan, k, 1.0), plan.fold(k).train_ids);
}

TEST(Fractions, StratifiedRoundHalfUpAndNested) {
  const SplitPlan plan = make_split(reference_cohort(), SplitOptions{});
  for (int k = 0; k < 5; ++k) {
    const auto full = count_classes(plan, plan.fold(k).train_ids);
    std::vector<std::string> previous;
    for (Percent p : kLabelFractions) {
      const auto ids = take_fraction(plan, k, p / 100.0);
      const auto n = count_classes(plan, ids);
      EXPECT_EQ(n.normal, round_half_up(full.normal * p / 100.0));
      EXPECT_EQ(n.anomalous, round_half_up(full.anomalous * p / 100.0));
      EXPECT_TRUE(is_prefix(previous, ids)) << p << "% list must extend the previous one";
      previous = ids;
    }
  }
}

TEST(Fractions, TenPercentOfReferenceTrainingSet) {
  const SplitPlan plan = make_split(reference_cohort(), SplitOptions{});
  const auto n = count_classes(plan, take_fraction(plan, 0, 0.1));
  EXPECT_EQ(n.normal, 71);     // 70.8
  EXPECT_EQ(n.anomalous, 49);  // 48.6 or 48.7
}

TEST(Fractions, RejectsValuesOutsideAllowedSet) {
  const SplitPlan plan = make_split(cohort(20, 10, 10), SplitOptions{});
  try {
    (void)take_fraction(plan, 0, 0.3);
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("0.1"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)plan.fold(7), Error);
}

TEST(NormalOnly, CountsNestingAndPurity) {
  const SplitPlan plan = make_split(reference_cohort(), SplitOptions{});
  const auto full = normal_only(plan, 0, 1.0);
  EXPECT_EQ(full.size(), 708u);
  EXPECT_EQ(normal_only(plan, 0, 0.2).size(), 142u);  // 141.6
  std::vector<std::string> previous;
  for (Percent p : kNormalFractions) {
    const auto ids = normal_only(plan, 0, p / 100.0);
    for (const auto& id : ids) EXPECT_EQ(plan.info(id).label, Label::normal);
    EXPECT_TRUE(is_prefix(previous, ids));
    previous = ids;
  }
  std::set<std::string> train(plan.fold(0).train_ids.begin(), plan.fold(0).train_ids.end());
  for (const auto& id : full) EXPECT_TRUE(train.count(id));
}

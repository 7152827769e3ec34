#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "mssl/batching.hpp"
#include "mssl/error.hpp"
#include "mssl/manifest.hpp"
#include "mssl/phantom.hpp"
#include "mssl/transforms.hpp"
#include "mssl/uad.hpp"
#include "mssl/volume_io.hpp"

using namespace mssl;
namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kGrid = 16;

std::vector<Sample> phantoms(std::int64_t patients, double anomaly_fraction, std::uint64_t seed,
                             const std::string& prefix) {
  auto cfg = PhantomConfig::for_grid(kGrid);
  cfg.n_patients = patients;
  cfg.anomaly_fraction = anomaly_fraction;
  cfg.rng_seed = seed;
  cfg.id_prefix = prefix;
  return generate_dataset(cfg);
}

std::vector<const Sample*> pointers(const std::vector<Sample>& v) {
  std::vector<const Sample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

CaeConfig small_cae(std::int64_t epochs, std::uint64_t seed = 0) {
  CaeConfig c;
  c.spec = micro_cae(kGrid);
  c.recipe.epochs = epochs;
  c.recipe.warmup_epochs = std::max<std::int64_t>(1, epochs / 10);
  c.recipe.lr = 1.0;
  c.recipe.scale_lr_by_batch = false;
  c.recipe.batch_size = 8;
  c.recipe.val_fraction = 0.2;
  c.recipe.lars.trust_coefficient = 0.01;
  c.recipe.seed = seed;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("mssl_uad_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Volume filled(float value) { return Volume(Shape3::cube(8), value); }

class TrainedCae : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    normals_ = new std::vector<Sample>(phantoms(25, 0.0, 3, "n"));
    const auto ptrs = pointers(*normals_);
    result_ = new TrainResult(train_cae(ptrs, small_cae(50)));
  }
  static void TearDownTestSuite() {
    delete normals_;
    delete result_;
  }
  static inline std::vector<Sample>* normals_ = nullptr;
  static inline TrainResult* result_ = nullptr;
};

}  // namespace

TEST_F(TrainedCae, LossDecreasesOnFiftyNormals) {
  ASSERT_EQ(normals_->size(), 50u);
  const auto& c = result_->curve;
  ASSERT_EQ(c.size(), 50u);
  EXPECT_LT(c.back().train_loss, c.front().train_loss);
  EXPECT_EQ(result_->best.stage, StageTag::cae);
}

TEST_F(TrainedCae, CheckpointKeepsLowestValidationLoss) {
  double best = result_->curve.front().val_loss;
  for (const auto& e : result_->curve) best = std::min(best, e.val_loss);
  EXPECT_DOUBLE_EQ(result_->best.val_loss, best);
}

TEST_F(TrainedCae, ResidualIsHigherInsideAnomaly) {
  const auto held = phantoms(10, 1.0, 77, "a");
  Cae cae = load_cae(result_->best, small_cae(1).spec);
  int higher = 0;
  for (const auto& s : held) {
    const Volume r = residual(cae, s.volume);
    if (masked_mean(r, *s.gt_mask) > masked_mean(r, *s.gt_mask, true)) ++higher;
  }
  EXPECT_EQ(higher, static_cast<int>(held.size()));
}

TEST_F(TrainedCae, ResidualMatchesReconstruction) {
  Cae cae = load_cae(result_->best, small_cae(1).spec);
  const auto& x = normals_->front().volume;
  const Volume* p = &x;
  torch::NoGradGuard no_grad;
  const Volume recon = from_batch(cae->forward(to_batch(std::span<const Volume* const>(&p, 1))), 0);
  const Volume r = residual(cae, x);
  const Volume expected = residual(x, recon);
  ASSERT_EQ(r.shape(), expected.shape());
  for (std::size_t i = 0; i < r.size(); ++i) ASSERT_NEAR(r.values()[i], expected.values()[i], 1e-6);
  EXPECT_GE(min_value(r), 0.0f);
  EXPECT_LE(max_value(r), 1.0f);
}

TEST_F(TrainedCae, SweepWritesOneFilePerItemAndRerunsBitwise) {
  const auto dir = scratch_dir("sweep");
  save_checkpoint(result_->best, dir / "cae.ckpt");
  const auto pool_samples = phantoms(3, 0.5, 9, "u");
  const auto pool = unlabelled_view(pool_samples);
  const auto spec = small_cae(1).spec;

  const auto m1 = sweep_unlabelled(dir / "cae.ckpt", spec, pool, 5, dir / "run1");
  const auto m2 = sweep_unlabelled(dir / "cae.ckpt", spec, pool, 5, dir / "run2");
  ASSERT_EQ(m1.entries.size(), pool.size());
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "run1" / "residuals")) files += e.is_regular_file();
  EXPECT_EQ(files, pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(m1.entries[i].input_id, pool[i].id);
    const Volume a = load_volume(dir / "run1" / m1.entries[i].residual_path);
    const Volume b = load_volume(dir / "run2" / m2.entries[i].residual_path);
    EXPECT_TRUE(a.same_data(b));
    EXPECT_GE(min_value(a), 0.0f);
    EXPECT_LE(max_value(a), 1.0f);
  }
  const auto back = read_residual_manifest(dir / "run1");
  EXPECT_EQ(back.entries.size(), pool.size());
  EXPECT_EQ(back.median_kernel, 5);
  EXPECT_EQ(load_residuals(dir / "run1").size(), pool.size());
}

TEST_F(TrainedCae, EmptyPoolGivesEmptyManifest) {
  const auto dir = scratch_dir("empty");
  save_checkpoint(result_->best, dir / "cae.ckpt");
  const auto m = sweep_unlabelled(dir / "cae.ckpt", small_cae(1).spec, {}, 5, dir / "out");
  EXPECT_TRUE(m.entries.empty());
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  EXPECT_TRUE(read_residual_manifest(dir / "out").entries.empty());
}

TEST(Uad, MissingCheckpointIsStateError) {
  const auto dir = scratch_dir("missing");
  EXPECT_THROW(sweep_unlabelled(dir / "nope.ckpt", micro_cae(kGrid), {}, 5, dir / "out"), StateError);
}

TEST(Uad, SeededTrainingIsReproducible) {
  const auto normals = phantoms(8, 0.0, 4, "n");
  const auto ptrs = pointers(normals);
  const auto a = train_cae(ptrs, small_cae(4, 11));
  const auto b = train_cae(ptrs, small_cae(4, 11));
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
    EXPECT_EQ(a.curve[i].val_loss, b.curve[i].val_loss);
  }
  EXPECT_TRUE(same_weights(a.best, b.best));
}

TEST(Uad, AnomalousTrainingSampleIsContractViolation) {
  auto samples = phantoms(4, 0.0, 5, "n");
  samples.push_back(phantoms(1, 1.0, 6, "a").front());
  const auto ptrs = pointers(samples);
  EXPECT_THROW(train_cae(ptrs, small_cae(2)), ContractError);
}

TEST(Uad, PerfectReconstructionGivesZeroResidual) {
  const auto x = phantoms(1, 0.0, 1, "n").front().volume;
  const Volume r = residual(x, x);
  EXPECT_EQ(max_value(r), 0.0f);
  EXPECT_EQ(min_value(r), 0.0f);
}

TEST(Uad, OppositeExtremesGiveUnitResidual) {
  Volume x = filled(0.3f);
  Volume recon = filled(0.3f);
  x(2, 3, 4) = 1.0f;
  recon(2, 3, 4) = 0.0f;
  const Volume r = residual(x, recon);
  EXPECT_EQ(r(2, 3, 4), 1.0f);
  EXPECT_EQ(r(0, 0, 0), 0.0f);
  EXPECT_THROW(residual(x, Volume(Shape3::cube(4))), DimensionError);
}

TEST(Uad, KernelOneIsIdentity) {
  Volume r = filled(0.0f);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : r.values()) v = u(rng);
  EXPECT_TRUE(postprocess_residual(r, 1).same_data(r));
}

TEST(Uad, MedianSuppressesSaltNoise) {
  Volume r(Shape3::cube(32), 0.0f);
  std::mt19937_64 rng(2);
  std::bernoulli_distribution salt(0.05);
  std::size_t n = 0;
  for (auto& v : r.values())
    if (salt(rng)) {
      v = 1.0f;
      ++n;
    }
  ASSERT_GT(n, 1000u);
  const Volume p = postprocess_residual(r, 5);
  EXPECT_LT(mean_value(p), 1e-3);
}

namespace {

// Gaussian blob with sigma = radius; IoU of the 0.5 level set before vs after post-processing.
double blob_iou_after_median(double radius) {
  Volume r(Shape3::cube(32), 0.0f);
  const double c = 15.5;
  for (std::int64_t i = 0; i < 32; ++i)
    for (std::int64_t j = 0; j < 32; ++j)
      for (std::int64_t k = 0; k < 32; ++k) {
        const double d2 = (i - c) * (i - c) + (j - c) * (j - c) + (k - c) * (k - c);
        r(i, j, k) = static_cast<float>(std::exp(-0.5 * d2 / (radius * radius)));
      }
  const Volume p = postprocess_residual(r, 5);
  Mask before(r.shape()), after(r.shape());
  for (std::size_t i = 0; i < r.size(); ++i) {
    before.values()[i] = r.values()[i] > 0.5f;
    after.values()[i] = p.values()[i] > 0.5f;
  }
  return iou(before, after);
}

}  // namespace

TEST(Uad, MedianPreservesSmoothBlobOfRadiusFour) { EXPECT_GE(blob_iou_after_median(4.0), 0.8); }

TEST(Uad, MedianPreservesLargerSmoothBlobs) {
  for (double radius : {6.0, 8.0}) EXPECT_GE(blob_iou_after_median(radius), 0.8) << "radius " << radius;
}

TEST(Uad, EvenKernelRejected) {
  EXPECT_THROW(sweep_unlabelled(Checkpoint{}, micro_cae(kGrid), {}, 4), ArgumentError);
}

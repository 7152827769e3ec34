#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mssl/error.hpp"
#include "mssl/losses.hpp"
#include "mssl/optim.hpp"
#include "mssl/training.hpp"

using namespace mssl;

TEST(Schedule, WarmupEndpointsAndCosine) {
  const ScheduleConfig cfg{0.2, 20, 500};
  EXPECT_EQ(lr_at(0, cfg), 0.0);
  EXPECT_NEAR(lr_at(20, cfg), 0.2, 1e-15);
  EXPECT_NEAR(lr_at(499, cfg), 0.0, 1e-9);
  for (std::int64_t s = 0; s < 20; ++s) EXPECT_NEAR(lr_at(s, cfg), 0.2 * s / 20.0, 1e-15);
  for (std::int64_t s = 20; s < 500; ++s) {
    const double expected = 0.5 * 0.2 * (1.0 + std::cos(std::numbers::pi * (s - 20) / 479.0));
    EXPECT_NEAR(lr_at(s, cfg), expected, 1e-12);
    if (s > 20) EXPECT_LT(lr_at(s, cfg), lr_at(s - 1, cfg));
  }
}

TEST(Schedule, RejectsInvalidConfigAndSteps) {
  EXPECT_THROW((void)lr_at(0, {0.2, 30, 20}), ArgumentError);
  EXPECT_THROW((void)lr_at(500, {0.2, 20, 500}), ArgumentError);
  EXPECT_THROW((void)lr_at(-1, {0.2, 20, 500}), ArgumentError);
  EXPECT_DOUBLE_EQ(scaled_lr(0.2, 512), 0.4);
}

TEST(Recipe, WarmupMustBeShorterThanTraining) {
  LarsRecipe r;
  r.epochs = 10;
  r.warmup_epochs = 10;
  EXPECT_THROW(validate(r), ArgumentError);
  r.warmup_epochs = 9;
  EXPECT_NO_THROW(validate(r));
}

TEST(Lars, SkipsAdaptationForBiasesAndDescends) {
  torch::manual_seed(0);
  auto w = torch::randn({4, 4}, torch::requires_grad());
  auto b = torch::randn({4}, torch::requires_grad());
  Lars opt({w, b}, LarsOptions{});
  const auto x = torch::randn({8, 4});
  const auto loss_at = [&] { return (torch::matmul(x, w) + b).pow(2).mean(); };
  const double start = loss_at().item<double>();
  for (int i = 0; i < 50; ++i) {
    opt.zero_grad();
    loss_at().backward();
    opt.step(1.0);
  }
  EXPECT_LT(loss_at().item<double>(), start);
}

TEST(Lars, StepMatchesHandComputedUpdate) {
  const auto f64 = torch::dtype(torch::kDouble);
  auto w = torch::tensor({{3.0, 4.0}}, f64.requires_grad(true));  // |w| = 5
  auto b = torch::tensor({1.0}, f64.requires_grad(true));
  LarsOptions o;
  o.momentum = 0.0;
  o.weight_decay = 0.0;
  o.trust_coefficient = 0.1;
  o.eps = 0.0;
  Lars opt({w, b}, o);
  w.mutable_grad() = torch::tensor({{0.6, 0.8}}, f64);  // |g| = 1
  b.mutable_grad() = torch::tensor({2.0}, f64);
  opt.step(0.5);
  // w -= lr * trust * |w| / |g| * g = 0.5 * 0.1 * 5 * g
  EXPECT_NEAR(w[0][0].item<double>(), 3.0 - 0.25 * 0.6, 1e-12);
  EXPECT_NEAR(w[0][1].item<double>(), 4.0 - 0.25 * 0.8, 1e-12);
  // rank-1 tensors take a plain SGD step
  EXPECT_NEAR(b[0].item<double>(), 1.0 - 0.5 * 2.0, 1e-12);
}

TEST(Losses, BceAtHalfIsLn2) {
  const auto p = torch::full({1, 1, 4, 4, 4}, 0.5);
  EXPECT_NEAR(reconstruction_loss(LossKind::bce, p, p).item<double>(), std::log(2.0), 1e-6);
  EXPECT_NEAR(bce_lower_bound(p), std::log(2.0), 1e-12);
}

TEST(Losses, IdentityPredictionReachesBceLowerBound) {
  torch::manual_seed(4);
  const auto t = torch::rand({2, 1, 6, 6, 6}, torch::kDouble) * 0.98 + 0.01;
  EXPECT_NEAR(reconstruction_loss(LossKind::bce, t, t).item<double>(), bce_lower_bound(t), 1e-10);
  const auto logits = torch::log(t / (1 - t));
  EXPECT_NEAR(reconstruction_loss_from_logits(LossKind::bce, logits, t).item<double>(), bce_lower_bound(t), 1e-10);
  // any other prediction is worse
  EXPECT_GT(reconstruction_loss(LossKind::bce, (t + 0.01).clamp(0, 1), t).item<double>(), bce_lower_bound(t));
}

TEST(Losses, L1AndL2VanishAtIdentity) {
  torch::manual_seed(5);
  const auto t = torch::rand({2, 1, 6, 6, 6}, torch::kDouble);
  const auto off = (t + 0.1).clamp(0, 1);
  const double gap = (off - t).abs().mean().item<double>();
  for (auto kind : {LossKind::l1, LossKind::l2}) {
    EXPECT_EQ(reconstruction_loss(kind, t, t).item<double>(), 0.0);
    EXPECT_GT(reconstruction_loss(kind, off, t).item<double>(), 0.0);
  }
  EXPECT_NEAR(reconstruction_loss(LossKind::l1, off, t).item<double>(), gap, 1e-12);
  EXPECT_NEAR(reconstruction_loss(LossKind::l2, off, t).item<double>(), (off - t).pow(2).mean().item<double>(), 1e-12);
}

TEST(Losses, ClassificationIsOneHotBce) {
  const auto logits = torch::tensor({{2.0, -1.0}, {0.5, 0.25}}, torch::kDouble);
  const auto labels = torch::tensor({0, 1}, torch::kLong);
  const auto sp = [](double z) { return std::log1p(std::exp(z)); };  // -log sigmoid(-z)
  const double expected = (sp(-2.0) + sp(-1.0) + sp(0.5) + sp(-0.25)) / 4.0;
  EXPECT_NEAR(classification_loss(logits, labels).item<double>(), expected, 1e-12);
}

TEST(Losses, ParseNames) {
  EXPECT_EQ(parse_loss_kind("l1"), LossKind::l1);
  EXPECT_THROW((void)parse_loss_kind("huber"), ArgumentError);
}

TEST(Holdout, DisjointSeededAndSized) {
  const auto [tr, va] = holdout_split(50, 0.1, 9);
  EXPECT_EQ(va.size(), 5u);
  EXPECT_EQ(tr.size(), 45u);
  std::vector<std::size_t> all(tr);
  all.insert(all.end(), va.begin(), va.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(holdout_split(50, 0.1, 9), holdout_split(50, 0.1, 9));
}

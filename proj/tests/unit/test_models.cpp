#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "mssl/checkpoint.hpp"
#include "mssl/error.hpp"
#include "mssl/losses.hpp"
#include "mssl/models.hpp"
#include "mssl/optim.hpp"

using namespace mssl;
namespace fs = std::filesystem;

namespace {

torch::Tensor rand_input(std::int64_t b, std::int64_t s) { return torch::rand({b, 1, s, s, s}); }

}  // namespace

class Models : public ::testing::Test {
 protected:
  void SetUp() override { make_deterministic(0); }
};

TEST_F(Models, CaeShapesAndLatent) {
  Cae cae(CaeSpec{});
  cae->eval();
  torch::NoGradGuard g;
  const auto x = rand_input(2, 64);
  EXPECT_EQ(cae->forward(x).sizes(), x.sizes());
  EXPECT_EQ(cae->encode(x).sizes(), (std::vector<std::int64_t>{2, 512}));
  const auto y = cae->forward(x);
  EXPECT_GT(y.min().item<float>(), 0.0f);
  EXPECT_LT(y.max().item<float>(), 1.0f);
}

TEST_F(Models, UntrainedCaeLossFinitePositive) {
  Cae cae(micro_cae(16));
  const auto x = rand_input(2, 16);
  const auto loss = reconstruction_loss(LossKind::l1, cae->forward(x), x).item<double>();
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_GT(loss, 0.0);
}

TEST_F(Models, EncoderFeatureSizes) {
  const EncoderSpec spec{};
  EXPECT_EQ(spec.feature_sizes(), (std::vector<std::int64_t>{32, 16, 8, 4, 2}));
  ResEncoder enc(micro_encoder(64));
  enc->eval();
  torch::NoGradGuard g;
  const auto f = enc->features(rand_input(1, 64));
  ASSERT_EQ(f.levels.size(), 5u);
  const std::int64_t expected[] = {32, 16, 8, 4, 2};
  for (std::size_t l = 0; l < 5; ++l) EXPECT_EQ(f.levels[l].size(2), expected[l]) << "level " << l;
}

TEST_F(Models, FullSizeResUNetShapeAndEncoderWidth) {
  const EncoderSpec enc{};
  ResUNet net(enc, DecoderSpec::mirror(enc));
  net->eval();
  torch::NoGradGuard g;
  const auto x = rand_input(1, 64);
  EXPECT_EQ(net->forward(x).sizes(), x.sizes());
  EXPECT_EQ(net->encoder->forward(x).sizes(), (std::vector<std::int64_t>{1, 512}));
}

TEST_F(Models, MicroResUNetRoundTripShape) {
  const auto enc = micro_encoder(16);
  ResUNet net(enc, DecoderSpec::mirror(enc));
  const auto x = rand_input(3, 16);
  EXPECT_EQ(net->forward(x).sizes(), x.sizes());
  const auto r = net->reconstruct(x);
  EXPECT_GE(r.min().item<float>(), 0.0f);
  EXPECT_LE(r.max().item<float>(), 1.0f);
}

TEST_F(Models, EverySkipIsLive) {
  const auto enc = micro_encoder(32);
  ResUNet net(enc, DecoderSpec::mirror(enc));
  net->eval();
  torch::NoGradGuard g;
  const auto x = rand_input(1, 32);
  const auto full = net->forward(x);
  for (int l = 0; l < 4; ++l) {
    std::array<bool, 4> skips{true, true, true, true};
    skips[l] = false;
    const double linf = (net->forward(x, skips) - full).abs().max().item<double>();
    EXPECT_GT(linf, 0.0) << "skip " << l;
  }
}

TEST_F(Models, ClassifierLogitsAndSoftmax) {
  const auto enc = micro_encoder(16);
  Classifier clf(enc, head_for(enc, 8));
  clf->eval();
  torch::NoGradGuard g;
  const auto logits = clf->forward(rand_input(16, 16));
  EXPECT_EQ(logits.sizes(), (std::vector<std::int64_t>{16, 2}));
  const auto rows = torch::softmax(logits, 1).sum(1);
  EXPECT_LT((rows - 1.0).abs().max().item<double>(), 1e-6);
}

TEST_F(Models, WrongInputShapeThrows) {
  Cae cae(micro_cae(16));
  EXPECT_THROW(cae->forward(rand_input(1, 8)), DimensionError);
  EXPECT_THROW(cae->forward(torch::rand({1, 2, 16, 16, 16})), DimensionError);
}

TEST_F(Models, SpecHashesDistinguishArchitectures) {
  EXPECT_EQ(CaeSpec{}.hash(), CaeSpec{}.hash());
  EXPECT_NE(CaeSpec{}.hash(), micro_cae(64).hash());
  EXPECT_NE(EncoderSpec{}.hash(), micro_encoder(64).hash());
}

TEST_F(Models, GradientsMatchFiniteDifferences) {
  const auto x = torch::rand({2, 1, 8, 8, 8}, torch::kDouble);

  Cae cae(micro_cae(8));
  cae->to(torch::kDouble);
  auto r1 = check::grad_check(*cae, [&] { return reconstruction_loss(LossKind::l1, cae->forward(x), x); }, 30, 1);
  EXPECT_EQ(r1.failed, 0) << "worst " << r1.worst_relative;

  // At 8^3 the deep encoder stages are 1^3, so training-mode batch statistics over two
  // values make the loss nearly discontinuous; check the encoder nets with BN as a fixed affine map.
  const auto enc = micro_encoder(8);
  ResUNet net(enc, DecoderSpec::mirror(enc));
  net->to(torch::kDouble);
  net->eval();
  const auto target = torch::rand({2, 1, 8, 8, 8}, torch::kDouble);
  auto r2 = check::grad_check(
      *net, [&] { return reconstruction_loss_from_logits(LossKind::bce, net->forward(x), target); }, 30, 2);
  EXPECT_EQ(r2.failed, 0) << "worst " << r2.worst_relative;

  Classifier clf(enc, head_for(enc, 8));
  clf->to(torch::kDouble);
  clf->eval();
  const auto labels = torch::tensor({0, 1}, torch::kLong);
  auto r3 = check::grad_check(*clf, [&] { return classification_loss(clf->forward(x), labels); }, 30, 3);
  EXPECT_EQ(r3.failed, 0) << "worst " << r3.worst_relative;
}

TEST(Checkpoint, RoundTripRestoresIdenticalWeights) {
  make_deterministic(1);
  const auto dir = fs::temp_directory_path() / "mssl_test_ckpt";
  fs::remove_all(dir);
  const auto enc = micro_encoder(16);
  ResUNet a(enc, DecoderSpec::mirror(enc));
  Checkpoint ck;
  ck.stage = StageTag::ssl;
  ck.epoch = 3;
  ck.val_loss = 0.25;
  ck.config_json = R"({"k":1})";
  ck.capture("encoder", enc.hash(), *a->encoder);
  ck.capture("decoder", DecoderSpec::mirror(enc).hash(), *a->decoder);
  save_checkpoint(ck, dir / "a.ckpt");

  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  EXPECT_TRUE(same_weights(ck, back));
  EXPECT_EQ(back.stage, StageTag::ssl);
  EXPECT_EQ(back.epoch, 3);
  EXPECT_EQ(back.val_loss, 0.25);
  EXPECT_EQ(back.config_json, ck.config_json);
  EXPECT_EQ(back.spec_hash(), ck.spec_hash());

  ResUNet b(enc, DecoderSpec::mirror(enc));
  back.restore("encoder", enc.hash(), *b->encoder);
  back.restore("decoder", DecoderSpec::mirror(enc).hash(), *b->decoder);
  a->eval();
  b->eval();
  torch::NoGradGuard g;
  const auto x = rand_input(1, 16);
  EXPECT_TRUE(torch::equal(a->forward(x), b->forward(x)));
}

TEST(Checkpoint, ArchitectureMismatchIsRejected) {
  const auto enc = micro_encoder(16);
  ResEncoder e(enc);
  Checkpoint ck;
  ck.capture("encoder", enc.hash(), *e);
  auto other = enc;
  other.stage_channels = {4, 8, 8, 32};
  ResEncoder f(other);
  EXPECT_THROW(ck.restore("encoder", other.hash(), *f), SpecHashError);
  EXPECT_THROW(ck.restore("decoder", enc.hash(), *e), Error);
}

TEST(Checkpoint, CorruptFileIsRejected) {
  const auto dir = fs::temp_directory_path() / "mssl_test_ckpt_bad";
  fs::create_directories(dir);
  { std::ofstream(dir / "x.ckpt") << "garbage"; }
  EXPECT_THROW((void)load_checkpoint(dir / "x.ckpt"), Error);
  EXPECT_THROW((void)load_checkpoint(dir / "missing.ckpt"), Error);
}

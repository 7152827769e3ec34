#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mssl {

/// Convolutional autoencoder without skips: strided conv stages, a dense
/// bottleneck of `latent_dim`, and a mirrored trilinear-upsampling decoder.
struct CaeSpec {
  std::int64_t input_size = 64;
  std::vector<std::int64_t> stage_channels{16, 32, 64, 128, 256};
  std::int64_t latent_dim = 512;
  double leaky_slope = 0.01;

  /// Spatial extent at the bottleneck (input_size / 2^stages).
  [[nodiscard]] std::int64_t bottleneck_size() const;
  [[nodiscard]] std::string canonical() const;
  [[nodiscard]] std::string hash() const;
  void validate() const;
};

/// 3D ResNet-18 style encoder: 7^3/2 stem, then four stages of two basic blocks,
/// each stage halving the spatial extent (stage one by max-pooling).
struct EncoderSpec {
  std::int64_t input_size = 64;
  std::int64_t stem_channels = 64;
  std::vector<std::int64_t> stage_channels{64, 128, 256, 512};
  std::int64_t blocks_per_stage = 2;

  [[nodiscard]] std::int64_t feature_dim() const { return stage_channels.back(); }
  /// Spatial extents of stem and stage outputs, e.g. {32, 16, 8, 4, 2} for 64^3 input.
  [[nodiscard]] std::vector<std::int64_t> feature_sizes() const;
  [[nodiscard]] std::string canonical() const;
  [[nodiscard]] std::string hash() const;
  void validate() const;
};

/// Mirror of the encoder with one skip per encoder level (stages 3..1, then stem).
struct DecoderSpec {
  std::vector<std::int64_t> stage_channels{512, 256, 128, 64};
  std::int64_t stem_channels = 64;
  std::int64_t input_size = 64;

  static DecoderSpec mirror(const EncoderSpec& e);
  [[nodiscard]] std::string canonical() const;
  [[nodiscard]] std::string hash() const;
  void validate(const EncoderSpec& e) const;
};

struct HeadSpec {
  std::int64_t in_dim = 512;
  std::int64_t hidden_dim = 256;
  std::int64_t classes = 2;

  [[nodiscard]] std::string canonical() const;
  [[nodiscard]] std::string hash() const;
};

/// Reduced-width variants for tests and desk-scale runs.
CaeSpec micro_cae(std::int64_t input_size = 16);
EncoderSpec micro_encoder(std::int64_t input_size = 16);
HeadSpec head_for(const EncoderSpec& e, std::int64_t hidden_dim = 256);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& text);

// ---------------------------------------------------------------------------

class CaeImpl : public torch::nn::Module {
 public:
  explicit CaeImpl(CaeSpec spec);

  /// (B,1,S,S,S) in [0,1] -> reconstruction in (0,1).
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor encode(const torch::Tensor& x);
  torch::Tensor decode(const torch::Tensor& z);

  [[nodiscard]] const CaeSpec& spec() const { return spec_; }

 private:
  CaeSpec spec_;
  torch::nn::Sequential encoder_{nullptr};
  torch::nn::Linear to_latent_{nullptr};
  torch::nn::Linear from_latent_{nullptr};
  torch::nn::Sequential decoder_{nullptr};
};
TORCH_MODULE(Cae);

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv3d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr};
  torch::nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(BasicBlock);

/// Multi-scale encoder output: [stem, stage1, stage2, stage3, stage4].
struct EncoderFeatures {
  std::vector<torch::Tensor> levels;
  [[nodiscard]] torch::Tensor pooled() const;  // (B, feature_dim)
};

class ResEncoderImpl : public torch::nn::Module {
 public:
  explicit ResEncoderImpl(EncoderSpec spec);
  EncoderFeatures features(const torch::Tensor& x);
  /// Global-average-pooled final stage, (B, feature_dim).
  torch::Tensor forward(const torch::Tensor& x);
  [[nodiscard]] const EncoderSpec& spec() const { return spec_; }

 private:
  EncoderSpec spec_;
  torch::nn::Sequential stem_{nullptr};
  torch::nn::MaxPool3d pool_{nullptr};
  std::vector<torch::nn::Sequential> stages_;
};
TORCH_MODULE(ResEncoder);

class SkipDecoderImpl : public torch::nn::Module {
 public:
  explicit SkipDecoderImpl(DecoderSpec spec);
  /// Logits (B,1,S,S,S). `skip_enabled[l]` false feeds zeros in place of level l
  /// (0 = stem, 3 = stage3).
  torch::Tensor forward(const EncoderFeatures& f, std::array<bool, 4> skip_enabled = {true, true, true, true});
  [[nodiscard]] const DecoderSpec& spec() const { return spec_; }

 private:
  DecoderSpec spec_;
  std::vector<torch::nn::Sequential> blocks_;  // one per skip, deepest first
  torch::nn::Sequential out_{nullptr};
};
TORCH_MODULE(SkipDecoder);

class ClassHeadImpl : public torch::nn::Module {
 public:
  explicit ClassHeadImpl(HeadSpec spec);
  torch::Tensor forward(const torch::Tensor& features);
  [[nodiscard]] const HeadSpec& spec() const { return spec_; }

 private:
  HeadSpec spec_;
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(ClassHead);

/// Encoder + skip decoder; forward returns logits, `reconstruct` the sigmoid map.
class ResUNetImpl : public torch::nn::Module {
 public:
  ResUNetImpl(EncoderSpec enc, DecoderSpec dec);
  torch::Tensor forward(const torch::Tensor& x, std::array<bool, 4> skip_enabled = {true, true, true, true});
  torch::Tensor reconstruct(const torch::Tensor& x);

  ResEncoder encoder{nullptr};
  SkipDecoder decoder{nullptr};
};
TORCH_MODULE(ResUNet);

class ClassifierImpl : public torch::nn::Module {
 public:
  ClassifierImpl(EncoderSpec enc, HeadSpec head);
  /// Logits (B, classes).
  torch::Tensor forward(const torch::Tensor& x);

  ResEncoder encoder{nullptr};
  ClassHead head{nullptr};
};
TORCH_MODULE(Classifier);

std::int64_t parameter_count(const torch::nn::Module& m);

/// Throws DimensionError unless x is (B,1,S,S,S) with S = expected.
void check_input(const torch::Tensor& x, std::int64_t expected, const char* who);

}  // namespace mssl

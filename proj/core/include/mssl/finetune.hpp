#pragma once

#include <span>
#include <string>
#include <vector>

#include "mssl/augment.hpp"
#include "mssl/metrics.hpp"
#include "mssl/models.hpp"
#include "mssl/sample.hpp"
#include "mssl/training.hpp"

namespace mssl {

/// AdamW at a constant learning rate; model selection on validation loss.
struct FinetuneConfig {
  EncoderSpec encoder{};
  HeadSpec head{};
  double lr = 1e-4;
  double weight_decay = 1e-2;
  std::int64_t epochs = 100;
  std::int64_t batch_size = 16;
  AugmentationPolicy augmentation{};
  std::uint64_t seed = 0;
};

void validate(const FinetuneConfig& cfg);

/// `init == nullptr` trains from scratch. Otherwise the checkpoint's encoder is
/// loaded (SpecHashError if its architecture differs). Returns the checkpoint
/// with the lowest validation loss.
TrainResult finetune(const Checkpoint* init, std::span<const Sample* const> train,
                     std::span<const Sample* const> val, const FinetuneConfig& cfg);

Classifier load_classifier(const Checkpoint& ckpt, const EncoderSpec& enc, const HeadSpec& head);

struct Predictions {
  std::vector<std::string> ids;
  std::vector<double> scores;    // softmax probability of the anomalous class
  std::vector<int> predictions;  // argmax
  std::vector<int> labels;       // 1 = anomalous

  [[nodiscard]] FoldMetrics metrics() const;
};

/// Inference in eval mode. Samples must be labelled.
Predictions predict(Classifier& model, std::span<const Sample* const> samples, std::size_t batch_size = 16);

/// Held-out test samples; every evaluation is counted so callers can assert a single pass.
class TestSet {
 public:
  explicit TestSet(std::vector<const Sample*> samples) : samples_(std::move(samples)) {}

  Predictions evaluate(Classifier& model);
  [[nodiscard]] int access_count() const { return accesses_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }

 private:
  std::vector<const Sample*> samples_;
  int accesses_ = 0;
};

}  // namespace mssl

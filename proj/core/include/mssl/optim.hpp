#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace mssl {

/// Linear warmup from 0 to `base_lr` over `warmup_steps`, then cosine decay to 0 at the final step.
struct ScheduleConfig {
  double base_lr = 0.2;
  std::int64_t warmup_steps = 20;
  std::int64_t total_steps = 500;
};

/// Throws ArgumentError unless 0 <= step < total_steps.
double lr_at(std::int64_t step, const ScheduleConfig& cfg);

/// Throws ArgumentError for warmup_steps >= total_steps or non-positive totals.
void validate(const ScheduleConfig& cfg);

/// Linear scaling rule: lr * batch / 256.
double scaled_lr(double lr, std::int64_t batch_size);

struct LarsOptions {
  double momentum = 0.9;
  double weight_decay = 1e-6;
  double trust_coefficient = 0.001;
  double eps = 1e-8;
};

/// Layer-wise adaptive rate scaling on top of SGD with momentum. Tensors of
/// rank <= 1 (biases, norm affine parameters) skip weight decay and adaptation.
class Lars {
 public:
  Lars(std::vector<torch::Tensor> params, LarsOptions options);

  void zero_grad();
  void step(double lr);

  [[nodiscard]] const LarsOptions& options() const { return options_; }

 private:
  std::vector<torch::Tensor> params_;
  std::vector<torch::Tensor> momentum_;
  LarsOptions options_;
};

/// Single-threaded, deterministic kernels; seeds torch's generator.
void make_deterministic(std::uint64_t seed);

}  // namespace mssl

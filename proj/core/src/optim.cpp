#include "mssl/optim.hpp"

#include <cmath>
#include <numbers>

#include "mssl/error.hpp"

namespace mssl {

void validate(const ScheduleConfig& cfg) {
  if (cfg.total_steps < 1) throw ArgumentError("total_steps must be >= 1");
  if (cfg.warmup_steps < 0 || cfg.warmup_steps >= cfg.total_steps) {
    throw ArgumentError("warmup_steps (" + std::to_string(cfg.warmup_steps) + ") must be in [0, total_steps=" +
                        std::to_string(cfg.total_steps) + ")");
  }
  if (!(cfg.base_lr > 0.0)) throw ArgumentError("base_lr must be > 0");
}

double lr_at(std::int64_t step, const ScheduleConfig& cfg) {
  validate(cfg);
  if (step < 0 || step >= cfg.total_steps) {
    throw ArgumentError("step " + std::to_string(step) + " outside [0, " + std::to_string(cfg.total_steps) + ")");
  }
  if (step < cfg.warmup_steps) {
    return cfg.base_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  const auto span = cfg.total_steps - 1 - cfg.warmup_steps;
  if (span == 0) return cfg.base_lr;  // single post-warmup step
  const double t = static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(span);
  return 0.5 * cfg.base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

double scaled_lr(double lr, std::int64_t batch_size) { return lr * static_cast<double>(batch_size) / 256.0; }

Lars::Lars(std::vector<torch::Tensor> params, LarsOptions options) : params_(std::move(params)), options_(options) {
  momentum_.reserve(params_.size());
  for (const auto& p : params_) momentum_.push_back(torch::zeros_like(p));
}

void Lars::zero_grad() {
  for (auto& p : params_) {
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
}

void Lars::step(double lr) {
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.grad().defined()) continue;
    auto d = p.grad().clone();
    if (p.dim() > 1) {
      d.add_(p, options_.weight_decay);
      const double w_norm = p.norm().item<double>();
      const double g_norm = p.grad().norm().item<double>();
      if (w_norm > 0.0 && g_norm > 0.0) {
        d.mul_(options_.trust_coefficient * w_norm / (g_norm + options_.weight_decay * w_norm + options_.eps));
      }
    }
    momentum_[i].mul_(options_.momentum).add_(d);
    p.add_(momentum_[i], -lr);
  }
}

void make_deterministic(std::uint64_t seed) {
  torch::set_num_threads(1);
  at::globalContext().setDeterministicAlgorithms(true, false);
  torch::manual_seed(seed);
}

}  // namespace mssl

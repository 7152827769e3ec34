#include "mssl/losses.hpp"

#include "mssl/error.hpp"

namespace mssl {

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::bce: return "bce";
    case LossKind::l1: return "l1";
    case LossKind::l2: return "l2";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view s) {
  if (s == "bce") return LossKind::bce;
  if (s == "l1") return LossKind::l1;
  if (s == "l2") return LossKind::l2;
  throw ArgumentError("unknown loss '" + std::string(s) + "' (expected bce, l1, l2)");
}

torch::Tensor reconstruction_loss(LossKind kind, const torch::Tensor& prediction, const torch::Tensor& target) {
  switch (kind) {
    case LossKind::bce: return torch::binary_cross_entropy(prediction, target);
    case LossKind::l1: return torch::l1_loss(prediction, target);
    case LossKind::l2: return torch::mse_loss(prediction, target);
  }
  throw ArgumentError("unknown loss kind");
}

torch::Tensor reconstruction_loss_from_logits(LossKind kind, const torch::Tensor& logits, const torch::Tensor& target) {
  if (kind == LossKind::bce) return torch::binary_cross_entropy_with_logits(logits, target);
  return reconstruction_loss(kind, torch::sigmoid(logits), target);
}

torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  const auto one_hot = torch::one_hot(labels.to(torch::kLong), logits.size(1)).to(logits.dtype());
  return torch::binary_cross_entropy_with_logits(logits, one_hot);
}

double bce_lower_bound(const torch::Tensor& target) {
  const auto t = target.to(torch::kDouble);
  const auto h = -(torch::xlogy(t, t) + torch::xlogy(1.0 - t, 1.0 - t));
  return h.mean().item<double>();
}

}  // namespace mssl

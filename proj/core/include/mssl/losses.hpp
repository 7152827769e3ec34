#pragma once

#include <torch/torch.h>

#include <string_view>

namespace mssl {

enum class LossKind { bce, l1, l2 };

std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view s);

/// Mean voxelwise loss between probabilities in [0,1] and targets in [0,1].
torch::Tensor reconstruction_loss(LossKind kind, const torch::Tensor& prediction, const torch::Tensor& target);

/// Same losses from pre-sigmoid logits (numerically stable BCE).
torch::Tensor reconstruction_loss_from_logits(LossKind kind, const torch::Tensor& logits, const torch::Tensor& target);

/// Binary cross-entropy of (B,2) logits against one-hot encoded class indices (B).
torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels);

/// Mean binary entropy of the targets: the BCE value reached when prediction == target.
double bce_lower_bound(const torch::Tensor& target);

}  // namespace mssl

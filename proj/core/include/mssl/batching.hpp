#pragma once

#include <torch/torch.h>

#include <span>
#include <vector>

#include "mssl/volume.hpp"

namespace mssl {

/// Stacks same-shaped volumes into a float tensor (B,1,D,H,W).
torch::Tensor to_batch(std::span<const Volume* const> volumes);
torch::Tensor to_batch(std::span<const Volume> volumes);

/// Inverse of to_batch for item `b`.
Volume from_batch(const torch::Tensor& batch, std::int64_t b, Spacing spacing = {1.0, 1.0, 1.0});

/// Contiguous index ranges of at most `batch_size` over `order`.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t batch_size);

}  // namespace mssl

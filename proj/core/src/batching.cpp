#include "mssl/batching.hpp"

#include <cstring>

namespace mssl {

torch::Tensor to_batch(std::span<const Volume* const> volumes) {
  if (volumes.empty()) throw DimensionError("empty batch");
  const Shape3 s = volumes.front()->shape();
  auto out = torch::empty({static_cast<std::int64_t>(volumes.size()), 1, s.d, s.h, s.w}, torch::kFloat);
  auto* dst = out.data_ptr<float>();
  for (std::size_t b = 0; b < volumes.size(); ++b) {
    if (volumes[b]->shape() != s) {
      throw DimensionError("batch mixes shapes " + to_string(s) + " and " + to_string(volumes[b]->shape()));
    }
    std::memcpy(dst + b * volumes[b]->size(), volumes[b]->values().data(), volumes[b]->size() * sizeof(float));
  }
  return out;
}

torch::Tensor to_batch(std::span<const Volume> volumes) {
  std::vector<const Volume*> ptrs;
  ptrs.reserve(volumes.size());
  for (const auto& v : volumes) ptrs.push_back(&v);
  return to_batch(std::span<const Volume* const>(ptrs));
}

Volume from_batch(const torch::Tensor& batch, std::int64_t b, Spacing spacing) {
  if (batch.dim() != 5 || batch.size(1) != 1) throw DimensionError("expected a (B,1,D,H,W) tensor");
  const auto item = batch[b][0].detach().to(torch::kFloat).contiguous();
  const Shape3 s{item.size(0), item.size(1), item.size(2)};
  std::vector<float> data(static_cast<std::size_t>(s.voxels()));
  std::memcpy(data.data(), item.data_ptr<float>(), data.size() * sizeof(float));
  return Volume(s, std::move(data), spacing);
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  return out;
}

}  // namespace mssl

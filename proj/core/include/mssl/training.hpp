#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mssl/checkpoint.hpp"
#include "mssl/optim.hpp"

namespace mssl {

/// LARS recipe shared by autoencoder training and pretraining.
struct LarsRecipe {
  std::int64_t epochs = 500;
  std::int64_t warmup_epochs = 20;
  double lr = 0.2;
  std::int64_t batch_size = 256;
  bool scale_lr_by_batch = true;  // effective lr = lr * batch / 256
  LarsOptions lars{};
  double val_fraction = 0.1;
  std::uint64_t seed = 0;

  [[nodiscard]] double effective_lr() const { return scale_lr_by_batch ? scaled_lr(lr, batch_size) : lr; }
};

/// Throws ArgumentError when warmup exceeds epochs or sizes are non-positive.
void validate(const LarsRecipe& r);

struct EpochLog {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // at the epoch's last step
};

struct TrainResult {
  Checkpoint best;  // lowest validation loss
  std::vector<EpochLog> curve;
};

void write_curve_csv(const std::vector<EpochLog>& curve, const std::filesystem::path& path);

/// Seeded split of n items into (train, val) index lists; val gets
/// round_half_up(n * val_fraction) items but never all of them.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t n, double val_fraction,
                                                                            std::uint64_t seed);

}  // namespace mssl

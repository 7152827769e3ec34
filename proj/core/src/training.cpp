#include "mssl/training.hpp"

#include <fstream>
#include <numeric>
#include <random>

#include "mssl/error.hpp"
#include "mssl/sample.hpp"

namespace mssl {

void validate(const LarsRecipe& r) {
  if (r.epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (r.warmup_epochs < 0 || r.warmup_epochs >= r.epochs) {
    throw ArgumentError("warmup_epochs (" + std::to_string(r.warmup_epochs) + ") must be < epochs (" +
                        std::to_string(r.epochs) + ")");
  }
  if (r.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(r.lr > 0.0)) throw ArgumentError("lr must be > 0");
  if (!(r.val_fraction >= 0.0 && r.val_fraction < 1.0)) throw ArgumentError("val_fraction must be in [0, 1)");
}

void write_curve_csv(const std::vector<EpochLog>& curve, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "epoch,train_loss,val_loss,lr\n";
  os.precision(10);
  for (const auto& e : curve) os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.lr << '\n';
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t n, double val_fraction,
                                                                            std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(round_half_up(val_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n > 0 ? n - 1 : 0;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {train, val};
}

}  // namespace mssl

#include "mssl/pretrain.hpp"

#include <json.hpp>
#include <limits>
#include <unordered_map>

#include "mssl/batching.hpp"
#include "mssl/phantom.hpp"

namespace mssl {

std::string_view to_string(PretrainTask t) {
  switch (t) {
    case PretrainTask::residual: return "residual";
    case PretrainTask::ae: return "ae";
    case PretrainTask::dae: return "dae";
  }
  return "?";
}

PretrainTask parse_pretrain_task(std::string_view s) {
  if (s == "residual") return PretrainTask::residual;
  if (s == "ae") return PretrainTask::ae;
  if (s == "dae") return PretrainTask::dae;
  throw ArgumentError("unknown pretraining task '" + std::string(s) + "' (expected residual, ae, dae)");
}

void validate(const PretrainConfig& cfg) {
  validate(cfg.recipe);
  validate(cfg.augmentation);
  cfg.encoder.validate();
  if (cfg.dae_noise_std < 0.0) throw ArgumentError("dae_noise_std must be >= 0");
}

namespace {

struct Pair {
  const Volume* input;
  const Volume* target;  // nullptr: target is the input
};

StageTag tag_for(PretrainTask t) {
  switch (t) {
    case PretrainTask::residual: return StageTag::ssl;
    case PretrainTask::ae: return StageTag::ae;
    case PretrainTask::dae: return StageTag::dae;
  }
  return StageTag::ssl;
}

// Inputs and targets for one batch; augmentation streams are keyed by (epoch, item)
// so they do not depend on batch composition.
std::pair<torch::Tensor, torch::Tensor> make_batch(const std::vector<Pair>& pairs, const std::vector<std::size_t>& idx,
                                                   const PretrainConfig& cfg, std::uint64_t epoch_key, bool train) {
  std::vector<Volume> inputs, targets;
  inputs.reserve(idx.size());
  targets.reserve(idx.size());
  for (auto i : idx) {
    const Volume& in = *pairs[i].input;
    const Volume& tgt = pairs[i].target ? *pairs[i].target : in;
    const auto key = epoch_key * 1000003ULL + i;
    if (train) {
      Rng rng(derive_seed(cfg.recipe.seed, key));
      auto [a, b] = augment_pair(in, tgt, cfg.augmentation, rng);
      inputs.push_back(std::move(a));
      targets.push_back(std::move(b));
    } else {
      inputs.push_back(in);
      targets.push_back(tgt);
    }
    if (cfg.task == PretrainTask::dae) {
      Rng noise_rng(derive_seed(cfg.recipe.seed ^ 0xDAEDAEULL, key));
      inputs.back() = add_gaussian_noise(inputs.back(), 0.0, cfg.dae_noise_std, noise_rng);
    }
  }
  return {to_batch(std::span<const Volume>(inputs)), to_batch(std::span<const Volume>(targets))};
}

TrainResult run(const std::vector<Pair>& pairs, const PretrainConfig& cfg) {
  validate(cfg);
  if (pairs.empty()) throw DataError("pretraining needs at least one volume");
  for (const auto& p : pairs) {
    const auto& s = p.input->shape();
    check_input(torch::empty({1, 1, s.d, s.h, s.w}), cfg.encoder.input_size, "pretrain");
  }
  const auto& r = cfg.recipe;
  make_deterministic(r.seed);
  const auto dec_spec = DecoderSpec::mirror(cfg.encoder);
  ResUNet net(cfg.encoder, dec_spec);
  Lars opt(net->parameters(), r.lars);

  auto [train_idx, val_idx] = holdout_split(pairs.size(), r.val_fraction, r.seed);
  const auto bs = static_cast<std::size_t>(r.batch_size);
  const auto steps_per_epoch = static_cast<std::int64_t>((train_idx.size() + bs - 1) / bs);
  const ScheduleConfig sched{r.effective_lr(), r.warmup_epochs * steps_per_epoch, r.epochs * steps_per_epoch};

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t step = 0;
  for (std::int64_t epoch = 0; epoch < r.epochs; ++epoch) {
    net->train();
    auto order = train_idx;
    std::mt19937_64 shuffle_rng(derive_seed(r.seed, 7'000'000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum = 0.0, lr = 0.0;
    for (const auto& batch : make_batches(order, bs)) {
      auto [x, y] = make_batch(pairs, batch, cfg, static_cast<std::uint64_t>(epoch) + 1, true);
      opt.zero_grad();
      const auto loss = reconstruction_loss_from_logits(cfg.loss, net->forward(x), y);
      loss.backward();
      lr = lr_at(step++, sched);
      opt.step(lr);
      sum += loss.item<double>() * static_cast<double>(batch.size());
    }
    EpochLog log{epoch, sum / static_cast<double>(train_idx.size()), 0.0, lr};
    if (val_idx.empty()) {
      log.val_loss = log.train_loss;
    } else {
      torch::NoGradGuard no_grad;
      net->eval();
      double vsum = 0.0;
      for (const auto& batch : make_batches(val_idx, bs)) {
        auto [x, y] = make_batch(pairs, batch, cfg, 0, false);
        vsum += reconstruction_loss_from_logits(cfg.loss, net->forward(x), y).item<double>() *
                static_cast<double>(batch.size());
      }
      log.val_loss = vsum / static_cast<double>(val_idx.size());
    }
    result.curve.push_back(log);
    if (log.val_loss < best) {
      best = log.val_loss;
      Checkpoint ckpt;
      ckpt.stage = tag_for(cfg.task);
      ckpt.epoch = epoch;
      ckpt.val_loss = log.val_loss;
      ckpt.config_json = nlohmann::json{{"task", std::string(to_string(cfg.task))},
                                        {"loss", std::string(to_string(cfg.loss))},
                                        {"encoder", cfg.encoder.canonical()},
                                        {"epochs", r.epochs},
                                        {"warmup_epochs", r.warmup_epochs},
                                        {"lr", r.lr},
                                        {"effective_lr", r.effective_lr()},
                                        {"batch_size", r.batch_size},
                                        {"trust_coefficient", r.lars.trust_coefficient},
                                        {"seed", r.seed},
                                        {"dae_noise_std", cfg.dae_noise_std}}
                             .dump();
      ckpt.capture("encoder", cfg.encoder.hash(), *net->encoder);
      ckpt.capture("decoder", dec_spec.hash(), *net->decoder);
      result.best = std::move(ckpt);
    }
  }
  return result;
}

}  // namespace

TrainResult pretrain_residual(std::span<const UnlabelledItem> volumes, std::span<const ResidualSample> residuals,
                              const PretrainConfig& cfg) {
  std::unordered_map<std::string, const ResidualSample*> by_id;
  for (const auto& r : residuals) {
    if (!by_id.emplace(r.input_ref, &r).second) throw DataError("duplicate residual for " + r.input_ref);
  }
  std::vector<Pair> pairs;
  for (const auto& v : volumes) {
    const auto it = by_id.find(v.id);
    if (it == by_id.end()) throw DataError("volume " + v.id + " has no matching residual");
    const auto& res = it->second->residual;
    if (res.shape() != v.volume.shape()) throw DataError("residual shape mismatch for " + v.id);
    for (float x : res.values()) {
      if (!(x >= 0.0f && x <= 1.0f)) throw DataError("residual for " + v.id + " has values outside [0, 1]");
    }
    pairs.push_back({&v.volume, &res});
  }
  if (pairs.size() != by_id.size()) throw DataError("residuals without a matching input volume");
  PretrainConfig c = cfg;
  c.task = PretrainTask::residual;
  return run(pairs, c);
}

TrainResult pretrain_ae(std::span<const UnlabelledItem> volumes, const PretrainConfig& cfg) {
  std::vector<Pair> pairs;
  for (const auto& v : volumes) pairs.push_back({&v.volume, nullptr});
  PretrainConfig c = cfg;
  c.task = PretrainTask::ae;
  return run(pairs, c);
}

TrainResult pretrain_dae(std::span<const UnlabelledItem> volumes, const PretrainConfig& cfg) {
  std::vector<Pair> pairs;
  for (const auto& v : volumes) pairs.push_back({&v.volume, nullptr});
  PretrainConfig c = cfg;
  c.task = PretrainTask::dae;
  return run(pairs, c);
}

TrainResult pretrain(std::span<const UnlabelledItem> volumes, std::span<const ResidualSample> residuals,
                     const PretrainConfig& cfg) {
  switch (cfg.task) {
    case PretrainTask::residual: return pretrain_residual(volumes, residuals, cfg);
    case PretrainTask::ae: return pretrain_ae(volumes, cfg);
    case PretrainTask::dae: return pretrain_dae(volumes, cfg);
  }
  throw ArgumentError("unknown pretraining task");
}

ResUNet load_pretrained(const Checkpoint& ckpt, const EncoderSpec& encoder) {
  const auto dec = DecoderSpec::mirror(encoder);
  ResUNet net(encoder, dec);
  ckpt.restore("encoder", encoder.hash(), *net->encoder);
  ckpt.restore("decoder", dec.hash(), *net->decoder);
  net->eval();
  return net;
}

}  // namespace mssl

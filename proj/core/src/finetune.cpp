#include "mssl/finetune.hpp"

#include <json.hpp>
#include <limits>
#include <numeric>
#include <random>

#include "mssl/batching.hpp"
#include "mssl/losses.hpp"
#include "mssl/phantom.hpp"

namespace mssl {

void validate(const FinetuneConfig& cfg) {
  cfg.encoder.validate();
  validate(cfg.augmentation);
  if (!(cfg.lr > 0.0)) throw ArgumentError("finetune lr must be > 0");
  if (cfg.epochs < 1) throw ArgumentError("finetune epochs must be >= 1");
  if (cfg.batch_size < 1) throw ArgumentError("finetune batch_size must be >= 1");
  if (cfg.head.in_dim != cfg.encoder.feature_dim()) throw ArgumentError("head in_dim must equal encoder feature dim");
}

namespace {

int label_of(const Sample& s) {
  switch (s.info.label) {
    case Label::normal: return 0;
    case Label::anomalous: return 1;
    case Label::unlabelled: break;
  }
  throw DataError("sample " + s.info.id + " is unlabelled; fine-tuning needs labels");
}

torch::Tensor labels_tensor(std::span<const Sample* const> samples, const std::vector<std::size_t>& idx) {
  std::vector<std::int64_t> y;
  for (auto i : idx) y.push_back(label_of(*samples[i]));
  return torch::tensor(y, torch::kLong);
}

double mean_loss(Classifier& model, std::span<const Sample* const> samples, std::size_t bs) {
  torch::NoGradGuard no_grad;
  model->eval();
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double total = 0.0;
  for (const auto& batch : make_batches(idx, bs)) {
    std::vector<const Volume*> vols;
    for (auto i : batch) vols.push_back(&samples[i]->volume);
    total += classification_loss(model->forward(to_batch(vols)), labels_tensor(samples, batch)).item<double>() *
             static_cast<double>(batch.size());
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

TrainResult finetune(const Checkpoint* init, std::span<const Sample* const> train,
                     std::span<const Sample* const> val, const FinetuneConfig& cfg) {
  validate(cfg);
  if (train.empty()) throw DataError("finetune: empty training set");
  for (const auto* s : train) label_of(*s);
  for (const auto* s : val) label_of(*s);

  make_deterministic(cfg.seed);
  Classifier model(cfg.encoder, cfg.head);
  if (init != nullptr) init->restore("encoder", cfg.encoder.hash(), *model->encoder);
  torch::optim::AdamW opt(model->parameters(), torch::optim::AdamWOptions(cfg.lr).weight_decay(cfg.weight_decay));

  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    model->train();
    std::mt19937_64 rng(derive_seed(cfg.seed, 9'000'000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (const auto& batch : make_batches(order, bs)) {
      std::vector<Volume> xs;
      for (auto i : batch) {
        Rng aug(derive_seed(cfg.seed, (static_cast<std::uint64_t>(epoch) + 1) * 1000003ULL + i));
        xs.push_back(augment(train[i]->volume, cfg.augmentation, aug));
      }
      opt.zero_grad();
      const auto loss = classification_loss(model->forward(to_batch(std::span<const Volume>(xs))),
                                            labels_tensor(train, batch));
      loss.backward();
      opt.step();
      sum += loss.item<double>() * static_cast<double>(batch.size());
    }
    EpochLog log{epoch, sum / static_cast<double>(train.size()), 0.0, cfg.lr};
    log.val_loss = val.empty() ? log.train_loss : mean_loss(model, val, bs);
    result.curve.push_back(log);
    if (log.val_loss < best) {
      best = log.val_loss;
      Checkpoint ckpt;
      ckpt.stage = init ? StageTag::finetuned : StageTag::scratch;
      ckpt.epoch = epoch;
      ckpt.val_loss = log.val_loss;
      ckpt.config_json = nlohmann::json{{"init", init ? std::string(to_string(init->stage)) : "scratch"},
                                        {"encoder", cfg.encoder.canonical()},
                                        {"head", cfg.head.canonical()},
                                        {"lr", cfg.lr},
                                        {"weight_decay", cfg.weight_decay},
                                        {"epochs", cfg.epochs},
                                        {"batch_size", cfg.batch_size},
                                        {"seed", cfg.seed},
                                        {"n_train", train.size()},
                                        {"n_val", val.size()}}
                             .dump();
      ckpt.capture("encoder", cfg.encoder.hash(), *model->encoder);
      ckpt.capture("head", cfg.head.hash(), *model->head);
      result.best = std::move(ckpt);
    }
  }
  return result;
}

Classifier load_classifier(const Checkpoint& ckpt, const EncoderSpec& enc, const HeadSpec& head) {
  Classifier model(enc, head);
  ckpt.restore("encoder", enc.hash(), *model->encoder);
  ckpt.restore("head", head.hash(), *model->head);
  model->eval();
  return model;
}

FoldMetrics Predictions::metrics() const {
  return {auroc(scores, labels), auprc(scores, labels), f1(predictions, labels)};
}

Predictions predict(Classifier& model, std::span<const Sample* const> samples, std::size_t batch_size) {
  torch::NoGradGuard no_grad;
  model->eval();
  Predictions p;
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (const auto& batch : make_batches(idx, batch_size)) {
    std::vector<const Volume*> vols;
    for (auto i : batch) vols.push_back(&samples[i]->volume);
    const auto logits = model->forward(to_batch(vols)).to(torch::kDouble);
    const auto prob = torch::softmax(logits, 1);
    const auto arg = logits.argmax(1);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& s = *samples[batch[b]];
      p.ids.push_back(s.info.id);
      p.scores.push_back(prob[static_cast<std::int64_t>(b)][1].item<double>());
      p.predictions.push_back(static_cast<int>(arg[static_cast<std::int64_t>(b)].item<std::int64_t>()));
      p.labels.push_back(label_of(s));
    }
  }
  return p;
}

Predictions TestSet::evaluate(Classifier& model) {
  ++accesses_;
  return predict(model, samples_);
}

}  // namespace mssl

#include "mssl/uad.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <random>

#include "mssl/batching.hpp"
#include "mssl/phantom.hpp"
#include "mssl/transforms.hpp"
#include "mssl/volume_io.hpp"

namespace mssl {

namespace {

nlohmann::json recipe_json(const LarsRecipe& r) {
  return {{"epochs", r.epochs},
          {"warmup_epochs", r.warmup_epochs},
          {"lr", r.lr},
          {"effective_lr", r.effective_lr()},
          {"batch_size", r.batch_size},
          {"scale_lr_by_batch", r.scale_lr_by_batch},
          {"momentum", r.lars.momentum},
          {"weight_decay", r.lars.weight_decay},
          {"trust_coefficient", r.lars.trust_coefficient},
          {"val_fraction", r.val_fraction},
          {"seed", r.seed}};
}

double mean_l1(Cae& model, std::span<const Sample* const> samples, const std::vector<std::size_t>& idx,
               std::size_t batch_size) {
  torch::NoGradGuard no_grad;
  model->eval();
  double total = 0.0;
  for (const auto& batch : make_batches(idx, batch_size)) {
    std::vector<const Volume*> vols;
    for (auto i : batch) vols.push_back(&samples[i]->volume);
    const auto x = to_batch(vols);
    total += torch::l1_loss(model->forward(x), x).item<double>() * static_cast<double>(batch.size());
  }
  return idx.empty() ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train_cae(std::span<const Sample* const> normals, const CaeConfig& cfg) {
  validate(cfg.recipe);
  cfg.spec.validate();
  if (normals.empty()) throw ContractError("train_cae: no training samples");
  for (const auto* s : normals) {
    if (s->info.label != Label::normal) {
      throw ContractError("train_cae: sample " + s->info.id + " is labelled " + std::string(to_string(s->info.label)) +
                          "; the autoencoder trains on normal samples only");
    }
    check_input(torch::empty({1, 1, s->volume.shape().d, s->volume.shape().h, s->volume.shape().w}),
                cfg.spec.input_size, "train_cae");
  }

  const auto& r = cfg.recipe;
  make_deterministic(r.seed);
  Cae model(cfg.spec);
  Lars opt(model->parameters(), r.lars);

  auto [train_idx, val_idx] = holdout_split(normals.size(), r.val_fraction, r.seed);
  const auto bs = static_cast<std::size_t>(r.batch_size);
  const auto steps_per_epoch = static_cast<std::int64_t>((train_idx.size() + bs - 1) / bs);
  const ScheduleConfig sched{r.effective_lr(), r.warmup_epochs * steps_per_epoch, r.epochs * steps_per_epoch};

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t step = 0;
  for (std::int64_t epoch = 0; epoch < r.epochs; ++epoch) {
    model->train();
    auto order = train_idx;
    std::mt19937_64 rng(derive_seed(r.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    double lr = 0.0;
    for (const auto& batch : make_batches(order, bs)) {
      std::vector<const Volume*> vols;
      for (auto i : batch) vols.push_back(&normals[i]->volume);
      const auto x = to_batch(vols);
      opt.zero_grad();
      const auto loss = torch::l1_loss(model->forward(x), x);
      loss.backward();
      lr = lr_at(step++, sched);
      opt.step(lr);
      sum += loss.item<double>() * static_cast<double>(batch.size());
    }
    EpochLog log{epoch, sum / static_cast<double>(train_idx.size()), 0.0, lr};
    log.val_loss = val_idx.empty() ? log.train_loss : mean_l1(model, normals, val_idx, bs);
    result.curve.push_back(log);
    if (log.val_loss < best) {
      best = log.val_loss;
      Checkpoint ckpt;
      ckpt.stage = StageTag::cae;
      ckpt.epoch = epoch;
      ckpt.val_loss = log.val_loss;
      ckpt.config_json = nlohmann::json{{"spec", cfg.spec.canonical()}, {"recipe", recipe_json(r)},
                                        {"n_train", train_idx.size()}, {"n_val", val_idx.size()}}
                             .dump();
      ckpt.capture("cae", cfg.spec.hash(), *model);
      result.best = std::move(ckpt);
    }
  }
  return result;
}

Cae load_cae(const Checkpoint& ckpt, const CaeSpec& spec) {
  Cae model(spec);
  ckpt.restore("cae", spec.hash(), *model);
  model->eval();
  return model;
}

std::vector<Volume> residuals(Cae& cae, std::span<const Volume* const> xs, std::size_t batch_size) {
  torch::NoGradGuard no_grad;
  cae->eval();
  std::vector<Volume> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); i += batch_size) {
    const auto end = std::min(xs.size(), i + batch_size);
    const auto x = to_batch(xs.subspan(i, end - i));
    const auto r = (x - cae->forward(x)).abs().clamp(0.0, 1.0);
    for (std::size_t b = 0; b < end - i; ++b) {
      Volume v = from_batch(r, static_cast<std::int64_t>(b), xs[i + b]->spacing());
      v.set_id(xs[i + b]->id());
      out.push_back(std::move(v));
    }
  }
  return out;
}

Volume residual(const Volume& x, const Volume& reconstruction) {
  if (x.shape() != reconstruction.shape()) {
    throw DimensionError("residual: shape " + to_string(x.shape()) + " vs " + to_string(reconstruction.shape()));
  }
  Volume r(x.shape(), 0.0f, x.spacing(), x.id());
  const auto a = x.values(), b = reconstruction.values();
  auto out = r.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(std::abs(a[i] - b[i]), 0.0f, 1.0f);
  return r;
}

Volume residual(Cae& cae, const Volume& x) {
  const Volume* p = &x;
  return std::move(residuals(cae, std::span<const Volume* const>(&p, 1)).front());
}

Volume postprocess_residual(const Volume& r, int kernel) { return clamp(median_filter3d(r, kernel)); }

std::vector<ResidualSample> sweep_unlabelled(const Checkpoint& ckpt, const CaeSpec& spec,
                                             std::span<const UnlabelledItem> pool, int median_kernel) {
  if (median_kernel < 1 || median_kernel % 2 == 0) {
    throw ArgumentError("median kernel must be odd and >= 1, got " + std::to_string(median_kernel));
  }
  Cae cae = load_cae(ckpt, spec);
  std::vector<ResidualSample> out;
  out.reserve(pool.size());
  constexpr std::size_t kChunk = 8;
  for (std::size_t i = 0; i < pool.size(); i += kChunk) {
    std::vector<const Volume*> vols;
    for (std::size_t j = i; j < std::min(pool.size(), i + kChunk); ++j) vols.push_back(&pool[j].volume);
    auto rs = residuals(cae, vols, kChunk);
    for (std::size_t b = 0; b < rs.size(); ++b) {
      const auto& item = pool[i + b];
      Volume post = postprocess_residual(rs[b], median_kernel);
      post.set_id(item.id);
      out.push_back({item.id, std::move(post), median_kernel});
    }
  }
  return out;
}

ResidualManifest sweep_unlabelled(const std::filesystem::path& cae_checkpoint, const CaeSpec& spec,
                                  std::span<const UnlabelledItem> pool, int median_kernel,
                                  const std::filesystem::path& out_dir) {
  if (!std::filesystem::exists(cae_checkpoint)) {
    throw StateError("autoencoder checkpoint not found: " + cae_checkpoint.string());
  }
  const Checkpoint ckpt = load_checkpoint(cae_checkpoint);
  ResidualManifest manifest;
  manifest.cae_spec_hash = ckpt.spec_hash();
  manifest.median_kernel = median_kernel;
  for (auto& rs : sweep_unlabelled(ckpt, spec, pool, median_kernel)) {
    const std::filesystem::path rel = std::filesystem::path("residuals") / (rs.input_ref + ".vol");
    save_volume(rs.residual, out_dir / rel);
    manifest.entries.push_back({rs.input_ref, rel});
  }
  write_residual_manifest(manifest, out_dir);
  return manifest;
}

void write_residual_manifest(const ResidualManifest& m, const std::filesystem::path& dir) {
  nlohmann::json j;
  j["cae_spec_hash"] = m.cae_spec_hash;
  j["median_kernel"] = m.median_kernel;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries) j["entries"].push_back({{"input_id", e.input_id}, {"residual", e.residual_path.string()}});
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot write " + (dir / "manifest.json").string());
  os << j.dump(2) << '\n';
}

ResidualManifest read_residual_manifest(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("cannot open " + (dir / "manifest.json").string());
  try {
    const auto j = nlohmann::json::parse(is);
    ResidualManifest m;
    m.cae_spec_hash = j.at("cae_spec_hash").get<std::string>();
    m.median_kernel = j.at("median_kernel").get<int>();
    for (const auto& e : j.at("entries")) {
      m.entries.push_back({e.at("input_id").get<std::string>(), e.at("residual").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed residual manifest in " + dir.string() + ": " + e.what());
  }
}

std::vector<ResidualSample> load_residuals(const std::filesystem::path& dir) {
  const auto m = read_residual_manifest(dir);
  std::vector<ResidualSample> out;
  for (const auto& e : m.entries) {
    Volume v = load_volume(dir / e.residual_path);
    v.set_id(e.input_id);
    out.push_back({e.input_id, std::move(v), m.median_kernel});
  }
  return out;
}

}  // namespace mssl

#include "mssl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "mssl/error.hpp"
#include "mssl/models.hpp"

namespace mssl {

std::string_view to_string(StageTag t) {
  switch (t) {
    case StageTag::cae: return "cae";
    case StageTag::ssl: return "ssl";
    case StageTag::dae: return "dae";
    case StageTag::ae: return "ae";
    case StageTag::finetuned: return "finetuned";
    case StageTag::scratch: return "scratch";
  }
  return "?";
}

StageTag parse_stage_tag(std::string_view s) {
  for (auto t : {StageTag::cae, StageTag::ssl, StageTag::dae, StageTag::ae, StageTag::finetuned, StageTag::scratch}) {
    if (to_string(t) == s) return t;
  }
  throw ArgumentError("unknown stage tag '" + std::string(s) + "'");
}

std::string Checkpoint::spec_hash() const {
  std::string all;
  for (const auto& [name, h] : component_hashes) all += name + "=" + h + ";";
  return fnv1a_hex(all);
}

bool Checkpoint::has_component(const std::string& name) const { return component_hashes.count(name) > 0; }

void Checkpoint::capture(const std::string& component, const std::string& arch_hash, const torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  component_hashes[component] = arch_hash;
  for (const auto& item : module.named_parameters(true)) {
    tensors[component + "." + item.key()] = item.value().detach().cpu().contiguous().clone();
  }
  for (const auto& item : module.named_buffers(true)) {
    tensors[component + "." + item.key()] = item.value().detach().cpu().contiguous().clone();
  }
}

void Checkpoint::restore(const std::string& component, const std::string& arch_hash, torch::nn::Module& module) const {
  const auto it = component_hashes.find(component);
  if (it == component_hashes.end()) {
    throw SpecHashError("checkpoint has no '" + component + "' component");
  }
  if (it->second != arch_hash) {
    throw SpecHashError("spec hash mismatch for '" + component + "': checkpoint " + it->second + ", model " + arch_hash);
  }
  torch::NoGradGuard no_grad;
  const auto copy = [&](const std::string& key, torch::Tensor& dst) {
    const auto src = tensors.find(component + "." + key);
    if (src == tensors.end()) throw SpecHashError("checkpoint lacks tensor " + component + "." + key);
    if (src->second.sizes() != dst.sizes()) throw SpecHashError("shape mismatch for " + component + "." + key);
    dst.copy_(src->second);
  };
  for (auto& item : module.named_parameters(true)) copy(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) copy(item.key(), item.value());
}

namespace {

constexpr std::array<char, 8> kMagic{'M', 'S', 'C', 'K', 'P', 'T', '\0', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated checkpoint " + path.string());
  return v;
}

std::uint8_t dtype_code(const torch::Tensor& t) {
  switch (t.scalar_type()) {
    case torch::kFloat: return 0;
    case torch::kDouble: return 1;
    case torch::kLong: return 2;
    default: throw IoError(std::string("unsupported tensor dtype ") + std::string(c10::toString(t.scalar_type())));
  }
}

torch::ScalarType dtype_of(std::uint8_t code) {
  switch (code) {
    case 0: return torch::kFloat;
    case 1: return torch::kDouble;
    case 2: return torch::kLong;
    default: throw IoError("unknown tensor dtype code " + std::to_string(code));
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["stage"] = std::string(to_string(ckpt.stage));
  meta["component_hashes"] = ckpt.component_hashes;
  meta["spec_hash"] = ckpt.spec_hash();
  meta["config"] = nlohmann::json::parse(ckpt.config_json);
  meta["epoch"] = ckpt.epoch;
  meta["val_loss"] = ckpt.val_loss;
  const std::string meta_text = meta.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp);
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, Checkpoint::kVersion);
    put<std::uint64_t>(os, meta_text.size());
    os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t0] : ckpt.tensors) {
      const auto t = t0.cpu().contiguous();
      put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint8_t>(os, dtype_code(t));
      put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dim()));
      for (auto d : t.sizes()) put<std::int64_t>(os, d);
      os.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.numel() * t.element_size()));
    }
    if (!os) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw IoError("not a checkpoint file: " + path.string());
  const auto version = get<std::uint32_t>(is, path);
  if (version != Checkpoint::kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  }
  const auto meta_len = get<std::uint64_t>(is, path);
  std::string meta_text(meta_len, '\0');
  is.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
  if (!is) throw IoError("truncated checkpoint metadata in " + path.string());

  Checkpoint ckpt;
  try {
    const auto meta = nlohmann::json::parse(meta_text);
    ckpt.stage = parse_stage_tag(meta.at("stage").get<std::string>());
    ckpt.component_hashes = meta.at("component_hashes").get<std::map<std::string, std::string>>();
    ckpt.config_json = meta.at("config").dump();
    ckpt.epoch = meta.at("epoch").get<std::int64_t>();
    ckpt.val_loss = meta.at("val_loss").get<double>();
    if (meta.at("spec_hash").get<std::string>() != ckpt.spec_hash()) {
      throw SpecHashError("checkpoint spec hash does not match its component hashes: " + path.string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint metadata in " + path.string() + ": " + e.what());
  }

  const auto count = get<std::uint32_t>(is, path);
  for (std::uint32_t n = 0; n < count; ++n) {
    const auto name_len = get<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto dtype = dtype_of(get<std::uint8_t>(is, path));
    const auto rank = get<std::uint32_t>(is, path);
    std::vector<std::int64_t> dims(rank);
    for (auto& d : dims) d = get<std::int64_t>(is, path);
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    is.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.numel() * t.element_size()));
    if (!is) throw IoError("truncated tensor " + name + " in " + path.string());
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

bool same_weights(const Checkpoint& a, const Checkpoint& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (const auto& [name, ta] : a.tensors) {
    const auto it = b.tensors.find(name);
    if (it == b.tensors.end()) return false;
    const auto& tb = it->second;
    if (ta.scalar_type() != tb.scalar_type() || ta.sizes() != tb.sizes()) return false;
    const auto ca = ta.contiguous(), cb = tb.contiguous();
    if (std::memcmp(ca.data_ptr(), cb.data_ptr(), static_cast<std::size_t>(ca.numel() * ca.element_size())) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace mssl

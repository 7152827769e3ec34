#include "mssl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mssl/error.hpp"

namespace mssl {

using nlohmann::ordered_json;
using json = nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string list_fractions(const std::vector<Percent>& allowed) {
  std::ostringstream os;
  for (std::size_t i = 0; i < allowed.size(); ++i) {
    if (i) os << ", ";
    os << allowed[i] / 100.0;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// serialisation

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

json recipe_json(const LarsRecipe& r) {
  return json{{"epochs", r.epochs},
              {"warmup_epochs", r.warmup_epochs},
              {"lr", r.lr},
              {"batch_size", r.batch_size},
              {"scale_lr_by_batch", r.scale_lr_by_batch},
              {"val_fraction", r.val_fraction},
              {"lars",
               {{"momentum", r.lars.momentum},
                {"weight_decay", r.lars.weight_decay},
                {"trust_coefficient", r.lars.trust_coefficient},
                {"eps", r.lars.eps}}}};
}

json augmentation_json(const AugmentationPolicy& a) {
  return json{{"p_affine", a.p_affine},
              {"rotation_deg", a.affine.rotation_deg},
              {"translation_vox", a.affine.translation_vox},
              {"scale", json::array({a.affine.scale_min, a.affine.scale_max})},
              {"p_flip", a.p_flip},
              {"p_noise", a.p_noise},
              {"noise_mean", a.noise_mean},
              {"noise_std", a.noise_std}};
}

json to_json(const ExperimentConfig& c) {
  const auto& ph = c.data.phantom;
  json kinds = json::array();
  for (auto k : ph.anomaly_kinds) kinds.push_back(std::string(to_string(k)));
  json j;
  j["seed"] = c.seed;
  j["paths"] = {{"data_root", c.paths.data_root}, {"output_root", c.paths.output_root}};
  j["data"] = {{"labelled_patients", c.data.labelled_patients},
               {"unlabelled_patients", c.data.unlabelled_patients},
               {"anomaly_fraction", ph.anomaly_fraction},
               {"grid_size", ph.grid_size},
               {"cavity_radius", range_json(ph.cavity_radius)},
               {"wall_thickness", range_json(ph.wall_thickness)},
               {"anomaly_radius", range_json(ph.anomaly_radius)},
               {"anomaly_kinds", kinds},
               {"background_noise_std", ph.background_noise_std}};
  j["split"] = {{"fold_count", c.split.fold_count},
                {"val_share", c.split.val_share},
                {"test_share", c.split.test_share},
                {"seed", c.split.seed ? json(*c.split.seed) : json(nullptr)}};
  j["model"] = {{"encoder",
                 {{"stem_channels", c.model.encoder.stem_channels},
                  {"stage_channels", c.model.encoder.stage_channels},
                  {"blocks_per_stage", c.model.encoder.blocks_per_stage}}},
                {"head_hidden_dim", c.model.head_hidden_dim}};
  j["cae"] = {{"stage_channels", c.cae.spec.stage_channels},
              {"latent_dim", c.cae.spec.latent_dim},
              {"leaky_slope", c.cae.spec.leaky_slope},
              {"median_kernel", c.cae.median_kernel},
              {"training", recipe_json(c.cae.training)}};
  j["pretrain"] = {{"loss", std::string(to_string(c.pretrain.loss))},
                   {"dae_noise_std", c.pretrain.dae_noise_std},
                   {"training", recipe_json(c.pretrain.training)},
                   {"augmentation", augmentation_json(c.pretrain.augmentation)}};
  j["finetune"] = {{"lr", c.finetune.lr},
                   {"weight_decay", c.finetune.weight_decay},
                   {"epochs", c.finetune.epochs},
                   {"batch_size", c.finetune.batch_size},
                   {"augmentation", augmentation_json(c.finetune.augmentation)}};
  j["sweep"] = {{"methods", c.sweep.methods},
                {"label_fractions", c.sweep.label_fractions},
                {"normal_fractions", c.sweep.normal_fractions},
                {"cae_sweep_label_fraction", c.sweep.cae_sweep_label_fraction},
                {"folds", c.sweep.folds}};
  return j;
}

// ---------------------------------------------------------------------------
// deserialisation: missing keys keep defaults, anything else malformed is a diagnostic

class Reader {
 public:
  explicit Reader(std::vector<Diagnostic>& out) : out_(out) {}

  void add(const std::string& field, std::string rule) { out_.push_back(Diagnostic{field, std::move(rule)}); }

  /// True when `j` is an object; reports keys outside `known`.
  bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> known) {
    if (!j.is_object()) {
      add(path.empty() ? "<root>" : path, "must be an object");
      return false;
    }
    for (const auto& [key, _] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) add(join(path, key), "unknown field");
    }
    return true;
  }

  const json* find(const json& obj, const std::string& path, std::string_view key, std::string& field) {
    field = join(path, key);
    const auto it = obj.find(std::string(key));
    return it == obj.end() ? nullptr : &*it;
  }

  void number(const json& obj, const std::string& path, std::string_view key, double& out) {
    std::string f;
    if (const json* v = find(obj, path, key, f)) read_number(*v, f, out);
  }

  template <class Int>
  void integer(const json& obj, const std::string& path, std::string_view key, Int& out) {
    std::string f;
    if (const json* v = find(obj, path, key, f)) read_integer(*v, f, out);
  }

  void boolean(const json& obj, const std::string& path, std::string_view key, bool& out) {
    std::string f;
    if (const json* v = find(obj, path, key, f)) {
      if (v->is_boolean()) out = v->get<bool>();
      else add(f, "must be true or false");
    }
  }

  void string(const json& obj, const std::string& path, std::string_view key, std::string& out) {
    std::string f;
    if (const json* v = find(obj, path, key, f)) {
      if (v->is_string()) out = v->get<std::string>();
      else add(f, "must be a string");
    }
  }

  void range(const json& obj, const std::string& path, std::string_view key, Range& out) {
    std::string f;
    if (const json* v = find(obj, path, key, f)) {
      if (!v->is_array() || v->size() != 2) {
        add(f, "must be a [lo, hi] pair");
        return;
      }
      read_number((*v)[0], f + "[0]", out.lo);
      read_number((*v)[1], f + "[1]", out.hi);
    }
  }

  template <class T>
  void list(const json& obj, const std::string& path, std::string_view key, std::vector<T>& out) {
    std::string f;
    const json* v = find(obj, path, key, f);
    if (!v) return;
    if (!v->is_array()) {
      add(f, "must be a list");
      return;
    }
    std::vector<T> values(v->size());
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string fi = f + "[" + std::to_string(i) + "]";
      if constexpr (std::is_same_v<T, double>) read_number((*v)[i], fi, values[i]);
      else if constexpr (std::is_same_v<T, std::string>) {
        if ((*v)[i].is_string()) values[i] = (*v)[i].template get<std::string>();
        else add(fi, "must be a string");
      } else read_integer((*v)[i], fi, values[i]);
    }
    out = std::move(values);
  }

 private:
  void read_number(const json& v, const std::string& f, double& out) {
    if (v.is_number()) out = v.get<double>();
    else add(f, "must be a number");
  }

  template <class Int>
  void read_integer(const json& v, const std::string& f, Int& out) {
    if (!v.is_number_integer()) {
      add(f, "must be an integer");
      return;
    }
    if constexpr (std::is_unsigned_v<Int>) {
      if (!v.is_number_unsigned()) {
        add(f, "must be a non-negative integer");
        return;
      }
      out = v.get<Int>();
    } else {
      out = static_cast<Int>(v.get<std::int64_t>());
    }
  }

  std::vector<Diagnostic>& out_;
};

void read_recipe(Reader& r, const json& obj, const std::string& path, LarsRecipe& out) {
  if (!r.object(obj, path,
                {"epochs", "warmup_epochs", "lr", "batch_size", "scale_lr_by_batch", "val_fraction", "lars"})) {
    return;
  }
  r.integer(obj, path, "epochs", out.epochs);
  r.integer(obj, path, "warmup_epochs", out.warmup_epochs);
  r.number(obj, path, "lr", out.lr);
  r.integer(obj, path, "batch_size", out.batch_size);
  r.boolean(obj, path, "scale_lr_by_batch", out.scale_lr_by_batch);
  r.number(obj, path, "val_fraction", out.val_fraction);
  if (obj.contains("lars")) {
    const auto& l = obj["lars"];
    const auto lp = join(path, "lars");
    if (r.object(l, lp, {"momentum", "weight_decay", "trust_coefficient", "eps"})) {
      r.number(l, lp, "momentum", out.lars.momentum);
      r.number(l, lp, "weight_decay", out.lars.weight_decay);
      r.number(l, lp, "trust_coefficient", out.lars.trust_coefficient);
      r.number(l, lp, "eps", out.lars.eps);
    }
  }
}

void read_augmentation(Reader& r, const json& obj, const std::string& path, AugmentationPolicy& out) {
  if (!r.object(obj, path,
                {"p_affine", "rotation_deg", "translation_vox", "scale", "p_flip", "p_noise", "noise_mean",
                 "noise_std"})) {
    return;
  }
  r.number(obj, path, "p_affine", out.p_affine);
  std::vector<double> rot(out.affine.rotation_deg.begin(), out.affine.rotation_deg.end());
  r.list(obj, path, "rotation_deg", rot);
  if (rot.size() == 3) std::copy(rot.begin(), rot.end(), out.affine.rotation_deg.begin());
  else r.add(join(path, "rotation_deg"), "must list exactly 3 angles");
  r.number(obj, path, "translation_vox", out.affine.translation_vox);
  Range scale{out.affine.scale_min, out.affine.scale_max};
  r.range(obj, path, "scale", scale);
  out.affine.scale_min = scale.lo;
  out.affine.scale_max = scale.hi;
  r.number(obj, path, "p_flip", out.p_flip);
  r.number(obj, path, "p_noise", out.p_noise);
  r.number(obj, path, "noise_mean", out.noise_mean);
  r.number(obj, path, "noise_std", out.noise_std);
}

ExperimentConfig from_json(const json& j, std::vector<Diagnostic>& diags) {
  ExperimentConfig c = default_config();
  Reader r(diags);
  if (!r.object(j, "", {"seed", "paths", "data", "split", "model", "cae", "pretrain", "finetune", "sweep"})) {
    return c;
  }
  r.integer(j, "", "seed", c.seed);

  if (j.contains("paths") && r.object(j["paths"], "paths", {"data_root", "output_root"})) {
    r.string(j["paths"], "paths", "data_root", c.paths.data_root);
    r.string(j["paths"], "paths", "output_root", c.paths.output_root);
  }

  if (j.contains("data")) {
    const auto& d = j["data"];
    auto& ph = c.data.phantom;
    if (r.object(d, "data",
                 {"labelled_patients", "unlabelled_patients", "anomaly_fraction", "grid_size", "cavity_radius",
                  "wall_thickness", "anomaly_radius", "anomaly_kinds", "background_noise_std"})) {
      r.integer(d, "data", "labelled_patients", c.data.labelled_patients);
      r.integer(d, "data", "unlabelled_patients", c.data.unlabelled_patients);
      r.number(d, "data", "anomaly_fraction", ph.anomaly_fraction);
      r.integer(d, "data", "grid_size", ph.grid_size);
      r.range(d, "data", "cavity_radius", ph.cavity_radius);
      r.range(d, "data", "wall_thickness", ph.wall_thickness);
      r.range(d, "data", "anomaly_radius", ph.anomaly_radius);
      r.number(d, "data", "background_noise_std", ph.background_noise_std);
      std::vector<std::string> kinds;
      bool have_kinds = d.contains("anomaly_kinds");
      r.list(d, "data", "anomaly_kinds", kinds);
      if (have_kinds && d["anomaly_kinds"].is_array()) {
        ph.anomaly_kinds.clear();
        for (std::size_t i = 0; i < kinds.size(); ++i) {
          try {
            ph.anomaly_kinds.insert(parse_anomaly_kind(kinds[i]));
          } catch (const Error&) {
            r.add("data.anomaly_kinds[" + std::to_string(i) + "]",
                  "must be one of blob, wall-thickening, polyp-stalk (got '" + kinds[i] + "')");
          }
        }
      }
    }
  }

  if (j.contains("split")) {
    const auto& s = j["split"];
    if (r.object(s, "split", {"fold_count", "val_share", "test_share", "seed"})) {
      r.integer(s, "split", "fold_count", c.split.fold_count);
      r.number(s, "split", "val_share", c.split.val_share);
      r.number(s, "split", "test_share", c.split.test_share);
      if (s.contains("seed") && !s["seed"].is_null()) {
        std::uint64_t seed = 0;
        r.integer(s, "split", "seed", seed);
        c.split.seed = seed;
      }
    }
  }

  if (j.contains("model")) {
    const auto& m = j["model"];
    if (r.object(m, "model", {"encoder", "head_hidden_dim"})) {
      r.integer(m, "model", "head_hidden_dim", c.model.head_hidden_dim);
      if (m.contains("encoder") &&
          r.object(m["encoder"], "model.encoder", {"stem_channels", "stage_channels", "blocks_per_stage"})) {
        r.integer(m["encoder"], "model.encoder", "stem_channels", c.model.encoder.stem_channels);
        r.list(m["encoder"], "model.encoder", "stage_channels", c.model.encoder.stage_channels);
        r.integer(m["encoder"], "model.encoder", "blocks_per_stage", c.model.encoder.blocks_per_stage);
      }
    }
  }

  if (j.contains("cae")) {
    const auto& a = j["cae"];
    if (r.object(a, "cae", {"stage_channels", "latent_dim", "leaky_slope", "median_kernel", "training"})) {
      r.list(a, "cae", "stage_channels", c.cae.spec.stage_channels);
      r.integer(a, "cae", "latent_dim", c.cae.spec.latent_dim);
      r.number(a, "cae", "leaky_slope", c.cae.spec.leaky_slope);
      r.integer(a, "cae", "median_kernel", c.cae.median_kernel);
      if (a.contains("training")) read_recipe(r, a["training"], "cae.training", c.cae.training);
    }
  }

  if (j.contains("pretrain")) {
    const auto& p = j["pretrain"];
    if (r.object(p, "pretrain", {"loss", "dae_noise_std", "training", "augmentation"})) {
      std::string loss(to_string(c.pretrain.loss));
      r.string(p, "pretrain", "loss", loss);
      try {
        c.pretrain.loss = parse_loss_kind(loss);
      } catch (const Error&) {
        r.add("pretrain.loss", "must be one of bce, l1, l2 (got '" + loss + "')");
      }
      r.number(p, "pretrain", "dae_noise_std", c.pretrain.dae_noise_std);
      if (p.contains("training")) read_recipe(r, p["training"], "pretrain.training", c.pretrain.training);
      if (p.contains("augmentation")) {
        read_augmentation(r, p["augmentation"], "pretrain.augmentation", c.pretrain.augmentation);
      }
    }
  }

  if (j.contains("finetune")) {
    const auto& f = j["finetune"];
    if (r.object(f, "finetune", {"lr", "weight_decay", "epochs", "batch_size", "augmentation"})) {
      r.number(f, "finetune", "lr", c.finetune.lr);
      r.number(f, "finetune", "weight_decay", c.finetune.weight_decay);
      r.integer(f, "finetune", "epochs", c.finetune.epochs);
      r.integer(f, "finetune", "batch_size", c.finetune.batch_size);
      if (f.contains("augmentation")) {
        read_augmentation(r, f["augmentation"], "finetune.augmentation", c.finetune.augmentation);
      }
    }
  }

  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    if (r.object(s, "sweep", {"methods", "label_fractions", "normal_fractions", "cae_sweep_label_fraction", "folds"})) {
      r.list(s, "sweep", "methods", c.sweep.methods);
      r.list(s, "sweep", "label_fractions", c.sweep.label_fractions);
      r.list(s, "sweep", "normal_fractions", c.sweep.normal_fractions);
      r.number(s, "sweep", "cae_sweep_label_fraction", c.sweep.cae_sweep_label_fraction);
      r.list(s, "sweep", "folds", c.sweep.folds);
    }
  }

  c.model.encoder.input_size = c.data.phantom.grid_size;
  c.cae.spec.input_size = c.data.phantom.grid_size;
  return c;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    if (const auto colon = what.find(": "); colon != std::string::npos) what = what.substr(colon + 2);
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": " + what);
  }
}

// ---------------------------------------------------------------------------
// semantic checks

void check_recipe(std::vector<Diagnostic>& d, const std::string& p, const LarsRecipe& r) {
  if (r.epochs < 1) d.push_back({p + ".epochs", "must be >= 1"});
  if (r.warmup_epochs < 0) d.push_back({p + ".warmup_epochs", "must be >= 0"});
  if (r.warmup_epochs >= r.epochs && r.epochs >= 1) {
    d.push_back({p + ".warmup_epochs", "must be less than " + p + ".epochs (got warmup_epochs = " +
                                           std::to_string(r.warmup_epochs) +
                                           ", epochs = " + std::to_string(r.epochs) + ")"});
  }
  if (!(r.lr > 0.0)) d.push_back({p + ".lr", "must be > 0"});
  if (r.batch_size < 1) d.push_back({p + ".batch_size", "must be >= 1"});
  if (!(r.val_fraction > 0.0 && r.val_fraction < 1.0)) d.push_back({p + ".val_fraction", "must be in (0, 1)"});
  if (!(r.lars.momentum >= 0.0 && r.lars.momentum < 1.0)) d.push_back({p + ".lars.momentum", "must be in [0, 1)"});
  if (r.lars.weight_decay < 0.0) d.push_back({p + ".lars.weight_decay", "must be >= 0"});
  if (!(r.lars.trust_coefficient > 0.0)) d.push_back({p + ".lars.trust_coefficient", "must be > 0"});
  if (!(r.lars.eps > 0.0)) d.push_back({p + ".lars.eps", "must be > 0"});
}

void check_augmentation(std::vector<Diagnostic>& d, const std::string& p, const AugmentationPolicy& a) {
  for (const auto& [name, v] : {std::pair{"p_affine", a.p_affine}, std::pair{"p_flip", a.p_flip},
                                std::pair{"p_noise", a.p_noise}}) {
    if (!(v >= 0.0 && v <= 1.0)) d.push_back({p + "." + name, "must be a probability in [0, 1]"});
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(a.affine.rotation_deg[i] >= 0.0)) {
      d.push_back({p + ".rotation_deg[" + std::to_string(i) + "]", "must be >= 0"});
    }
  }
  if (!(a.affine.translation_vox >= 0.0)) d.push_back({p + ".translation_vox", "must be >= 0"});
  if (!(a.affine.scale_min > 0.0 && a.affine.scale_min <= a.affine.scale_max)) {
    d.push_back({p + ".scale", "must satisfy 0 < min <= max"});
  }
  if (!(a.noise_std >= 0.0)) d.push_back({p + ".noise_std", "must be >= 0"});
}

void check_fractions(std::vector<Diagnostic>& d, const std::string& p, const std::vector<double>& values,
                     const std::vector<Percent>& allowed) {
  if (values.empty()) d.push_back({p, "must not be empty"});
  for (std::size_t i = 0; i < values.size(); ++i) {
    try {
      to_percent(values[i], allowed);
    } catch (const Error&) {
      std::ostringstream os;
      os << "must be one of " << list_fractions(allowed) << " (got " << values[i] << ")";
      d.push_back({p + "[" + std::to_string(i) + "]", os.str()});
    }
  }
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

std::string to_json_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::vector<Diagnostic> validate_config(const ExperimentConfig& c) {
  std::vector<Diagnostic> d;
  if (c.paths.data_root.empty()) d.push_back({"paths.data_root", "must not be empty"});
  if (c.paths.output_root.empty()) d.push_back({"paths.output_root", "must not be empty"});

  const auto& ph = c.data.phantom;
  if (c.data.labelled_patients < 1) d.push_back({"data.labelled_patients", "must be >= 1"});
  if (c.data.unlabelled_patients < 0) d.push_back({"data.unlabelled_patients", "must be >= 0"});
  if (!(ph.anomaly_fraction > 0.0 && ph.anomaly_fraction < 1.0)) {
    d.push_back({"data.anomaly_fraction", "must be in (0, 1) so both classes occur"});
  }
  if (ph.grid_size < 8) d.push_back({"data.grid_size", "must be >= 8"});
  try {
    PhantomConfig probe = ph;
    probe.n_patients = c.data.labelled_patients;
    validate(probe);
  } catch (const Error& e) {
    d.push_back({"data", e.what()});
  }

  if (c.split.fold_count < 2) d.push_back({"split.fold_count", "must be >= 2"});
  if (!(c.split.val_share > 0.0 && c.split.val_share < 1.0)) d.push_back({"split.val_share", "must be in (0, 1)"});
  if (!(c.split.test_share > 0.0 && c.split.test_share < 1.0)) d.push_back({"split.test_share", "must be in (0, 1)"});
  if (!(c.split.val_share + c.split.test_share < 1.0)) {
    d.push_back({"split.val_share", "split.val_share + split.test_share must be < 1"});
  }

  try {
    encoder_spec(c).validate();
  } catch (const Error& e) {
    d.push_back({"model.encoder", e.what()});
  }
  if (c.model.head_hidden_dim < 1) d.push_back({"model.head_hidden_dim", "must be >= 1"});

  try {
    cae_config(c).spec.validate();
  } catch (const Error& e) {
    d.push_back({"cae", e.what()});
  }
  if (c.cae.median_kernel < 1 || c.cae.median_kernel % 2 == 0) {
    d.push_back({"cae.median_kernel", "must be a positive odd integer"});
  }
  check_recipe(d, "cae.training", c.cae.training);

  if (!(c.pretrain.dae_noise_std >= 0.0)) d.push_back({"pretrain.dae_noise_std", "must be >= 0"});
  check_recipe(d, "pretrain.training", c.pretrain.training);
  check_augmentation(d, "pretrain.augmentation", c.pretrain.augmentation);

  if (!(c.finetune.lr > 0.0)) d.push_back({"finetune.lr", "must be > 0"});
  if (!(c.finetune.weight_decay >= 0.0)) d.push_back({"finetune.weight_decay", "must be >= 0"});
  if (c.finetune.epochs < 1) d.push_back({"finetune.epochs", "must be >= 1"});
  if (c.finetune.batch_size < 1) d.push_back({"finetune.batch_size", "must be >= 1"});
  check_augmentation(d, "finetune.augmentation", c.finetune.augmentation);

  static const std::set<std::string> kMethods{"residual", "ae", "dae", "scratch"};
  if (c.sweep.methods.empty()) d.push_back({"sweep.methods", "must not be empty"});
  std::set<std::string> seen;
  for (std::size_t i = 0; i < c.sweep.methods.size(); ++i) {
    const auto& m = c.sweep.methods[i];
    const std::string f = "sweep.methods[" + std::to_string(i) + "]";
    if (!kMethods.count(m)) d.push_back({f, "must be one of residual, ae, dae, scratch (got '" + m + "')"});
    if (!seen.insert(m).second) d.push_back({f, "duplicate method '" + m + "'"});
  }
  check_fractions(d, "sweep.label_fractions", c.sweep.label_fractions, kLabelFractions);
  check_fractions(d, "sweep.normal_fractions", c.sweep.normal_fractions, kNormalFractions);
  check_fractions(d, "sweep.cae_sweep_label_fraction", {c.sweep.cae_sweep_label_fraction}, kLabelFractions);
  if (!d.empty() && d.back().field == "sweep.cae_sweep_label_fraction[0]") {
    d.back().field = "sweep.cae_sweep_label_fraction";
  }
  for (std::size_t i = 0; i < c.sweep.folds.size(); ++i) {
    const int k = c.sweep.folds[i];
    if (k < 0 || k >= c.split.fold_count) {
      d.push_back({"sweep.folds[" + std::to_string(i) + "]", "must be in [0, split.fold_count)"});
    }
  }
  if (!c.sweep.folds.empty() && c.sweep.folds.size() < 2) {
    d.push_back({"sweep.folds", "must list at least 2 folds (confidence intervals need two)"});
  }
  return d;
}

std::vector<Diagnostic> validate_config_text(std::string_view text) {
  const json j = parse_json(text);
  std::vector<Diagnostic> d;
  const ExperimentConfig c = from_json(j, d);
  if (!d.empty()) return d;  // semantic checks on half-read values would only add noise
  return validate_config(c);
}

ExperimentConfig parse_config(std::string_view text) {
  const json j = parse_json(text);
  std::vector<Diagnostic> d;
  ExperimentConfig c = from_json(j, d);
  if (d.empty()) d = validate_config(c);
  if (!d.empty()) {
    std::string msg = "invalid config:";
    for (const auto& x : d) msg += "\n  " + x.message();
    throw ConfigError(msg);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json_text(cfg);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Diagnostic> check_paths(const ExperimentConfig& cfg) {
  std::vector<Diagnostic> d;
  std::error_code ec;
  if (!std::filesystem::is_directory(cfg.paths.data_root, ec)) {
    d.push_back({"paths.data_root", "directory does not exist: " + cfg.paths.data_root});
  }
  return d;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

PhantomConfig labelled_phantom(const ExperimentConfig& cfg) {
  PhantomConfig p = cfg.data.phantom;
  p.n_patients = cfg.data.labelled_patients;
  p.rng_seed = derive_seed(cfg.seed, 1);
  p.labelled = true;
  p.id_prefix = "p";
  return p;
}

PhantomConfig pool_phantom(const ExperimentConfig& cfg) {
  PhantomConfig p = cfg.data.phantom;
  p.n_patients = cfg.data.unlabelled_patients;
  p.rng_seed = derive_seed(cfg.seed, 2);
  p.labelled = false;
  p.id_prefix = "u";
  return p;
}

SplitOptions split_options(const ExperimentConfig& cfg) {
  SplitOptions o;
  o.fold_count = cfg.split.fold_count;
  o.val_share = cfg.split.val_share;
  o.test_share = cfg.split.test_share;
  o.seed = cfg.split.seed.value_or(cfg.seed);
  return o;
}

EncoderSpec encoder_spec(const ExperimentConfig& cfg) {
  EncoderSpec e = cfg.model.encoder;
  e.input_size = cfg.data.phantom.grid_size;
  return e;
}

CaeConfig cae_config(const ExperimentConfig& cfg) {
  CaeConfig c;
  c.spec = cfg.cae.spec;
  c.spec.input_size = cfg.data.phantom.grid_size;
  c.recipe = cfg.cae.training;
  c.recipe.seed = derive_seed(cfg.seed, 3);
  return c;
}

PretrainConfig pretrain_config(const ExperimentConfig& cfg, PretrainTask task) {
  PretrainConfig p;
  p.task = task;
  p.loss = task == PretrainTask::residual ? cfg.pretrain.loss : LossKind::bce;
  p.encoder = encoder_spec(cfg);
  p.recipe = cfg.pretrain.training;
  p.recipe.seed = derive_seed(cfg.seed, 4);
  p.augmentation = cfg.pretrain.augmentation;
  p.augmentation.rng_seed = derive_seed(cfg.seed, 5);
  p.dae_noise_std = cfg.pretrain.dae_noise_std;
  return p;
}

FinetuneConfig finetune_config(const ExperimentConfig& cfg) {
  FinetuneConfig f;
  f.encoder = encoder_spec(cfg);
  f.head = head_for(f.encoder, cfg.model.head_hidden_dim);
  f.lr = cfg.finetune.lr;
  f.weight_decay = cfg.finetune.weight_decay;
  f.epochs = cfg.finetune.epochs;
  f.batch_size = cfg.finetune.batch_size;
  f.augmentation = cfg.finetune.augmentation;
  f.augmentation.rng_seed = derive_seed(cfg.seed, 6);
  f.seed = derive_seed(cfg.seed, 7);
  return f;
}

}  // namespace mssl

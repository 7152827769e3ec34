#include "mssl/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "mssl/volume_io.hpp"

namespace mssl {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp);
    os << text;
    if (!os) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

SampleInfo info_from(const json& r) {
  return {r.at("id").get<std::string>(), r.at("patient").get<std::string>(),
          parse_side(r.at("side").get<std::string>()), parse_label(r.at("label").get<std::string>())};
}

}  // namespace

void write_dataset(std::span<const Sample> samples, const std::filesystem::path& dir,
                   const std::string& provenance_json) {
  json records = json::array();
  for (const auto& s : samples) {
    const auto vol_rel = std::filesystem::path("volumes") / (s.info.id + ".vol");
    save_volume(s.volume, dir / vol_rel);
    json r{{"id", s.info.id},
           {"patient", s.info.patient_id},
           {"side", std::string(to_string(s.info.side))},
           {"label", std::string(to_string(s.info.label))},
           {"volume", vol_rel.string()},
           {"mask", nullptr}};
    if (s.gt_mask) {
      const auto mask_rel = std::filesystem::path("masks") / (s.info.id + ".mask");
      save_mask(*s.gt_mask, dir / mask_rel);
      r["mask"] = mask_rel.string();
    }
    records.push_back(std::move(r));
  }
  json manifest{{"provenance", json::parse(provenance_json)}, {"samples", records}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<SampleInfo> read_dataset_info(const std::filesystem::path& dir) {
  const auto j = read_json(dir / "manifest.json");
  std::vector<SampleInfo> out;
  try {
    for (const auto& r : j.at("samples")) out.push_back(info_from(r));
  } catch (const json::exception& e) {
    throw IoError("malformed dataset manifest in " + dir.string() + ": " + e.what());
  }
  return out;
}

std::vector<Sample> read_dataset(const std::filesystem::path& dir) {
  const auto j = read_json(dir / "manifest.json");
  std::vector<Sample> out;
  try {
    for (const auto& r : j.at("samples")) {
      Sample s;
      s.info = info_from(r);
      s.volume = load_volume(dir / r.at("volume").get<std::string>());
      s.volume.set_id(s.info.id);
      if (!r.at("mask").is_null()) s.gt_mask = load_mask(dir / r.at("mask").get<std::string>());
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed dataset manifest in " + dir.string() + ": " + e.what());
  }
  return out;
}

std::vector<UnlabelledItem> unlabelled_view(std::span<const Sample> samples) {
  std::vector<UnlabelledItem> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.info.id, s.volume});
  return out;
}

std::string split_plan_to_json(const SplitPlan& plan) {
  json samples = json::array();
  for (const auto& s : plan.samples) {
    samples.push_back({{"id", s.id}, {"patient", s.patient_id}, {"side", std::string(to_string(s.side))},
                       {"label", std::string(to_string(s.label))}});
  }
  json folds = json::array();
  for (const auto& f : plan.folds) {
    json fractions = json::object(), normals = json::object();
    for (const auto& [pct, ids] : f.fraction_lists) fractions[std::to_string(pct)] = ids;
    for (const auto& [pct, ids] : f.normal_lists) normals[std::to_string(pct)] = ids;
    folds.push_back({{"train_patients", f.train_patients},
                     {"val_patients", f.val_patients},
                     {"test_patients", f.test_patients},
                     {"train_ids", f.train_ids},
                     {"val_ids", f.val_ids},
                     {"test_ids", f.test_ids},
                     {"fraction_lists", fractions},
                     {"normal_lists", normals}});
  }
  json j{{"fold_count", plan.fold_count},
         {"seed", plan.seed},
         {"options", {{"val_share", plan.options.val_share}, {"test_share", plan.options.test_share}}},
         {"samples", samples},
         {"folds", folds}};
  return j.dump(1);
}

SplitPlan split_plan_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    SplitPlan plan;
    plan.fold_count = j.at("fold_count").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.options.fold_count = plan.fold_count;
    plan.options.seed = plan.seed;
    plan.options.val_share = j.at("options").at("val_share").get<double>();
    plan.options.test_share = j.at("options").at("test_share").get<double>();
    for (const auto& r : j.at("samples")) plan.samples.push_back(info_from(r));
    for (const auto& fj : j.at("folds")) {
      Fold f;
      f.train_patients = fj.at("train_patients").get<std::vector<std::string>>();
      f.val_patients = fj.at("val_patients").get<std::vector<std::string>>();
      f.test_patients = fj.at("test_patients").get<std::vector<std::string>>();
      f.train_ids = fj.at("train_ids").get<std::vector<std::string>>();
      f.val_ids = fj.at("val_ids").get<std::vector<std::string>>();
      f.test_ids = fj.at("test_ids").get<std::vector<std::string>>();
      for (const auto& [k, v] : fj.at("fraction_lists").items()) f.fraction_lists[std::stoi(k)] = v.get<std::vector<std::string>>();
      for (const auto& [k, v] : fj.at("normal_lists").items()) f.normal_lists[std::stoi(k)] = v.get<std::vector<std::string>>();
      plan.folds.push_back(std::move(f));
    }
    return plan;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed split plan: ") + e.what());
  }
}

void save_split_plan(const SplitPlan& plan, const std::filesystem::path& path) {
  write_text(path, split_plan_to_json(plan) + "\n");
}

SplitPlan load_split_plan(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return split_plan_from_json(std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>()));
}

}  // namespace mssl

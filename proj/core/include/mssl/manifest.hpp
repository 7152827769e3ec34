#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mssl/sample.hpp"
#include "mssl/splits.hpp"

namespace mssl {

/// Writes `<dir>/volumes/<id>.vol`, `<dir>/masks/<id>.mask` and `<dir>/manifest.json`
/// (one record per sample: id, patient, side, label, volume path, mask path or null).
void write_dataset(std::span<const Sample> samples, const std::filesystem::path& dir,
                   const std::string& provenance_json = "{}");

std::vector<Sample> read_dataset(const std::filesystem::path& dir);

/// Manifest records without voxel data.
std::vector<SampleInfo> read_dataset_info(const std::filesystem::path& dir);

/// Label-free views of a dataset, for pretraining.
std::vector<UnlabelledItem> unlabelled_view(std::span<const Sample> samples);

std::string split_plan_to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const std::string& text);
void save_split_plan(const SplitPlan& plan, const std::filesystem::path& path);
SplitPlan load_split_plan(const std::filesystem::path& path);

}  // namespace mssl

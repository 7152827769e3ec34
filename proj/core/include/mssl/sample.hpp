#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mssl/volume.hpp"

namespace mssl {

enum class Label { normal, anomalous, unlabelled };
enum class Side { left, right };

std::string_view to_string(Label l);
std::string_view to_string(Side s);
Label parse_label(std::string_view s);
Side parse_side(std::string_view s);

/// Everything about a sample except voxels.
struct SampleInfo {
  std::string id;
  std::string patient_id;
  Side side = Side::left;
  Label label = Label::unlabelled;

  bool operator==(const SampleInfo&) const = default;
};

struct Sample {
  SampleInfo info;
  Volume volume;
  std::optional<Mask> gt_mask;  // synthetic anomalous samples only
};

/// Label-free view used by pretraining; carries no class information.
struct UnlabelledItem {
  std::string id;
  Volume volume;
};

/// Round-half-up for non-negative quantities.
std::int64_t round_half_up(double x);

}  // namespace mssl

#include "mssl/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mssl {

std::string to_string(const Shape3& s) {
  return "(" + std::to_string(s.d) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

std::size_t count_nonfinite(const Volume& v) {
  return static_cast<std::size_t>(
      std::count_if(v.values().begin(), v.values().end(), [](float x) { return !std::isfinite(x); }));
}

void require_finite(const Volume& v, const std::string& what) {
  if (const auto bad = count_nonfinite(v); bad > 0) {
    throw ValidationError(what + ": " + std::to_string(bad) + " non-finite voxel" +
                          (bad == 1 ? "" : "s"));
  }
}

float min_value(const Volume& v) {
  if (v.empty()) throw DimensionError("min of empty volume");
  return *std::min_element(v.values().begin(), v.values().end());
}

float max_value(const Volume& v) {
  if (v.empty()) throw DimensionError("max of empty volume");
  return *std::max_element(v.values().begin(), v.values().end());
}

double mean_value(const Volume& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (float x : v.values()) sum += x;
  return sum / static_cast<double>(v.size());
}

double masked_mean(const Volume& v, const Mask& mask, bool invert) {
  if (v.shape() != mask.shape()) {
    throw DimensionError("mask shape " + to_string(mask.shape()) + " vs volume " +
                         to_string(v.shape()));
  }
  double sum = 0.0;
  std::size_t n = 0;
  const auto vals = v.values();
  const auto m = mask.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if ((m[i] != 0) != invert) {
      sum += vals[i];
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

std::size_t count_set(const Mask& m) {
  return static_cast<std::size_t>(
      std::count_if(m.values().begin(), m.values().end(), [](std::uint8_t x) { return x != 0; }));
}

namespace {

std::pair<std::size_t, std::size_t> overlap(const Mask& a, const Mask& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mask shapes differ: " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  std::size_t inter = 0, uni = 0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const bool x = av[i] != 0, y = bv[i] != 0;
    inter += (x && y);
    uni += (x || y);
  }
  return {inter, uni};
}

}  // namespace

double dice(const Mask& a, const Mask& b) {
  const auto [inter, uni] = overlap(a, b);
  const std::size_t total = inter + uni;  // |A| + |B|
  return total == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

double iou(const Mask& a, const Mask& b) {
  const auto [inter, uni] = overlap(a, b);
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Mask threshold_above(const Volume& v, float threshold) {
  Mask m(v.shape());
  const auto vals = v.values();
  auto out = m.values();
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i] > threshold ? 1 : 0;
  return m;
}

}  // namespace mssl

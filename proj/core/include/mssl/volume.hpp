#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mssl/error.hpp"

namespace mssl {

/// Grid extent in (D, H, W) order; W is the left-right axis.
struct Shape3 {
  std::int64_t d = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  [[nodiscard]] std::int64_t voxels() const { return d * h * w; }
  [[nodiscard]] static Shape3 cube(std::int64_t n) { return {n, n, n}; }
  bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& s);

struct Index3 {
  std::int64_t i = 0;  // D
  std::int64_t j = 0;  // H
  std::int64_t k = 0;  // W
  bool operator==(const Index3&) const = default;
};

/// Dense row-major 3D grid (W varies fastest).
template <typename T>
class Grid3 {
 public:
  using value_type = T;

  Grid3() = default;
  explicit Grid3(Shape3 shape, T fill = T{})
      : shape_(shape), data_(static_cast<std::size_t>(shape.voxels()), fill) {
    if (shape.d < 0 || shape.h < 0 || shape.w < 0) {
      throw DimensionError("negative grid extent " + to_string(shape));
    }
  }
  Grid3(Shape3 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape.voxels()) {
      throw DimensionError("grid data size " + std::to_string(data_.size()) +
                           " does not match shape " + to_string(shape));
    }
  }

  [[nodiscard]] const Shape3& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::size_t offset(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>((i * shape_.h + j) * shape_.w + k);
  }
  [[nodiscard]] bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < shape_.d && j < shape_.h && k < shape_.w;
  }

  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[offset(i, j, k)]; }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[offset(i, j, k)];
  }

  [[nodiscard]] std::span<T> values() { return data_; }
  [[nodiscard]] std::span<const T> values() const { return data_; }

  bool operator==(const Grid3&) const = default;

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

using Spacing = std::array<double, 3>;

/// Scalar volume with voxel spacing (mm) and an opaque identifier.
class Volume {
 public:
  Volume() = default;
  explicit Volume(Shape3 shape, float fill = 0.0f, Spacing spacing = {1.0, 1.0, 1.0},
                  std::string id = {})
      : grid_(shape, fill), spacing_(spacing), id_(std::move(id)) {}
  Volume(Shape3 shape, std::vector<float> data, Spacing spacing = {1.0, 1.0, 1.0},
         std::string id = {})
      : grid_(shape, std::move(data)), spacing_(spacing), id_(std::move(id)) {}

  [[nodiscard]] const Shape3& shape() const { return grid_.shape(); }
  [[nodiscard]] const Spacing& spacing() const { return spacing_; }
  [[nodiscard]] const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }
  void set_spacing(Spacing s) { spacing_ = s; }

  [[nodiscard]] std::size_t size() const { return grid_.size(); }
  [[nodiscard]] bool empty() const { return grid_.empty(); }
  [[nodiscard]] bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return grid_.contains(i, j, k);
  }

  float& operator()(std::int64_t i, std::int64_t j, std::int64_t k) { return grid_(i, j, k); }
  float operator()(std::int64_t i, std::int64_t j, std::int64_t k) const { return grid_(i, j, k); }

  [[nodiscard]] std::span<float> values() { return grid_.values(); }
  [[nodiscard]] std::span<const float> values() const { return grid_.values(); }
  [[nodiscard]] const Grid3<float>& grid() const { return grid_; }

  /// Voxel data and shape equality; spacing and id are metadata.
  [[nodiscard]] bool same_data(const Volume& other) const { return grid_ == other.grid_; }

 private:
  Grid3<float> grid_;
  Spacing spacing_{1.0, 1.0, 1.0};
  std::string id_;
};

/// Binary voxel mask (0/1).
using Mask = Grid3<std::uint8_t>;

/// Number of NaN or infinite voxels.
std::size_t count_nonfinite(const Volume& v);

/// Throws ValidationError if any voxel is NaN/Inf.
void require_finite(const Volume& v, const std::string& what);

float min_value(const Volume& v);
float max_value(const Volume& v);
double mean_value(const Volume& v);

/// Mean over voxels where `mask` is nonzero (`invert` selects the complement); NaN if empty.
double masked_mean(const Volume& v, const Mask& mask, bool invert = false);

std::size_t count_set(const Mask& m);

/// Sørensen-Dice overlap; 1 when both masks are empty.
double dice(const Mask& a, const Mask& b);

/// Intersection over union; 1 when both masks are empty.
double iou(const Mask& a, const Mask& b);

/// Voxels strictly above `threshold`.
Mask threshold_above(const Volume& v, float threshold);

}  // namespace mssl

#pragma once

#include "mssl/volume.hpp"

namespace mssl {

/// Min-max scaling to [0, 1]. Constant volumes map to all zeros.
Volume normalize(const Volume& v);

/// Reverses the W (left-right) axis.
Volume flip_lr(const Volume& v);
Mask flip_lr(const Mask& m);

/// Box of `size` centered at `centroid`, shifted toward the interior when it
/// would leave the volume. Throws DimensionError if the volume is smaller than `size`.
Volume crop_subvolume(const Volume& v, Index3 centroid, Shape3 size = Shape3::cube(64));

/// Median of each voxel's kernel^3 neighbourhood with replicate padding.
/// Throws ArgumentError unless kernel is odd and >= 1.
Volume median_filter3d(const Volume& v, int kernel);

/// Elementwise clamp into [lo, hi].
Volume clamp(const Volume& v, float lo = 0.0f, float hi = 1.0f);

}  // namespace mssl

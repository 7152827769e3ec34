#pragma once

#include <filesystem>

#include "mssl/volume.hpp"

namespace mssl {

/// Raw volume container, little-endian:
///
///   offset  size  field
///   0       8     magic "MSVOL\0\1\0"
///   8       12    shape d, h, w (uint32)
///   20      12    spacing (float32, mm)
///   32      4*N   voxels, float32, W fastest
///
/// Files ending in `.nii` or `.nii.gz` are read as NIfTI-1 (read-only).
Volume load_volume(const std::filesystem::path& path);

/// Writes the raw container. Throws IoError on failure.
void save_volume(const Volume& v, const std::filesystem::path& path);

/// Binary masks share the raw container with 0/1 voxels.
void save_mask(const Mask& m, const std::filesystem::path& path);
Mask load_mask(const std::filesystem::path& path);

/// NIfTI-1 single-file reader (uint8/int16/int32/float32/float64, slope/intercept applied).
Volume load_nifti(const std::filesystem::path& path);

}  // namespace mssl

#include "mssl/volume_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <memory>

namespace mssl {
namespace {

constexpr std::array<char, 8> kMagic{'M', 'S', 'V', 'O', 'L', '\0', '\1', '\0'};
constexpr std::size_t kHeaderBytes = 32;

template <typename T>
T byteswap_value(T v) {
  std::array<unsigned char, sizeof(T)> b{};
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

template <typename T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

// gzread passes uncompressed files through unchanged.
std::vector<unsigned char> read_all_gz(const std::filesystem::path& path) {
  std::unique_ptr<gzFile_s, decltype(&gzclose)> f(gzopen(path.string().c_str(), "rb"), &gzclose);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> buf{};
  for (;;) {
    const int n = gzread(f.get(), buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) throw IoError("gzip read failed: " + path.string());
    if (n == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  return out;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Volume parse_raw(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < kHeaderBytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw IoError("not a raw volume file (bad magic): " + path.string());
  }
  const auto* p = bytes.data();
  Shape3 shape{read_le<std::uint32_t>(p + 8), read_le<std::uint32_t>(p + 12),
               read_le<std::uint32_t>(p + 16)};
  Spacing spacing{read_le<float>(p + 20), read_le<float>(p + 24), read_le<float>(p + 28)};
  const auto n = static_cast<std::size_t>(shape.voxels());
  if (bytes.size() != kHeaderBytes + 4 * n) {
    throw IoError("truncated or oversized raw volume " + path.string() + ": expected " +
                  std::to_string(kHeaderBytes + 4 * n) + " bytes, got " +
                  std::to_string(bytes.size()));
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = read_le<float>(p + kHeaderBytes + 4 * i);
  return Volume(shape, std::move(data), spacing, path.stem().string());
}

void write_raw(const Shape3& shape, const Spacing& spacing, std::span<const float> data,
               const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_le(out, static_cast<std::uint32_t>(shape.d));
  write_le(out, static_cast<std::uint32_t>(shape.h));
  write_le(out, static_cast<std::uint32_t>(shape.w));
  for (double s : spacing) write_le(out, static_cast<float>(s));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
  } else {
    for (float x : data) write_le(out, x);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

Volume load_volume(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  Volume v = (has_suffix(name, ".nii") || has_suffix(name, ".nii.gz")) ? load_nifti(path)
                                                                         : parse_raw(read_all(path), path);
  require_finite(v, "volume " + path.string());
  return v;
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  write_raw(v.shape(), v.spacing(), v.values(), path);
}

void save_mask(const Mask& m, const std::filesystem::path& path) {
  std::vector<float> data(m.values().begin(), m.values().end());
  write_raw(m.shape(), {1.0, 1.0, 1.0}, data, path);
}

Mask load_mask(const std::filesystem::path& path) {
  const Volume v = parse_raw(read_all(path), path);
  Mask m(v.shape());
  auto out = m.values();
  const auto in = v.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] != 0.0f && in[i] != 1.0f) throw ValidationError("mask voxel not binary in " + path.string());
    out[i] = in[i] != 0.0f ? 1 : 0;
  }
  return m;
}

Volume load_nifti(const std::filesystem::path& path) {
  const auto bytes = read_all_gz(path);
  if (bytes.size() < 352) throw IoError("file too small for NIfTI-1: " + path.string());
  const auto* p = bytes.data();

  bool swap = false;
  auto sizeof_hdr = read_le<std::int32_t>(p);
  if (sizeof_hdr != 348) {
    if (byteswap_value(sizeof_hdr) != 348) throw IoError("not a NIfTI-1 file: " + path.string());
    swap = true;
  }
  auto rd = [&]<typename T>(std::size_t off, T) {
    T v = read_le<T>(p + off);
    return swap ? byteswap_value(v) : v;
  };
  if (std::memcmp(p + 344, "n+1", 4) != 0) {
    throw IoError("only single-file NIfTI-1 (n+1) is supported: " + path.string());
  }

  const auto ndim = rd(40, std::int16_t{});
  if (ndim < 1 || ndim > 7) throw IoError("invalid NIfTI dim[0] in " + path.string());
  std::array<std::int64_t, 3> dim{1, 1, 1};
  for (int a = 0; a < std::min<int>(ndim, 3); ++a) dim[a] = rd(42 + 2 * a, std::int16_t{});
  for (int a = 3; a < ndim; ++a) {
    if (rd(42 + 2 * a, std::int16_t{}) > 1) throw DimensionError("NIfTI volume has >3 non-singleton dims");
  }
  const auto datatype = rd(70, std::int16_t{});
  std::array<double, 3> pixdim{1.0, 1.0, 1.0};
  for (int a = 0; a < 3; ++a) {
    const float pd = rd(80 + 4 * a, float{});
    pixdim[a] = pd > 0.0f ? pd : 1.0;
  }
  const auto vox_offset = static_cast<std::size_t>(rd(108, float{}));
  float slope = rd(112, float{});
  const float inter = rd(116, float{});
  if (slope == 0.0f) slope = 1.0f;

  // NIfTI x is fastest; map (x, y, z) -> (W, H, D).
  const Shape3 shape{dim[2], dim[1], dim[0]};
  const auto n = static_cast<std::size_t>(shape.voxels());
  std::size_t bpv = 0;
  switch (datatype) {
    case 2: bpv = 1; break;    // uint8
    case 4: bpv = 2; break;    // int16
    case 8: bpv = 4; break;    // int32
    case 16: bpv = 4; break;   // float32
    case 64: bpv = 8; break;   // float64
    case 512: bpv = 2; break;  // uint16
    default: throw IoError("unsupported NIfTI datatype " + std::to_string(datatype));
  }
  if (bytes.size() < vox_offset + n * bpv) throw IoError("truncated NIfTI data in " + path.string());

  std::vector<float> data(n);
  const auto* d = p + vox_offset;
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0;
    switch (datatype) {
      case 2: x = d[i]; break;
      case 4: x = rd(vox_offset + 2 * i, std::int16_t{}); break;
      case 8: x = rd(vox_offset + 4 * i, std::int32_t{}); break;
      case 16: x = rd(vox_offset + 4 * i, float{}); break;
      case 64: x = rd(vox_offset + 8 * i, double{}); break;
      case 512: x = rd(vox_offset + 2 * i, std::uint16_t{}); break;
    }
    data[i] = static_cast<float>(x * slope + inter);
  }
  std::string id = path.filename().string();
  id = id.substr(0, id.find('.'));
  return Volume(shape, std::move(data), {pixdim[2], pixdim[1], pixdim[0]}, id);
}

}  // namespace mssl

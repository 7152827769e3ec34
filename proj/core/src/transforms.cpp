#include "mssl/transforms.hpp"

#include <algorithm>
#include <vector>

namespace mssl {

Volume normalize(const Volume& v) {
  require_finite(v, "normalize");
  Volume out(v.shape(), 0.0f, v.spacing(), v.id());
  if (v.empty()) return out;
  const double lo = min_value(v);
  const double hi = max_value(v);
  if (hi <= lo) return out;
  const double range = hi - lo;
  auto dst = out.values();
  const auto src = v.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = std::clamp(static_cast<float>((src[i] - lo) / range), 0.0f, 1.0f);
  }
  return out;
}

namespace {

template <typename Grid>
void flip_into(const Grid& in, Grid& out, std::int64_t d, std::int64_t h, std::int64_t w) {
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < h; ++j)
      for (std::int64_t k = 0; k < w; ++k) out(i, j, w - 1 - k) = in(i, j, k);
}

}  // namespace

Volume flip_lr(const Volume& v) {
  Volume out(v.shape(), 0.0f, v.spacing(), v.id());
  const auto& s = v.shape();
  flip_into(v, out, s.d, s.h, s.w);
  return out;
}

Mask flip_lr(const Mask& m) {
  Mask out(m.shape());
  const auto& s = m.shape();
  flip_into(m, out, s.d, s.h, s.w);
  return out;
}

Volume crop_subvolume(const Volume& v, Index3 centroid, Shape3 size) {
  const auto& s = v.shape();
  if (s.d < size.d || s.h < size.h || s.w < size.w) {
    throw DimensionError("volume " + to_string(s) + " is smaller than crop size " + to_string(size));
  }
  const auto start = [](std::int64_t c, std::int64_t extent, std::int64_t dim) {
    return std::clamp<std::int64_t>(c - extent / 2, 0, dim - extent);
  };
  const std::int64_t i0 = start(centroid.i, size.d, s.d);
  const std::int64_t j0 = start(centroid.j, size.h, s.h);
  const std::int64_t k0 = start(centroid.k, size.w, s.w);

  Volume out(size, 0.0f, v.spacing(), v.id());
  for (std::int64_t i = 0; i < size.d; ++i)
    for (std::int64_t j = 0; j < size.h; ++j)
      for (std::int64_t k = 0; k < size.w; ++k) out(i, j, k) = v(i0 + i, j0 + j, k0 + k);
  return out;
}

Volume median_filter3d(const Volume& v, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ArgumentError("median kernel must be odd and >= 1, got " + std::to_string(kernel));
  }
  if (kernel == 1) return v;
  const auto& s = v.shape();
  const std::int64_t r = kernel / 2;
  Volume out(s, 0.0f, v.spacing(), v.id());
  std::vector<float> window(static_cast<std::size_t>(kernel) * kernel * kernel);
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);

  for (std::int64_t i = 0; i < s.d; ++i) {
    for (std::int64_t j = 0; j < s.h; ++j) {
      for (std::int64_t k = 0; k < s.w; ++k) {
        std::size_t n = 0;
        for (std::int64_t di = -r; di <= r; ++di) {
          const auto ii = std::clamp<std::int64_t>(i + di, 0, s.d - 1);
          for (std::int64_t dj = -r; dj <= r; ++dj) {
            const auto jj = std::clamp<std::int64_t>(j + dj, 0, s.h - 1);
            for (std::int64_t dk = -r; dk <= r; ++dk) {
              window[n++] = v(ii, jj, std::clamp<std::int64_t>(k + dk, 0, s.w - 1));
            }
          }
        }
        std::nth_element(window.begin(), mid, window.end());
        out(i, j, k) = *mid;
      }
    }
  }
  return out;
}

Volume clamp(const Volume& v, float lo, float hi) {
  Volume out = v;
  for (float& x : out.values()) x = std::clamp(x, lo, hi);
  return out;
}

}  // namespace mssl

#include "mssl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mssl/transforms.hpp"

namespace mssl {

AugmentationPolicy AugmentationPolicy::none() {
  AugmentationPolicy p;
  p.p_affine = 0.0;
  p.p_flip = 0.0;
  p.p_noise = 0.0;
  return p;
}

AugmentationPolicy AugmentationPolicy::dae_corruption(double std) {
  AugmentationPolicy p = none();
  p.p_noise = 1.0;
  p.noise_mean = 0.0;
  p.noise_std = std;
  return p;
}

void validate(const AugmentationPolicy& policy) {
  const auto check_p = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ArgumentError(std::string(name) + " must be in [0, 1], got " + std::to_string(p));
    }
  };
  check_p(policy.p_affine, "p_affine");
  check_p(policy.p_flip, "p_flip");
  check_p(policy.p_noise, "p_noise");
  if (policy.noise_std < 0.0) throw ArgumentError("noise_std must be >= 0");
  if (policy.affine.scale_min <= 0.0 || policy.affine.scale_min > policy.affine.scale_max) {
    throw ArgumentError("affine scale range must satisfy 0 < scale_min <= scale_max");
  }
  if (policy.affine.translation_vox < 0.0) throw ArgumentError("translation range must be >= 0");
}

GeometricDraw draw_geometry(const AugmentationPolicy& policy, Rng& rng) {
  // Every draw is consumed whether or not the transform fires, so streams stay aligned.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  GeometricDraw g;
  g.affine = unit(rng) < policy.p_affine;
  for (int a = 0; a < 3; ++a) {
    g.rotation_rad[a] = sym(rng) * policy.affine.rotation_deg[a] * std::numbers::pi / 180.0;
  }
  for (int a = 0; a < 3; ++a) g.translation[a] = sym(rng) * policy.affine.translation_vox;
  g.scale = policy.affine.scale_min + unit(rng) * (policy.affine.scale_max - policy.affine.scale_min);
  g.flip = unit(rng) < policy.p_flip;
  return g;
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Mat3 rotation(int axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  Mat3 r{};
  r[axis][axis] = 1.0;
  r[u][u] = c;
  r[u][v] = -s;
  r[v][u] = s;
  r[v][v] = c;
  return r;
}

float sample_trilinear(const Volume& v, double x, double y, double z) {
  const auto& s = v.shape();
  x = std::clamp(x, 0.0, static_cast<double>(s.d - 1));
  y = std::clamp(y, 0.0, static_cast<double>(s.h - 1));
  z = std::clamp(z, 0.0, static_cast<double>(s.w - 1));
  const auto x0 = static_cast<std::int64_t>(std::floor(x));
  const auto y0 = static_cast<std::int64_t>(std::floor(y));
  const auto z0 = static_cast<std::int64_t>(std::floor(z));
  const auto x1 = std::min(x0 + 1, s.d - 1);
  const auto y1 = std::min(y0 + 1, s.h - 1);
  const auto z1 = std::min(z0 + 1, s.w - 1);
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  const auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double c00 = lerp(v(x0, y0, z0), v(x0, y0, z1), fz);
  const double c01 = lerp(v(x0, y1, z0), v(x0, y1, z1), fz);
  const double c10 = lerp(v(x1, y0, z0), v(x1, y0, z1), fz);
  const double c11 = lerp(v(x1, y1, z0), v(x1, y1, z1), fz);
  return static_cast<float>(lerp(lerp(c00, c01, fy), lerp(c10, c11, fy), fx));
}

}  // namespace

Volume apply_geometry(const Volume& v, const GeometricDraw& g) {
  Volume out = v;
  if (g.affine) {
    // Inverse map: src = R^T (dst - c - t) / scale + c.
    const Mat3 r = mul(mul(rotation(0, g.rotation_rad[0]), rotation(1, g.rotation_rad[1])),
                       rotation(2, g.rotation_rad[2]));
    const auto& s = v.shape();
    const std::array<double, 3> c{(s.d - 1) / 2.0, (s.h - 1) / 2.0, (s.w - 1) / 2.0};
    for (std::int64_t i = 0; i < s.d; ++i) {
      for (std::int64_t j = 0; j < s.h; ++j) {
        for (std::int64_t k = 0; k < s.w; ++k) {
          const std::array<double, 3> p{i - c[0] - g.translation[0], j - c[1] - g.translation[1],
                                        k - c[2] - g.translation[2]};
          std::array<double, 3> q{};
          for (int a = 0; a < 3; ++a) {
            q[a] = (r[0][a] * p[0] + r[1][a] * p[1] + r[2][a] * p[2]) / g.scale + c[a];
          }
          out(i, j, k) = sample_trilinear(v, q[0], q[1], q[2]);
        }
      }
    }
  }
  if (g.flip) out = flip_lr(out);
  return out;
}

Volume add_gaussian_noise(const Volume& v, double mean, double std, Rng& rng) {
  Volume out = v;
  std::normal_distribution<double> noise(mean, std > 0.0 ? std : 1.0);
  for (float& x : out.values()) {
    const double eps = std > 0.0 ? noise(rng) : mean;
    x = std::clamp(static_cast<float>(x + eps), 0.0f, 1.0f);
  }
  return out;
}

namespace {

Volume maybe_noise(Volume v, const AugmentationPolicy& policy, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < policy.p_noise) return add_gaussian_noise(v, policy.noise_mean, policy.noise_std, rng);
  return clamp(v);
}

}  // namespace

Volume augment(const Volume& v, const AugmentationPolicy& policy, Rng& rng) {
  const GeometricDraw g = draw_geometry(policy, rng);
  return maybe_noise(apply_geometry(v, g), policy, rng);
}

Volume augment(const Volume& v, const AugmentationPolicy& policy) {
  Rng rng(policy.rng_seed);
  return augment(v, policy, rng);
}

std::pair<Volume, Volume> augment_pair(const Volume& input, const Volume& target,
                                       const AugmentationPolicy& policy, Rng& rng) {
  if (input.shape() != target.shape()) {
    throw DimensionError("augment_pair: input " + to_string(input.shape()) + " vs target " +
                         to_string(target.shape()));
  }
  const GeometricDraw g = draw_geometry(policy, rng);
  Volume in = maybe_noise(apply_geometry(input, g), policy, rng);
  return {std::move(in), clamp(apply_geometry(target, g))};
}

}  // namespace mssl

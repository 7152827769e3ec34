#include "mssl/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include "mssl/transforms.hpp"

namespace mssl {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::normal: return "normal";
    case Label::anomalous: return "anomalous";
    case Label::unlabelled: return "unlabelled";
  }
  return "?";
}

std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }

Label parse_label(std::string_view s) {
  if (s == "normal") return Label::normal;
  if (s == "anomalous") return Label::anomalous;
  if (s == "unlabelled") return Label::unlabelled;
  throw ArgumentError("unknown label '" + std::string(s) + "'");
}

Side parse_side(std::string_view s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  throw ArgumentError("unknown side '" + std::string(s) + "'");
}

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5 + 1e-9)); }

std::string_view to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::blob: return "blob";
    case AnomalyKind::wall_thickening: return "wall-thickening";
    case AnomalyKind::polyp_stalk: return "polyp-stalk";
  }
  return "?";
}

AnomalyKind parse_anomaly_kind(std::string_view s) {
  if (s == "blob") return AnomalyKind::blob;
  if (s == "wall-thickening") return AnomalyKind::wall_thickening;
  if (s == "polyp-stalk") return AnomalyKind::polyp_stalk;
  throw ArgumentError("unknown anomaly kind '" + std::string(s) +
                      "' (expected blob, wall-thickening, polyp-stalk)");
}

namespace {

double scale_of(std::int64_t grid) { return static_cast<double>(grid) / 64.0; }
double center_jitter(std::int64_t grid) { return 2.0 * scale_of(grid); }
double lateral_offset(std::int64_t grid) { return 2.5 * scale_of(grid); }

}  // namespace

PhantomConfig PhantomConfig::for_grid(std::int64_t n) {
  if (n < 16) throw ArgumentError("phantom grids below 16^3 cannot hold a cavity, wall and anomaly");
  PhantomConfig cfg;
  cfg.grid_size = n;
  if (n >= 32) {
    const double s = scale_of(n);
    cfg.cavity_radius = {14.0 * s, 19.0 * s};
    cfg.wall_thickness = {std::max(1.5, 3.0 * s), std::max(2.0, 6.0 * s)};
    cfg.anomaly_radius = {std::max(2.0, 4.0 * s), std::max(3.0, 9.0 * s)};
  } else {
    // Fixed voxel floors no longer fit; shrink everything proportionally from a 16^3 layout.
    const double s = static_cast<double>(n) / 16.0;
    cfg.cavity_radius = {4.0 * s, 4.5 * s};
    cfg.wall_thickness = {s, s};
    cfg.anomaly_radius = {1.5 * s, 2.0 * s};
  }
  return cfg;
}

void validate(const PhantomConfig& cfg) {
  const auto fail = [](const std::string& msg) { throw ConfigError("phantom: " + msg); };
  if (cfg.n_patients < 0) fail("n_patients must be >= 0");
  if (!(cfg.anomaly_fraction >= 0.0 && cfg.anomaly_fraction <= 1.0)) fail("anomaly_fraction must be in [0, 1]");
  if (cfg.grid_size < 8) fail("grid_size must be >= 8");
  if (cfg.background_noise_std < 0.0) fail("background_noise_std must be >= 0");
  for (const auto& [name, r] : {std::pair{"cavity_radius", cfg.cavity_radius},
                                std::pair{"wall_thickness", cfg.wall_thickness},
                                std::pair{"anomaly_radius", cfg.anomaly_radius}}) {
    if (!(r.lo > 0.0 && r.lo <= r.hi)) fail(std::string(name) + " range must satisfy 0 < lo <= hi");
  }
  if (cfg.anomaly_fraction > 0.0 && cfg.anomaly_kinds.empty()) fail("anomaly_kinds is empty");
  const double extent = cfg.cavity_radius.hi + cfg.wall_thickness.hi + center_jitter(cfg.grid_size) +
                        lateral_offset(cfg.grid_size) + 1.0;
  if (2.0 * extent > static_cast<double>(cfg.grid_size)) {
    fail("cavity plus wall (" + std::to_string(extent) + " voxels from centre) does not fit a " +
         std::to_string(cfg.grid_size) + "^3 grid");
  }
  if (cfg.anomaly_radius.hi > cfg.cavity_radius.lo - 2.0) {
    fail("anomaly_radius.hi must be <= cavity_radius.lo - 2 so structures fit inside the cavity");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double PhantomGeometry::cavity_rho(double i, double j, double k) const {
  const double a = (i - center[0]) / cavity_radii[0];
  const double b = (j - center[1]) / cavity_radii[1];
  const double c = (k - center[2]) / cavity_radii[2];
  return std::sqrt(a * a + b * b + c * c);
}

double PhantomGeometry::min_cavity_radius() const {
  return *std::min_element(cavity_radii.begin(), cavity_radii.end());
}

namespace {

double uniform(PhantomRng& rng, Range r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); }

std::array<double, 3> random_direction(PhantomRng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    std::array<double, 3> u{n(rng), n(rng), n(rng)};
    const double len = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    if (len > 1e-6) return {u[0] / len, u[1] / len, u[2] / len};
  }
}

// lateral_sign = +1 for canonical (left) orientation, -1 for a native right sinus.
Phantom build_phantom(const PhantomConfig& cfg, PhantomRng& rng, double lateral_sign) {
  const auto n = cfg.grid_size;
  const double mid = (static_cast<double>(n) - 1.0) / 2.0;
  const double jitter = center_jitter(n);
  PhantomGeometry g;
  g.center = {mid + uniform(rng, {-jitter, jitter}), mid + uniform(rng, {-jitter, jitter}),
              mid + lateral_sign * lateral_offset(n) + uniform(rng, {-jitter, jitter})};
  for (auto& r : g.cavity_radii) r = uniform(rng, cfg.cavity_radius);
  g.wall_thickness = uniform(rng, cfg.wall_thickness);
  const float shell = kShellIntensity + static_cast<float>(uniform(rng, {-0.05, 0.05}));
  const float tissue = kTissueIntensity + static_cast<float>(uniform(rng, {-0.05, 0.05}));

  Volume v(Shape3::cube(n));
  std::normal_distribution<double> noise(0.0, std::max(cfg.background_noise_std, 1e-12));
  const double shell_rho = 1.0 + g.wall_thickness / g.min_cavity_radius();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      for (std::int64_t k = 0; k < n; ++k) {
        const double rho = g.cavity_rho(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k));
        const float base = rho < 1.0 ? kCavityIntensity : (rho < shell_rho ? shell : tissue);
        const double eps = cfg.background_noise_std > 0.0 ? noise(rng) : 0.0;
        v(i, j, k) = static_cast<float>(base + eps);
      }
    }
  }
  return {std::move(v), g};
}

Phantom canonicalize_right(Phantom p) {
  p.volume = flip_lr(p.volume);
  p.geometry.center[2] = static_cast<double>(p.volume.shape().w) - 1.0 - p.geometry.center[2];
  return p;
}

double dist2(const std::array<double, 3>& a, double i, double j, double k) {
  return (i - a[0]) * (i - a[0]) + (j - a[1]) * (j - a[1]) + (k - a[2]) * (k - a[2]);
}

// Distance from point p to segment [a, b].
double segment_distance(const std::array<double, 3>& a, const std::array<double, 3>& b,
                        const std::array<double, 3>& p) {
  std::array<double, 3> ab{}, ap{};
  double len2 = 0.0, dot = 0.0;
  for (int x = 0; x < 3; ++x) {
    ab[x] = b[x] - a[x];
    ap[x] = p[x] - a[x];
    len2 += ab[x] * ab[x];
    dot += ab[x] * ap[x];
  }
  const double t = len2 > 0.0 ? std::clamp(dot / len2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (int x = 0; x < 3; ++x) {
    const double q = ap[x] - t * ab[x];
    d2 += q * q;
  }
  return std::sqrt(d2);
}

}  // namespace

Phantom make_normal_phantom(const PhantomConfig& cfg, PhantomRng& rng) {
  validate(cfg);
  return build_phantom(cfg, rng, +1.0);
}

Injection inject_anomaly(const Phantom& phantom, AnomalyKind kind, const PhantomConfig& cfg,
                         PhantomRng& rng) {
  const auto& g = phantom.geometry;
  const auto& shape = phantom.volume.shape();
  const double rmin = g.min_cavity_radius();
  const double radius = uniform(rng, cfg.anomaly_radius);
  const auto u = random_direction(rng);
  const float intensity = static_cast<float>(uniform(rng, {0.5, 0.8}));
  std::normal_distribution<double> noise(0.0, std::max(cfg.background_noise_std, 1e-12));

  const auto along = [&](double dist) {
    return std::array<double, 3>{g.center[0] + u[0] * dist, g.center[1] + u[1] * dist,
                                 g.center[2] + u[2] * dist};
  };

  // Membership predicate per kind; every structure is confined to the cavity.
  std::function<bool(double, double, double)> inside;
  switch (kind) {
    case AnomalyKind::blob: {
      const auto c = along(std::max(0.0, rmin - radius - 1.0));
      inside = [c, r2 = radius * radius](double i, double j, double k) { return dist2(c, i, j, k) <= r2; };
      break;
    }
    case AnomalyKind::wall_thickening: {
      const double thickness = std::max(2.0, 0.6 * radius);
      const double cos_cap = std::cos(50.0 * std::numbers::pi / 180.0);
      inside = [&g, u, thickness, cos_cap, rmin](double i, double j, double k) {
        const double rho = g.cavity_rho(i, j, k);
        if (rho >= 1.0 || (1.0 - rho) * rmin > thickness) return false;
        const std::array<double, 3> d{i - g.center[0], j - g.center[1], k - g.center[2]};
        const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        return len > 0.0 && (d[0] * u[0] + d[1] * u[1] + d[2] * u[2]) / len >= cos_cap;
      };
      break;
    }
    case AnomalyKind::polyp_stalk: {
      const double head = std::max(1.5, 0.7 * radius);
      const auto head_c = along(std::max(0.0, rmin - 2.0 * head - 2.0));
      const auto wall = along(rmin + 1.0);
      inside = [head_c, wall, h2 = head * head](double i, double j, double k) {
        return dist2(head_c, i, j, k) <= h2 || segment_distance(head_c, wall, {i, j, k}) <= 1.0;
      };
      break;
    }
  }

  Injection out{phantom.volume, Mask(shape), radius};
  for (std::int64_t i = 0; i < shape.d; ++i) {
    for (std::int64_t j = 0; j < shape.h; ++j) {
      for (std::int64_t k = 0; k < shape.w; ++k) {
        const auto di = static_cast<double>(i), dj = static_cast<double>(j), dk = static_cast<double>(k);
        if (g.cavity_rho(di, dj, dk) < 1.0 && inside(di, dj, dk)) {
          out.mask(i, j, k) = 1;
          const double eps = cfg.background_noise_std > 0.0 ? noise(rng) : 0.0;
          out.volume(i, j, k) = static_cast<float>(intensity + eps);
        }
      }
    }
  }
  return out;
}

std::vector<Sample> generate_dataset(const PhantomConfig& cfg) {
  validate(cfg);
  const auto n_samples = 2 * cfg.n_patients;
  const auto n_anomalous = round_half_up(cfg.anomaly_fraction * static_cast<double>(n_samples));

  std::vector<std::int64_t> slots(static_cast<std::size_t>(n_samples));
  std::iota(slots.begin(), slots.end(), 0);
  PhantomRng label_rng(derive_seed(cfg.rng_seed, 0));
  std::shuffle(slots.begin(), slots.end(), label_rng);
  std::vector<bool> anomalous(slots.size(), false);
  for (std::int64_t a = 0; a < n_anomalous; ++a) anomalous[static_cast<std::size_t>(slots[a])] = true;

  const std::vector<AnomalyKind> kinds(cfg.anomaly_kinds.begin(), cfg.anomaly_kinds.end());
  const int id_width = std::max<int>(4, static_cast<int>(std::to_string(cfg.n_patients).size()));

  std::vector<Sample> out;
  out.reserve(slots.size());
  for (std::int64_t p = 0; p < cfg.n_patients; ++p) {
    std::string pid = std::to_string(p);
    pid = cfg.id_prefix + std::string(static_cast<std::size_t>(std::max<int>(0, id_width - static_cast<int>(pid.size()))), '0') + pid;
    PhantomRng rng(derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(p) + 1));
    for (Side side : {Side::left, Side::right}) {
      const auto slot = static_cast<std::size_t>(2 * p + (side == Side::right ? 1 : 0));
      Phantom ph = side == Side::left ? build_phantom(cfg, rng, +1.0)
                                      : canonicalize_right(build_phantom(cfg, rng, -1.0));
      Sample s;
      s.info.id = pid + (side == Side::left ? "_L" : "_R");
      s.info.patient_id = pid;
      s.info.side = side;
      if (anomalous[slot]) {
        const auto kind = kinds[std::uniform_int_distribution<std::size_t>(0, kinds.size() - 1)(rng)];
        Injection inj = inject_anomaly(ph, kind, cfg, rng);
        s.volume = std::move(inj.volume);
        s.gt_mask = std::move(inj.mask);
        s.info.label = cfg.labelled ? Label::anomalous : Label::unlabelled;
      } else {
        s.volume = std::move(ph.volume);
        s.info.label = cfg.labelled ? Label::normal : Label::unlabelled;
      }
      s.volume = normalize(s.volume);
      s.volume.set_id(s.info.id);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace mssl

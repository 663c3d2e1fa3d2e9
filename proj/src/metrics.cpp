// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/render.hpp>

#include <cmath>
#include <random>

namespace cagewarp {

ImageMetrics image_metrics(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ValidationError("image_metrics: dimension mismatch (" +
                          std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                          " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()) + ")");
  }
  ImageMetrics m;
  const auto da = a.data();
  const auto db = b.data();
  if (da.empty()) return m;
  double sum = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = std::abs(static_cast<double>(da[i]) - static_cast<double>(db[i]));
    sum += d;
    m.max_abs_diff = std::max(m.max_abs_diff, d);
  }
  m.mean_abs_diff = sum / static_cast<double>(da.size());
  return m;
}

Eigen::Vector2d alpha_centroid(std::span<const float> alpha, int width, int height) {
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double a = alpha[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                             static_cast<std::size_t>(x)];
      total += a;
      sx += a * (x + 0.5);
      sy += a * (y + 0.5);
    }
  }
  if (total <= 0.0) return {0.5 * width, 0.5 * height};
  return {sx / total, sy / total};
}

std::vector<SurfaceProbe> cage_surface_probes(const HexCage& cage, int per_face_side,
                                              std::uint64_t seed) {
  if (per_face_side < 1) throw ValidationError("per_face_side must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<SurfaceProbe> probes;
  probes.reserve(static_cast<std::size_t>(6 * per_face_side * per_face_side));
  const double cell = 1.0 / per_face_side;
  for (int f = 0; f < 6; ++f) {
    for (int a = 0; a < per_face_side; ++a) {
      for (int b = 0; b < per_face_side; ++b) {
        const double s = (a + uni(rng)) * cell;
        const double t = (b + uni(rng)) * cell;
        probes.push_back({cage.face_point(f, s, t), cage.face_normal(f, s, t)});
      }
    }
  }
  return probes;
}

namespace {

double straddle_jump(const FieldQuery& field, const SurfaceProbe& probe, double eps) {
  const Vec3 d = probe.normal;
  return std::abs(field(probe.point + eps * d, d).density -
                  field(probe.point - eps * d, d).density);
}

}  // namespace

double discontinuity_energy(const FieldQuery& field,
                            std::span<const SurfaceProbe> probes, double eps) {
  if (!(eps > 0.0)) throw ValidationError("discontinuity_energy needs eps > 0");
  if (probes.empty()) return 0.0;
  double sum = 0.0;
  for (const SurfaceProbe& p : probes) sum += straddle_jump(field, p, eps);
  return sum / static_cast<double>(probes.size());
}

double max_straddle_jump(const FieldQuery& field,
                         std::span<const SurfaceProbe> probes, double eps) {
  if (!(eps > 0.0)) throw ValidationError("max_straddle_jump needs eps > 0");
  double worst = 0.0;
  for (const SurfaceProbe& p : probes) worst = std::max(worst, straddle_jump(field, p, eps));
  return worst;
}

}  // namespace cagewarp

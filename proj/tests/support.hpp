// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Shared scenes and random generators for the test binaries.
#pragma once

#include <cagewarp/cage.hpp>
#include <cagewarp/field.hpp>
#include <cagewarp/warp.hpp>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace cagewarp::test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  Vec3 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline HexCage box_cage(const Vec3& center, double half) {
  return HexCage::axis_aligned({center.array() - half, center.array() + half});
}

inline HexCage box_cage(const Vec3& lo, const Vec3& hi) {
  return HexCage::axis_aligned({lo, hi});
}

/// Unit cube with jittered corners under a random rotation, scale and offset.
/// Retries until the result passes validation.
inline HexCage random_hexahedron(Rng& rng, double jitter = 0.2) {
  for (;;) {
    HexCage::Vertices v;
    const Vec3 axes = rng.vec(0.5, 2.0);
    const Mat3 rot = rotation_x(rng.uniform(0, 2 * std::numbers::pi)) *
                     rotation_y(rng.uniform(0, 2 * std::numbers::pi)) *
                     rotation_z(rng.uniform(0, 2 * std::numbers::pi));
    const Vec3 offset = rng.vec(-3, 3);
    for (int k = 0; k < 8; ++k) {
      const Vec3 local = (corner_uvw(k) - Vec3::Constant(0.5) + rng.vec(-jitter, jitter))
                             .cwiseProduct(axes);
      v[static_cast<std::size_t>(k)] = rot * local + offset;
    }
    if (is_valid_cage(v)) return HexCage::from_vertices(v);
  }
}

inline TransformParams random_transform(Rng& rng) {
  TransformParams p;
  p.translation = rng.vec(-2, 2);
  p.rotation = rng.vec(-std::numbers::pi, std::numbers::pi);
  p.scale = rng.vec(0.25, 3.0);
  return p;
}

/// Smooth test scene: a Gaussian density blob sampled onto a 48^3 grid over
/// [-1, 1]^3 with a smoothly varying color.
inline std::shared_ptr<const RadianceField> smooth_scene(int n = 48) {
  const Aabb box{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  auto grid = GridField::sample(box, {n, n, n}, [](const Vec3& p) {
    RadianceSample s;
    s.density = 4.0 * std::exp(-p.squaredNorm() / (2.0 * 0.35 * 0.35));
    s.color = Rgb(0.5 + 0.4 * p.x(), 0.5 + 0.4 * p.y(), 0.5 - 0.3 * p.z());
    return s;
  });
  return std::make_shared<const RadianceField>(std::move(grid));
}

inline std::shared_ptr<const RadianceField> sphere_scene(const Vec3& c, double r,
                                                        double density = 5.0) {
  AnalyticField f;
  f.shape = SphereShape{c, r};
  f.density = density;
  return std::make_shared<const RadianceField>(f);
}

inline FieldQuery plain_query(const std::shared_ptr<const RadianceField>& f) {
  return [f](const Vec3& p, const Vec3& d) { return f->query(p, d); };
}

inline Manipulation translate(const Vec3& t, CageTarget target = CageTarget::Inner) {
  TransformParams p;
  p.translation = t;
  return {p, target};
}

inline Manipulation scale_by(double s, CageTarget target = CageTarget::Inner) {
  TransformParams p;
  p.scale = Vec3::Constant(s);
  return {p, target};
}

}  // namespace cagewarp::test

// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/cage.hpp>
#include <cagewarp/field.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

namespace cagewarp {

/// Pinhole camera. Camera space looks down -z with +y up; pixel (0, 0) is the
/// top-left corner of the image.
struct Camera {
  Mat4 pose = Mat4::Identity();  // camera-to-world
  double fov_x = 0.6911112;
  int width = 200;
  int height = 200;

  /// Throws ValidationError for a non-orthonormal rotation, fov outside
  /// (0, pi) or empty resolution.
  void validate() const;
  Vec3 position() const { return pose.block<3, 1>(0, 3); }
  double focal_length() const;

  /// Camera at `eye` looking at `target` with the given up hint.
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                        double fov_x, int width, int height);

  /// Pixel coordinates (continuous, top-left origin) of a world point; nullopt
  /// when the point is behind the camera.
  std::optional<Eigen::Vector2d> project(const Vec3& world) const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

/// Ray through pixel (x, y) at sub-pixel offset (0.5, 0.5 is the center).
Ray generate_ray(const Camera& camera, int x, int y, double offset_x = 0.5,
                 double offset_y = 0.5);

struct RenderSettings {
  int samples_per_ray = 128;
  double near = 2.0;
  double far = 6.0;
  Rgb background = Rgb::Ones();
  bool stratified_jitter = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RayResult {
  Rgb color = Rgb::Zero();
  double alpha = 0.0;
  /// |sum(T_i alpha_i) + T_N - 1| for this ray.
  double conservation_error = 0.0;
  bool transmittance_monotone = true;
};

/// Emission-absorption quadrature over stratified samples in [near, far].
/// `jitter` supplies one offset in [0, 1) per sample (ignored when
/// stratified_jitter is off, where every sample sits mid-stratum).
RayResult integrate_ray(const FieldQuery& field, const Ray& ray,
                        const RenderSettings& settings,
                        std::span<const double> jitter = {});

/// RGB float image, row-major from the top-left.
class Image {
 public:
  Image() = default;
  Image(int width, int height, const Rgb& fill = Rgb::Zero());

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb at(int x, int y) const;
  void set(int x, int y, const Rgb& c);
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const Image& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

struct RenderOutput {
  Image image;
  std::vector<float> alpha;  // per pixel
  double max_conservation_error = 0.0;
  bool transmittance_monotone = true;
};

/// Renders every pixel; deterministic for a given seed regardless of thread
/// count. Returns nullopt if `stop` is requested before completion.
std::optional<RenderOutput> render(const FieldQuery& field, const Camera& camera,
                                   const RenderSettings& settings,
                                   std::stop_token stop = {});

struct ImageMetrics {
  double mean_abs_diff = 0.0;
  double max_abs_diff = 0.0;
};

/// Channelwise statistics. Throws ValidationError on size mismatch.
ImageMetrics image_metrics(const Image& a, const Image& b);

/// Alpha-weighted pixel centroid (x, y), pixel centers at +0.5.
Eigen::Vector2d alpha_centroid(std::span<const float> alpha, int width,
                               int height);

/// Surface probes for discontinuity measurements: stratified, jittered
/// samples on the chosen cage faces with outward normals.
struct SurfaceProbe {
  Vec3 point;
  Vec3 normal;
};

std::vector<SurfaceProbe> cage_surface_probes(const HexCage& cage,
                                              int per_face_side,
                                              std::uint64_t seed);

/// Mean |density(p + eps n) - density(p - eps n)| over the probes.
double discontinuity_energy(const FieldQuery& field,
                            std::span<const SurfaceProbe> probes, double eps);

/// Largest straddle-pair density jump over the probes.
double max_straddle_jump(const FieldQuery& field,
                         std::span<const SurfaceProbe> probes, double eps);

/// Rasterizes the 12 cage edges over the image (visualization only).
void draw_cage_wireframe(Image& image, const Camera& camera, const HexCage& cage,
                         const Rgb& color);

// Image output
std::string encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& path);
/// JSON header line {"channels":3,"encoding":"f32le","height":H,"width":W}
/// followed by row-major RGB f32le.
std::string encode_raw_f32(const Image& image);
Image decode_raw_f32(const std::string& bytes);
void write_raw_f32(const Image& image, const std::filesystem::path& path);

}  // namespace cagewarp

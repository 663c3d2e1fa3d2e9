// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/parallel.hpp>
#include <cagewarp/render.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

namespace cagewarp {

void Camera::validate() const {
  if (!pose.allFinite()) throw ValidationError("camera pose must be finite");
  const Mat3 r = pose.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-8) {
    throw ValidationError("camera rotation is not orthonormal");
  }
  if (r.determinant() < 0) {
    throw ValidationError("camera rotation must be right-handed");
  }
  if (!(fov_x > 0.0 && fov_x < std::numbers::pi)) {
    throw ValidationError("camera fov_x must lie in (0, pi)");
  }
  if (width < 1 || height < 1) {
    throw ValidationError("camera resolution must be positive");
  }
}

double Camera::focal_length() const {
  return 0.5 * static_cast<double>(width) / std::tan(0.5 * fov_x);
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                       double fov_x, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 true_up = right.cross(forward);
  Camera cam;
  cam.pose.setIdentity();
  cam.pose.block<3, 1>(0, 0) = right;
  cam.pose.block<3, 1>(0, 1) = true_up;
  cam.pose.block<3, 1>(0, 2) = -forward;
  cam.pose.block<3, 1>(0, 3) = eye;
  cam.fov_x = fov_x;
  cam.width = width;
  cam.height = height;
  return cam;
}

std::optional<Eigen::Vector2d> Camera::project(const Vec3& world) const {
  const Mat3 r = pose.topLeftCorner<3, 3>();
  const Vec3 local = r.transpose() * (world - position());
  if (local.z() >= 0.0) return std::nullopt;
  const double f = focal_length();
  return Eigen::Vector2d(0.5 * width + f * local.x() / -local.z(),
                         0.5 * height - f * local.y() / -local.z());
}

Ray generate_ray(const Camera& camera, int x, int y, double offset_x,
                 double offset_y) {
  const double f = camera.focal_length();
  const Vec3 local((x + offset_x - 0.5 * camera.width) / f,
                   -(y + offset_y - 0.5 * camera.height) / f, -1.0);
  const Mat3 r = camera.pose.topLeftCorner<3, 3>();
  return {camera.position(), (r * local).normalized()};
}

void RenderSettings::validate() const {
  if (samples_per_ray < 2) throw ValidationError("samples_per_ray must be >= 2");
  if (!(near > 0.0 && near < far) || !std::isfinite(far)) {
    throw ValidationError("render bounds must satisfy 0 < near < far");
  }
  if (!background.allFinite()) throw ValidationError("background must be finite");
}

RayResult integrate_ray(const FieldQuery& field, const Ray& ray,
                        const RenderSettings& settings,
                        std::span<const double> jitter) {
  const int n = settings.samples_per_ray;
  const double stratum = (settings.far - settings.near) / n;
  auto sample_t = [&](int i) {
    const double xi =
        settings.stratified_jitter && static_cast<std::size_t>(i) < jitter.size()
            ? jitter[static_cast<std::size_t>(i)]
            : 0.5;
    return settings.near + (i + xi) * stratum;
  };

  RayResult out;
  double transmittance = 1.0;
  double weight_sum = 0.0;
  double t = sample_t(0);
  for (int i = 0; i < n; ++i) {
    const double t_next = i + 1 < n ? sample_t(i + 1) : settings.far;
    const double delta = t_next - t;
    const RadianceSample s = field(ray.origin + t * ray.direction, ray.direction);
    const double optical = s.density * delta;
    const double pass = std::exp(-optical);
    const double alpha = -std::expm1(-optical);
    const double weight = transmittance * alpha;
    out.color += weight * s.color;
    weight_sum += weight;
    const double next = transmittance * pass;
    if (next > transmittance) out.transmittance_monotone = false;
    transmittance = next;
    t = t_next;
  }
  out.color += transmittance * settings.background;
  out.alpha = 1.0 - transmittance;
  out.conservation_error = std::abs(weight_sum + transmittance - 1.0);
  return out;
}

std::optional<RenderOutput> render(const FieldQuery& field, const Camera& camera,
                                   const RenderSettings& settings,
                                   std::stop_token stop) {
  camera.validate();
  settings.validate();
  RenderOutput out;
  out.image = Image(camera.width, camera.height);
  out.alpha.assign(static_cast<std::size_t>(camera.width) *
                       static_cast<std::size_t>(camera.height),
                   0.0f);
  std::vector<double> row_error(static_cast<std::size_t>(camera.height), 0.0);
  std::vector<char> row_monotone(static_cast<std::size_t>(camera.height), 1);

  const bool finished = parallel_for(
      static_cast<std::size_t>(camera.height),
      [&](std::size_t row) {
        const int y = static_cast<int>(row);
        std::seed_seq seq{static_cast<std::uint32_t>(settings.seed),
                          static_cast<std::uint32_t>(settings.seed >> 32),
                          static_cast<std::uint32_t>(row)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::vector<double> jitter(static_cast<std::size_t>(settings.samples_per_ray));
        for (int x = 0; x < camera.width; ++x) {
          if (settings.stratified_jitter) {
            for (double& j : jitter) j = uni(rng);
          }
          const RayResult r =
              integrate_ray(field, generate_ray(camera, x, y), settings, jitter);
          out.image.set(x, y, r.color);
          out.alpha[row * static_cast<std::size_t>(camera.width) +
                    static_cast<std::size_t>(x)] = static_cast<float>(r.alpha);
          row_error[row] = std::max(row_error[row], r.conservation_error);
          if (!r.transmittance_monotone) row_monotone[row] = 0;
        }
      },
      stop);
  if (!finished) return std::nullopt;
  for (std::size_t r = 0; r < row_error.size(); ++r) {
    out.max_conservation_error = std::max(out.max_conservation_error, row_error[r]);
    out.transmittance_monotone = out.transmittance_monotone && row_monotone[r];
  }
  return out;
}

void draw_cage_wireframe(Image& image, const Camera& camera, const HexCage& cage,
                         const Rgb& color) {
  for (const auto& e : kCageEdges) {
    const auto a = camera.project(cage.vertex(e[0]));
    const auto b = camera.project(cage.vertex(e[1]));
    if (!a || !b) continue;
    const Eigen::Vector2d d = *b - *a;
    const int steps = std::max(1, static_cast<int>(std::ceil(d.cwiseAbs().maxCoeff())));
    if (steps > 16 * (image.width() + image.height())) continue;
    for (int s = 0; s <= steps; ++s) {
      const Eigen::Vector2d p = *a + d * (static_cast<double>(s) / steps);
      const int x = static_cast<int>(std::floor(p.x()));
      const int y = static_cast<int>(std::floor(p.y()));
      if (x >= 0 && y >= 0 && x < image.width() && y < image.height()) {
        image.set(x, y, color);
      }
    }
  }
}

}  // namespace cagewarp

// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/parallel.hpp>
#include <cagewarp/warp.hpp>

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>

namespace cagewarp {

Aabb lattice_box(const Aabb& region, int resolution, Dims3& dims, double& voxel) {
  if (resolution < 2) throw ValidationError("warp resolution must be at least 2");
  const Vec3 ext = region.extent();
  const double longest = ext.maxCoeff();
  voxel = longest / static_cast<double>(resolution - 1);
  Aabb box{region.min, region.min};
  for (int a = 0; a < 3; ++a) {
    int n = static_cast<int>(std::ceil(ext[a] / voxel - 1e-9)) + 1;
    n = std::clamp(n, 2, resolution);
    dims[static_cast<std::size_t>(a)] = n;
    box.max[a] = region.min[a] + static_cast<double>(n - 1) * voxel;
  }
  return box;
}

Vec3 WarpGrid::node_position(int i, int j, int k) const {
  return bbox_.min + voxel_ * Vec3(i, j, k);
}

Vec3 WarpGrid::displacement(const Vec3& p) const {
  if (!bbox_.contains(p)) return Vec3::Zero();
  int ci[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const int n = dims_[static_cast<std::size_t>(a)];
    const double u = (p[a] - bbox_.min[a]) / voxel_;
    ci[a] = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
    f[a] = std::clamp(u - ci[a], 0.0, 1.0);
  }
  Vec3 out = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    const double w = (di ? f[0] : 1.0 - f[0]) * (dj ? f[1] : 1.0 - f[1]) *
                     (dk ? f[2] : 1.0 - f[2]);
    if (w == 0.0) continue;
    const std::size_t n = 3 * index(ci[0] + di, ci[1] + dj, ci[2] + dk);
    out += w * Vec3(disp_[n], disp_[n + 1], disp_[n + 2]);
  }
  return out;
}

std::optional<WarpGrid> bake_warp_grid(const EditSpec& edit, int resolution,
                                       std::stop_token stop) {
  WarpGrid g;
  g.resolution_ = resolution;
  g.bbox_ = lattice_box(edit.bake_region(), resolution, g.dims_, g.voxel_);
  const std::size_t nx = static_cast<std::size_t>(g.dims_[0]);
  const std::size_t ny = static_cast<std::size_t>(g.dims_[1]);
  const std::size_t nz = static_cast<std::size_t>(g.dims_[2]);
  g.disp_.assign(3 * nx * ny * nz, 0.0f);
  g.labels_.assign(nx * ny * nz, RegionLabel::OutsideOuter);

  // Nodes in the shell (including canonical-only space) carry the shell
  // map so one grid serves every mode; the fill rule is applied at query
  // time from exact membership.
  const bool done = parallel_for(
      nz * ny,
      [&](std::size_t row) {
        const int k = static_cast<int>(row / ny);
        const int j = static_cast<int>(row % ny);
        for (int i = 0; i < g.dims_[0]; ++i) {
          const Vec3 p = g.node_position(i, j, k);
          const RegionLabel label = classify(edit.cages(), p);
          Vec3 d = Vec3::Zero();
          if (label == RegionLabel::DeformedInner) {
            d = phi_inner(edit, p) - p;
          } else if (label != RegionLabel::OutsideOuter) {
            d = phi_shell(edit, p) - p;
          }
          const std::size_t n = g.index(i, j, k);
          g.labels_[n] = label;
          g.disp_[3 * n] = static_cast<float>(d.x());
          g.disp_[3 * n + 1] = static_cast<float>(d.y());
          g.disp_[3 * n + 2] = static_cast<float>(d.z());
        }
      },
      stop);
  if (!done) return std::nullopt;
  return g;
}

std::string WarpGrid::serialize() const {
  nlohmann::json header;
  header["dims"] = {dims_[0], dims_[1], dims_[2]};
  header["bbox_min"] = {bbox_.min.x(), bbox_.min.y(), bbox_.min.z()};
  header["bbox_max"] = {bbox_.max.x(), bbox_.max.y(), bbox_.max.z()};
  header["encoding"] = "f32le";
  header["layout"] = "canonical_xyz_f32+label_u8";
  header["resolution"] = resolution_;
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + 13 * node_count());
  for (std::size_t n = 0; n < node_count(); ++n) {
    const int k = static_cast<int>(n / (static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1])));
    const int rem = static_cast<int>(n % (static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1])));
    const Vec3 canonical =
        node_position(rem % dims_[0], rem / dims_[0], k) + displacement_at_node(n);
    for (int a = 0; a < 3; ++a) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(canonical[a]));
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    }
    out.push_back(static_cast<char>(labels_[n]));
  }
  return out;
}

}  // namespace cagewarp

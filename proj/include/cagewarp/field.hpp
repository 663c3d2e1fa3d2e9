// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/geometry.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cagewarp {

/// Color and extinction coefficient at one point of a radiance field.
struct RadianceSample {
  Rgb color = Rgb::Zero();
  double density = 0.0;

  static RadianceSample empty() { return {}; }
};

/// Dense voxel field with nodes on the box boundary: node i sits at
/// bbox.min + i * extent / (n - 1) on each axis. Values are trilinearly
/// interpolated; queries outside the box are empty space. Color is
/// view-independent.
class GridField {
 public:
  /// Validates dims, bbox, array sizes and finiteness. Throws LoadError.
  static GridField create(const Aabb& bbox, const Dims3& dims,
                          std::vector<float> densities,
                          std::vector<float> colors);

  /// Samples `fn` at every node.
  static GridField sample(const Aabb& bbox, const Dims3& dims,
                          const std::function<RadianceSample(const Vec3&)>& fn);

  RadianceSample query(const Vec3& p) const;

  const Aabb& bbox() const { return bbox_; }
  const Dims3& dims() const { return dims_; }
  Vec3 spacing() const;
  std::size_t node_count() const { return density_.size(); }
  std::span<const float> densities() const { return density_; }
  /// Interleaved RGB, 3 floats per node.
  std::span<const float> colors() const { return color_; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
  }
  Vec3 node_position(int i, int j, int k) const;

  /// Upper bound on |grad density| over all cells (trilinear is Lipschitz
  /// per cell with the largest edge difference quotient on each axis).
  double density_lipschitz() const;
  double color_lipschitz() const;

 private:
  GridField() = default;

  Aabb bbox_;
  Dims3 dims_{2, 2, 2};
  std::vector<float> density_;
  std::vector<float> color_;
};

struct SphereShape {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

struct BoxShape {
  Aabb box;
};

struct TwoSpheresShape {
  SphereShape first;
  SphereShape second;
};

/// A checkered slab `floor_min.y <= y <= floor_max.y` plus a sphere resting on it.
struct CheckerFloorSphereShape {
  Aabb floor;
  double checker_size = 0.25;
  SphereShape sphere;
};

using AnalyticShape =
    std::variant<SphereShape, BoxShape, TwoSpheresShape, CheckerFloorSphereShape>;

/// Closed-form scene with constant density inside the shape and exactly zero
/// outside. `secondary_color` paints the second sphere of a two-sphere scene
/// and the dark checker cells of the floor.
struct AnalyticField {
  AnalyticShape shape = SphereShape{};
  Rgb color = Rgb(0.8, 0.3, 0.2);
  Rgb secondary_color = Rgb(0.2, 0.4, 0.8);
  double density = 5.0;

  RadianceSample query(const Vec3& p) const;
  bool inside(const Vec3& p) const;
  Aabb bounds() const;
  std::string kind_name() const;
};

/// Uniform point/direction query over any field backend. Immutable after
/// construction and safe for concurrent reads.
class RadianceField {
 public:
  explicit RadianceField(GridField grid) : impl_(std::move(grid)) {}
  explicit RadianceField(AnalyticField analytic) : impl_(std::move(analytic)) {}

  /// `direction` must be unit length. Both current backends ignore it.
  RadianceSample query(const Vec3& p, const Vec3& direction) const;

  bool uses_direction() const { return false; }
  Aabb bounds() const;

  const GridField* grid() const { return std::get_if<GridField>(&impl_); }
  const AnalyticField* analytic() const {
    return std::get_if<AnalyticField>(&impl_);
  }

 private:
  std::variant<GridField, AnalyticField> impl_;
};

using FieldPtr = std::shared_ptr<const RadianceField>;

/// Signature every renderer-facing field evaluates to.
using FieldQuery = std::function<RadianceSample(const Vec3&, const Vec3&)>;

// Grid file I/O (JSON header line + f32le payload).
GridField load_grid_field(const std::filesystem::path& path);
GridField parse_grid_field(const std::string& bytes);
std::string serialize_grid_field(const GridField& grid);
void save_grid_field(const GridField& grid, const std::filesystem::path& path);

/// Converts the plain-text voxel list used for test authoring:
///   dims NX NY NZ
///   bbox_min X Y Z
///   bbox_max X Y Z
///   I J K DENSITY R G B     (one line per non-empty voxel)
/// Lines starting with '#' are comments; unlisted voxels are empty.
GridField parse_voxel_list(const std::string& text);

/// Loads a scene file: a grid field, or a JSON analytic scene description.
RadianceField load_scene(const std::filesystem::path& path);

}  // namespace cagewarp

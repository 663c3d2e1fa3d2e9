// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/cage.hpp>
#include <cagewarp/field.hpp>

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cagewarp {

/// How the edited field is assembled from the canonical one.
/// DiscreteEmpty: move/delete, vacated canonical space becomes empty.
/// DiscreteCopy: copy, vacated canonical space keeps the original content.
/// Continuous: the shell between inner and outer cage is warped for continuity.
enum class AdjustmentMode { DiscreteEmpty, DiscreteCopy, Continuous };

enum class Fill { Empty, Original };

inline bool is_discrete(AdjustmentMode m) {
  return m != AdjustmentMode::Continuous;
}
inline Fill fill_of(AdjustmentMode m) {
  return m == AdjustmentMode::DiscreteCopy ? Fill::Original : Fill::Empty;
}

std::string_view to_string(AdjustmentMode mode);
/// Accepts "discrete-empty", "discrete-copy", "continuous". Throws ValidationError.
AdjustmentMode parse_mode(std::string_view text);

enum class RegionLabel : std::uint8_t {
  OutsideOuter = 0,
  Shell = 1,
  CanonicalInnerOnly = 2,
  DeformedInner = 3,
};

std::string_view to_string(RegionLabel label);

/// Which cage of the pair a manipulation acts on.
enum class CageTarget { Inner, Outer };

struct CageDeformation {
  CageHandle handle;
  Vec3 delta = Vec3::Zero();
  bool operator==(const CageDeformation&) const = default;
};

/// One logged user action on a live edit.
struct Manipulation {
  std::variant<TransformParams, CageDeformation> action;
  CageTarget target = CageTarget::Inner;
  bool operator==(const Manipulation&) const = default;
};

/// Transformed-to-canonical map of the inner cage interior. An affine map
/// when every logged inner action was a transform; otherwise the trilinear
/// correspondence between the deformed and canonical cage corners.
class InnerMapping {
 public:
  static InnerMapping identity();
  static InnerMapping affine(const Mat3& linear, const Vec3& offset);
  static InnerMapping trilinear(const HexCage& canonical, const HexCage& deformed);

  bool is_affine() const { return !cages_.has_value(); }

  Vec3 to_canonical(const Vec3& p) const;
  /// Canonical point for a point given by its parameters in the deformed cage.
  Vec3 to_canonical_at(const Vec3& p, const Vec3& deformed_uvw) const;
  /// Jacobian of to_canonical at p.
  Mat3 jacobian(const Vec3& p) const;

  const Mat3& linear() const { return linear_; }
  const Vec3& offset() const { return offset_; }

 private:
  struct Cages {
    HexCage canonical;
    HexCage deformed;
    std::array<Vec3, 8> displacement;  // canonical - deformed per corner
  };

  Mat3 linear_ = Mat3::Identity();
  Vec3 offset_ = Vec3::Zero();
  std::optional<Cages> cages_;
};

/// One edit: cage pair, adjustment mode and the manipulation log that
/// produced inner_deformed from inner_canonical.
class EditSpec {
 public:
  /// Identity edit on a validated pair.
  static EditSpec begin(const HexCage& outer, const HexCage& inner,
                        AdjustmentMode mode);
  /// Replays a log. Throws on any invalid step.
  static EditSpec replay(const HexCage& outer, const HexCage& inner,
                         AdjustmentMode mode, std::span<const Manipulation> log);

  /// Returns the edit after one more action; `*this` is unchanged.
  /// Throws DegenerateCageError / ContainmentError.
  EditSpec applied(const Manipulation& m) const;
  EditSpec with_mode(AdjustmentMode mode) const;

  const CagePair& cages() const { return cages_; }
  AdjustmentMode mode() const { return mode_; }
  const std::vector<Manipulation>& log() const { return log_; }
  const HexCage& initial_outer() const { return initial_outer_; }
  const InnerMapping& inner_mapping() const { return mapping_; }

  bool is_identity() const;

  /// Baking region: outer-cage AABB for continuous mode, AABB of the two
  /// inner cages for discrete modes.
  Aabb bake_region() const;

 private:
  EditSpec(CagePair cages, HexCage initial_outer, AdjustmentMode mode)
      : cages_(std::move(cages)),
        initial_outer_(std::move(initial_outer)),
        mode_(mode) {}

  CagePair cages_;
  HexCage initial_outer_;
  AdjustmentMode mode_;
  std::vector<Manipulation> log_;
  InnerMapping mapping_ = InnerMapping::identity();
  // Accumulated affine inner transform (valid while mapping_ is affine).
  Mat3 forward_linear_ = Mat3::Identity();
  Vec3 forward_offset_ = Vec3::Zero();
};

// Region classification and point mappings

RegionLabel classify(const CagePair& pair, const Vec3& p);

/// Canonical point for p inside the deformed inner cage.
Vec3 phi_inner(const EditSpec& edit, const Vec3& p);

/// Canonical point for p in the shell: the inner-surface displacement found
/// along the ray from the deformed inner cage center is blended linearly to
/// zero at the outer surface.
Vec3 phi_shell(const EditSpec& edit, const Vec3& p);

/// Exact canonical point for any p under the edit's piecewise mapping
/// (inner map in V, shell map in V^o \ V, identity elsewhere).
Vec3 map_point_exact(const EditSpec& edit, const Vec3& p);

/// Central-difference Jacobian of `map` at p.
template <typename Map>
Mat3 finite_difference_jacobian(const Map& map, const Vec3& p, double step) {
  Mat3 j;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = step;
    j.col(a) = (map(Vec3(p + e)) - map(Vec3(p - e))) / (2.0 * step);
  }
  return j;
}

/// normalize(J d); returns d itself when |J d| < 1e-9.
Vec3 push_direction(const Mat3& jacobian, const Vec3& d);

/// Canonical view direction under the edit's mapping at p. Affine and
/// trilinear inner maps use their analytic Jacobians; the shell map uses
/// central differences with step `fd_step`.
Vec3 phi_direction(const EditSpec& edit, const Vec3& p, const Vec3& d,
                   double fd_step);

// Warp grids

/// Baked lattice of canonical-point displacements over an edit's region.
/// Stores canonical - node per node so identity regions are exactly zero.
class WarpGrid {
 public:
  const Aabb& bbox() const { return bbox_; }
  const Dims3& dims() const { return dims_; }
  double voxel_size() const { return voxel_; }
  int resolution() const { return resolution_; }
  std::size_t node_count() const { return labels_.size(); }

  Vec3 node_position(int i, int j, int k) const;
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
  }
  Vec3 displacement_at_node(std::size_t n) const {
    return {disp_[3 * n], disp_[3 * n + 1], disp_[3 * n + 2]};
  }
  RegionLabel label_at_node(std::size_t n) const { return labels_[n]; }

  /// Trilinear displacement lookup; zero outside the lattice.
  Vec3 displacement(const Vec3& p) const;
  Vec3 canonical(const Vec3& p) const { return p + displacement(p); }

  /// Diagnostics export: JSON header line then, per node, 3 f32le canonical
  /// coordinates followed by one label byte.
  std::string serialize() const;

 private:
  friend std::optional<WarpGrid> bake_warp_grid(const EditSpec&, int,
                                                std::stop_token);
  Aabb bbox_;
  Dims3 dims_{2, 2, 2};
  double voxel_ = 1.0;
  int resolution_ = 2;
  std::vector<float> disp_;
  std::vector<RegionLabel> labels_;
};

/// Lattice for a region at `resolution` nodes along its longest axis; the
/// other axes get cubic voxels and the box is grown to a whole voxel count.
Aabb lattice_box(const Aabb& region, int resolution, Dims3& dims, double& voxel);

/// Bakes the edit's mapping at every lattice node (data-parallel,
/// deterministic). Returns nullopt when stopped. Throws ValidationError for
/// resolution < 2.
std::optional<WarpGrid> bake_warp_grid(const EditSpec& edit, int resolution,
                                       std::stop_token stop = {});

// Deformed field evaluation

/// One edit with an optional baked grid; without a grid the exact mapping
/// is used (the oracle path).
struct EditLayer {
  std::shared_ptr<const EditSpec> edit;
  std::shared_ptr<const WarpGrid> grid;
};

struct StageResult {
  Vec3 point;
  Vec3 direction;
  std::optional<Fill> fill_override;
};

/// Maps one sample through a single edit (piecewise discrete/continuous rules).
/// `map_direction` false passes the direction through unchanged.
StageResult map_through_edit(const EditLayer& layer, const Vec3& p,
                             const Vec3& d, bool map_direction = true);

RadianceSample query_deformed(const RadianceField& field, const EditLayer& layer,
                              const Vec3& p, const Vec3& d);

inline constexpr std::size_t kDefaultMaxStackDepth = 32;

/// Maps through a stack ordered oldest first, applying the newest edit first
/// so each edit sees the previously edited field as its canonical scene. An
/// Empty fill override stops the walk; an Original override keeps the point
/// and continues. Throws ValidationError when the stack exceeds `max_depth`.
StageResult compose_edits(std::span<const EditLayer> stack, const Vec3& p,
                          const Vec3& d,
                          std::size_t max_depth = kDefaultMaxStackDepth,
                          bool map_direction = true);

/// Base field seen through an ordered stack of edits (oldest first).
class DeformedField {
 public:
  DeformedField(FieldPtr base, std::vector<EditLayer> stack,
                std::size_t max_depth = kDefaultMaxStackDepth);

  RadianceSample query(const Vec3& p, const Vec3& d) const;
  FieldQuery as_query() const;

  const RadianceField& base() const { return *base_; }
  std::span<const EditLayer> stack() const { return stack_; }

 private:
  FieldPtr base_;
  std::vector<EditLayer> stack_;
};

}  // namespace cagewarp

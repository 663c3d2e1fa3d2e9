// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/render.hpp>
#include <cagewarp/warp.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cagewarp {

/// Largest density difference between the grid path and the exact mapping
/// over `probes` uniform points in the edit's bake region.
double grid_vs_exact_error(const FieldPtr& field, const EditSpec& edit,
                           const std::shared_ptr<const WarpGrid>& grid,
                           int probes, std::uint64_t seed);

/// Probes on the deformed inner cage and the outer cage faces.
std::vector<SurfaceProbe> edit_surface_probes(const EditSpec& edit,
                                              int per_face_side,
                                              std::uint64_t seed);

struct AblationOptions {
  /// Straddle separation as a fraction of the scene diameter.
  double eps_fraction = 1e-4;
  int probes_per_face_side = 16;
  int error_probes = 10000;
  std::uint64_t seed = 7;
  /// Bake resolution used by the outer-scale sweep (0: exact mapping).
  int warp_resolution = 0;
  /// Optional render per configuration (timed, not stored).
  std::optional<Camera> camera;
  RenderSettings render;
};

struct AblationRow {
  std::string sweep;
  double value = 0.0;
  double discontinuity_energy = 0.0;
  /// Grid-vs-exact error; NaN when no grid was baked.
  double grid_vs_exact_error = 0.0;
  double bake_ms = 0.0;
  double render_ms = 0.0;
};

/// Rebuilds the outer cage as the canonical inner cage scaled about its
/// center by each factor, replays the edit's inner actions and measures.
std::vector<AblationRow> ablate_outer_scale(const FieldPtr& field,
                                            const EditSpec& edit,
                                            std::span<const double> scales,
                                            const AblationOptions& options);

/// Bakes the edit at each resolution and measures against the exact path.
std::vector<AblationRow> ablate_resolution(const FieldPtr& field,
                                           const EditSpec& edit,
                                           std::span<const int> resolutions,
                                           const AblationOptions& options);

std::string ablation_csv(std::span<const AblationRow> rows);

}  // namespace cagewarp

// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/ablation.hpp>
#include <cagewarp/error.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace cagewarp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

FieldQuery layer_query(const FieldPtr& field, EditLayer layer) {
  return [field, layer](const Vec3& p, const Vec3& d) {
    return query_deformed(*field, layer, p, d);
  };
}

struct Measured {
  double energy = 0.0;
  double render_ms = 0.0;
};

Measured measure(const FieldPtr& field, const EditLayer& layer,
                 const AblationOptions& opts) {
  Measured m;
  const auto probes =
      edit_surface_probes(*layer.edit, opts.probes_per_face_side, opts.seed);
  const FieldQuery q = layer_query(field, layer);
  m.energy = discontinuity_energy(q, probes,
                                  opts.eps_fraction * field->bounds().diameter());
  if (opts.camera) {
    const auto start = Clock::now();
    render(q, *opts.camera, opts.render);
    m.render_ms = elapsed_ms(start);
  }
  return m;
}

}  // namespace

double grid_vs_exact_error(const FieldPtr& field, const EditSpec& edit,
                           const std::shared_ptr<const WarpGrid>& grid, int probes,
                           std::uint64_t seed) {
  const auto spec = std::make_shared<const EditSpec>(edit);
  const EditLayer exact{spec, nullptr};
  const EditLayer baked{spec, grid};
  const Aabb region = edit.bake_region();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const Vec3 d(0.0, 0.0, -1.0);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const Vec3 t(uni(rng), uni(rng), uni(rng));
    const Vec3 p = region.min + t.cwiseProduct(region.extent());
    const double a = query_deformed(*field, exact, p, d).density;
    const double b = query_deformed(*field, baked, p, d).density;
    worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

std::vector<SurfaceProbe> edit_surface_probes(const EditSpec& edit, int per_face_side,
                                              std::uint64_t seed) {
  auto probes = cage_surface_probes(edit.cages().inner_deformed, per_face_side, seed);
  const auto outer = cage_surface_probes(edit.cages().outer, per_face_side, seed + 1);
  probes.insert(probes.end(), outer.begin(), outer.end());
  return probes;
}

std::vector<AblationRow> ablate_outer_scale(const FieldPtr& field, const EditSpec& edit,
                                            std::span<const double> scales,
                                            const AblationOptions& opts) {
  if (scales.empty()) throw ValidationError("outer-scale sweep is empty");
  std::vector<Manipulation> inner_log;
  for (const Manipulation& m : edit.log()) {
    if (m.target == CageTarget::Inner) inner_log.push_back(m);
  }
  const HexCage& inner = edit.cages().inner_canonical;
  std::vector<AblationRow> rows;
  for (const double s : scales) {
    if (!(s > 1.0)) throw ValidationError("outer scale must exceed 1");
    TransformParams grow;
    grow.scale = Vec3::Constant(s);
    const HexCage outer = transform_cage(inner, grow);
    auto spec = std::make_shared<const EditSpec>(
        EditSpec::replay(outer, inner, edit.mode(), inner_log));

    AblationRow row{"outer_scale", s};
    row.grid_vs_exact_error = std::numeric_limits<double>::quiet_NaN();
    EditLayer layer{spec, nullptr};
    if (opts.warp_resolution > 0) {
      const auto start = Clock::now();
      layer.grid = std::make_shared<const WarpGrid>(
          *bake_warp_grid(*spec, opts.warp_resolution));
      row.bake_ms = elapsed_ms(start);
      row.grid_vs_exact_error =
          grid_vs_exact_error(field, *spec, layer.grid, opts.error_probes, opts.seed);
    }
    const Measured m = measure(field, layer, opts);
    row.discontinuity_energy = m.energy;
    row.render_ms = m.render_ms;
    rows.push_back(row);
  }
  return rows;
}

std::vector<AblationRow> ablate_resolution(const FieldPtr& field, const EditSpec& edit,
                                           std::span<const int> resolutions,
                                           const AblationOptions& opts) {
  if (resolutions.empty()) throw ValidationError("resolution sweep is empty");
  const auto spec = std::make_shared<const EditSpec>(edit);
  std::vector<AblationRow> rows;
  for (const int r : resolutions) {
    AblationRow row{"resolution", static_cast<double>(r)};
    const auto start = Clock::now();
    EditLayer layer{spec, std::make_shared<const WarpGrid>(*bake_warp_grid(*spec, r))};
    row.bake_ms = elapsed_ms(start);
    row.grid_vs_exact_error =
        grid_vs_exact_error(field, edit, layer.grid, opts.error_probes, opts.seed);
    const Measured m = measure(field, layer, opts);
    row.discontinuity_energy = m.energy;
    row.render_ms = m.render_ms;
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "sweep,value,discontinuity_energy,grid_vs_exact_error,bake_ms,render_ms\n";
  char buf[256];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.3f,%.3f\n", r.sweep.c_str(),
                  r.value, r.discontinuity_energy, r.grid_vs_exact_error, r.bake_ms,
                  r.render_ms);
    out += buf;
  }
  return out;
}

}  // namespace cagewarp

// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/cage.hpp>
#include <cagewarp/field.hpp>
#include <cagewarp/render.hpp>
#include <cagewarp/warp.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cagewarp {

using nlohmann::json;

// JSON conversions. Readers throw ValidationError (or DegenerateCageError)
// naming the offending key.

json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const json& j, const char* what);

json cage_to_json(const HexCage& cage);
HexCage cage_from_json(const json& j, const char* what);

/// {"outer": [[x,y,z] x 8], "inner": [[x,y,z] x 8]}
struct CageSetup {
  HexCage outer;
  HexCage inner;
};
json cage_setup_to_json(const CageSetup& setup);
CageSetup cage_setup_from_json(const json& j);

json transform_to_json(const TransformParams& params);
TransformParams transform_from_json(const json& j);

/// {"transform": {...}} or {"deform": {"handle": {"corner"|"edge": k},
/// "delta": [...]}}, with optional "target": "inner" | "outer".
json manipulation_to_json(const Manipulation& m);
Manipulation manipulation_from_json(const json& j);

/// Provenance record of an edit: initial cages, mode and action log.
json edit_to_json(const EditSpec& edit);
EditSpec edit_from_json(const json& j);

/// {"fov_x", "width", "height", "transform": 16 numbers row-major}
json camera_to_json(const Camera& camera);
Camera camera_from_json(const json& j);
/// Single camera object or a multi-frame transforms.json-style file with
/// "camera_angle_x", "w"/"h" (or "width"/"height") and frames[].transform_matrix.
std::vector<Camera> cameras_from_json(const json& j);

json settings_to_json(const RenderSettings& s);
RenderSettings settings_from_json(const json& j, RenderSettings base = {});

json analytic_to_json(const AnalyticField& field);
AnalyticField analytic_from_json(const json& j);

/// Edit script: either an array of manipulations (one edit on `cages`) or
/// {"edits": [{"outer"?, "inner"?, "mode"?, "actions": [...]}, ...]}. An edit
/// without cages starts from where the previous one left them.
std::vector<EditSpec> edits_from_script(const json& script, const CageSetup& cages,
                                        AdjustmentMode mode);

json read_json_file(const std::filesystem::path& path);

}  // namespace cagewarp

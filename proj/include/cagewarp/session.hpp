// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/field.hpp>
#include <cagewarp/render.hpp>
#include <cagewarp/serialize.hpp>
#include <cagewarp/warp.hpp>

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace cagewarp {

enum class Phase { Idle, SettingCages, Editing };
std::string_view to_string(Phase phase);

/// Background bake of one edit's warp grid. Cancelled and joined on destruction.
class BakeJob {
 public:
  BakeJob(std::shared_ptr<const EditSpec> edit, int resolution);
  ~BakeJob();
  BakeJob(const BakeJob&) = delete;
  BakeJob& operator=(const BakeJob&) = delete;

  /// Finished grid, or null while pending (or when cancelled).
  std::shared_ptr<const WarpGrid> result() const;
  bool done() const;
  void wait() const;
  void cancel();

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  bool done_ = false;
  std::shared_ptr<const WarpGrid> grid_;
  std::jthread worker_;
};

struct SessionSettings {
  RenderSettings render;
  /// Warp-grid resolution; 0 renders through the exact mapping.
  int warp_resolution = 256;
  std::size_t max_stack_depth = kDefaultMaxStackDepth;
};

/// Editing state machine: Idle -> SettingCages -> Editing -> SettingCages.
/// Every operation is transactional: on error nothing changes.
class Session {
 public:
  explicit Session(SessionSettings settings = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Replaces the scene; only allowed while no edit is live.
  void load_scene(FieldPtr scene, std::string scene_path);

  void set_cages(const HexCage& outer, const HexCage& inner);
  void begin_edit(AdjustmentMode mode);
  void set_mode(AdjustmentMode mode);
  void apply_manipulation(const Manipulation& m);
  void commit_edit();
  void undo();

  void set_camera(const std::string& name, const Camera& camera);
  void set_settings(const SessionSettings& settings);

  Phase phase() const { return phase_; }
  std::uint64_t revision() const { return revision_; }
  const FieldPtr& scene() const { return scene_; }
  const std::string& scene_path() const { return scene_path_; }
  const std::optional<CageSetup>& staged_cages() const { return staged_; }
  const std::optional<EditSpec>& live_edit() const;
  std::vector<std::shared_ptr<const EditSpec>> committed() const;
  std::size_t stack_size() const { return committed_.size(); }
  const SessionSettings& settings() const { return settings_; }
  const std::map<std::string, Camera>& cameras() const { return cameras_; }

  /// Number of bakes still running.
  std::size_t pending_bakes() const;
  void wait_for_bakes() const;

  /// Snapshot of the edited field: committed edits plus the live one. Layers
  /// whose bake has not finished fall back to the exact mapping.
  DeformedField field_snapshot() const;
  /// Cages drawn over renders: the staged pair while setting cages, the
  /// live pair while editing.
  std::vector<HexCage> overlay_cages() const;

  /// Renders the current state. Returns nullopt when cancelled. Throws
  /// ValidationError when no scene is loaded.
  std::optional<RenderOutput> render(const Camera& camera,
                                     const RenderSettings& settings,
                                     bool overlay_cages = false,
                                     std::stop_token stop = {}) const;

  /// Save file: scene path, phase, staged cages, edit provenance, settings
  /// and cameras. Baked grids are not persisted.
  json save() const;
  /// Rebuilds a session from a save file; the scene is loaded through
  /// `load` from the stored path.
  static std::unique_ptr<Session> restore(
      const json& saved,
      const std::function<FieldPtr(const std::string&)>& load);

 private:
  struct Layer {
    std::shared_ptr<const EditSpec> edit;
    std::shared_ptr<BakeJob> bake;
  };

  Layer make_layer(EditSpec edit) const;
  void require_phase(std::initializer_list<Phase> allowed, const char* op) const;
  void bump() { ++revision_; }

  SessionSettings settings_;
  Phase phase_ = Phase::Idle;
  std::uint64_t revision_ = 0;
  FieldPtr scene_;
  std::string scene_path_;
  std::optional<CageSetup> staged_;
  std::vector<Layer> committed_;
  std::optional<EditSpec> live_;
  std::optional<Layer> live_layer_;
  std::map<std::string, Camera> cameras_;
};

}  // namespace cagewarp

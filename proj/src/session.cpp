// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/session.hpp>

#include <spdlog/spdlog.h>

namespace cagewarp {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Idle: return "Idle";
    case Phase::SettingCages: return "SettingCages";
    case Phase::Editing: return "Editing";
  }
  return "?";
}

namespace {

Phase parse_phase(const std::string& s) {
  if (s == "Idle") return Phase::Idle;
  if (s == "SettingCages") return Phase::SettingCages;
  if (s == "Editing") return Phase::Editing;
  throw ValidationError("phase: unknown value '" + s + "'");
}

}  // namespace

// BakeJob

BakeJob::BakeJob(std::shared_ptr<const EditSpec> edit, int resolution) {
  worker_ = std::jthread([this, edit = std::move(edit), resolution](std::stop_token stop) {
    std::shared_ptr<const WarpGrid> grid;
    try {
      if (auto g = bake_warp_grid(*edit, resolution, stop)) {
        grid = std::make_shared<const WarpGrid>(std::move(*g));
      }
    } catch (const std::exception& e) {
      spdlog::warn("warp bake failed: {}", e.what());
    }
    {
      std::lock_guard lock(mutex_);
      grid_ = std::move(grid);
      done_ = true;
    }
    cv_.notify_all();
  });
}

BakeJob::~BakeJob() { cancel(); }

std::shared_ptr<const WarpGrid> BakeJob::result() const {
  std::lock_guard lock(mutex_);
  return grid_;
}

bool BakeJob::done() const {
  std::lock_guard lock(mutex_);
  return done_;
}

void BakeJob::wait() const {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return done_; });
}

void BakeJob::cancel() { worker_.request_stop(); }

// Session

Session::Session(SessionSettings settings) : settings_(std::move(settings)) {
  settings_.render.validate();
}

Session::~Session() {
  for (auto& layer : committed_) {
    if (layer.bake) layer.bake->cancel();
  }
  if (live_layer_ && live_layer_->bake) live_layer_->bake->cancel();
}

void Session::require_phase(std::initializer_list<Phase> allowed, const char* op) const {
  for (Phase p : allowed) {
    if (p == phase_) return;
  }
  throw PhaseError(std::string(op) + " is not allowed in phase " +
                   std::string(to_string(phase_)));
}

Session::Layer Session::make_layer(EditSpec edit) const {
  Layer layer;
  layer.edit = std::make_shared<const EditSpec>(std::move(edit));
  if (settings_.warp_resolution > 0 && !layer.edit->is_identity()) {
    layer.bake = std::make_shared<BakeJob>(layer.edit, settings_.warp_resolution);
  }
  return layer;
}

void Session::load_scene(FieldPtr scene, std::string scene_path) {
  require_phase({Phase::Idle, Phase::SettingCages}, "load_scene");
  if (!scene) throw ValidationError("load_scene: no field");
  scene_ = std::move(scene);
  scene_path_ = std::move(scene_path);
  committed_.clear();
  staged_.reset();
  phase_ = Phase::Idle;
  bump();
}

void Session::set_cages(const HexCage& outer, const HexCage& inner) {
  require_phase({Phase::Idle, Phase::SettingCages}, "set_cages");
  if (!scene_) throw ValidationError("set_cages: no scene loaded");
  CagePair::make(outer, inner);
  staged_ = CageSetup{outer, inner};
  phase_ = Phase::SettingCages;
  bump();
}

void Session::begin_edit(AdjustmentMode mode) {
  require_phase({Phase::SettingCages}, "begin_edit");
  if (committed_.size() + 1 > settings_.max_stack_depth) {
    throw ValidationError("edit stack is full (" + std::to_string(committed_.size()) +
                          " edits)");
  }
  EditSpec edit = EditSpec::begin(staged_->outer, staged_->inner, mode);
  Layer layer = make_layer(edit);
  live_ = std::move(edit);
  live_layer_ = std::move(layer);
  phase_ = Phase::Editing;
  bump();
}

void Session::set_mode(AdjustmentMode mode) {
  require_phase({Phase::Editing}, "set_mode");
  EditSpec edit = live_->with_mode(mode);
  Layer layer = make_layer(edit);
  if (live_layer_->bake) live_layer_->bake->cancel();
  live_ = std::move(edit);
  live_layer_ = std::move(layer);
  bump();
}

void Session::apply_manipulation(const Manipulation& m) {
  require_phase({Phase::Editing}, "manipulate");
  EditSpec edit = live_->applied(m);
  Layer layer = make_layer(edit);
  if (live_layer_->bake) live_layer_->bake->cancel();
  live_ = std::move(edit);
  live_layer_ = std::move(layer);
  bump();
}

void Session::commit_edit() {
  require_phase({Phase::Editing}, "commit");
  // The next edit starts from the cages where this one left them.
  const CagePair& pair = live_->cages();
  staged_ = CageSetup{pair.outer, pair.inner_deformed};
  committed_.push_back(std::move(*live_layer_));
  live_layer_.reset();
  live_.reset();
  phase_ = Phase::SettingCages;
  bump();
}

void Session::undo() {
  require_phase({Phase::Idle, Phase::SettingCages}, "undo");
  if (committed_.empty()) throw ValidationError("undo: no committed edits");
  const auto& popped = committed_.back();
  if (popped.bake) popped.bake->cancel();
  staged_ = CageSetup{popped.edit->initial_outer(), popped.edit->cages().inner_canonical};
  committed_.pop_back();
  bump();
}

void Session::set_camera(const std::string& name, const Camera& camera) {
  camera.validate();
  cameras_[name] = camera;
  bump();
}

void Session::set_settings(const SessionSettings& settings) {
  settings.render.validate();
  if (settings.warp_resolution != 0 && settings.warp_resolution < 2) {
    throw ValidationError("warp_resolution must be 0 or at least 2");
  }
  if (settings.max_stack_depth < committed_.size()) {
    throw ValidationError("max_stack_depth is below the current stack size");
  }
  settings_ = settings;
  bump();
}

const std::optional<EditSpec>& Session::live_edit() const { return live_; }

std::vector<std::shared_ptr<const EditSpec>> Session::committed() const {
  std::vector<std::shared_ptr<const EditSpec>> out;
  for (const auto& layer : committed_) out.push_back(layer.edit);
  return out;
}

std::size_t Session::pending_bakes() const {
  std::size_t n = 0;
  for (const auto& layer : committed_) n += layer.bake && !layer.bake->done();
  if (live_layer_ && live_layer_->bake && !live_layer_->bake->done()) ++n;
  return n;
}

void Session::wait_for_bakes() const {
  for (const auto& layer : committed_) {
    if (layer.bake) layer.bake->wait();
  }
  if (live_layer_ && live_layer_->bake) live_layer_->bake->wait();
}

DeformedField Session::field_snapshot() const {
  if (!scene_) throw ValidationError("no scene loaded");
  std::vector<EditLayer> stack;
  auto add = [&](const Layer& layer) {
    EditLayer e{layer.edit, nullptr};
    if (layer.bake) e.grid = layer.bake->result();
    stack.push_back(std::move(e));
  };
  for (const auto& layer : committed_) add(layer);
  if (live_layer_) add(*live_layer_);
  const std::size_t depth = std::max(settings_.max_stack_depth, stack.size());
  return DeformedField(scene_, std::move(stack), depth);
}

std::vector<HexCage> Session::overlay_cages() const {
  if (phase_ == Phase::Editing) {
    return {live_->cages().outer, live_->cages().inner_deformed};
  }
  if (phase_ == Phase::SettingCages && staged_) return {staged_->outer, staged_->inner};
  return {};
}

std::optional<RenderOutput> Session::render(const Camera& camera,
                                            const RenderSettings& settings,
                                            bool overlay_cages_flag,
                                            std::stop_token stop) const {
  const DeformedField field = field_snapshot();
  auto out = cagewarp::render(field.as_query(), camera, settings, stop);
  if (out && overlay_cages_flag) {
    const auto cages = overlay_cages();
    const Rgb colors[2] = {Rgb(0.1, 0.3, 0.9), Rgb(1.0, 0.55, 0.0)};
    for (std::size_t i = 0; i < cages.size(); ++i) {
      draw_cage_wireframe(out->image, camera, cages[i], colors[i % 2]);
    }
  }
  return out;
}

json Session::save() const {
  json committed = json::array();
  for (const auto& layer : committed_) committed.push_back(edit_to_json(*layer.edit));
  json cameras = json::object();
  for (const auto& [name, cam] : cameras_) cameras[name] = camera_to_json(cam);
  return {
      {"format", "cagewarp-session"},
      {"version", 1},
      {"scene", scene_path_},
      {"phase", std::string(to_string(phase_))},
      {"revision", revision_},
      {"staged", staged_ ? cage_setup_to_json(*staged_) : json(nullptr)},
      {"committed", committed},
      {"live", live_ ? edit_to_json(*live_) : json(nullptr)},
      {"settings",
       {{"render", settings_to_json(settings_.render)},
        {"warp_resolution", settings_.warp_resolution},
        {"max_stack_depth", settings_.max_stack_depth}}},
      {"cameras", cameras},
  };
}

std::unique_ptr<Session> Session::restore(
    const json& saved, const std::function<FieldPtr(const std::string&)>& load) {
  if (!saved.is_object() || saved.value("format", "") != "cagewarp-session") {
    throw ValidationError("not a session save file");
  }
  SessionSettings settings;
  if (saved.contains("settings")) {
    const json& s = saved["settings"];
    if (s.contains("render")) settings.render = settings_from_json(s["render"]);
    settings.warp_resolution = s.value("warp_resolution", settings.warp_resolution);
    settings.max_stack_depth = s.value("max_stack_depth", settings.max_stack_depth);
  }
  auto session = std::make_unique<Session>(settings);
  const std::string scene = saved.value("scene", "");
  if (!scene.empty()) {
    session->scene_ = load(scene);
    session->scene_path_ = scene;
  }
  if (saved.contains("staged") && !saved["staged"].is_null()) {
    session->staged_ = cage_setup_from_json(saved["staged"]);
  }
  for (const json& e : saved.value("committed", json::array())) {
    session->committed_.push_back(session->make_layer(edit_from_json(e)));
  }
  if (saved.contains("live") && !saved["live"].is_null()) {
    EditSpec live = edit_from_json(saved["live"]);
    session->live_layer_ = session->make_layer(live);
    session->live_ = std::move(live);
  }
  if (saved.contains("cameras")) {
    for (const auto& [name, cam] : saved["cameras"].items()) {
      session->cameras_[name] = camera_from_json(cam);
    }
  }
  session->phase_ = parse_phase(saved.value("phase", "Idle"));
  if ((session->phase_ == Phase::Editing) != session->live_.has_value()) {
    throw ValidationError("phase and live edit are inconsistent");
  }
  if (session->phase_ == Phase::SettingCages && !session->staged_) {
    throw ValidationError("SettingCages phase needs staged cages");
  }
  session->revision_ = saved.value("revision", std::uint64_t{0});
  return session;
}

}  // namespace cagewarp

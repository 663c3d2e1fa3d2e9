// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/protocol.hpp>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

namespace cagewarp {

namespace {

std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

json error_ack(const json& id, const std::string& message, const char* kind) {
  return {{"type", "ack"}, {"id", id}, {"ok", false}, {"error", message}, {"error_kind", kind}};
}

AdjustmentMode mode_from(const json& payload) {
  if (!payload.contains("mode") || !payload["mode"].is_string()) {
    throw ValidationError("payload.mode: expected a string");
  }
  return parse_mode(payload["mode"].get<std::string>());
}

std::filesystem::path resolve_scene(const std::filesystem::path& root,
                                    const std::string& relative) {
  namespace fs = std::filesystem;
  if (relative.empty()) throw ValidationError("payload.path: empty");
  const fs::path base = fs::weakly_canonical(root);
  const fs::path full = fs::weakly_canonical(base / relative);
  const auto rel = full.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") {
    throw ValidationError("payload.path: must stay inside the scene root");
  }
  return full;
}

// Sentinel returned by handlers that already sent their own ack.
json already_acked() { return json(json::value_t::discarded); }

}  // namespace

ProtocolHandler::ProtocolHandler(ProtocolOptions options, Sink send)
    : options_(std::move(options)),
      send_(std::move(send)),
      session_(std::make_unique<Session>(options_.settings)) {}

ProtocolHandler::~ProtocolHandler() {
  std::lock_guard lock(render_mutex_);
  render_worker_.request_stop();
  if (render_worker_.joinable()) render_worker_.join();
}

void ProtocolHandler::wait_idle() {
  std::lock_guard lock(render_mutex_);
  if (render_worker_.joinable()) render_worker_.join();
}

bool ProtocolHandler::handle_line(const std::string& line) {
  if (line.find_first_not_of(" \t\r") == std::string::npos) return true;
  if (options_.recorder) options_.recorder(line);

  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error& e) {
    if (!greeted_) {
      send_(json{{"type", "hello"}, {"ok", false}, {"reason", "malformed hello"}}.dump());
      return false;
    }
    send_(error_ack(nullptr, std::string("malformed JSON: ") + e.what(), "parse").dump());
    return true;
  }

  if (!greeted_) {
    const bool ok = msg.is_object() && msg.value("type", "") == "hello" &&
                    msg.value("protocol", "") == kProtocolName;
    if (!ok) {
      send_(json{{"type", "hello"}, {"ok", false}, {"reason", "expected a cagewarp hello"}}.dump());
      return false;
    }
    const json version = msg.value("version", json());
    if (!version.is_number_integer() || version.get<int>() != kProtocolVersion) {
      send_(json{{"type", "hello"},
                 {"ok", false},
                 {"reason", "unsupported protocol version " + version.dump() +
                                " (server speaks " + std::to_string(kProtocolVersion) + ")"}}
                .dump());
      return false;
    }
    greeted_ = true;
    send_(json{{"type", "hello"}, {"ok", true}, {"protocol", kProtocolName},
               {"version", kProtocolVersion}}
              .dump());
    return true;
  }

  if (!msg.is_object()) {
    send_(error_ack(nullptr, "message must be a JSON object", "protocol").dump());
    return true;
  }
  const json id = msg.value("id", json());
  if (!id.is_number_integer()) {
    send_(error_ack(nullptr, "id: expected an integer", "protocol").dump());
    return true;
  }
  const std::int64_t id_value = id.get<std::int64_t>();
  if (last_id_ && id_value <= *last_id_) {
    send_(error_ack(id, "id must be strictly increasing (last was " +
                            std::to_string(*last_id_) + ")",
                    "protocol")
              .dump());
    return true;
  }
  last_id_ = id_value;
  const json kind = msg.value("kind", json());
  if (!kind.is_string()) {
    send_(error_ack(id, "kind: expected a string", "protocol").dump());
    return true;
  }
  const json payload = msg.value("payload", json::object());

  json result;
  try {
    result = dispatch(kind.get<std::string>(), payload, id_value);
  } catch (const ContainmentError& e) {
    json ack = error_ack(id, e.what(), "containment");
    ack["vertices"] = e.vertices();
    send_(ack.dump());
    return true;
  } catch (const PhaseError& e) {
    send_(error_ack(id, e.what(), "phase").dump());
    return true;
  } catch (const ValidationError& e) {
    send_(error_ack(id, e.what(), "validation").dump());
    return true;
  } catch (const LoadError& e) {
    send_(error_ack(id, e.what(), "load").dump());
    return true;
  } catch (const IoError& e) {
    send_(error_ack(id, e.what(), "io").dump());
    return true;
  } catch (const std::exception& e) {
    send_(error_ack(id, e.what(), "internal").dump());
    return true;
  }
  if (!result.is_discarded()) {
    send_(json{{"type", "ack"}, {"id", id}, {"ok", true}, {"result", result}}.dump());
  }
  return true;
}

json ProtocolHandler::dispatch(const std::string& kind, const json& payload,
                               std::int64_t id) {
  if (!payload.is_object()) throw ValidationError("payload: expected an object");
  Session& s = *session_;
  if (kind == "load_scene") {
    if (!payload.contains("path") || !payload["path"].is_string()) {
      throw ValidationError("payload.path: expected a string");
    }
    const std::string path = payload["path"].get<std::string>();
    auto field = std::make_shared<const RadianceField>(
        load_scene(resolve_scene(options_.scene_root, path)));
    s.load_scene(std::move(field), path);
  } else if (kind == "set_cages") {
    const CageSetup setup = cage_setup_from_json(payload);
    s.set_cages(setup.outer, setup.inner);
  } else if (kind == "begin_edit") {
    s.begin_edit(mode_from(payload));
  } else if (kind == "manipulate") {
    s.apply_manipulation(manipulation_from_json(payload));
  } else if (kind == "set_mode") {
    s.set_mode(mode_from(payload));
  } else if (kind == "commit") {
    s.commit_edit();
  } else if (kind == "undo") {
    s.undo();
  } else if (kind == "render_request") {
    return handle_render(payload, id);
  } else if (kind == "get_state") {
    return state_json();
  } else if (kind == "bake_status") {
    return {{"pending", s.pending_bakes()},
            {"warp_resolution", s.settings().warp_resolution},
            {"revision", s.revision()}};
  } else {
    throw ValidationError("unknown command kind '" + kind + "'");
  }
  return {{"revision", s.revision()}};
}

json ProtocolHandler::state_json() const {
  const Session& s = *session_;
  json live = nullptr;
  if (const auto& e = s.live_edit()) {
    live = {{"mode", std::string(to_string(e->mode()))},
            {"outer", cage_to_json(e->cages().outer)},
            {"inner_canonical", cage_to_json(e->cages().inner_canonical)},
            {"inner_deformed", cage_to_json(e->cages().inner_deformed)},
            {"actions", e->log().size()}};
  }
  return {{"phase", std::string(to_string(s.phase()))},
          {"revision", s.revision()},
          {"scene", s.scene_path()},
          {"stack_size", s.stack_size()},
          {"staged", s.staged_cages() ? cage_setup_to_json(*s.staged_cages()) : json(nullptr)},
          {"live", live},
          {"pending_bakes", s.pending_bakes()}};
}

json ProtocolHandler::handle_render(const json& payload, std::int64_t id) {
  const Camera camera = camera_from_json(
      payload.contains("camera") ? payload["camera"] : json::object());
  const RenderSettings settings = payload.contains("settings")
                                      ? settings_from_json(payload["settings"],
                                                           session_->settings().render)
                                      : session_->settings().render;
  const std::string encoding = payload.value("encoding", "png-base64");
  if (encoding != "png-base64" && encoding != "raw-f32le") {
    throw ValidationError("encoding: expected \"png-base64\" or \"raw-f32le\"");
  }
  const bool overlay = payload.value("overlay", false);

  std::lock_guard lock(render_mutex_);
  // Latest request wins: stop the in-flight render before starting this one.
  render_worker_.request_stop();
  if (render_worker_.joinable()) render_worker_.join();

  if (options_.synchronous) session_->wait_for_bakes();
  const std::uint64_t revision = session_->revision();
  const DeformedField field = session_->field_snapshot();
  const std::vector<HexCage> cages = overlay ? session_->overlay_cages()
                                             : std::vector<HexCage>{};
  send_(json{{"type", "ack"}, {"id", id}, {"ok", true}, {"result", {{"revision", revision}}}}
            .dump());

  auto job = [this, field, camera, settings, cages, id, revision,
              encoding](std::stop_token stop) {
    std::optional<RenderOutput> out;
    try {
      out = render(field.as_query(), camera, settings, stop);
    } catch (const std::exception& e) {
      spdlog::warn("render {} failed: {}", id, e.what());
      send_(json{{"type", "cancelled"}, {"request_id", id}, {"reason", e.what()}}.dump());
      return;
    }
    if (!out) {
      send_(json{{"type", "cancelled"}, {"request_id", id}}.dump());
      return;
    }
    const Rgb colors[2] = {Rgb(0.1, 0.3, 0.9), Rgb(1.0, 0.55, 0.0)};
    for (std::size_t i = 0; i < cages.size(); ++i) {
      draw_cage_wireframe(out->image, camera, cages[i], colors[i % 2]);
    }
    send_frame(id, revision, *out, encoding);
  };

  if (options_.synchronous) {
    job(std::stop_token{});
  } else {
    render_worker_ = std::jthread(job);
  }
  return already_acked();
}

void ProtocolHandler::send_frame(std::int64_t id, std::uint64_t revision,
                                 const RenderOutput& out, const std::string& encoding) {
  std::string payload;
  if (encoding == "png-base64") {
    payload = base64(encode_png(out.image));
  } else {
    const std::string raw = encode_raw_f32(out.image);
    payload = base64(std::string_view(raw).substr(raw.find('\n') + 1));
  }
  send_(json{{"type", "frame"},
             {"request_id", id},
             {"revision", revision},
             {"width", out.image.width()},
             {"height", out.image.height()},
             {"encoding", encoding},
             {"payload", payload}}
            .dump());
}

json replay_commands(const std::vector<std::string>& lines, const ProtocolOptions& options,
                     const std::function<void(const json&)>& on_message) {
  ProtocolOptions sync = options;
  sync.synchronous = true;
  sync.recorder = nullptr;
  ProtocolHandler handler(sync, [&](const std::string& line) {
    if (on_message) on_message(json::parse(line));
  });
  for (const std::string& line : lines) {
    if (!handler.handle_line(line)) {
      throw ValidationError("replay: handshake rejected");
    }
  }
  handler.wait_idle();
  handler.session().wait_for_bakes();
  return handler.session().save();
}

}  // namespace cagewarp

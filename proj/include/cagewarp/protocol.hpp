// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/session.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>

namespace cagewarp {

inline constexpr int kProtocolVersion = 1;
inline constexpr const char* kProtocolName = "cagewarp";

struct ProtocolOptions {
  std::filesystem::path scene_root = ".";
  SessionSettings settings;
  /// Render inline after all pending bakes finish (headless replay). When
  /// false, renders run on a worker and a newer request cancels an older one.
  bool synchronous = false;
  /// Receives every accepted command line (for recording replay logs).
  std::function<void(const std::string&)> recorder;
};

/// One connection's command loop. Messages are single-line JSON frames:
///   client: {"type":"hello","protocol":"cagewarp","version":1}
///   client: {"id":N,"kind":"...","payload":{...}}
///   server: {"type":"ack","id":N,"ok":true,"result":{...}}
///           {"type":"ack","id":N,"ok":false,"error":"..."}
///           {"type":"frame","request_id":N,"revision":R,"width":W,"height":H,
///            "encoding":"png-base64"|"raw-f32le","payload":"..."}
///           {"type":"cancelled","request_id":N}
class ProtocolHandler {
 public:
  /// `send` writes one line to the peer; it may be called from a render
  /// worker thread, so it must be thread-safe.
  using Sink = std::function<void(const std::string&)>;

  ProtocolHandler(ProtocolOptions options, Sink send);
  ~ProtocolHandler();
  ProtocolHandler(const ProtocolHandler&) = delete;
  ProtocolHandler& operator=(const ProtocolHandler&) = delete;

  /// Handles one incoming line. Returns false when the connection must be
  /// closed (failed handshake).
  bool handle_line(const std::string& line);

  /// Blocks until no render is in flight.
  void wait_idle();

  const Session& session() const { return *session_; }

 private:
  json dispatch(const std::string& kind, const json& payload,
                std::int64_t id);
  json handle_render(const json& payload, std::int64_t id);
  json state_json() const;
  void send_frame(std::int64_t id, std::uint64_t revision,
                  const RenderOutput& out, const std::string& encoding);

  ProtocolOptions options_;
  Sink send_;
  std::unique_ptr<Session> session_;
  bool greeted_ = false;
  std::optional<std::int64_t> last_id_;

  std::mutex render_mutex_;
  std::jthread render_worker_;
};

/// Accepts TCP connections on host:port, one session per connection.
class Server {
 public:
  Server(std::string host, int port, ProtocolOptions options);
  ~Server();

  /// Binds and starts accepting in the background. Returns the bound port
  /// (useful with port 0). Throws IoError.
  int start();
  void stop();
  /// Blocks until stop() is called or the listener fails.
  void join();

 private:
  void accept_loop(std::stop_token stop);

  std::string host_;
  int port_;
  ProtocolOptions options_;
  int listen_fd_ = -1;
  std::jthread acceptor_;
  std::mutex connections_mutex_;
  std::vector<std::jthread> connections_;
};

/// Feeds a recorded command log through a synchronous handler. Frames and
/// acks are passed to `on_message`. Returns the final session save.
json replay_commands(const std::vector<std::string>& lines,
                     const ProtocolOptions& options,
                     const std::function<void(const json&)>& on_message);

}  // namespace cagewarp

// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/protocol.hpp>

#include <spdlog/spdlog.h>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace cagewarp {

namespace {

constexpr int kPollMs = 100;

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_connection(int fd, const ProtocolOptions& options, std::stop_token stop) {
  std::mutex write_mutex;
  bool writable = true;
  {
    ProtocolHandler handler(options, [&](const std::string& line) {
      std::lock_guard lock(write_mutex);
      if (writable) writable = send_all(fd, line + "\n");
    });
    std::string buffer;
    char chunk[65536];
    bool open = true;
    while (open && !stop.stop_requested()) {
      pollfd p{fd, POLLIN, 0};
      const int ready = ::poll(&p, 1, kPollMs);
      if (ready < 0 && errno != EINTR) break;
      if (ready <= 0) continue;
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while (open && (nl = buffer.find('\n')) != std::string::npos) {
        const std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        open = handler.handle_line(line);
      }
    }
  }
  ::close(fd);
}

}  // namespace

Server::Server(std::string host, int port, ProtocolOptions options)
    : host_(std::move(host)), port_(port), options_(std::move(options)) {}

Server::~Server() { stop(); }

int Server::start() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (const int rc = ::getaddrinfo(host_.empty() ? nullptr : host_.c_str(), port.c_str(),
                                   &hints, &res);
      rc != 0) {
    throw IoError("cannot resolve " + host_ + ": " + ::gai_strerror(rc));
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw IoError(std::string("socket: ") + std::strerror(errno));
  }
  const int yes = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 8) != 0) {
    const std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(fd);
    throw IoError("cannot listen on " + host_ + ":" + port + ": " + err);
  }
  ::freeaddrinfo(res);

  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  listen_fd_ = fd;
  port_ = ntohs(bound.sin_port);
  acceptor_ = std::jthread([this](std::stop_token stop) { accept_loop(stop); });
  spdlog::info("listening on {}:{}", host_, port_);
  return port_;
}

void Server::accept_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, kPollMs);
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    const int client = ::accept(listen_fd_, nullptr, nullptr);
    if (client < 0) continue;
    std::lock_guard lock(connections_mutex_);
    connections_.emplace_back([this, client](std::stop_token s) {
      serve_connection(client, options_, s);
    });
  }
}

void Server::stop() {
  if (acceptor_.joinable()) {
    acceptor_.request_stop();
    acceptor_.join();
  }
  {
    std::lock_guard lock(connections_mutex_);
    for (auto& c : connections_) c.request_stop();
    connections_.clear();
  }
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void Server::join() {
  if (acceptor_.joinable()) acceptor_.join();
}

}  // namespace cagewarp

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "telekinesis/config.hpp"

namespace tk::bridge {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
  std::optional<std::filesystem::path> record_dir;
  EngineConfig config;
  std::uint64_t seed = 1;
  std::size_t max_queue = 256;  // outbound messages per connection
};

// HTTP + websocket front end. GET serves files from static_dir; an upgrade
// on /session opens one Session per connection, ticked by a timer at the
// configured tick rate on a single io thread.
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and serves on a background thread; returns once listening.
  void start();

  // Binds and serves on the calling thread until stop() or SIGINT/SIGTERM.
  void run();

  void stop();

  // Bound port, valid after start()/run() has bound the socket.
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tk::bridge

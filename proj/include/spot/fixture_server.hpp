#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "spot/model.hpp"

namespace httplib {
class Server;
}

namespace spot {

struct FixtureServerOptions {
  std::string model_name = "fixture";
  /// Conforming mode: answer every query from this model.
  const ScoringModel* backend = nullptr;
  /// Echo mode: return this body verbatim (HTTP 200) for every /v1/ranks.
  std::optional<std::string> canned_ranks_body;
  /// Reported by /v1/info when there is no backend.
  std::size_t vocab_size = 0;
  std::size_t window = 2048;
  /// Sleep before answering each rank/next query.
  std::chrono::milliseconds delay{0};
  /// Require "Authorization: Bearer <token>" when set.
  std::optional<std::string> auth_token;
};

/// Loopback HTTP server implementing the rank wire protocol. Serves either a
/// local ScoringModel or canned payloads, and counts the queries it receives.
class FixtureServer {
 public:
  explicit FixtureServer(FixtureServerOptions options);
  ~FixtureServer();
  FixtureServer(const FixtureServer&) = delete;
  FixtureServer& operator=(const FixtureServer&) = delete;

  /// Binds to `host:port` (port 0 picks a free one) and serves on a
  /// background thread.
  void start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop() is called elsewhere.
  void run(const std::string& host, int port);
  void stop();

  int port() const noexcept { return port_; }
  std::string endpoint() const;
  std::size_t rank_requests() const noexcept { return rank_requests_.load(); }
  std::size_t next_requests() const noexcept { return next_requests_.load(); }

 private:
  void install_routes();

  FixtureServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
  std::atomic<std::size_t> rank_requests_{0};
  std::atomic<std::size_t> next_requests_{0};
};

}  // namespace spot

#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spot/model.hpp"
#include "spot/types.hpp"

namespace spot {

inline constexpr int kWireVersion = 1;

struct RemoteBackendConfig {
  std::string endpoint;  // e.g. "http://127.0.0.1:8080" or "http://host/prefix"
  std::string model_name;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch = 4;
  std::optional<std::string> auth_token;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{100};
  /// When unset, fetched from GET /v1/info on first use.
  std::optional<std::size_t> vocab_size;
  std::optional<std::size_t> window;

  /// Throws Errc::invalid_argument.
  void validate() const;
};

// Wire protocol (JSON over HTTP, "v" mandatory everywhere):
//
//   POST /v1/ranks  {"v":1,"model":str,"tokens":[int],"context_len":int}
//                -> {"v":1,"ranks":[int],"vocab_size":int,"model":str}
//   POST /v1/next   {"v":1,"model":str,"tokens":[int]}
//                -> {"v":1,"token":int,"model":str}
//   GET  /v1/info   -> {"v":1,"model":str,"vocab_size":int,"window":int}
//   errors          {"v":1,"error":{"code":str,"message":str}} with 4xx/5xx
namespace wire {

nlohmann::json rank_request(const std::string& model, std::span<const TokenId> tokens, std::size_t context_len);
nlohmann::json next_request(const std::string& model, std::span<const TokenId> tokens);
nlohmann::json error_body(const std::string& code, const std::string& message);

/// Validates a /v1/ranks response body. Throws Errc::protocol_violation naming
/// the offending field.
RankVector parse_rank_response(const std::string& body, const std::string& model, std::size_t expected_len);
TokenId parse_next_response(const std::string& body, const std::string& model);

struct ModelInfo {
  std::string model;
  std::size_t vocab_size = 0;
  std::size_t window = 0;
};
ModelInfo parse_info_response(const std::string& body);

}  // namespace wire

/// Blocking HTTP client for one remote backend. Idempotent queries are
/// retried on timeouts, connection failures and 5xx responses, up to
/// max_retries times with exponential backoff, then fail with
/// Errc::backend_unavailable.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteBackendConfig config);

  const RemoteBackendConfig& config() const noexcept { return config_; }

  RankVector ranks(std::span<const TokenId> tokens, std::size_t context_len) const;
  TokenId next(std::span<const TokenId> tokens) const;
  wire::ModelInfo info() const;

  /// Runs ranks() for every sequence with at most max_batch requests in
  /// flight. Results are returned in input order.
  std::vector<RankVector> ranks_many(std::span<const TokenSequence> sequences) const;

 private:
  std::string post(const std::string& path, const std::string& body) const;
  std::string get(const std::string& path) const;

  RemoteBackendConfig config_;
  std::string host_;        // scheme://host:port
  std::string base_path_;   // path prefix, no trailing slash
};

/// One-shot rank query: ranks of the completion of `tokens` from the server.
RankVector remote_ranks(const RemoteBackendConfig& config, std::span<const TokenId> tokens, std::size_t context_len);

/// ScoringModel backed by a remote inference server.
class RemoteModel final : public ScoringModel {
 public:
  explicit RemoteModel(RemoteBackendConfig config);

  const std::string& model_id() const override { return client_.config().model_name; }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t window() const override { return window_; }
  std::vector<Rank> evaluate(std::span<const TokenId> tokens, std::size_t first) const override;
  TokenId predict_next(std::span<const TokenId> prefix) const override;

  const RemoteClient& client() const noexcept { return client_; }

 private:
  RemoteClient client_;
  std::size_t vocab_size_ = 0;
  std::size_t window_ = 0;
};

}  // namespace spot

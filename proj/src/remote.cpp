#include "spot/remote.hpp"

#include <atomic>
#include <exception>
#include <thread>

#include <httplib.h>

#include "spot/error.hpp"

namespace spot {

namespace {

[[noreturn]] void violation(const std::string& what) {
  throw Error(Errc::protocol_violation, "protocol violation: " + what);
}

nlohmann::json parse_body(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    violation("response is not valid JSON");
  }
  if (!j.is_object()) violation("response is not a JSON object");
  if (!j.contains("v")) violation("missing field 'v'");
  if (!j["v"].is_number_integer() || j["v"].get<long long>() != kWireVersion) {
    violation("field 'v' must be " + std::to_string(kWireVersion));
  }
  if (j.contains("error")) {
    const auto& e = j["error"];
    const std::string code = e.is_object() ? e.value("code", "unknown") : "unknown";
    const std::string msg = e.is_object() ? e.value("message", "") : "";
    throw Error(Errc::backend_error, "backend error [" + code + "]: " + msg);
  }
  return j;
}

std::uint64_t require_unsigned(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) violation(std::string("missing field '") + field + "'");
  const auto& f = j[field];
  if (!f.is_number_integer() || f.get<long long>() < 0) {
    violation(std::string("field '") + field + "' must be a non-negative integer");
  }
  return f.get<std::uint64_t>();
}

void require_model(const nlohmann::json& j, const std::string& model) {
  if (!j.contains("model")) violation("missing field 'model'");
  if (!j["model"].is_string()) violation("field 'model' must be a string");
  if (j["model"].get<std::string>() != model) {
    violation("field 'model' is '" + j["model"].get<std::string>() + "', expected '" + model + "'");
  }
}

}  // namespace

void RemoteBackendConfig::validate() const {
  if (endpoint.empty()) throw Error(Errc::invalid_argument, "invalid argument: remote endpoint is empty");
  if (endpoint.rfind("http://", 0) != 0) {
    throw Error(Errc::invalid_argument, "invalid argument: remote endpoint must be an http:// URL");
  }
  if (model_name.empty()) throw Error(Errc::invalid_argument, "invalid argument: remote model name is empty");
  if (timeout.count() <= 0) throw Error(Errc::invalid_argument, "invalid argument: timeout must be positive");
  if (max_batch < 1) throw Error(Errc::invalid_argument, "invalid argument: max_batch must be at least 1");
  if (max_retries < 0) throw Error(Errc::invalid_argument, "invalid argument: max_retries must be non-negative");
  if (vocab_size && *vocab_size < 2) throw Error(Errc::invalid_argument, "invalid argument: vocab_size must be >= 2");
  if (window && *window < 2) throw Error(Errc::invalid_argument, "invalid argument: window must be >= 2");
}

namespace wire {

nlohmann::json rank_request(const std::string& model, std::span<const TokenId> tokens, std::size_t context_len) {
  return {{"v", kWireVersion},
          {"model", model},
          {"tokens", std::vector<TokenId>(tokens.begin(), tokens.end())},
          {"context_len", context_len}};
}

nlohmann::json next_request(const std::string& model, std::span<const TokenId> tokens) {
  return {{"v", kWireVersion}, {"model", model}, {"tokens", std::vector<TokenId>(tokens.begin(), tokens.end())}};
}

nlohmann::json error_body(const std::string& code, const std::string& message) {
  return {{"v", kWireVersion}, {"error", {{"code", code}, {"message", message}}}};
}

RankVector parse_rank_response(const std::string& body, const std::string& model, std::size_t expected_len) {
  const auto j = parse_body(body);
  if (!j.contains("ranks")) violation("missing field 'ranks'");
  if (!j["ranks"].is_array()) violation("field 'ranks' must be an array");
  const auto vocab = require_unsigned(j, "vocab_size");
  if (vocab < 1) violation("field 'vocab_size' must be positive");
  require_model(j, model);

  RankVector rv;
  rv.vocab_size = vocab;
  rv.model_id = model;
  const auto& ranks = j["ranks"];
  if (ranks.size() != expected_len) {
    violation("field 'ranks' has length " + std::to_string(ranks.size()) + ", expected " +
              std::to_string(expected_len));
  }
  rv.ranks.reserve(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const auto& r = ranks[i];
    if (!r.is_number_integer() || r.get<long long>() < 0) {
      violation("field 'ranks[" + std::to_string(i) + "]' must be a non-negative integer");
    }
    const auto value = r.get<std::uint64_t>();
    if (value >= vocab) {
      violation("field 'ranks[" + std::to_string(i) + "]' = " + std::to_string(value) + " is not below vocab_size " +
                std::to_string(vocab));
    }
    rv.ranks.push_back(static_cast<Rank>(value));
  }
  return rv;
}

TokenId parse_next_response(const std::string& body, const std::string& model) {
  const auto j = parse_body(body);
  const auto token = require_unsigned(j, "token");
  require_model(j, model);
  return static_cast<TokenId>(token);
}

ModelInfo parse_info_response(const std::string& body) {
  const auto j = parse_body(body);
  ModelInfo info;
  if (!j.contains("model") || !j["model"].is_string()) violation("missing field 'model'");
  info.model = j["model"].get<std::string>();
  info.vocab_size = require_unsigned(j, "vocab_size");
  info.window = require_unsigned(j, "window");
  if (info.vocab_size < 2) violation("field 'vocab_size' must be at least 2");
  if (info.window < 2) violation("field 'window' must be at least 2");
  return info;
}

}  // namespace wire

RemoteClient::RemoteClient(RemoteBackendConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme_end = config_.endpoint.find("://") + 3;
  const auto path_start = config_.endpoint.find('/', scheme_end);
  host_ = config_.endpoint.substr(0, path_start);
  if (path_start != std::string::npos) {
    base_path_ = config_.endpoint.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }
}

namespace {

template <typename Send>
std::string with_retries(const RemoteBackendConfig& cfg, const std::string& what, Send&& send) {
  std::string last_failure;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg.initial_backoff * (1 << (attempt - 1)));
    httplib::Result res = send();
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      std::string detail = "HTTP " + std::to_string(res->status);
      try {
        const auto j = nlohmann::json::parse(res->body);
        if (j.contains("error") && j["error"].is_object()) {
          detail = "[" + j["error"].value("code", "unknown") + "]: " + j["error"].value("message", "");
        }
      } catch (const nlohmann::json::exception&) {
      }
      throw Error(Errc::backend_error, "backend error " + detail + " (" + what + ")");
    }
    if (res->status != 200) violation("unexpected HTTP status " + std::to_string(res->status));
    return std::move(res->body);
  }
  throw Error(Errc::backend_unavailable, "backend unavailable: " + what + " failed after " +
                                             std::to_string(attempts) + " attempts (last: " + last_failure + ")");
}

void configure(httplib::Client& cli, const RemoteBackendConfig& cfg) {
  cli.set_connection_timeout(cfg.timeout);
  cli.set_read_timeout(cfg.timeout);
  cli.set_write_timeout(cfg.timeout);
  if (cfg.auth_token) cli.set_bearer_token_auth(*cfg.auth_token);
}

}  // namespace

std::string RemoteClient::post(const std::string& path, const std::string& body) const {
  return with_retries(config_, "POST " + path, [&] {
    httplib::Client cli(host_);
    configure(cli, config_);
    return cli.Post(base_path_ + path, body, "application/json");
  });
}

std::string RemoteClient::get(const std::string& path) const {
  return with_retries(config_, "GET " + path, [&] {
    httplib::Client cli(host_);
    configure(cli, config_);
    return cli.Get(base_path_ + path);
  });
}

RankVector RemoteClient::ranks(std::span<const TokenId> tokens, std::size_t context_len) const {
  if (context_len > tokens.size()) throw Error(Errc::invalid_argument, "invalid argument: context_len exceeds tokens");
  if (context_len == tokens.size()) throw Error(Errc::empty_completion, "empty completion");
  const auto body = post("/v1/ranks", wire::rank_request(config_.model_name, tokens, context_len).dump());
  auto rv = wire::parse_rank_response(body, config_.model_name, tokens.size() - context_len);
  if (config_.vocab_size && rv.vocab_size != *config_.vocab_size) {
    violation("field 'vocab_size' is " + std::to_string(rv.vocab_size) + ", expected " +
              std::to_string(*config_.vocab_size));
  }
  return rv;
}

TokenId RemoteClient::next(std::span<const TokenId> tokens) const {
  const auto body = post("/v1/next", wire::next_request(config_.model_name, tokens).dump());
  return wire::parse_next_response(body, config_.model_name);
}

wire::ModelInfo RemoteClient::info() const { return wire::parse_info_response(get("/v1/info")); }

std::vector<RankVector> RemoteClient::ranks_many(std::span<const TokenSequence> sequences) const {
  std::vector<RankVector> results(sequences.size());
  std::vector<std::exception_ptr> errors(sequences.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < sequences.size(); i = cursor++) {
      try {
        results[i] = ranks(sequences[i].tokens(), sequences[i].context_len());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(config_.max_batch, sequences.size());
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  pool.clear();  // joins
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

RankVector remote_ranks(const RemoteBackendConfig& config, std::span<const TokenId> tokens, std::size_t context_len) {
  return RemoteClient(config).ranks(tokens, context_len);
}

RemoteModel::RemoteModel(RemoteBackendConfig config) : client_(std::move(config)) {
  const auto& cfg = client_.config();
  if (cfg.vocab_size && cfg.window) {
    vocab_size_ = *cfg.vocab_size;
    window_ = *cfg.window;
    return;
  }
  const auto info = client_.info();
  if (info.model != cfg.model_name) {
    violation("server serves model '" + info.model + "', expected '" + cfg.model_name + "'");
  }
  vocab_size_ = cfg.vocab_size.value_or(info.vocab_size);
  window_ = cfg.window.value_or(info.window);
}

std::vector<Rank> RemoteModel::evaluate(std::span<const TokenId> tokens, std::size_t first) const {
  auto rv = client_.ranks(tokens, first);
  if (rv.vocab_size != vocab_size_) {
    violation("field 'vocab_size' is " + std::to_string(rv.vocab_size) + ", expected " + std::to_string(vocab_size_));
  }
  return std::move(rv.ranks);
}

TokenId RemoteModel::predict_next(std::span<const TokenId> prefix) const { return client_.next(prefix); }

}  // namespace spot

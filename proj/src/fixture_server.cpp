#include "spot/fixture_server.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "spot/error.hpp"
#include "spot/remote.hpp"

namespace spot {

namespace {

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(wire::error_body(code, message).dump(), "application/json");
}

// Parses and checks the common request envelope; returns false after writing
// an error response.
bool read_request(const httplib::Request& req, httplib::Response& res, const std::string& model,
                  nlohmann::json& out) {
  try {
    out = nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception&) {
    reply_error(res, 400, "bad_request", "request is not valid JSON");
    return false;
  }
  if (!out.is_object() || !out.contains("v") || out["v"] != kWireVersion) {
    reply_error(res, 400, "bad_version", "request must carry \"v\":1");
    return false;
  }
  if (!out.contains("model") || !out["model"].is_string() || out["model"].get<std::string>() != model) {
    reply_error(res, 404, "unknown_model", "this server serves '" + model + "'");
    return false;
  }
  if (!out.contains("tokens") || !out["tokens"].is_array()) {
    reply_error(res, 400, "bad_request", "missing field 'tokens'");
    return false;
  }
  for (const auto& t : out["tokens"]) {
    if (!t.is_number_integer() || t.get<long long>() < 0) {
      reply_error(res, 400, "bad_request", "tokens must be non-negative integers");
      return false;
    }
  }
  return true;
}

}  // namespace

FixtureServer::FixtureServer(FixtureServerOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

FixtureServer::~FixtureServer() { stop(); }

void FixtureServer::install_routes() {
  auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
    if (!options_.auth_token) return true;
    if (req.get_header_value("Authorization") == "Bearer " + *options_.auth_token) return true;
    reply_error(res, 401, "unauthorized", "missing or wrong bearer token");
    return false;
  };

  server_->Get("/v1/info", [this, authorized](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res)) return;
    nlohmann::json body = {
        {"v", kWireVersion},
        {"model", options_.model_name},
        {"vocab_size", options_.backend ? options_.backend->vocab_size() : options_.vocab_size},
        {"window", options_.backend ? options_.backend->window() : options_.window},
    };
    res.set_content(body.dump(), "application/json");
  });

  server_->Post("/v1/ranks", [this, authorized](const httplib::Request& req, httplib::Response& res) {
    ++rank_requests_;
    if (!authorized(req, res)) return;
    if (options_.delay.count() > 0) std::this_thread::sleep_for(options_.delay);
    if (options_.canned_ranks_body) {
      res.set_content(*options_.canned_ranks_body, "application/json");
      return;
    }
    nlohmann::json j;
    if (!read_request(req, res, options_.model_name, j)) return;
    if (!options_.backend) {
      reply_error(res, 503, "no_backend", "fixture server has no backend");
      return;
    }
    if (!j.contains("context_len") || !j["context_len"].is_number_unsigned()) {
      reply_error(res, 400, "bad_request", "missing field 'context_len'");
      return;
    }
    const auto tokens = j["tokens"].get<std::vector<TokenId>>();
    try {
      const auto rv = ranks_for(*options_.backend, tokens, j["context_len"].get<std::size_t>());
      nlohmann::json body = {
          {"v", kWireVersion}, {"ranks", rv.ranks}, {"vocab_size", rv.vocab_size}, {"model", options_.model_name}};
      res.set_content(body.dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, 400, std::string(errc_name(e.code())), e.what());
    }
  });

  server_->Post("/v1/next", [this, authorized](const httplib::Request& req, httplib::Response& res) {
    ++next_requests_;
    if (!authorized(req, res)) return;
    if (options_.delay.count() > 0) std::this_thread::sleep_for(options_.delay);
    nlohmann::json j;
    if (!read_request(req, res, options_.model_name, j)) return;
    if (!options_.backend) {
      reply_error(res, 503, "no_backend", "fixture server has no backend");
      return;
    }
    const auto tokens = j["tokens"].get<std::vector<TokenId>>();
    try {
      check_token_range(*options_.backend, tokens);
      if (tokens.empty() || tokens.size() >= options_.backend->window()) {
        reply_error(res, 400, "bad_request", "prefix must be non-empty and shorter than the window");
        return;
      }
      const TokenId next = options_.backend->predict_next(tokens);
      nlohmann::json body = {{"v", kWireVersion}, {"token", next}, {"model", options_.model_name}};
      res.set_content(body.dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, 400, std::string(errc_name(e.code())), e.what());
    }
  });
}

void FixtureServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw Error(Errc::io_error, "io error: cannot bind fixture server on " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void FixtureServer::run(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw Error(Errc::io_error, "io error: cannot listen on " + endpoint());
}

void FixtureServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string FixtureServer::endpoint() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace spot

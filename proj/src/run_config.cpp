#include "spot/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "spot/error.hpp"
#include "spot/ngram.hpp"

namespace spot {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(Errc::config_error, "config error: line " + std::to_string(line) + ": " + what);
}

std::size_t to_size(std::size_t line, const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(line, "'" + key + "' expects a non-negative integer, got '" + value + "'");
  return out;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  bool saw_version = false;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "version") {
      if (value != "1") fail(lineno, "unsupported config version '" + value + "'");
      saw_version = true;
    } else if (key == "default_backend") {
      cfg.default_backend = value;
    } else if (key == "profile") {
      cfg.profile = resolve(value);
    } else if (key == "context_len") {
      cfg.context_len = to_size(lineno, key, value);
    } else if (key == "completion_len") {
      cfg.completion_len = to_size(lineno, key, value);
    } else if (key == "out") {
      cfg.out = resolve(value);
    } else if (key == "verbosity") {
      cfg.verbosity = value;
    } else if (key.rfind("backend.", 0) == 0) {
      const auto dot = key.find('.', 8);
      if (dot == std::string::npos) fail(lineno, "expected backend.<name>.<field>");
      const std::string name = key.substr(8, dot - 8);
      const std::string field = key.substr(dot + 1);
      auto& b = cfg.backends[name];
      if (field == "type") {
        if (value == "ngram") {
          b.kind = BackendSpec::Kind::ngram;
        } else if (value == "remote") {
          b.kind = BackendSpec::Kind::remote;
        } else {
          fail(lineno, "unknown backend type '" + value + "'");
        }
      } else if (field == "path") {
        b.ngram_path = resolve(value);
      } else if (field == "endpoint") {
        b.remote.endpoint = value;
      } else if (field == "model") {
        b.remote.model_name = value;
      } else if (field == "timeout_ms") {
        b.remote.timeout = std::chrono::milliseconds(to_size(lineno, key, value));
      } else if (field == "max_batch") {
        b.remote.max_batch = to_size(lineno, key, value);
      } else if (field == "retries") {
        b.remote.max_retries = static_cast<int>(to_size(lineno, key, value));
      } else if (field == "backoff_ms") {
        b.remote.initial_backoff = std::chrono::milliseconds(to_size(lineno, key, value));
      } else if (field == "vocab_size") {
        b.remote.vocab_size = to_size(lineno, key, value);
      } else if (field == "window") {
        b.remote.window = to_size(lineno, key, value);
      } else if (field == "auth_token") {
        b.remote.auth_token = value;
      } else {
        fail(lineno, "unknown backend field '" + field + "'");
      }
    } else {
      fail(lineno, "unknown key '" + key + "'");
    }
  }
  if (!saw_version) throw Error(Errc::config_error, "config error: missing 'version = 1'");
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::config_error, "config error: cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  auto cfg = parse(ss.str(), path.parent_path());
  return cfg;
}

void RunConfig::validate() const {
  if (backends.empty()) throw Error(Errc::config_error, "config error: no backends registered");
  if (default_backend.empty() && backends.size() > 1) {
    throw Error(Errc::config_error, "config error: several backends registered but no default_backend");
  }
  if (!default_backend.empty() && !backends.count(default_backend)) {
    throw Error(Errc::config_error, "config error: default_backend '" + default_backend + "' is not registered");
  }
  for (const auto& [name, b] : backends) {
    if (name == "human") throw Error(Errc::config_error, "config error: backend name 'human' is reserved");
    if (b.kind == BackendSpec::Kind::ngram) {
      if (b.ngram_path.empty()) throw Error(Errc::config_error, "config error: backend '" + name + "' has no path");
      if (!std::filesystem::exists(b.ngram_path)) {
        throw Error(Errc::config_error, "config error: model file " + b.ngram_path.string() + " does not exist");
      }
    } else {
      try {
        b.remote.validate();
      } catch (const Error& e) {
        throw Error(Errc::config_error, "config error: backend '" + name + "': " + e.what());
      }
    }
  }
  if (profile && !std::filesystem::exists(*profile)) {
    throw Error(Errc::config_error, "config error: profile " + profile->string() + " does not exist");
  }
}

BackendRegistry RunConfig::instantiate(const std::vector<std::string>& names) const {
  BackendRegistry reg;
  for (const auto& name : names) {
    if (!backends.count(name)) throw Error(Errc::backend_not_registered, "backend not registered: '" + name + "'");
  }
  for (const auto& [name, b] : backends) {
    if (!names.empty() && std::find(names.begin(), names.end(), name) == names.end()) continue;
    if (b.kind == BackendSpec::Kind::ngram) {
      reg.add(name, std::make_shared<NgramModel>(NgramModel::load(b.ngram_path)));
    } else {
      reg.add(name, std::make_shared<RemoteModel>(b.remote));
    }
  }
  return reg;
}

}  // namespace spot

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "spot/corpus.hpp"
#include "spot/remote.hpp"

namespace spot {

struct BackendSpec {
  enum class Kind { ngram, remote };
  Kind kind = Kind::ngram;
  std::filesystem::path ngram_path;  // Kind::ngram
  RemoteBackendConfig remote;        // Kind::remote
};

/// Settings shared by every CLI verb.
///
/// File format (version 1): UTF-8 lines of `key = value`; `#` starts a
/// comment; blank lines are ignored. Recognised keys:
///
///   version = 1                       (required)
///   default_backend = <name>
///   profile = <path>
///   context_len = <int>               (default 24)
///   completion_len = <int>            (default 40)
///   out = <dir>                       (default "spot-out")
///   verbosity = trace|debug|info|warn|error|off   (default warn)
///   backend.<name>.type = ngram|remote
///   backend.<name>.path = <model file>               (ngram)
///   backend.<name>.endpoint = http://host:port       (remote)
///   backend.<name>.model = <served model name>       (remote)
///   backend.<name>.timeout_ms / max_batch / retries / backoff_ms
///   backend.<name>.vocab_size / window / auth_token  (remote, optional)
///
/// Relative paths resolve against the directory of the config file.
struct RunConfig {
  std::map<std::string, BackendSpec> backends;
  std::string default_backend;
  std::optional<std::filesystem::path> profile;
  std::size_t context_len = 24;
  std::size_t completion_len = 40;
  std::filesystem::path out = "spot-out";
  std::string verbosity = "warn";

  static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  /// Exactly one default backend (implicit when only one is registered) and
  /// every referenced model file exists. Throws Errc::config_error.
  void validate() const;

  /// Loads the named backends (all when `names` is empty) into a registry,
  /// keyed by config name. Remote backends may contact their server here.
  BackendRegistry instantiate(const std::vector<std::string>& names = {}) const;
};

}  // namespace spot

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spot {

enum class Errc {
  empty_completion,
  rank_out_of_range,
  invalid_score,
  token_out_of_range,
  invalid_length,
  invalid_argument,
  empty_training_corpus,
  backend_unavailable,
  backend_error,
  protocol_violation,
  profile_evaluator_mismatch,
  invalid_percentile,
  invalid_bandwidth,
  corpus_not_found,
  backend_not_registered,
  no_pairs,
  partial_result,
  io_error,
  format_error,
  config_error,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library. The message always starts with the
/// short error phrase ("empty completion", "protocol violation", ...) so
/// callers and shell users can match on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace spot

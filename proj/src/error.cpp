#include "spot/error.hpp"

namespace spot {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::empty_completion: return "empty_completion";
    case Errc::rank_out_of_range: return "rank_out_of_range";
    case Errc::invalid_score: return "invalid_score";
    case Errc::token_out_of_range: return "token_out_of_range";
    case Errc::invalid_length: return "invalid_length";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::empty_training_corpus: return "empty_training_corpus";
    case Errc::backend_unavailable: return "backend_unavailable";
    case Errc::backend_error: return "backend_error";
    case Errc::protocol_violation: return "protocol_violation";
    case Errc::profile_evaluator_mismatch: return "profile_evaluator_mismatch";
    case Errc::invalid_percentile: return "invalid_percentile";
    case Errc::invalid_bandwidth: return "invalid_bandwidth";
    case Errc::corpus_not_found: return "corpus_not_found";
    case Errc::backend_not_registered: return "backend_not_registered";
    case Errc::no_pairs: return "no_pairs";
    case Errc::partial_result: return "partial_result";
    case Errc::io_error: return "io_error";
    case Errc::format_error: return "format_error";
    case Errc::config_error: return "config_error";
  }
  return "unknown";
}

}  // namespace spot

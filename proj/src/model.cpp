#include "spot/model.hpp"

#include <algorithm>
#include <string>

#include "spot/error.hpp"

namespace spot {

void check_token_range(const ScoringModel& model, std::span<const TokenId> tokens) {
  const std::size_t v = model.vocab_size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= v) {
      throw Error(Errc::token_out_of_range, "token out of vocabulary range: id " + std::to_string(tokens[i]) +
                                                " at position " + std::to_string(i) + " (vocab size " +
                                                std::to_string(v) + ", model " + model.model_id() + ")");
    }
  }
}

RankVector ranks_for(const ScoringModel& model, std::span<const TokenId> tokens, std::size_t context_len) {
  if (context_len > tokens.size()) {
    throw Error(Errc::invalid_argument, "invalid sequence: context_len exceeds sequence length");
  }
  if (context_len == tokens.size()) throw Error(Errc::empty_completion, "empty completion");
  check_token_range(model, tokens);

  const std::size_t window = model.window();
  if (window < 2) throw Error(Errc::invalid_argument, "model window must be at least 2");

  // Drop the oldest context tokens so at most window-1 of them condition the
  // first completion token.
  const std::size_t start = context_len > window - 1 ? context_len - (window - 1) : 0;
  const auto kept = tokens.subspan(start);
  const std::size_t first = context_len - start;

  RankVector out;
  out.vocab_size = model.vocab_size();
  out.model_id = model.model_id();
  out.ranks.reserve(tokens.size() - context_len);

  for (std::size_t chunk = 0; chunk < kept.size(); chunk += window) {
    const std::size_t len = std::min(window, kept.size() - chunk);
    if (chunk + len <= first) continue;  // context-only chunk
    const std::size_t local_first = first > chunk ? first - chunk : 0;
    std::vector<Rank> part;
    try {
      part = model.evaluate(kept.subspan(chunk, len), local_first);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (scoring positions " +
                                std::to_string(start + chunk + local_first) + ".." +
                                std::to_string(start + chunk + len - 1) + ")");
    }
    if (part.size() != len - local_first) {
      throw Error(Errc::protocol_violation, "protocol violation: backend returned " + std::to_string(part.size()) +
                                                " ranks for " + std::to_string(len - local_first) + " positions");
    }
    out.ranks.insert(out.ranks.end(), part.begin(), part.end());
  }
  out.validate();
  return out;
}

std::vector<TokenId> greedy_generate(const ScoringModel& model, std::span<const TokenId> context, std::size_t s) {
  if (s < 1) throw Error(Errc::invalid_length, "invalid length: s must be at least 1");
  if (context.empty()) throw Error(Errc::invalid_argument, "invalid argument: greedy generation needs a context");
  check_token_range(model, context);

  const std::size_t history = model.window() - 1;
  std::vector<TokenId> seq(context.begin(), context.end());
  seq.reserve(context.size() + s);
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t from = seq.size() > history ? seq.size() - history : 0;
    const TokenId next = model.predict_next(std::span<const TokenId>(seq).subspan(from));
    if (next >= model.vocab_size()) {
      throw Error(Errc::protocol_violation, "protocol violation: predicted token " + std::to_string(next) +
                                                " outside vocabulary of size " + std::to_string(model.vocab_size()));
    }
    seq.push_back(next);
  }
  return {seq.begin() + static_cast<std::ptrdiff_t>(context.size()), seq.end()};
}

std::vector<Rank> CountingModel::evaluate(std::span<const TokenId> tokens, std::size_t first) const {
  ++evaluate_calls_;
  return inner_.evaluate(tokens, first);
}

TokenId CountingModel::predict_next(std::span<const TokenId> prefix) const {
  ++predict_calls_;
  return inner_.predict_next(prefix);
}

}  // namespace spot

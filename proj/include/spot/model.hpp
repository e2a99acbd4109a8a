#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spot/types.hpp"
#include "spot/vocabulary.hpp"

namespace spot {

/// A language model that can be queried for token ranks.
///
/// Implementations must be deterministic: the same tokens always produce the
/// same ranks and the same next-token prediction. All queries are const and
/// must be safe to call from several threads at once.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;

  virtual const std::string& model_id() const = 0;
  virtual std::size_t vocab_size() const = 0;
  /// Maximum number of tokens accepted by one evaluate() call.
  virtual std::size_t window() const = 0;

  /// One batched teacher-forced pass. For every position i in
  /// [first, tokens.size()) returns the rank of tokens[i] given tokens[0, i).
  /// Callers guarantee tokens.size() <= window() and valid ids.
  virtual std::vector<Rank> evaluate(std::span<const TokenId> tokens, std::size_t first) const = 0;

  /// One decoding step: the argmax next token after `prefix`, lowest id on
  /// ties. Callers guarantee prefix.size() < window().
  virtual TokenId predict_next(std::span<const TokenId> prefix) const = 0;

  /// String table of the model's token space, if it has one.
  virtual const Vocabulary* vocabulary() const { return nullptr; }
};

/// Ranks of every completion token of `tokens` (positions >= context_len).
///
/// A context longer than window()-1 keeps only its most recent window()-1
/// tokens. The remaining sequence is evaluated in ceil(len / window())
/// consecutive non-overlapping chunks, so an in-window sequence costs exactly
/// one evaluate() call.
RankVector ranks_for(const ScoringModel& model, std::span<const TokenId> tokens, std::size_t context_len);

/// Greedy decoding: s calls to predict_next, each conditioned on the context
/// plus everything generated so far (truncated to the last window()-1 tokens).
std::vector<TokenId> greedy_generate(const ScoringModel& model, std::span<const TokenId> context, std::size_t s);

/// Throws Errc::token_out_of_range for the first id >= model.vocab_size().
void check_token_range(const ScoringModel& model, std::span<const TokenId> tokens);

/// Forwarding decorator that counts evaluate() and predict_next() calls.
class CountingModel final : public ScoringModel {
 public:
  explicit CountingModel(const ScoringModel& inner) : inner_(inner) {}

  const std::string& model_id() const override { return inner_.model_id(); }
  std::size_t vocab_size() const override { return inner_.vocab_size(); }
  std::size_t window() const override { return inner_.window(); }
  std::vector<Rank> evaluate(std::span<const TokenId> tokens, std::size_t first) const override;
  TokenId predict_next(std::span<const TokenId> prefix) const override;
  const Vocabulary* vocabulary() const override { return inner_.vocabulary(); }

  std::size_t evaluate_calls() const noexcept { return evaluate_calls_.load(); }
  std::size_t predict_calls() const noexcept { return predict_calls_.load(); }
  void reset() noexcept {
    evaluate_calls_ = 0;
    predict_calls_ = 0;
  }

 private:
  const ScoringModel& inner_;
  mutable std::atomic<std::size_t> evaluate_calls_{0};
  mutable std::atomic<std::size_t> predict_calls_{0};
};

}  // namespace spot

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spot/model.hpp"
#include "spot/vocabulary.hpp"

namespace spot {

struct NgramOptions {
  int order = 3;
  double smoothing_k = 0.1;
  /// Interpolation weight per order, highest order first. Empty selects the
  /// defaults: 0.5/0.3/0.2 for order 3, otherwise weights proportional to k.
  std::vector<double> interpolation;
  std::size_t vocab_cap = 50000;
  std::size_t window = 4096;
  std::string model_id = "ngram";
};

std::vector<double> default_interpolation(int order);

/// Interpolated add-k n-gram model over a capped word vocabulary.
///
///   P(w | h) = sum_k lambda_k * (c_k(h_k, w) + K) / (c_k(h_k) + K * v)
///
/// where h_k is the last k-1 tokens of the history. Each component is a
/// proper distribution over all v ids, so the mixture is too. When the
/// history is shorter than k-1 tokens the order-k component falls back to
/// the longest order the history supports.
///
/// Immutable after training; every query is safe for concurrent readers.
class NgramModel final : public ScoringModel {
 public:
  /// Follower counts of one history, sorted by token id.
  struct Followers {
    std::uint64_t total = 0;
    std::vector<std::pair<TokenId, std::uint64_t>> counts;
  };

  /// Trains on documents of token strings. N-grams never span documents.
  static NgramModel train(std::span<const std::vector<std::string>> documents, const NgramOptions& options = {});

  /// Reads `path` (binary counts) and `path + ".vocab.json"`.
  static NgramModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const std::string& model_id() const override { return model_id_; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  std::size_t window() const override { return window_; }
  std::vector<Rank> evaluate(std::span<const TokenId> tokens, std::size_t first) const override;
  TokenId predict_next(std::span<const TokenId> prefix) const override;
  const Vocabulary* vocabulary() const override { return &vocab_; }

  /// Full conditional distribution over the vocabulary given `history`.
  std::vector<double> distribution(std::span<const TokenId> history) const;

  int order() const noexcept { return order_; }
  double smoothing_k() const noexcept { return smoothing_k_; }
  const std::vector<double>& interpolation() const noexcept { return weights_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }

  /// Counts for the order-k table (1 <= k <= order), or nullptr.
  const Followers* followers(int k, std::span<const TokenId> history) const;

  static std::filesystem::path sidecar_path(const std::filesystem::path& path);

 private:
  NgramModel() = default;

  using Table = std::unordered_map<std::string, Followers>;

  int order_ = 3;
  double smoothing_k_ = 0.1;
  std::vector<double> weights_;  // highest order first
  std::size_t window_ = 4096;
  std::string model_id_;
  Vocabulary vocab_;
  std::vector<Table> tables_;  // tables_[k-1] holds order-k counts keyed by packed history
};

/// Convenience: tokenizes texts with tokenize_words() and trains.
NgramModel train_ngram(std::span<const std::string> texts, const NgramOptions& options = {});

}  // namespace spot

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spot {

using TokenId = std::uint32_t;
using Rank = std::uint32_t;

enum class SourceKind { unknown, human, model };

struct SourceLabel {
  SourceKind kind = SourceKind::unknown;
  std::string model;  // set only for SourceKind::model

  static SourceLabel human() { return {SourceKind::human, {}}; }
  static SourceLabel generated_by(std::string name) { return {SourceKind::model, std::move(name)}; }

  friend bool operator==(const SourceLabel&, const SourceLabel&) = default;
};

/// Token ids with a context/completion split. Only the completion is scored.
/// Vocabulary bounds are checked by whichever model scores the sequence.
class TokenSequence {
 public:
  TokenSequence() = default;
  TokenSequence(std::vector<TokenId> tokens, std::size_t context_len, SourceLabel source = {});

  std::span<const TokenId> tokens() const noexcept { return tokens_; }
  std::span<const TokenId> context() const noexcept { return std::span(tokens_).first(context_len_); }
  std::span<const TokenId> completion() const noexcept { return std::span(tokens_).subspan(context_len_); }
  std::size_t context_len() const noexcept { return context_len_; }
  std::size_t completion_len() const noexcept { return tokens_.size() - context_len_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const SourceLabel& source() const noexcept { return source_; }

 private:
  std::vector<TokenId> tokens_;
  std::size_t context_len_ = 0;
  SourceLabel source_;
};

/// Ranks of the observed completion tokens under one scoring model.
/// rank = number of vocabulary entries scored strictly higher.
struct RankVector {
  std::vector<Rank> ranks;
  std::size_t vocab_size = 0;
  std::string model_id;

  /// Throws Errc::empty_completion or Errc::rank_out_of_range.
  void validate() const;
};

struct OriginalityReport {
  std::vector<double> per_token;
  double aggregate = 0.0;
  std::size_t vocab_size = 0;
  std::string model_id;
  std::size_t context_len = 0;
  std::string sequence_digest;
};

enum class Label { human, llm };

std::string_view label_name(Label label) noexcept;

enum class CalibrationMethod { sweep, percentile };

struct ThresholdProfile {
  std::string model_id;
  double rho = 0.0;
  CalibrationMethod method = CalibrationMethod::sweep;
  double percentile = 0.0;  // meaningful for CalibrationMethod::percentile
  std::size_t human_count = 0;
  std::size_t llm_count = 0;
  /// Balanced accuracy on the calibration data, when the method measures it.
  std::optional<double> balanced_accuracy;
  /// Set when the calibration data could not be separated at all.
  bool degenerate = false;
  std::optional<std::string> created_at;

  /// Throws Errc::invalid_argument unless rho is finite and positive.
  void validate() const;
};

struct Verdict {
  Label label = Label::llm;
  double score = 0.0;
  double rho = 0.0;
  double margin = 0.0;
};

}  // namespace spot

#include "spot/scoring.hpp"

#include <cmath>
#include <string>

#include "spot/digest.hpp"
#include "spot/error.hpp"

namespace spot {

TokenSequence::TokenSequence(std::vector<TokenId> tokens, std::size_t context_len, SourceLabel source)
    : tokens_(std::move(tokens)), context_len_(context_len), source_(std::move(source)) {
  if (context_len_ > tokens_.size()) {
    throw Error(Errc::invalid_argument, "invalid sequence: context_len " + std::to_string(context_len_) +
                                            " exceeds sequence length " + std::to_string(tokens_.size()));
  }
}

void RankVector::validate() const {
  if (ranks.empty()) throw Error(Errc::empty_completion, "empty completion");
  if (vocab_size == 0) throw Error(Errc::rank_out_of_range, "rank out of range: vocab_size is 0");
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] >= vocab_size) {
      throw Error(Errc::rank_out_of_range, "rank out of range: rank " + std::to_string(ranks[i]) + " at position " +
                                               std::to_string(i) + " with vocab_size " + std::to_string(vocab_size));
    }
  }
}

std::string_view label_name(Label label) noexcept { return label == Label::human ? "human" : "llm"; }

void ThresholdProfile::validate() const {
  if (!std::isfinite(rho) || rho <= 0.0) {
    throw Error(Errc::invalid_argument, "invalid profile: rho must be positive, got " + std::to_string(rho));
  }
}

Rank rank_of(std::span<const double> scores, TokenId target) {
  if (target >= scores.size()) {
    throw Error(Errc::token_out_of_range, "token out of vocabulary range: " + std::to_string(target));
  }
  const double pivot = scores[target];
  Rank above = 0;
  for (double s : scores) above += s > pivot ? 1 : 0;
  return above;
}

TokenId argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::invalid_argument, "argmax of empty distribution");
  TokenId best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = static_cast<TokenId>(i);
  }
  return best;
}

std::vector<double> per_token_scores(const RankVector& ranks) {
  ranks.validate();
  const double v = static_cast<double>(ranks.vocab_size);
  std::vector<double> out;
  out.reserve(ranks.ranks.size());
  for (Rank r : ranks.ranks) out.push_back(static_cast<double>(r) / v);
  return out;
}

double aggregate_score(std::span<const double> per_token) {
  if (per_token.empty()) throw Error(Errc::empty_completion, "empty completion");
  // Neumaier summation
  double sum = 0.0;
  double carry = 0.0;
  for (double x : per_token) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  // scale in extended precision so the result is within one rounding step
  const long double total = static_cast<long double>(sum) + static_cast<long double>(carry);
  return static_cast<double>(static_cast<long double>(kAggregateScale) * total /
                             static_cast<long double>(per_token.size()));
}

Verdict classify(double score, const ThresholdProfile& profile) {
  if (!std::isfinite(score) || score < 0.0) {
    throw Error(Errc::invalid_score, "invalid score: " + std::to_string(score));
  }
  profile.validate();
  Verdict v;
  v.score = score;
  v.rho = profile.rho;
  v.margin = score - profile.rho;
  v.label = score > profile.rho ? Label::human : Label::llm;
  return v;
}

std::string sequence_digest(std::span<const TokenId> tokens, std::size_t context_len) {
  Fnv1a h;
  h.update_u64(context_len);
  h.update_u64(tokens.size());
  for (TokenId t : tokens) h.update_u32(t);
  return h.hex();
}

OriginalityReport score_sequence(const TokenSequence& seq, const ScoringModel& model) {
  if (seq.completion_len() == 0) throw Error(Errc::empty_completion, "empty completion");
  const RankVector ranks = ranks_for(model, seq.tokens(), seq.context_len());

  OriginalityReport report;
  report.per_token = per_token_scores(ranks);
  report.aggregate = aggregate_score(report.per_token);
  report.vocab_size = ranks.vocab_size;
  report.model_id = ranks.model_id;
  report.context_len = seq.context_len();
  report.sequence_digest = sequence_digest(seq.tokens(), seq.context_len());
  return report;
}

}  // namespace spot

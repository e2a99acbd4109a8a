#pragma once

#include <span>
#include <string>
#include <vector>

#include "spot/model.hpp"
#include "spot/types.hpp"

namespace spot {

/// Originality normalization constant: aggregates live in [0, 10).
inline constexpr double kAggregateScale = 10.0;

/// Count of entries with a strictly greater score than scores[target].
/// Equal scores never push the target down, so an argmax token has rank 0.
Rank rank_of(std::span<const double> scores, TokenId target);

/// Lowest id among the maximal entries.
TokenId argmax_lowest(std::span<const double> scores);

/// rank / vocab_size for every completion position.
std::vector<double> per_token_scores(const RankVector& ranks);

/// (10 / s) * sum(per_token), summed with Neumaier compensation.
double aggregate_score(std::span<const double> per_token);

/// human iff score > rho. Ties go to llm.
Verdict classify(double score, const ThresholdProfile& profile);

/// Teacher-forced scoring of the completion of `seq` under `model`.
OriginalityReport score_sequence(const TokenSequence& seq, const ScoringModel& model);

/// Stable digest of a token sequence and its split, for audit trails.
std::string sequence_digest(std::span<const TokenId> tokens, std::size_t context_len);

}  // namespace spot

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spot/types.hpp"

namespace spot {

/// Lowercased word tokenizer: runs of non-space, non-punctuation bytes form
/// words and every ASCII punctuation character is a token of its own.
std::vector<std::string> tokenize_words(std::string_view text);

/// Bidirectional token-string <-> id table. Id 0 is always the UNK token and
/// absorbs every string not in the table.
class Vocabulary {
 public:
  static constexpr TokenId unk_id = 0;
  static constexpr std::string_view unk_token = "<unk>";

  Vocabulary();
  /// `words` excludes UNK; they receive ids 1..words.size() in order.
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id_of(std::string_view word) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(std::span<const std::string> words) const;
  std::vector<TokenId> encode_text(std::string_view text) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;
  std::string decode_text(std::span<const TokenId> ids) const;

  /// Words in id order, UNK first.
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  /// Content digest; equal digests mean identical id assignment.
  const std::string& digest() const noexcept { return digest_; }

 private:
  void rebuild_index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::string digest_;
};

}  // namespace spot

#include "spot/vocabulary.hpp"

#include <cctype>
#include <string>

#include "spot/digest.hpp"
#include "spot/error.hpp"

namespace spot {

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() : tokens_{std::string(unk_token)} { rebuild_index(); }

Vocabulary::Vocabulary(std::vector<std::string> words) {
  tokens_.reserve(words.size() + 1);
  tokens_.emplace_back(unk_token);
  for (auto& w : words) tokens_.push_back(std::move(w));
  rebuild_index();
}

void Vocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(tokens_.size());
  Fnv1a h;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i != unk_id && !index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(Errc::format_error, "format error: duplicate vocabulary entry '" + tokens_[i] + "'");
    }
    h.update_u64(tokens_[i].size());
    h.update(tokens_[i]);
  }
  digest_ = h.hex();
}

TokenId Vocabulary::id_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? unk_id : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw Error(Errc::token_out_of_range, "token out of vocabulary range: id " + std::to_string(id));
  }
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> words) const {
  std::vector<TokenId> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id_of(w));
  return ids;
}

std::vector<TokenId> Vocabulary::encode_text(std::string_view text) const {
  const auto words = tokenize_words(text);
  return encode(words);
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (TokenId id : ids) words.push_back(token(id));
  return words;
}

std::string Vocabulary::decode_text(std::span<const TokenId> ids) const {
  std::string text;
  for (TokenId id : ids) {
    if (!text.empty()) text.push_back(' ');
    text += token(id);
  }
  return text;
}

}  // namespace spot

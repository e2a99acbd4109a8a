#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spot/model.hpp"

namespace spot {

enum class CorpusFormat { plain_text, jsonl };

struct CorpusSpec {
  std::filesystem::path path;  // a file, or a directory walked recursively
  CorpusFormat format = CorpusFormat::plain_text;
  std::string field = "text";  // jsonl text field
  /// Documents with fewer word tokens (tokenize_words) are dropped.
  std::size_t min_tokens = 0;
  std::optional<std::size_t> limit;
  std::uint64_t seed = 0;
  /// When set, each document is kept with this probability, drawn from a
  /// generator seeded with `seed`.
  std::optional<double> sample_fraction;
};

/// Plain-text files are one document each; JSONL files yield one document per
/// row.
struct Document {
  std::string id;  // "<relative path>" or "<relative path>:<line>"
  std::string text;
};

struct IngestReport {
  std::size_t files = 0;
  std::size_t documents = 0;  // emitted
  std::size_t malformed_lines = 0;
  std::size_t invalid_utf8 = 0;
  std::size_t too_short = 0;
  std::size_t sampled_out = 0;
};

struct IngestResult {
  std::vector<Document> documents;
  IngestReport report;
};

/// Deterministic: files in lexicographic path order, rows in file order.
/// Malformed JSONL rows and non-UTF-8 documents are skipped and counted.
IngestResult ingest(const CorpusSpec& spec);

bool valid_utf8(std::string_view text) noexcept;

/// Named scoring backends shared by the harness and the evaluation matrix.
class BackendRegistry {
 public:
  void add(const std::string& name, std::shared_ptr<const ScoringModel> model);
  /// Throws Errc::backend_not_registered.
  const ScoringModel& get(const std::string& name) const;
  std::shared_ptr<const ScoringModel> shared(const std::string& name) const;
  bool contains(const std::string& name) const { return models_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<const ScoringModel>> models_;
};

/// Maps token ids between two token spaces through their strings. Identity
/// when the vocabularies are identical or either side has none. UNK maps to
/// UNK, and out-of-vocabulary words become the target's UNK.
std::vector<TokenId> convert_tokens(std::span<const TokenId> ids, const Vocabulary* from, const Vocabulary* to);

/// One document's worth of evaluation material. `context` and `human` are in
/// the pivot backend's token space; each model completion is in its own
/// generator's token space, generated greedily from the converted context.
struct EvalPair {
  std::string doc_id;
  std::vector<TokenId> context;
  std::vector<TokenId> human;
  std::map<std::string, std::vector<TokenId>> completions;
};

struct PairingReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t skipped_short = 0;
  std::size_t skipped_duplicate = 0;
  std::size_t skipped() const noexcept { return skipped_short + skipped_duplicate; }
};

struct PairSet {
  std::string pivot;
  std::vector<std::string> model_ids;
  std::size_t context_len = 0;
  std::size_t completion_len = 0;
  std::vector<EvalPair> pairs;
  PairingReport report;

  /// Digest of the JSONL archive bytes.
  std::string digest() const;
};

struct PairingOptions {
  /// Backend whose tokenizer defines the shared token space; defaults to the
  /// first model id with a vocabulary.
  std::string pivot;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

/// For every document with at least context_len + completion_len tokens:
/// context = first context_len tokens, human = the next completion_len
/// tokens, and one greedy completion per model. Duplicate texts are skipped.
PairSet make_pairs(const std::vector<Document>& docs, const std::vector<std::string>& model_ids,
                   std::size_t context_len, std::size_t completion_len, const BackendRegistry& backends,
                   const PairingOptions& options = {});

/// JSONL archive: one {"context","human","completions","meta"} record per pair.
void write_pairs(std::ostream& os, const PairSet& pairs);
PairSet read_pairs(std::istream& is);

}  // namespace spot

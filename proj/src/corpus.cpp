#include "spot/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "spot/digest.hpp"
#include "spot/error.hpp"

namespace spot {

namespace fs = std::filesystem;

bool valid_utf8(std::string_view text) noexcept {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error(Errc::corpus_not_found, "corpus not found: cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<fs::path> corpus_files(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(root, ec)) throw Error(Errc::corpus_not_found, "corpus not found: " + root.string());
  std::vector<fs::path> files;
  if (fs::is_directory(root, ec)) {
    for (const auto& entry : fs::recursive_directory_iterator(root, ec)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    if (ec) throw Error(Errc::corpus_not_found, "corpus not found: cannot list " + root.string());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  } else {
    files.push_back(root);
  }
  return files;
}

}  // namespace

IngestResult ingest(const CorpusSpec& spec) {
  if (spec.sample_fraction && !(*spec.sample_fraction > 0.0 && *spec.sample_fraction <= 1.0)) {
    throw Error(Errc::invalid_argument, "invalid argument: sample_fraction must lie in (0, 1]");
  }
  IngestResult result;
  auto& report = result.report;
  std::mt19937_64 rng(spec.seed);
  const bool is_dir = fs::is_directory(spec.path);

  auto consider = [&](std::string id, std::string text) {
    if (spec.limit && result.documents.size() >= *spec.limit) return;
    if (!valid_utf8(text)) {
      ++report.invalid_utf8;
      spdlog::warn("skipping {}: invalid UTF-8", id);
      return;
    }
    if (spec.min_tokens > 0 && tokenize_words(text).size() < spec.min_tokens) {
      ++report.too_short;
      return;
    }
    if (spec.sample_fraction) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u >= *spec.sample_fraction) {
        ++report.sampled_out;
        return;
      }
    }
    result.documents.push_back({std::move(id), std::move(text)});
  };

  for (const auto& file : corpus_files(spec.path)) {
    if (spec.limit && result.documents.size() >= *spec.limit) break;
    ++report.files;
    const std::string rel = is_dir ? fs::relative(file, spec.path).generic_string() : file.filename().string();
    std::string content = read_file(file);
    if (spec.format == CorpusFormat::plain_text) {
      consider(rel, std::move(content));
      continue;
    }
    std::istringstream lines(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (!valid_utf8(line)) {
        ++report.invalid_utf8;
        spdlog::warn("{}:{}: invalid UTF-8 row skipped", rel, lineno);
        continue;
      }
      nlohmann::json row;
      try {
        row = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        ++report.malformed_lines;
        spdlog::warn("{}:{}: malformed JSONL row skipped", rel, lineno);
        continue;
      }
      if (!row.is_object() || !row.contains(spec.field) || !row[spec.field].is_string()) {
        ++report.malformed_lines;
        spdlog::warn("{}:{}: row has no string field '{}'", rel, lineno, spec.field);
        continue;
      }
      consider(rel + ":" + std::to_string(lineno), row[spec.field].get<std::string>());
    }
  }
  report.documents = result.documents.size();
  return result;
}

void BackendRegistry::add(const std::string& name, std::shared_ptr<const ScoringModel> model) {
  if (name.empty() || name == "human") {
    throw Error(Errc::invalid_argument, "invalid argument: backend name '" + name + "' is reserved");
  }
  if (!model) throw Error(Errc::invalid_argument, "invalid argument: null backend");
  models_[name] = std::move(model);
}

const ScoringModel& BackendRegistry::get(const std::string& name) const { return *shared(name); }

std::shared_ptr<const ScoringModel> BackendRegistry::shared(const std::string& name) const {
  auto it = models_.find(name);
  if (it == models_.end()) throw Error(Errc::backend_not_registered, "backend not registered: '" + name + "'");
  return it->second;
}

std::vector<std::string> BackendRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : models_) out.push_back(name);
  return out;
}

std::vector<TokenId> convert_tokens(std::span<const TokenId> ids, const Vocabulary* from, const Vocabulary* to) {
  if (!from || !to || from == to || from->digest() == to->digest()) return {ids.begin(), ids.end()};
  std::vector<TokenId> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(id == Vocabulary::unk_id ? Vocabulary::unk_id : to->id_of(from->token(id)));
  return out;
}

PairSet make_pairs(const std::vector<Document>& docs, const std::vector<std::string>& model_ids,
                   std::size_t context_len, std::size_t completion_len, const BackendRegistry& backends,
                   const PairingOptions& options) {
  if (context_len < 1) throw Error(Errc::invalid_length, "invalid length: context_len must be at least 1");
  if (completion_len < 1) throw Error(Errc::invalid_length, "invalid length: completion_len must be at least 1");
  std::set<std::string> seen_ids;
  for (const auto& m : model_ids) {
    backends.get(m);
    if (!seen_ids.insert(m).second) throw Error(Errc::invalid_argument, "invalid argument: duplicate model '" + m + "'");
  }

  std::string pivot = options.pivot;
  if (pivot.empty()) {
    for (const auto& m : model_ids) {
      if (backends.get(m).vocabulary()) {
        pivot = m;
        break;
      }
    }
  }
  if (pivot.empty()) {
    throw Error(Errc::invalid_argument, "invalid argument: no backend with a tokenizer to act as pivot");
  }
  const Vocabulary* pivot_vocab = backends.get(pivot).vocabulary();
  if (!pivot_vocab) throw Error(Errc::invalid_argument, "invalid argument: pivot backend '" + pivot + "' cannot tokenize");

  for (const auto& m : model_ids) {
    const auto* v = backends.get(m).vocabulary();
    if (v && v->digest() != pivot_vocab->digest()) {
      spdlog::info("contexts for '{}' are re-tokenized from the '{}' token space", m, pivot);
    }
  }

  PairSet out;
  out.pivot = pivot;
  out.model_ids = model_ids;
  out.context_len = context_len;
  out.completion_len = completion_len;
  out.report.total = docs.size();

  const std::size_t need = context_len + completion_len;
  std::unordered_set<std::uint64_t> seen;
  for (const auto& doc : docs) {
    Fnv1a h;
    h.update(doc.text);
    if (!seen.insert(h.value()).second) {
      ++out.report.skipped_duplicate;
      continue;
    }
    auto ids = pivot_vocab->encode_text(doc.text);
    if (ids.size() < need) {
      ++out.report.skipped_short;
      continue;
    }
    EvalPair p;
    p.doc_id = doc.id;
    p.context.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(context_len));
    p.human.assign(ids.begin() + static_cast<std::ptrdiff_t>(context_len),
                   ids.begin() + static_cast<std::ptrdiff_t>(need));
    out.pairs.push_back(std::move(p));
  }
  out.report.kept = out.pairs.size();

  detail::parallel_for(out.pairs.size(), options.threads, [&](std::size_t i) {
    auto& pair = out.pairs[i];
    for (const auto& m : model_ids) {
      const auto& model = backends.get(m);
      const auto ctx = convert_tokens(pair.context, pivot_vocab, model.vocabulary());
      pair.completions[m] = greedy_generate(model, ctx, completion_len);
    }
  });
  return out;
}

void write_pairs(std::ostream& os, const PairSet& set) {
  for (const auto& p : set.pairs) {
    nlohmann::json rec;
    rec["context"] = p.context;
    rec["human"] = p.human;
    rec["completions"] = p.completions;
    rec["meta"] = {{"doc_id", p.doc_id},
                   {"pivot", set.pivot},
                   {"models", set.model_ids},
                   {"context_len", set.context_len},
                   {"completion_len", set.completion_len}};
    os << rec.dump() << '\n';
  }
}

PairSet read_pairs(std::istream& is) {
  PairSet set;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto bad = [&](const std::string& what) {
      return Error(Errc::format_error, "format error: pair archive line " + std::to_string(lineno) + ": " + what);
    };
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto& meta = rec.at("meta");
      EvalPair p;
      p.doc_id = meta.value("doc_id", "");
      p.context = rec.at("context").get<std::vector<TokenId>>();
      p.human = rec.at("human").get<std::vector<TokenId>>();
      p.completions = rec.at("completions").get<std::map<std::string, std::vector<TokenId>>>();
      if (first) {
        set.pivot = meta.at("pivot").get<std::string>();
        set.model_ids = meta.at("models").get<std::vector<std::string>>();
        set.context_len = meta.at("context_len").get<std::size_t>();
        set.completion_len = meta.at("completion_len").get<std::size_t>();
        first = false;
      } else if (meta.at("context_len").get<std::size_t>() != set.context_len ||
                 meta.at("completion_len").get<std::size_t>() != set.completion_len) {
        throw bad("inconsistent lengths across records");
      }
      if (p.context.size() != set.context_len || p.human.size() != set.completion_len) {
        throw bad("context or human completion length does not match meta");
      }
      for (const auto& m : set.model_ids) {
        auto it = p.completions.find(m);
        if (it == p.completions.end() || it->second.size() != set.completion_len) {
          throw bad("missing or mis-sized completion for '" + m + "'");
        }
      }
      set.pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw bad(e.what());
    }
  }
  set.report.total = set.report.kept = set.pairs.size();
  return set;
}

std::string PairSet::digest() const {
  std::ostringstream os;
  write_pairs(os, *this);
  return digest_hex(os.str());
}

}  // namespace spot

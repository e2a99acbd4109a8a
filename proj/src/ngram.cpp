#include "spot/ngram.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "spot/error.hpp"
#include "spot/scoring.hpp"

namespace spot {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'O', 'T', 'N', 'G', 'M', '1'};

std::string pack_history(std::span<const TokenId> ids) {
  std::string key(ids.size() * 4, '\0');
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (int b = 0; b < 4; ++b) key[i * 4 + b] = static_cast<char>((ids[i] >> (8 * b)) & 0xff);
  }
  return key;
}

void validate_options(const NgramOptions& o, const std::vector<double>& weights) {
  if (o.order < 2) throw Error(Errc::invalid_argument, "invalid argument: n-gram order must be at least 2");
  if (o.vocab_cap < 2) throw Error(Errc::invalid_argument, "invalid argument: vocab_cap must be at least 2");
  if (!(o.smoothing_k > 0.0) || !std::isfinite(o.smoothing_k)) {
    throw Error(Errc::invalid_argument, "invalid argument: smoothing_k must be positive");
  }
  if (o.window < 2) throw Error(Errc::invalid_argument, "invalid argument: window must be at least 2");
  if (weights.size() != static_cast<std::size_t>(o.order)) {
    throw Error(Errc::invalid_argument, "invalid argument: need one interpolation weight per order");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(Errc::invalid_argument, "invalid argument: interpolation weights must be positive");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw Error(Errc::invalid_argument, "invalid argument: interpolation weights must sum to 1");
  }
}

// Little-endian stream helpers.
class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void raw(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  void raw(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw Error(Errc::format_error, "format error: truncated n-gram model file");
    }
  }
  std::uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    raw(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::istream& is_;
};

}  // namespace

std::vector<double> default_interpolation(int order) {
  if (order == 3) return {0.5, 0.3, 0.2};
  std::vector<double> w;
  const double total = order * (order + 1) / 2.0;
  for (int k = order; k >= 1; --k) w.push_back(k / total);
  return w;
}

NgramModel NgramModel::train(std::span<const std::vector<std::string>> documents, const NgramOptions& options) {
  const auto weights = options.interpolation.empty() ? default_interpolation(options.order) : options.interpolation;
  validate_options(options, weights);

  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& doc : documents) {
    for (const auto& w : doc) ++freq[w];
  }
  if (freq.empty()) throw Error(Errc::empty_training_corpus, "empty training corpus");

  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > options.vocab_cap) ranked.resize(options.vocab_cap);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, _] : ranked) words.push_back(w);

  NgramModel m;
  m.order_ = options.order;
  m.smoothing_k_ = options.smoothing_k;
  m.weights_ = weights;
  m.window_ = options.window;
  m.model_id_ = options.model_id;
  m.vocab_ = Vocabulary(std::move(words));

  std::vector<std::unordered_map<std::string, std::map<TokenId, std::uint64_t>>> raw(m.order_);
  for (const auto& doc : documents) {
    const auto ids = m.vocab_.encode(doc);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (int k = 1; k <= m.order_; ++k) {
        if (i + 1 < static_cast<std::size_t>(k)) break;
        const auto hist = std::span<const TokenId>(ids).subspan(i + 1 - k, k - 1);
        ++raw[k - 1][pack_history(hist)][ids[i]];
      }
    }
  }

  m.tables_.resize(m.order_);
  for (int k = 0; k < m.order_; ++k) {
    auto& table = m.tables_[k];
    table.reserve(raw[k].size());
    for (auto& [key, counts] : raw[k]) {
      Followers f;
      f.counts.assign(counts.begin(), counts.end());
      for (const auto& [_, c] : f.counts) f.total += c;
      table.emplace(key, std::move(f));
    }
  }
  return m;
}

const NgramModel::Followers* NgramModel::followers(int k, std::span<const TokenId> history) const {
  if (k < 1 || k > order_ || history.size() != static_cast<std::size_t>(k - 1)) return nullptr;
  const auto& table = tables_[k - 1];
  auto it = table.find(pack_history(history));
  return it == table.end() ? nullptr : &it->second;
}

std::vector<double> NgramModel::distribution(std::span<const TokenId> history) const {
  const std::size_t v = vocab_.size();
  const double kv = smoothing_k_ * static_cast<double>(v);
  std::vector<double> dist(v, 0.0);
  double base = 0.0;
  for (int k = order_; k >= 1; --k) {
    const double lambda = weights_[order_ - k];
    const int eff = static_cast<int>(std::min<std::size_t>(k, history.size() + 1));
    const auto* f = followers(eff, history.last(eff - 1));
    const double denom = static_cast<double>(f ? f->total : 0) + kv;
    base += lambda * smoothing_k_ / denom;
    if (f) {
      for (const auto& [w, c] : f->counts) dist[w] += lambda * static_cast<double>(c) / denom;
    }
  }
  for (double& p : dist) p += base;
  return dist;
}

std::vector<Rank> NgramModel::evaluate(std::span<const TokenId> tokens, std::size_t first) const {
  const std::size_t hist_len = static_cast<std::size_t>(order_ - 1);
  std::vector<Rank> ranks;
  ranks.reserve(tokens.size() > first ? tokens.size() - first : 0);
  for (std::size_t i = first; i < tokens.size(); ++i) {
    const std::size_t from = i > hist_len ? i - hist_len : 0;
    const auto dist = distribution(tokens.subspan(from, i - from));
    ranks.push_back(rank_of(dist, tokens[i]));
  }
  return ranks;
}

TokenId NgramModel::predict_next(std::span<const TokenId> prefix) const {
  const std::size_t hist_len = static_cast<std::size_t>(order_ - 1);
  const auto hist = prefix.size() > hist_len ? prefix.last(hist_len) : prefix;
  return argmax_lowest(distribution(hist));
}

std::filesystem::path NgramModel::sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".vocab.json";
  return p;
}

// Binary layout (all integers little-endian):
//   "SPOTNGM1"
//   u32 order, u32 reserved (0)
//   f64 smoothing_k, f64 weight[order] (highest order first)
//   u64 vocab_size, u64 window
//   u32 id_len, id bytes
//   for k = 1..order:
//     u64 history_count
//     per history (ascending packed-key order):
//       u32 id[k-1], u64 total, u32 follower_count, {u32 id, u64 count}[...]
void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "io error: cannot write " + path.string());
  Writer w(os);
  w.raw(kMagic, sizeof kMagic);
  w.u32(static_cast<std::uint32_t>(order_));
  w.u32(0);
  w.f64(smoothing_k_);
  for (double x : weights_) w.f64(x);
  w.u64(vocab_.size());
  w.u64(window_);
  w.u32(static_cast<std::uint32_t>(model_id_.size()));
  w.raw(model_id_.data(), model_id_.size());

  for (int k = 1; k <= order_; ++k) {
    const auto& table = tables_[k - 1];
    std::vector<const std::pair<const std::string, Followers>*> entries;
    entries.reserve(table.size());
    for (const auto& e : table) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
    w.u64(entries.size());
    for (const auto* e : entries) {
      w.raw(e->first.data(), e->first.size());
      w.u64(e->second.total);
      w.u32(static_cast<std::uint32_t>(e->second.counts.size()));
      for (const auto& [id, c] : e->second.counts) {
        w.u32(id);
        w.u64(c);
      }
    }
  }
  if (!os) throw Error(Errc::io_error, "io error: failed writing " + path.string());

  nlohmann::json side = {
      {"format", "spot-ngram-vocab"},
      {"version", 1},
      {"unk_id", Vocabulary::unk_id},
      {"tokens", vocab_.tokens()},
  };
  std::ofstream vs(sidecar_path(path), std::ios::trunc);
  if (!vs) throw Error(Errc::io_error, "io error: cannot write " + sidecar_path(path).string());
  vs << side.dump() << '\n';
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io_error, "io error: cannot open n-gram model " + path.string());
  Reader r(is);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(Errc::format_error, "format error: " + path.string() + " is not a SPOTNGM1 model");
  }

  NgramModel m;
  m.order_ = static_cast<int>(r.u32());
  if (m.order_ < 2 || m.order_ > 16) throw Error(Errc::format_error, "format error: bad n-gram order");
  (void)r.u32();
  m.smoothing_k_ = r.f64();
  for (int k = 0; k < m.order_; ++k) m.weights_.push_back(r.f64());
  const std::uint64_t vocab_size = r.u64();
  m.window_ = r.u64();
  const std::uint32_t id_len = r.u32();
  if (id_len > 4096) throw Error(Errc::format_error, "format error: bad model id length");
  m.model_id_.resize(id_len);
  r.raw(m.model_id_.data(), id_len);

  m.tables_.resize(m.order_);
  for (int k = 1; k <= m.order_; ++k) {
    const std::uint64_t n = r.u64();
    auto& table = m.tables_[k - 1];
    table.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string key(static_cast<std::size_t>(k - 1) * 4, '\0');
      r.raw(key.data(), key.size());
      Followers f;
      f.total = r.u64();
      const std::uint32_t nf = r.u32();
      f.counts.reserve(nf);
      std::uint64_t sum = 0;
      for (std::uint32_t j = 0; j < nf; ++j) {
        const TokenId id = r.u32();
        const std::uint64_t c = r.u64();
        if (id >= vocab_size) throw Error(Errc::format_error, "format error: follower id outside vocabulary");
        f.counts.emplace_back(id, c);
        sum += c;
      }
      if (sum != f.total) throw Error(Errc::format_error, "format error: inconsistent follower totals");
      table.emplace(std::move(key), std::move(f));
    }
  }

  std::ifstream vs(sidecar_path(path));
  if (!vs) throw Error(Errc::io_error, "io error: missing vocabulary sidecar " + sidecar_path(path).string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(vs);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, std::string("format error: vocabulary sidecar: ") + e.what());
  }
  if (side.value("format", "") != "spot-ngram-vocab" || side.value("version", 0) != 1 ||
      !side.contains("tokens") || !side["tokens"].is_array()) {
    throw Error(Errc::format_error, "format error: unrecognised vocabulary sidecar");
  }
  auto tokens = side["tokens"].get<std::vector<std::string>>();
  if (tokens.size() != vocab_size || tokens.empty() || tokens[0] != Vocabulary::unk_token) {
    throw Error(Errc::format_error, "format error: vocabulary sidecar does not match model");
  }
  tokens.erase(tokens.begin());
  m.vocab_ = Vocabulary(std::move(tokens));

  NgramOptions check;
  check.order = m.order_;
  check.smoothing_k = m.smoothing_k_;
  check.window = m.window_;
  try {
    validate_options(check, m.weights_);
  } catch (const Error& e) {
    throw Error(Errc::format_error, std::string("format error: ") + e.what());
  }
  return m;
}

NgramModel train_ngram(std::span<const std::string> texts, const NgramOptions& options) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) docs.push_back(tokenize_words(t));
  return NgramModel::train(docs, options);
}

}  // namespace spot

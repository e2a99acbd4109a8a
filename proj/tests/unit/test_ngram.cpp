#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "spot/error.hpp"
#include "spot/ngram.hpp"
#include "spot/scoring.hpp"
#include "test_models.hpp"

using namespace spot;
namespace fs = std::filesystem;

namespace {

// Probability by scanning the raw id sequences for every query, with no
// count tables.
double oracle_prob(const std::vector<std::vector<TokenId>>& docs, std::size_t v, int order, double k,
                   const std::vector<double>& weights, std::span<const TokenId> history, TokenId w) {
  double p = 0.0;
  for (int n = order; n >= 1; --n) {
    const std::size_t eff = std::min<std::size_t>(n, history.size() + 1);
    const auto h = history.last(eff - 1);
    double joint = 0, marginal = 0;
    for (const auto& d : docs) {
      for (std::size_t i = eff - 1; i < d.size(); ++i) {
        if (!std::equal(h.begin(), h.end(), d.begin() + static_cast<std::ptrdiff_t>(i - (eff - 1)))) continue;
        marginal += 1;
        if (d[i] == w) joint += 1;
      }
    }
    p += weights[order - n] * (joint + k) / (marginal + k * static_cast<double>(v));
  }
  return p;
}

std::vector<std::vector<std::string>> split_docs(std::initializer_list<const char*> texts) {
  std::vector<std::vector<std::string>> out;
  for (const char* t : texts) out.push_back(tokenize_words(t));
  return out;
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "spot-tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("ngram") {
  TEST_CASE("tokenizer lowercases and splits punctuation") {
    CHECK(tokenize_words("In the Beginning, God.") ==
          std::vector<std::string>{"in", "the", "beginning", ",", "god", "."});
    CHECK(tokenize_words("  \n\t ").empty());
    CHECK(tokenize_words("a--b") == std::vector<std::string>{"a", "-", "-", "b"});
  }

  TEST_CASE("alternating corpus") {
    NgramOptions opts;
    opts.order = 3;
    opts.vocab_cap = 10;
    const auto m = train_ngram(std::vector<std::string>{"a b a b a b"}, opts);
    REQUIRE(m.vocab_size() == 3);
    CHECK(m.vocab().token(0) == "<unk>");
    const TokenId a = m.vocab().id_of("a");
    const TokenId b = m.vocab().id_of("b");
    CHECK(a != 0);
    CHECK(b != 0);

    const std::vector<TokenId> ha{a};
    const auto dist = m.distribution(ha);
    CHECK(dist[b] > dist[a]);

    CHECK(ranks_for(m, std::vector<TokenId>{a, b, a}, 1).ranks == std::vector<Rank>{0, 0});
    CHECK(greedy_generate(m, ha, 4) == std::vector<TokenId>{b, a, b, a});
  }

  TEST_CASE("single-symbol corpus continues with that symbol") {
    const auto m = train_ngram(std::vector<std::string>{"x x x"});
    const TokenId x = m.vocab().id_of("x");
    CHECK(greedy_generate(m, std::vector<TokenId>{x}, 6) == std::vector<TokenId>(6, x));
  }

  TEST_CASE("vocabulary cap keeps the most frequent words") {
    NgramOptions opts;
    opts.vocab_cap = 2;
    const auto m = train_ngram(std::vector<std::string>{"a a a b b c d e"}, opts);
    CHECK(m.vocab_size() == 3);
    CHECK(m.vocab().id_of("a") != 0);
    CHECK(m.vocab().id_of("b") != 0);
    CHECK(m.vocab().id_of("c") == 0);
    CHECK(m.vocab().id_of("e") == 0);
  }

  TEST_CASE("empty training corpus") {
    try {
      train_ngram(std::vector<std::string>{"", "  "});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_training_corpus);
    }
  }

  TEST_CASE("training preconditions") {
    NgramOptions opts;
    opts.order = 1;
    CHECK_THROWS_AS(train_ngram(std::vector<std::string>{"a b"}, opts), Error);
    opts.order = 3;
    opts.vocab_cap = 1;
    CHECK_THROWS_AS(train_ngram(std::vector<std::string>{"a b"}, opts), Error);
  }

  TEST_CASE("default interpolation weights") {
    CHECK(default_interpolation(3) == std::vector<double>{0.5, 0.3, 0.2});
    const auto w4 = default_interpolation(4);
    REQUIRE(w4.size() == 4);
    CHECK(w4[0] == doctest::Approx(0.4));
    CHECK(w4[3] == doctest::Approx(0.1));
    CHECK(std::accumulate(w4.begin(), w4.end(), 0.0) == doctest::Approx(1.0));
  }

  TEST_CASE("distributions agree with a scanning oracle and sum to one") {
    std::mt19937_64 rng(7);
    for (int order : {2, 3, 4}) {
      std::vector<std::string> texts;
      for (int d = 0; d < 4; ++d) {
        std::string t;
        for (int i = 0; i < 60; ++i) t += std::string(1, static_cast<char>('a' + rng() % 7)) + " ";
        texts.push_back(t);
      }
      NgramOptions opts;
      opts.order = order;
      opts.vocab_cap = 5;
      const auto m = train_ngram(texts, opts);
      std::vector<std::vector<TokenId>> docs;
      for (const auto& t : texts) docs.push_back(m.vocab().encode_text(t));

      for (int q = 0; q < 100; ++q) {
        std::vector<TokenId> h(rng() % 5);
        for (auto& t : h) t = static_cast<TokenId>(rng() % m.vocab_size());
        const auto dist = m.distribution(h);
        REQUIRE(dist.size() == m.vocab_size());
        double sum = 0;
        for (std::size_t w = 0; w < dist.size(); ++w) {
          sum += dist[w];
          const double expected = oracle_prob(docs, m.vocab_size(), order, opts.smoothing_k, m.interpolation(), h,
                                              static_cast<TokenId>(w));
          CHECK(dist[w] == doctest::Approx(expected).epsilon(1e-12));
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
      }
    }
  }

  TEST_CASE("ranks and predictions follow the distribution") {
    std::vector<std::string> texts{"the cat sat on the mat . the dog sat on the log .",
                                   "a cat and a dog sat . the end ."};
    const auto m = train_ngram(texts);
    std::mt19937_64 rng(3);
    for (int q = 0; q < 200; ++q) {
      std::vector<TokenId> seq(2 + rng() % 10);
      for (auto& t : seq) t = static_cast<TokenId>(rng() % m.vocab_size());
      const auto rv = ranks_for(m, seq, 1);
      for (std::size_t i = 1; i < seq.size(); ++i) {
        const auto dist = m.distribution(std::span<const TokenId>(seq).first(i));
        CHECK(rv.ranks[i - 1] == testing::sort_rank(dist, seq[i]));
      }
      CHECK(m.predict_next(seq) == testing::first_max(m.distribution(seq)));
    }
  }

  TEST_CASE("save and load round trip") {
    std::vector<std::string> texts{"and god said , let there be light : and there was light .",
                                   "and the evening and the morning were the first day ."};
    NgramOptions opts;
    opts.model_id = "roundtrip";
    opts.window = 512;
    const auto m = train_ngram(texts, opts);
    const auto path = temp_path("roundtrip.ngram");
    m.save(path);
    CHECK(fs::exists(NgramModel::sidecar_path(path)));

    const auto loaded = NgramModel::load(path);
    CHECK(loaded.model_id() == "roundtrip");
    CHECK(loaded.window() == 512);
    CHECK(loaded.vocab_size() == m.vocab_size());
    CHECK(loaded.vocab().digest() == m.vocab().digest());
    std::mt19937_64 rng(11);
    for (int q = 0; q < 50; ++q) {
      std::vector<TokenId> h(rng() % 4);
      for (auto& t : h) t = static_cast<TokenId>(rng() % m.vocab_size());
      CHECK(loaded.distribution(h) == m.distribution(h));
    }

    const auto path2 = temp_path("roundtrip2.ngram");
    loaded.save(path2);
    CHECK(slurp(path) == slurp(path2));
    CHECK(slurp(NgramModel::sidecar_path(path)) == slurp(NgramModel::sidecar_path(path2)));
  }

  TEST_CASE("loading rejects bad files") {
    const auto path = temp_path("bad.ngram");
    {
      std::ofstream out(path, std::ios::binary);
      out << "NOTSPOT1 and some bytes";
    }
    CHECK_THROWS_AS(NgramModel::load(path), Error);
    CHECK_THROWS_AS(NgramModel::load(temp_path("missing.ngram")), Error);

    const auto m = train_ngram(std::vector<std::string>{"a b c"});
    const auto good = temp_path("truncated.ngram");
    m.save(good);
    const auto bytes = slurp(good);
    {
      std::ofstream out(good, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(NgramModel::load(good), Error);
  }

  TEST_CASE("self-generated text scores zero") {
    std::vector<std::string> texts{"in the beginning god created the heaven and the earth .",
                                   "and the earth was without form , and void ."};
    const auto m = train_ngram(texts);
    const auto ctx = m.vocab().encode_text("and the");
    for (std::size_t s : {1u, 10u, 100u}) {
      auto seq = ctx;
      const auto gen = greedy_generate(m, ctx, s);
      seq.insert(seq.end(), gen.begin(), gen.end());
      CHECK(score_sequence(TokenSequence(seq, ctx.size()), m).aggregate == 0.0);
    }
  }
}

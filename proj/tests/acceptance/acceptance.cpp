// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.
//
//   spot_acceptance [output-dir]
//
// Criteria 2 and 4 write their pair archives, matrices and reports under
// output-dir/run-1 and output-dir/run-2; criterion 10 compares the two.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spot/spot.hpp"
#include "spot/fixture_server.hpp"

namespace fs = std::filesystem;
using namespace spot;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %-32s %s [%.2fs]\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void write_file(const fs::path& p, const std::string& bytes) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Shared fixture: the public-domain KJV corpus split by chapter parity.

struct Corpus {
  std::vector<std::string> train;    // even chapters
  std::vector<Document> held_out;    // odd chapters
};

Corpus load_corpus() {
  CorpusSpec spec;
  spec.path = std::string(SPOT_DATA_DIR) + "/kjv";
  spec.format = CorpusFormat::jsonl;
  auto docs = ingest(spec).documents;
  Corpus c;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i % 2 == 0) {
      c.train.push_back(std::move(docs[i].text));
    } else {
      c.held_out.push_back(std::move(docs[i]));
    }
  }
  return c;
}

std::shared_ptr<NgramModel> train_model(const std::vector<std::string>& texts, int order, const std::string& id) {
  NgramOptions opts;
  opts.order = order;
  opts.model_id = id;
  return std::make_shared<NgramModel>(train_ngram(texts, opts));
}

// Consecutive held-out chapters joined until each document has `min_tokens`.
std::vector<Document> long_documents(const std::vector<Document>& chapters, const Vocabulary& vocab,
                                     std::size_t min_tokens, std::size_t count) {
  std::vector<Document> out;
  Document cur;
  for (const auto& ch : chapters) {
    if (cur.text.empty()) cur.id = ch.id;
    cur.text += (cur.text.empty() ? "" : " ") + ch.text;
    if (vocab.encode_text(cur.text).size() >= min_tokens) {
      out.push_back(std::move(cur));
      cur = {};
      if (out.size() == count) break;
    }
  }
  return out;
}

std::string archive(const PairSet& ps) {
  std::ostringstream ss;
  write_pairs(ss, ps);
  return ss.str();
}

// ---------------------------------------------------------------------------
// Criterion 2: self-greedy zero through the harness and the matrix.

struct SelfGreedyRun {
  std::size_t sequences = 0;
  std::size_t nonzero = 0;
  std::map<std::string, std::string> files;
};

SelfGreedyRun run_self_greedy(const BackendRegistry& reg, const std::vector<Document>& docs, std::size_t threads) {
  SelfGreedyRun run;
  for (std::size_t ctx : {24u, 512u}) {
    for (std::size_t s : {2u, 40u, 128u, 768u}) {
      PairingOptions po;
      po.threads = threads;
      const auto pairs = make_pairs(docs, {"tri"}, ctx, s, reg, po);
      MatrixOptions mo;
      mo.threads = threads;
      const auto m = run_matrix(pairs, reg, {"tri"}, mo);
      for (double x : m.cell("tri", "tri").scores) {
        ++run.sequences;
        if (x != 0.0) ++run.nonzero;
      }
      const std::string tag = "selfgreedy-c" + std::to_string(ctx) + "-s" + std::to_string(s);
      run.files[tag + ".pairs.jsonl"] = archive(pairs);
      run.files[tag + ".matrix.csv"] = matrix_to_csv(m);
      run.files[tag + ".matrix.json"] = matrix_to_json(m).dump(2) + "\n";
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5: separation on held-out text and calibrated accuracy.

struct SeparationRun {
  EvalMatrix matrix;
  RatioSummary summary;
  std::map<std::string, AccuracySummary> held_out_accuracy;  // per evaluator
  std::map<std::string, std::string> files;
};

SeparationRun run_separation(const BackendRegistry& reg, const std::vector<Document>& chapters, std::size_t threads) {
  PairingOptions po;
  po.threads = threads;
  const std::vector<std::string> models{"tri", "bi"};
  const auto pairs = make_pairs(chapters, models, 24, 40, reg, po);
  MatrixOptions mo;
  mo.threads = threads;
  SeparationRun run;
  run.matrix = run_matrix(pairs, reg, models, mo);
  run.summary = ratios(run.matrix);

  nlohmann::json cal = nlohmann::json::object();
  for (const auto& e : models) {
    // calibrate on even pairs, measure on odd pairs
    ScoreSample fit_h{{}, Label::human, e, {}}, fit_l{{}, Label::llm, e, {}};
    ScoreSample test_h{{}, Label::human, e, {}}, test_l{{}, Label::llm, e, {}};
    for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
      auto& h = i % 2 == 0 ? fit_h : test_h;
      auto& l = i % 2 == 0 ? fit_l : test_l;
      h.scores.push_back(run.matrix.cell(e, kHumanSource).scores[i]);
      for (const auto& src : models) l.scores.push_back(run.matrix.cell(e, src).scores[i]);
    }
    const auto profile = calibrate_sweep(fit_h, fit_l);
    const auto acc = accuracy(test_h, test_l, profile);
    run.held_out_accuracy[e] = acc;
    cal[e] = {{"profile", profile_to_json(profile)},
              {"held_out", {{"acc", acc.acc}, {"tpr", acc.tpr}, {"fpr", acc.fpr}, {"balanced_acc", acc.balanced_acc}}}};
  }

  run.files["separation.pairs.jsonl"] = archive(pairs);
  run.files["separation.matrix.csv"] = matrix_to_csv(run.matrix);
  auto j = matrix_to_json(run.matrix);
  j["ratios"] = ratios_to_json(run.summary);
  run.files["separation.matrix.json"] = j.dump(2) + "\n";
  run.files["separation.calibration.json"] = cal.dump(2) + "\n";
  return run;
}

double count_balanced(const std::vector<double>& human, const std::vector<double>& llm, double t) {
  double tp = 0, tn = 0;
  for (double x : human) tp += x > t ? 1 : 0;
  for (double x : llm) tn += x > t ? 0 : 1;
  return (tp / static_cast<double>(human.size()) + tn / static_cast<double>(llm.size())) / 2;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out_dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "spot-acceptance";
  fs::remove_all(out_dir);
  fs::create_directories(out_dir);

  const auto corpus = load_corpus();
  BackendRegistry reg;
  reg.add("tri", train_model(corpus.train, 3, "tri"));
  reg.add("bi", train_model(corpus.train, 2, "bi"));
  const auto& tri = reg.get("tri");

  report(1, "rank oracle", [] {
    std::mt19937_64 rng(1);
    std::size_t mismatches = 0;
    const auto t0 = Clock::now();
    for (int i = 0; i < 1000; ++i) {
      const std::size_t v = 1 + rng() % 1000;
      const int levels = 1 + static_cast<int>(rng() % 50);  // coarse levels force ties
      std::vector<double> logits(v);
      for (auto& x : logits) x = static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) - levels / 2.0;
      const auto target = static_cast<TokenId>(rng() % v);
      std::vector<double> sorted(logits);
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      const auto greater = static_cast<Rank>(
          std::upper_bound(sorted.begin(), sorted.end(), logits[target], std::greater<>()) - sorted.begin() -
          std::count(sorted.begin(), sorted.end(), logits[target]));
      if (rank_of(logits, target) != greater) ++mismatches;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return Outcome{mismatches == 0 && secs < 5.0, fmt("1000 cases, %zu mismatches, %.3fs (< 5s)", mismatches, secs)};
  });

  std::vector<SelfGreedyRun> self_runs;
  report(2, "self-greedy zero, end to end", [&] {
    const auto docs = long_documents(corpus.held_out, *tri.vocabulary(), 512 + 768, 50);
    if (docs.size() < 50) return Outcome{false, fmt("only %zu documents of >= 1280 tokens", docs.size())};
    const auto t0 = Clock::now();
    self_runs.push_back(run_self_greedy(reg, docs, 0));
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    self_runs.push_back(run_self_greedy(reg, docs, 1));  // repeat for criterion 10
    const auto& r = self_runs[0];
    return Outcome{r.nonzero == 0 && r.sequences == 50 * 8 && secs < 60.0,
                   fmt("%zu sequences (50 docs x ctx {24,512} x s {2,40,128,768}), %zu nonzero, %.2fs (< 60s)",
                       r.sequences, r.nonzero, secs)};
  });

  report(3, "aggregate arithmetic", [] {
    const std::vector<double> a{0.25, 0.25}, b{0.75, 0.75, 0.75, 0.75}, z{0.0, 0.0, 0.0};
    const double ra = aggregate_score(a), rb = aggregate_score(b), rz = aggregate_score(z);
    return Outcome{ra == 2.5 && rb == 7.5 && rz == 0.0, fmt("[0.25,0.25] -> %.17g, 0.75x4 -> %.17g, zeros -> %.17g", ra,
                                                            rb, rz)};
  });

  std::vector<SeparationRun> sep_runs;
  report(4, "separation direction", [&] {
    const auto t0 = Clock::now();
    sep_runs.push_back(run_separation(reg, corpus.held_out, 0));
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    sep_runs.push_back(run_separation(reg, corpus.held_out, 1));  // repeat for criterion 10
    const auto& s = sep_runs[0].summary;
    std::string rows;
    bool ok = s.min_ratio.has_value() && *s.min_ratio >= 5.0 && secs < 120.0;
    for (const auto& r : s.rows) {
      rows += fmt(" %s: %.4f/%.4f=%.2fx", r.evaluator.c_str(), r.human_mean, r.max_model_mean, r.ratio.value_or(NAN));
      ok = ok && r.ratio.has_value();
    }
    const auto n = sep_runs[0].matrix.cells[0][0].n;
    return Outcome{ok, fmt("%zu held-out pairs;%s; min %.2fx (>= 5), %.2fs (< 120s)", n, rows.c_str(),
                           s.min_ratio.value_or(NAN), secs)};
  });

  report(5, "held-out calibration accuracy", [&] {
    if (sep_runs.empty()) return Outcome{false, "criterion 4 did not run"};
    bool ok = true;
    std::string detail;
    for (const auto& [e, acc] : sep_runs[0].held_out_accuracy) {
      ok = ok && acc.balanced_acc >= 0.95;
      detail += fmt("%s balanced acc %.4f (tpr %.3f, fpr %.3f); ", e.c_str(), acc.balanced_acc, acc.tpr, acc.fpr);
    }
    return Outcome{ok, detail + "threshold >= 0.95"};
  });

  report(6, "sweep vs brute-force sweep", [] {
    std::mt19937_64 rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> human(1 + rng() % 40), llm(1 + rng() % 40);
      const int hc = static_cast<int>(rng() % 60), lc = static_cast<int>(rng() % 60);
      for (auto& x : human) x = (hc + static_cast<int>(rng() % 30)) / 100.0;
      for (auto& x : llm) x = (lc + static_cast<int>(rng() % 30)) / 100.0;
      const auto p = calibrate_sweep({human, Label::human, "m", {}}, {llm, Label::llm, "m", {}});
      const double lo = std::min(*std::min_element(human.begin(), human.end()), *std::min_element(llm.begin(), llm.end()));
      const double hi = std::max(*std::max_element(human.begin(), human.end()), *std::max_element(llm.begin(), llm.end()));
      double best = 0;
      for (int i = 0; i <= 10000; ++i) {
        best = std::max(best, count_balanced(human, llm, lo * ((10000 - i) / 10000.0) + hi * (i / 10000.0)));
      }
      worst = std::max(worst, std::abs(*p.balanced_accuracy - best));
    }
    return Outcome{worst <= 1e-12, fmt("200 sample pairs, max |sweep - brute force| = %.3g (<= 1e-12)", worst)};
  });

  report(7, "gaussian kde", [&] {
    const double at = kde_at(std::vector<double>{0.5}, kDefaultBandwidth, 0.5);
    const auto odd = kde_density({{0.5}, Label::llm, "m", {}}, kDefaultBandwidth, 2049);
    const double grid_peak = *std::max_element(odd.density.begin(), odd.density.end());
    bool ok = std::abs(at - 398.942) <= 0.001 && std::abs(grid_peak - 398.942) <= 0.001;

    std::vector<std::vector<double>> samples{{0.5}, {0.2, 0.8}};
    std::mt19937_64 rng(7);
    std::vector<double> wide(10000);
    for (auto& x : wide) x = std::abs(std::normal_distribution<double>(0.8, 0.2)(rng));
    samples.push_back(wide);
    if (!sep_runs.empty()) {
      for (const auto& row : sep_runs[0].matrix.cells)
        for (const auto& cell : row) samples.push_back(cell.scores);
    }
    double worst = 0;
    for (const auto& s : samples) {
      const double area = integrate(kde_density({s, Label::human, "m", {}}));
      worst = std::max(worst, std::abs(area - 1.0));
    }
    ok = ok && worst <= 0.02;
    return Outcome{ok, fmt("peak %.6f at the score, %.6f on a 2049-point grid (398.942 +- 0.001); %zu curves, "
                           "max |integral - 1| = %.2e (<= 0.02)",
                           at, grid_peak, samples.size(), worst)};
  });

  report(8, "single forward pass", [&] {
    CountingModel counted(tri);
    std::mt19937_64 rng(8);
    std::size_t bad = 0, zero = 0;
    for (int i = 0; i < 100; ++i) {
      const auto& doc = corpus.held_out[rng() % corpus.held_out.size()];
      const auto ids = tri.vocabulary()->encode_text(doc.text);
      const std::size_t ctx = 1 + rng() % std::min<std::size_t>(ids.size(), 64);
      const std::size_t s = 1 + rng() % 128;
      const std::vector<TokenId> context(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(ctx));
      counted.reset();
      const auto gen = greedy_generate(counted, context, s);
      if (counted.predict_calls() != s || counted.evaluate_calls() != 0) ++bad;
      auto seq = context;
      seq.insert(seq.end(), gen.begin(), gen.end());
      counted.reset();
      const auto rep = score_sequence(TokenSequence(seq, ctx), counted);
      if (counted.evaluate_calls() != 1 || counted.predict_calls() != 0) ++bad;
      if (rep.aggregate == 0.0) ++zero;
    }
    return Outcome{bad == 0 && zero == 100,
                   fmt("100 sequences: %zu with wrong call counts, %zu/100 self-scores zero", bad, zero)};
  });

  report(9, "wire protocol conformance", [&] {
    using namespace std::chrono_literals;
    auto errc_of = [](const std::function<void()>& fn) -> std::optional<Errc> {
      try {
        fn();
      } catch (const Error& e) {
        return e.code();
      }
      return std::nullopt;
    };
    auto canned = [&](const std::string& body, std::chrono::milliseconds delay, std::chrono::milliseconds timeout,
                      std::size_t* requests) {
      FixtureServerOptions o;
      o.model_name = "fx";
      o.canned_ranks_body = body;
      o.delay = delay;
      FixtureServer server(o);
      server.start();
      RemoteBackendConfig c;
      c.endpoint = server.endpoint();
      c.model_name = "fx";
      c.timeout = timeout;
      c.initial_backoff = 100ms;
      std::optional<Errc> code;
      RankVector rv;
      code = errc_of([&] { rv = remote_ranks(c, std::vector<TokenId>{1, 2, 3}, 1); });
      if (requests) *requests = server.rank_requests();
      return std::make_pair(code, rv);
    };

    std::string detail;
    const auto [ok_code, ok_rv] = canned(R"({"v":1,"ranks":[0,3],"vocab_size":8,"model":"fx"})", 0ms, 2000ms, nullptr);
    bool ok = !ok_code && ok_rv.ranks == std::vector<Rank>{0, 3} && ok_rv.vocab_size == 8;
    detail += ok ? "valid payload round-trips; " : "valid payload rejected; ";

    const std::pair<const char*, const char*> bad[] = {
        {"rank >= v", R"({"v":1,"ranks":[0,9],"vocab_size":8,"model":"fx"})"},
        {"length mismatch", R"({"v":1,"ranks":[0],"vocab_size":8,"model":"fx"})"},
        {"missing field", R"({"v":1,"ranks":[0,1],"model":"fx"})"},
    };
    for (const auto& [name, body] : bad) {
      const auto code = canned(body, 0ms, 2000ms, nullptr).first;
      const bool hit = code == Errc::protocol_violation;
      ok = ok && hit;
      detail += fmt("%s -> %s; ", name, hit ? "protocol violation" : "NOT rejected");
    }

    std::size_t attempts = 0;
    const auto code = canned(R"({"v":1,"ranks":[0,1],"vocab_size":8,"model":"fx"})", 300ms, 100ms, &attempts).first;
    const bool retried = code == Errc::backend_unavailable && attempts == 4;
    ok = ok && retried;
    detail += fmt("timeout -> %zu attempts (1 + 3 retries), %s; ", attempts,
                  code == Errc::backend_unavailable ? "backend unavailable" : "wrong error");

    FixtureServerOptions o;
    o.model_name = "tri";
    o.backend = &tri;
    FixtureServer server(o);
    server.start();
    RemoteBackendConfig c;
    c.endpoint = server.endpoint();
    c.model_name = "tri";
    RemoteModel remote(c);
    const auto ids = tri.vocabulary()->encode_text(corpus.held_out[0].text);
    const std::vector<TokenId> ctx(ids.begin(), ids.begin() + 24);
    const auto gen = greedy_generate(remote, ctx, 40);
    auto seq = ctx;
    seq.insert(seq.end(), gen.begin(), gen.end());
    const bool conforming = score_sequence(TokenSequence(seq, 24), remote).aggregate == 0.0 &&
                            ranks_for(remote, ids, 24).ranks == ranks_for(tri, ids, 24).ranks;
    ok = ok && conforming;
    detail += conforming ? "n-gram served remotely matches local" : "remote n-gram disagrees with local";
    return Outcome{ok, detail};
  });

  report(10, "determinism", [&] {
    if (self_runs.size() != 2 || sep_runs.size() != 2) return Outcome{false, "criteria 2/4 did not complete twice"};
    std::size_t files = 0, differing = 0;
    for (int run = 0; run < 2; ++run) {
      const auto dir = out_dir / ("run-" + std::to_string(run + 1));
      for (const auto& [name, bytes] : self_runs[run].files) write_file(dir / name, bytes);
      for (const auto& [name, bytes] : sep_runs[run].files) write_file(dir / name, bytes);
    }
    for (const auto& entry : fs::directory_iterator(out_dir / "run-1")) {
      ++files;
      const auto other = out_dir / "run-2" / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
    }
    return Outcome{differing == 0 && files == 28,
                   fmt("%zu files per run (threads: all vs 1), %zu differ; written to %s", files, differing,
                       out_dir.string().c_str())};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

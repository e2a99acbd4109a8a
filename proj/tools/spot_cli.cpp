// spot: command-line front end for originality scoring, detection,
// calibration and the cross-model evaluation matrix.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "spot/spot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spot;

namespace {

constexpr int kExitHuman = 0;
constexpr int kExitLlm = 1;
constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;
constexpr int kExitMismatch = 4;

struct Globals {
  std::optional<fs::path> config;
  std::optional<std::string> backend;
  std::optional<fs::path> profile;
  std::optional<std::size_t> context_len;
  std::optional<std::size_t> completion_len;
  std::optional<fs::path> out;
  std::uint64_t seed = 0;
  bool tokens = false;
  std::vector<std::string> ngrams;  // NAME=PATH
  std::optional<std::string> verbosity;
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "io error: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Whitespace, comma or JSON-array separated token ids.
std::vector<TokenId> parse_token_list(const std::string& text) {
  std::string cleaned(text);
  for (char& c : cleaned) {
    if (c == ',' || c == '[' || c == ']') c = ' ';
  }
  std::istringstream in(cleaned);
  std::vector<TokenId> out;
  std::string word;
  while (in >> word) {
    if (word.find_first_not_of("0123456789") != std::string::npos || word.size() > 10) {
      throw Error(Errc::format_error, "format error: '" + word + "' is not a token id");
    }
    const auto v = std::stoull(word);
    if (v > 0xffffffffULL) throw Error(Errc::format_error, "format error: token id " + word + " is too large");
    out.push_back(static_cast<TokenId>(v));
  }
  return out;
}

/// One non-negative score per line (or a JSON array).
std::vector<double> parse_scores(const std::string& path) {
  const std::string text = read_input(path);
  std::vector<double> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      for (const auto& v : json::parse(text)) out.push_back(v.get<double>());
    } catch (const json::exception& e) {
      throw Error(Errc::format_error, "format error: " + path + ": " + e.what());
    }
    return out;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(line.substr(b), &used);
    } catch (const std::exception&) {
      throw Error(Errc::format_error, "format error: " + path + ":" + std::to_string(lineno) + ": not a number");
    }
    if (line.find_first_not_of(" \t\r", b + used) != std::string::npos) {
      throw Error(Errc::format_error, "format error: " + path + ":" + std::to_string(lineno) + ": trailing text");
    }
    out.push_back(v);
  }
  return out;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Reproducible creation stamp: SOURCE_DATE_EPOCH when set.
std::optional<std::string> reproducible_stamp() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (!epoch || !*epoch) return std::nullopt;
  char* end = nullptr;
  const long long secs = std::strtoll(epoch, &end, 10);
  if (*end != '\0' || secs < 0) return std::nullopt;
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

class OutputDir {
 public:
  OutputDir(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(Errc::io_error, "io error: cannot create " + dir_.string() + ": " + ec.message());
  }

  void input(const std::string& name, const std::string& digest) { inputs_[name] = digest; }

  /// Writes `bytes` to dir/name and a timestamped name.meta.json beside it.
  fs::path write(const std::string& name, const std::string& bytes) {
    const auto path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error(Errc::io_error, "io error: cannot write " + path.string());
    }
    json meta = {{"file", name},         {"digest", digest_hex(bytes)}, {"bytes", bytes.size()},
                 {"command", command_},  {"inputs", inputs_},           {"written_at", utc_now()}};
    std::ofstream m(dir_ / (name + ".meta.json"), std::ios::trunc);
    m << meta.dump(2) << '\n';
    spdlog::info("wrote {}", path.string());
    return path;
  }

 private:
  fs::path dir_;
  std::string command_;
  json inputs_ = json::object();
};

class App {
 public:
  explicit App(Globals& g) : g_(g) {}

  void prepare() {
    if (g_.config) config_ = RunConfig::load(*g_.config);
    if (g_.context_len) config_.context_len = *g_.context_len;
    if (g_.completion_len) config_.completion_len = *g_.completion_len;
    if (g_.out) config_.out = *g_.out;
    if (g_.profile) config_.profile = *g_.profile;
    if (g_.verbosity) config_.verbosity = *g_.verbosity;
    for (const auto& spec : g_.ngrams) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
        throw Error(Errc::config_error, "config error: --ngram expects NAME=PATH, got '" + spec + "'");
      }
      BackendSpec b;
      b.kind = BackendSpec::Kind::ngram;
      b.ngram_path = spec.substr(eq + 1);
      config_.backends[spec.substr(0, eq)] = b;
    }
    if (g_.backend) config_.default_backend = *g_.backend;
    const auto level = spdlog::level::from_str(config_.verbosity);
    if (level == spdlog::level::off && config_.verbosity != "off") {
      throw Error(Errc::config_error, "config error: unknown verbosity '" + config_.verbosity + "'");
    }
    spdlog::set_level(level);
  }

  const RunConfig& config() const { return config_; }

  std::string backend_name() const {
    if (!config_.default_backend.empty()) return config_.default_backend;
    if (config_.backends.size() == 1) return config_.backends.begin()->first;
    if (config_.backends.empty()) throw Error(Errc::config_error, "config error: no backends registered");
    throw Error(Errc::config_error, "config error: several backends registered; pick one with --backend");
  }

  const BackendRegistry& registry(const std::vector<std::string>& names) {
    if (!registry_) {
      // a default only matters to single-backend verbs
      RunConfig checked = config_;
      if (checked.default_backend.empty() && !checked.backends.empty()) {
        checked.default_backend = checked.backends.begin()->first;
      }
      checked.validate();
      registry_ = config_.instantiate(names);
    }
    return *registry_;
  }

  const ScoringModel& backend() {
    const auto name = backend_name();
    return registry({name}).get(name);
  }

  std::vector<TokenId> read_tokens(const std::string& path, const ScoringModel& model) const {
    const std::string text = read_input(path);
    if (g_.tokens) return parse_token_list(text);
    const auto* vocab = model.vocabulary();
    if (!vocab) {
      throw Error(Errc::invalid_argument,
                  "invalid argument: backend '" + model.model_id() + "' has no tokenizer; pass --tokens");
    }
    return vocab->encode_text(text);
  }

  OutputDir output(const std::string& command) const { return OutputDir(config_.out, command); }

  std::uint64_t seed() const { return g_.seed; }

 private:
  Globals& g_;
  RunConfig config_;
  std::optional<BackendRegistry> registry_;
};

json report_json(const OriginalityReport& r, const std::string& backend) {
  return {{"backend", backend},         {"model_id", r.model_id},
          {"vocab_size", r.vocab_size}, {"context_len", r.context_len},
          {"aggregate", r.aggregate},   {"per_token", r.per_token},
          {"sequence_digest", r.sequence_digest}};
}

json verdict_json(const Verdict& v, const std::string& evaluator) {
  return {{"label", label_name(v.label)}, {"score", v.score}, {"rho", v.rho}, {"margin", v.margin},
          {"evaluator", evaluator}};
}

ThresholdProfile load_profile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "io error: cannot read profile " + path.string());
  try {
    return profile_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, "format error: profile " + path.string() + ": " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::backend_unavailable:
    case Errc::backend_error:
    case Errc::protocol_violation:
    case Errc::partial_result:
      return kExitBackend;
    case Errc::profile_evaluator_mismatch:
      return kExitMismatch;
    default:
      return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  CLI::App cli{"Originality-score detector for machine-generated text"};
  cli.require_subcommand(1);
  cli.fallthrough();

  Globals g;
  cli.add_option("--config", g.config, "Run configuration file");
  cli.add_option("--backend", g.backend, "Backend name (defaults to the configured default)");
  cli.add_option("--profile", g.profile, "Threshold profile JSON");
  cli.add_option("--context-len", g.context_len, "Context tokens");
  cli.add_option("--completion-len", g.completion_len, "Completion tokens");
  cli.add_option("--out", g.out, "Output directory");
  cli.add_option("--seed", g.seed, "Seed for corpus subsampling");
  cli.add_flag("--tokens", g.tokens, "Inputs are token id lists instead of text");
  cli.add_option("--ngram", g.ngrams, "Register an n-gram model file as NAME=PATH")->take_all();
  cli.add_option("--verbosity", g.verbosity, "trace|debug|info|warn|error|off");

  App app(g);
  int rc = 0;
  std::vector<std::pair<CLI::App*, std::function<void()>>> actions;

  auto* score = cli.add_subcommand("score", "Originality score of a text or token file");
  std::string score_input;
  score->add_option("input", score_input, "Input file, or - for stdin")->required();
  actions.emplace_back(score, [&] {
    const auto& model = app.backend();
    const auto tokens = app.read_tokens(score_input, model);
    const std::size_t ctx = std::min(app.config().context_len, tokens.size());
    const auto report = score_sequence(TokenSequence(tokens, ctx), model);
    std::cout << report_json(report, app.backend_name()).dump(2) << '\n';
  });

  auto* detect = cli.add_subcommand("detect", "Classify a text as human or llm (exit 0 human, 1 llm)");
  std::string detect_input;
  std::optional<double> detect_score;
  detect->add_option("input", detect_input, "Input file, or - for stdin");
  detect->add_option("--score", detect_score, "Classify this precomputed score instead of an input");
  actions.emplace_back(detect, [&] {
    if (!app.config().profile) throw Error(Errc::config_error, "config error: detect needs --profile");
    const auto profile = load_profile(*app.config().profile);
    const auto name = app.backend_name();
    if (profile.model_id != name) {
      throw Error(Errc::profile_evaluator_mismatch, "profile evaluator mismatch: profile was calibrated for '" +
                                                        profile.model_id + "', backend is '" + name + "'");
    }
    double s = 0;
    if (detect_score) {
      s = *detect_score;
    } else {
      if (detect_input.empty()) throw Error(Errc::invalid_argument, "invalid argument: detect needs an input or --score");
      const auto& model = app.backend();
      const auto tokens = app.read_tokens(detect_input, model);
      const std::size_t ctx = std::min(app.config().context_len, tokens.size());
      s = score_sequence(TokenSequence(tokens, ctx), model).aggregate;
    }
    const auto v = classify(s, profile);
    std::cout << verdict_json(v, name).dump() << '\n';
    rc = v.label == Label::human ? kExitHuman : kExitLlm;
  });

  auto* generate = cli.add_subcommand("generate", "Greedy continuation of a context");
  std::string gen_input;
  std::optional<std::size_t> gen_length;
  std::optional<fs::path> gen_tokens_out;
  generate->add_option("context", gen_input, "Context file, or - for stdin")->required();
  generate->add_option("-n,--length", gen_length, "Tokens to generate (default: completion length)");
  generate->add_option("--tokens-out", gen_tokens_out, "Also write context + completion ids to this file");
  actions.emplace_back(generate, [&] {
    const auto& model = app.backend();
    const auto context = app.read_tokens(gen_input, model);
    const auto completion = greedy_generate(model, context, gen_length.value_or(app.config().completion_len));
    std::vector<TokenId> all(context);
    all.insert(all.end(), completion.begin(), completion.end());
    json j = {{"backend", app.backend_name()}, {"context_len", context.size()}, {"completion", completion}};
    if (const auto* vocab = model.vocabulary()) {
      j["completion_text"] = vocab->decode_text(completion);
      j["text"] = vocab->decode_text(all);
    }
    if (gen_tokens_out) {
      std::ofstream out(*gen_tokens_out, std::ios::trunc);
      for (std::size_t i = 0; i < all.size(); ++i) out << (i ? " " : "") << all[i];
      out << '\n';
      if (!out) throw Error(Errc::io_error, "io error: cannot write " + gen_tokens_out->string());
    }
    std::cout << j.dump(2) << '\n';
  });

  auto* calibrate = cli.add_subcommand("calibrate", "Derive a threshold profile from labelled scores");
  std::string cal_human, cal_llm, cal_method = "sweep";
  double cal_p = kDefaultPercentile;
  std::optional<std::string> cal_evaluator;
  calibrate->add_option("--human", cal_human, "Human scores file (one per line)");
  calibrate->add_option("--llm", cal_llm, "LLM scores file (one per line)")->required();
  calibrate->add_option("--method", cal_method, "sweep|percentile")->check(CLI::IsMember({"sweep", "percentile"}));
  calibrate->add_option("-p,--percentile", cal_p, "Quantile for the percentile method");
  calibrate->add_option("--evaluator", cal_evaluator, "Evaluator the scores came from (default: the backend name)");
  actions.emplace_back(calibrate, [&] {
    const std::string evaluator = cal_evaluator ? *cal_evaluator : app.backend_name();
    auto out = app.output("calibrate");
    ScoreSample llm{parse_scores(cal_llm), Label::llm, evaluator, {}};
    out.input("llm", digest_hex(read_input(cal_llm)));
    ThresholdProfile profile;
    std::optional<AccuracySummary> summary;
    if (cal_method == "sweep") {
      if (cal_human.empty()) throw Error(Errc::invalid_argument, "invalid argument: the sweep method needs --human");
      ScoreSample human{parse_scores(cal_human), Label::human, evaluator, {}};
      out.input("human", digest_hex(read_input(cal_human)));
      profile = calibrate_sweep(human, llm);
      if (profile.degenerate) spdlog::warn("scores do not separate; profile is degenerate");
      summary = accuracy(human, llm, profile);
    } else {
      profile = calibrate_percentile(llm, cal_p);
    }
    profile.created_at = reproducible_stamp();
    const auto j = profile_to_json(profile);
    out.write("profile.json", j.dump(2) + "\n");
    json shown = j;
    if (summary) {
      shown["accuracy"] = {{"acc", summary->acc}, {"tpr", summary->tpr}, {"fpr", summary->fpr},
                           {"balanced_acc", summary->balanced_acc}};
    }
    std::cout << shown.dump(2) << '\n';
  });

  auto* density = cli.add_subcommand("density", "Gaussian KDE of a score sample as CSV");
  std::string den_scores, den_name = "density.csv";
  double den_bandwidth = kDefaultBandwidth;
  std::size_t den_grid = kDefaultGridPoints;
  density->add_option("--scores", den_scores, "Scores file (one per line)")->required();
  density->add_option("--bandwidth", den_bandwidth, "Kernel standard deviation");
  density->add_option("--grid", den_grid, "Grid points");
  density->add_option("--name", den_name, "Output file name inside --out");
  actions.emplace_back(density, [&] {
    auto out = app.output("density");
    ScoreSample sample{parse_scores(den_scores), Label::human, "", {}};
    out.input("scores", digest_hex(read_input(den_scores)));
    const auto curve = kde_density(sample, den_bandwidth, den_grid);
    const auto path = out.write(den_name, density_to_csv(curve));
    std::cout << json{{"file", path.string()}, {"points", curve.grid.size()}, {"integral", integrate(curve)}}.dump()
              << '\n';
  });

  auto* evaluate = cli.add_subcommand("evaluate", "Cross-model originality matrix over a corpus");
  std::string ev_corpus, ev_format = "jsonl", ev_field = "text", ev_models, ev_evaluators, ev_pivot;
  std::optional<std::size_t> ev_limit;
  std::optional<double> ev_fraction;
  std::optional<fs::path> ev_pairs;
  std::size_t ev_threads = 0;
  bool ev_write_scores = false;
  evaluate->add_option("--corpus", ev_corpus, "Corpus file or directory");
  evaluate->add_option("--format", ev_format, "jsonl|text")->check(CLI::IsMember({"jsonl", "text"}));
  evaluate->add_option("--field", ev_field, "JSONL text field");
  evaluate->add_option("--limit", ev_limit, "Maximum documents");
  evaluate->add_option("--sample", ev_fraction, "Keep each document with this probability (uses --seed)");
  evaluate->add_option("--models", ev_models, "Comma-separated generator backends (default: all)");
  evaluate->add_option("--evaluators", ev_evaluators, "Comma-separated evaluator backends (default: all)");
  evaluate->add_option("--pivot", ev_pivot, "Backend whose tokenizer defines the pair token space");
  evaluate->add_option("--pairs", ev_pairs, "Reuse a pair archive instead of building pairs");
  evaluate->add_option("--threads", ev_threads, "Worker threads (0 = all cores)");
  evaluate->add_flag("--write-scores", ev_write_scores,
                     "Also write per-pair scores as scores-<evaluator>-<source>.txt (input for calibrate)");
  actions.emplace_back(evaluate, [&] {
    const auto& reg = app.registry({});
    auto out = app.output("evaluate");
    PairSet pairs;
    if (ev_pairs) {
      std::ifstream in(*ev_pairs);
      if (!in) throw Error(Errc::io_error, "io error: cannot read " + ev_pairs->string());
      pairs = read_pairs(in);
      out.input("pairs", pairs.digest());
    } else {
      if (ev_corpus.empty()) throw Error(Errc::invalid_argument, "invalid argument: evaluate needs --corpus or --pairs");
      CorpusSpec spec;
      spec.path = ev_corpus;
      spec.format = ev_format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::plain_text;
      spec.field = ev_field;
      spec.limit = ev_limit;
      spec.seed = app.seed();
      spec.sample_fraction = ev_fraction;
      const auto ingested = ingest(spec);
      spdlog::info("ingested {} documents from {} files", ingested.report.documents, ingested.report.files);
      const auto models = ev_models.empty() ? reg.names() : split_list(ev_models);
      PairingOptions po;
      po.pivot = ev_pivot;
      po.threads = ev_threads;
      pairs = make_pairs(ingested.documents, models, app.config().context_len, app.config().completion_len, reg, po);
      std::ostringstream archive;
      write_pairs(archive, pairs);
      out.write("pairs.jsonl", archive.str());
    }
    const auto evaluators = ev_evaluators.empty() ? reg.names() : split_list(ev_evaluators);
    MatrixOptions mo;
    mo.threads = ev_threads;
    const auto matrix = run_matrix(pairs, reg, evaluators, mo);
    const auto summary = ratios(matrix);
    out.write("matrix.csv", matrix_to_csv(matrix));
    json j = matrix_to_json(matrix);
    j["ratios"] = ratios_to_json(summary);
    j["pairing"] = {{"total", pairs.report.total},
                    {"kept", pairs.report.kept},
                    {"skipped_short", pairs.report.skipped_short},
                    {"skipped_duplicate", pairs.report.skipped_duplicate}};
    out.write("matrix.json", j.dump(2) + "\n");
    if (ev_write_scores) {
      for (std::size_t r = 0; r < matrix.evaluators.size(); ++r) {
        for (std::size_t c = 0; c < matrix.sources.size(); ++c) {
          std::string lines;
          char buf[40];
          for (double x : matrix.cells[r][c].scores) {
            std::snprintf(buf, sizeof buf, "%.17g\n", x);
            lines += buf;
          }
          out.write("scores-" + matrix.evaluators[r] + "-" + matrix.sources[c] + ".txt", lines);
        }
      }
    }
    std::cout << matrix_to_csv(matrix);
  });

  auto* train = cli.add_subcommand("train", "Train an n-gram backend on a corpus");
  std::string tr_corpus, tr_format = "jsonl", tr_field = "text", tr_name = "ngram";
  std::optional<fs::path> tr_output;
  NgramOptions tr_opts;
  train->add_option("--corpus", tr_corpus, "Corpus file or directory")->required();
  train->add_option("--format", tr_format, "jsonl|text")->check(CLI::IsMember({"jsonl", "text"}));
  train->add_option("--field", tr_field, "JSONL text field");
  train->add_option("--name", tr_name, "Model id");
  train->add_option("--order", tr_opts.order, "N-gram order (>= 2)");
  train->add_option("--smoothing", tr_opts.smoothing_k, "Add-k constant");
  train->add_option("--vocab-cap", tr_opts.vocab_cap, "Vocabulary size cap, excluding UNK");
  train->add_option("--window", tr_opts.window, "Tokens per evaluation call");
  train->add_option("-o,--output", tr_output, "Model file (default: <out>/<name>.ngram)");
  actions.emplace_back(train, [&] {
    CorpusSpec spec;
    spec.path = tr_corpus;
    spec.format = tr_format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::plain_text;
    spec.field = tr_field;
    spec.seed = app.seed();
    std::vector<std::string> texts;
    for (auto& d : ingest(spec).documents) texts.push_back(std::move(d.text));
    tr_opts.model_id = tr_name;
    const auto model = train_ngram(texts, tr_opts);
    fs::path path = tr_output ? *tr_output : app.config().out / (tr_name + ".ngram");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    model.save(path);
    std::cout << json{{"model", path.string()}, {"model_id", tr_name}, {"vocab_size", model.vocab_size()},
                      {"order", model.order()}, {"documents", texts.size()}}
                     .dump()
              << '\n';
  });

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kExitInput;
  }

  try {
    app.prepare();
    for (auto& [sub, action] : actions) {
      if (sub->parsed()) action();
    }
  } catch (const Error& e) {
    std::cerr << "spot: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "spot: " << e.what() << '\n';
    return kExitInput;
  }
  return rc;
}

#include "spot/eval_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>

#include "parallel.hpp"
#include "spot/scoring.hpp"

namespace spot {

const CellStats& EvalMatrix::cell(const std::string& evaluator, const std::string& source) const {
  const auto r = std::find(evaluators.begin(), evaluators.end(), evaluator);
  const auto c = std::find(sources.begin(), sources.end(), source);
  if (r == evaluators.end() || c == sources.end()) {
    throw Error(Errc::invalid_argument, "invalid argument: no cell (" + evaluator + ", " + source + ")");
  }
  return cells[r - evaluators.begin()][c - sources.begin()];
}

namespace {

CellStats summarize(std::vector<double> xs) {
  CellStats s;
  s.n = xs.size();
  s.complete = true;
  if (xs.empty()) return s;
  double sum = 0.0;
  double carry = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    carry += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  s.mean = (sum + carry) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  s.scores = std::move(xs);
  return s;
}

}  // namespace

EvalMatrix run_matrix(const PairSet& set, const BackendRegistry& backends, const std::vector<std::string>& evaluators,
                      const MatrixOptions& options) {
  if (set.pairs.empty()) throw Error(Errc::no_pairs, "no pairs");
  if (evaluators.empty()) throw Error(Errc::invalid_argument, "invalid argument: no evaluators");

  EvalMatrix m;
  m.evaluators = evaluators;
  m.sources.push_back(kHumanSource);
  m.sources.insert(m.sources.end(), set.model_ids.begin(), set.model_ids.end());
  m.config = {set.context_len, set.completion_len, set.digest()};
  m.cells.assign(evaluators.size(), std::vector<CellStats>(m.sources.size()));

  for (const auto& e : evaluators) backends.get(e);
  const Vocabulary* pivot_vocab = backends.contains(set.pivot) ? backends.get(set.pivot).vocabulary() : nullptr;

  // Vocabulary of each source's token space. Unregistered generators are only
  // acceptable when no conversion is needed.
  auto source_vocab = [&](const std::string& src) -> const Vocabulary* {
    if (src == kHumanSource) return pivot_vocab;
    return backends.contains(src) ? backends.get(src).vocabulary() : nullptr;
  };

  const std::size_t n_src = m.sources.size();
  std::vector<std::exception_ptr> failures(evaluators.size() * n_src);
  detail::parallel_for(evaluators.size() * n_src, options.threads, [&](std::size_t idx) {
    const std::size_t r = idx / n_src;
    const std::size_t c = idx % n_src;
    const auto& evaluator = backends.get(evaluators[r]);
    const auto& src = m.sources[c];
    try {
      if (!pivot_vocab && evaluator.vocabulary()) backends.get(set.pivot);  // throws backend_not_registered
      if (src != kHumanSource && !backends.contains(src)) {
        const auto* ev = evaluator.vocabulary();
        if (ev && pivot_vocab && ev->digest() != pivot_vocab->digest()) {
          backends.get(src);  // throws backend_not_registered
        }
      }
      const Vocabulary* from = source_vocab(src);
      std::vector<double> scores;
      scores.reserve(set.pairs.size());
      for (const auto& pair : set.pairs) {
        std::vector<TokenId> tokens = convert_tokens(pair.context, pivot_vocab, evaluator.vocabulary());
        const auto& completion = src == kHumanSource ? pair.human : pair.completions.at(src);
        const auto converted = convert_tokens(completion, from, evaluator.vocabulary());
        const std::size_t ctx = tokens.size();
        tokens.insert(tokens.end(), converted.begin(), converted.end());
        scores.push_back(score_sequence(TokenSequence(std::move(tokens), ctx), evaluator).aggregate);
      }
      m.cells[r][c] = summarize(std::move(scores));
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  });

  for (std::size_t idx = 0; idx < failures.size(); ++idx) {
    if (!failures[idx]) continue;
    std::string what = "unknown failure";
    try {
      std::rethrow_exception(failures[idx]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw PartialResultError("partial result: cell (" + evaluators[idx / n_src] + ", " + m.sources[idx % n_src] +
                                 ") failed: " + what,
                             m);
  }
  return m;
}

RatioSummary ratios(const EvalMatrix& m) {
  const auto human_col = std::find(m.sources.begin(), m.sources.end(), kHumanSource);
  if (human_col == m.sources.end()) throw Error(Errc::invalid_argument, "invalid argument: matrix has no human column");
  const std::size_t hc = human_col - m.sources.begin();

  RatioSummary out;
  for (std::size_t r = 0; r < m.evaluators.size(); ++r) {
    RowRatio row;
    row.evaluator = m.evaluators[r];
    row.human_mean = m.cells[r][hc].mean;
    bool any_model = false;
    for (std::size_t c = 0; c < m.sources.size(); ++c) {
      if (c == hc) continue;
      if (!any_model || m.cells[r][c].mean > row.max_model_mean) {
        row.max_model_mean = m.cells[r][c].mean;
        row.max_source = m.sources[c];
      }
      any_model = true;
    }
    if (any_model && row.max_model_mean > 0.0) {
      row.ratio = row.human_mean / row.max_model_mean;
      out.min_ratio = out.min_ratio ? std::min(*out.min_ratio, *row.ratio) : *row.ratio;
      out.max_ratio = out.max_ratio ? std::max(*out.max_ratio, *row.ratio) : *row.ratio;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string matrix_to_csv(const EvalMatrix& m) {
  std::string out = "evaluator";
  for (const auto& s : m.sources) out += "," + s;
  out += '\n';
  char buf[96];
  for (std::size_t r = 0; r < m.evaluators.size(); ++r) {
    out += m.evaluators[r];
    for (const auto& cell : m.cells[r]) {
      std::snprintf(buf, sizeof buf, ",%.6f±%.6f(%zu)", cell.mean, cell.std, cell.n);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

nlohmann::json matrix_to_json(const EvalMatrix& m) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t r = 0; r < m.evaluators.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : m.cells[r]) row.push_back({{"mean", c.mean}, {"std", c.std}, {"n", c.n}});
    cells.push_back(std::move(row));
  }
  return {{"evaluators", m.evaluators},
          {"sources", m.sources},
          {"cells", std::move(cells)},
          {"config",
           {{"context_len", m.config.context_len},
            {"completion_len", m.config.completion_len},
            {"pairs_digest", m.config.pairs_digest}}}};
}

nlohmann::json ratios_to_json(const RatioSummary& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows) {
    nlohmann::json row = {{"evaluator", r.evaluator},
                          {"human_mean", r.human_mean},
                          {"max_model_mean", r.max_model_mean},
                          {"max_source", r.max_source}};
    if (r.ratio) {
      row["ratio"] = *r.ratio;
    } else {
      row["ratio"] = nullptr;
      row["flag"] = "all model means are zero";
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json out = {{"rows", std::move(rows)}};
  out["min_ratio"] = s.min_ratio ? nlohmann::json(*s.min_ratio) : nlohmann::json(nullptr);
  out["max_ratio"] = s.max_ratio ? nlohmann::json(*s.max_ratio) : nlohmann::json(nullptr);
  return out;
}

}  // namespace spot

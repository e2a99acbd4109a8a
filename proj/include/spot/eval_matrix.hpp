#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spot/corpus.hpp"
#include "spot/error.hpp"

namespace spot {

inline constexpr const char* kHumanSource = "human";

struct CellStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
  bool complete = false;
  std::vector<double> scores;  // per pair, in pair order
};

struct MatrixConfig {
  std::size_t context_len = 0;
  std::size_t completion_len = 0;
  std::string pairs_digest;
};

/// Mean originality of every source (columns: human, then the generators)
/// under every evaluator (rows).
struct EvalMatrix {
  std::vector<std::string> evaluators;
  std::vector<std::string> sources;
  std::vector<std::vector<CellStats>> cells;  // [evaluator][source]
  MatrixConfig config;

  const CellStats& cell(const std::string& evaluator, const std::string& source) const;
};

/// Thrown when a cell fails; carries every cell completed before the failure.
class PartialResultError : public Error {
 public:
  PartialResultError(const std::string& message, EvalMatrix partial)
      : Error(Errc::partial_result, message), partial_(std::move(partial)) {}
  const EvalMatrix& partial() const noexcept { return partial_; }

 private:
  EvalMatrix partial_;
};

struct MatrixOptions {
  std::size_t threads = 0;
};

/// Scores context ++ completion for every pair, source and evaluator.
/// Completions are converted into each evaluator's token space when the
/// vocabularies differ; the context is converted once per evaluator so every
/// sequence it scores starts with identical tokens.
EvalMatrix run_matrix(const PairSet& pairs, const BackendRegistry& backends, const std::vector<std::string>& evaluators,
                      const MatrixOptions& options = {});

struct RowRatio {
  std::string evaluator;
  double human_mean = 0.0;
  double max_model_mean = 0.0;
  std::string max_source;
  std::optional<double> ratio;  // absent when max_model_mean == 0
};

struct RatioSummary {
  std::vector<RowRatio> rows;
  std::optional<double> min_ratio;
  std::optional<double> max_ratio;
};

/// Per evaluator: human mean / largest model-source mean.
RatioSummary ratios(const EvalMatrix& matrix);

/// Rows = evaluators, columns = sources, cells "mean±std(n)".
std::string matrix_to_csv(const EvalMatrix& matrix);
nlohmann::json matrix_to_json(const EvalMatrix& matrix);
nlohmann::json ratios_to_json(const RatioSummary& summary);

}  // namespace spot

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spot/types.hpp"

namespace spot {

inline constexpr double kDefaultBandwidth = 0.001;
inline constexpr std::size_t kDefaultGridPoints = 2048;
inline constexpr double kDefaultPercentile = 0.95;

/// Originality scores of texts from one source, all scored by `evaluator`.
struct ScoreSample {
  std::vector<double> scores;
  Label label = Label::human;
  std::string evaluator;
  std::map<std::string, std::string> tags;

  /// Non-empty, finite and non-negative; throws Errc::invalid_argument.
  void validate() const;
};

/// Threshold maximizing balanced accuracy over the midpoints between adjacent
/// distinct pooled scores. Among equally good midpoints the one in the widest
/// gap wins (the lowest on further ties). When no midpoint beats 0.5 the
/// profile is flagged degenerate and rho sits at the largest pooled score.
ThresholdProfile calibrate_sweep(const ScoreSample& human, const ScoreSample& llm);

/// rho = nearest-rank p-quantile of the llm scores.
ThresholdProfile calibrate_percentile(const ScoreSample& llm, double p = kDefaultPercentile);

/// Smallest x in `scores` with at least ceil(p * n) values <= x.
double nearest_rank_quantile(std::span<const double> scores, double p);

struct AccuracySummary {
  double acc = 0.0;
  double tpr = 0.0;  // human scores above rho
  double fpr = 0.0;  // llm scores above rho
  double balanced_acc = 0.0;
};

AccuracySummary accuracy(const ScoreSample& human, const ScoreSample& llm, const ThresholdProfile& profile);

/// Balanced accuracy of the rule "score > threshold means human".
double balanced_accuracy_at(std::span<const double> human, std::span<const double> llm, double threshold);

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Gaussian KDE on a uniform grid over [min - 5h, max + 5h].
DensityCurve kde_density(const ScoreSample& sample, double bandwidth = kDefaultBandwidth,
                         std::size_t grid_points = kDefaultGridPoints);

/// Gaussian KDE evaluated at a single point.
double kde_at(std::span<const double> scores, double bandwidth, double x);

/// Trapezoidal integral of the curve.
double integrate(const DensityCurve& curve);

nlohmann::json profile_to_json(const ThresholdProfile& profile);
ThresholdProfile profile_from_json(const nlohmann::json& j);
/// "grid,density" header plus one row per grid point, 17 significant digits.
std::string density_to_csv(const DensityCurve& curve);

}  // namespace spot

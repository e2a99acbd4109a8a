#include "spot/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "spot/error.hpp"

namespace spot {

namespace {

std::size_t count_above(std::span<const double> xs, double threshold) {
  return static_cast<std::size_t>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x > threshold; }));
}

// rho must stay strictly positive even when every llm score is exactly 0.
double positive_rho(double rho) { return rho > 0.0 ? rho : std::numeric_limits<double>::min(); }

}  // namespace

void ScoreSample::validate() const {
  if (scores.empty()) throw Error(Errc::invalid_argument, "invalid argument: empty score sample");
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0) {
      throw Error(Errc::invalid_argument, "invalid argument: scores must be finite and non-negative");
    }
  }
}

double balanced_accuracy_at(std::span<const double> human, std::span<const double> llm, double threshold) {
  const double tpr = static_cast<double>(count_above(human, threshold)) / static_cast<double>(human.size());
  const double fpr = static_cast<double>(count_above(llm, threshold)) / static_cast<double>(llm.size());
  return (tpr + (1.0 - fpr)) / 2.0;
}

ThresholdProfile calibrate_sweep(const ScoreSample& human, const ScoreSample& llm) {
  human.validate();
  llm.validate();
  if (human.evaluator != llm.evaluator) {
    throw Error(Errc::profile_evaluator_mismatch, "profile evaluator mismatch: human sample scored by '" +
                                                      human.evaluator + "', llm sample by '" + llm.evaluator + "'");
  }

  std::vector<double> h(human.scores);
  std::vector<double> l(llm.scores);
  std::sort(h.begin(), h.end());
  std::sort(l.begin(), l.end());
  std::vector<double> pooled;
  pooled.reserve(h.size() + l.size());
  std::merge(h.begin(), h.end(), l.begin(), l.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  ThresholdProfile profile;
  profile.model_id = human.evaluator;
  profile.method = CalibrationMethod::sweep;
  profile.human_count = h.size();
  profile.llm_count = l.size();

  // Walk the gaps left to right; the counts of scores <= the gap's lower edge
  // advance monotonically in both sorted samples.
  double best_bacc = -1.0;
  double best_width = -1.0;
  double best_rho = 0.0;
  std::size_t h_le = 0;
  std::size_t l_le = 0;
  const double nh = static_cast<double>(h.size());
  const double nl = static_cast<double>(l.size());
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    const double lo = pooled[i];
    const double hi = pooled[i + 1];
    while (h_le < h.size() && h[h_le] <= lo) ++h_le;
    while (l_le < l.size() && l[l_le] <= lo) ++l_le;
    const double tpr = static_cast<double>(h.size() - h_le) / nh;
    const double fpr = static_cast<double>(l.size() - l_le) / nl;
    const double bacc = (tpr + (1.0 - fpr)) / 2.0;
    const double width = hi - lo;
    if (bacc > best_bacc || (bacc == best_bacc && width > best_width)) {
      best_bacc = bacc;
      best_width = width;
      best_rho = lo + width / 2.0;
    }
  }

  if (best_bacc < 0.5) {
    // Nothing beats calling everything llm.
    profile.degenerate = true;
    profile.rho = positive_rho(pooled.back());
    profile.balanced_accuracy = balanced_accuracy_at(h, l, profile.rho);
  } else {
    profile.rho = positive_rho(best_rho);
    profile.balanced_accuracy = best_bacc;
    profile.degenerate = best_bacc == 0.5;
  }
  return profile;
}

double nearest_rank_quantile(std::span<const double> scores, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(Errc::invalid_percentile, "invalid percentile: p must lie in (0, 1), got " + std::to_string(p));
  }
  if (scores.empty()) throw Error(Errc::invalid_argument, "invalid argument: empty score sample");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // ceil(p * n) with a guard against p * n landing one ulp above an integer
  auto rank = static_cast<std::size_t>(std::ceil(p * n * (1.0 - 1e-12)));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

ThresholdProfile calibrate_percentile(const ScoreSample& llm, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(Errc::invalid_percentile, "invalid percentile: p must lie in (0, 1), got " + std::to_string(p));
  }
  llm.validate();
  ThresholdProfile profile;
  profile.model_id = llm.evaluator;
  profile.method = CalibrationMethod::percentile;
  profile.percentile = p;
  profile.llm_count = llm.scores.size();
  profile.rho = positive_rho(nearest_rank_quantile(llm.scores, p));
  return profile;
}

AccuracySummary accuracy(const ScoreSample& human, const ScoreSample& llm, const ThresholdProfile& profile) {
  human.validate();
  llm.validate();
  profile.validate();
  const std::size_t h_above = count_above(human.scores, profile.rho);
  const std::size_t l_above = count_above(llm.scores, profile.rho);
  const double nh = static_cast<double>(human.scores.size());
  const double nl = static_cast<double>(llm.scores.size());
  AccuracySummary s;
  s.tpr = static_cast<double>(h_above) / nh;
  s.fpr = static_cast<double>(l_above) / nl;
  s.acc = static_cast<double>(h_above + (llm.scores.size() - l_above)) / (nh + nl);
  s.balanced_acc = (s.tpr + (1.0 - s.fpr)) / 2.0;
  return s;
}

double kde_at(std::span<const double> scores, double bandwidth, double x) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error(Errc::invalid_bandwidth, "invalid bandwidth: " + std::to_string(bandwidth));
  }
  if (scores.empty()) throw Error(Errc::invalid_argument, "invalid argument: empty score sample");
  const double norm = 1.0 / (static_cast<double>(scores.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  double sum = 0.0;
  for (double s : scores) {
    const double z = (x - s) / bandwidth;
    sum += std::exp(-0.5 * z * z);
  }
  return norm * sum;
}

DensityCurve kde_density(const ScoreSample& sample, double bandwidth, std::size_t grid_points) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error(Errc::invalid_bandwidth, "invalid bandwidth: " + std::to_string(bandwidth));
  }
  if (grid_points < 2) throw Error(Errc::invalid_argument, "invalid argument: grid_points must be at least 2");
  sample.validate();

  std::vector<double> sorted(sample.scores);
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front() - 5.0 * bandwidth;
  const double hi = sorted.back() + 5.0 * bandwidth;
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);

  DensityCurve curve;
  curve.bandwidth = bandwidth;
  curve.grid.resize(grid_points);
  curve.density.resize(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    curve.grid[i] = i + 1 == grid_points ? hi : lo + static_cast<double>(i) * step;
  }

  // Kernels beyond 40 bandwidths contribute below 1e-340 and are skipped.
  const double cutoff = 40.0 * bandwidth;
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x = curve.grid[i];
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
    auto last = std::upper_bound(first, sorted.end(), x + cutoff);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / bandwidth;
      sum += std::exp(-0.5 * z * z);
    }
    curve.density[i] = norm * sum;
  }
  return curve;
}

double integrate(const DensityCurve& curve) {
  double total = 0.0;
  for (std::size_t i = 1; i < curve.grid.size(); ++i) {
    total += 0.5 * (curve.density[i] + curve.density[i - 1]) * (curve.grid[i] - curve.grid[i - 1]);
  }
  return total;
}

nlohmann::json profile_to_json(const ThresholdProfile& profile) {
  nlohmann::json j;
  j["evaluator"] = profile.model_id;
  j["rho"] = profile.rho;
  j["method"] = profile.method == CalibrationMethod::sweep ? "sweep" : "percentile";
  if (profile.method == CalibrationMethod::percentile) j["p"] = profile.percentile;
  j["counts"] = {{"human", profile.human_count}, {"llm", profile.llm_count}};
  if (profile.balanced_accuracy) j["balanced_accuracy"] = *profile.balanced_accuracy;
  if (profile.degenerate) j["degenerate"] = true;
  j["created_at"] = profile.created_at ? nlohmann::json(*profile.created_at) : nlohmann::json(nullptr);
  return j;
}

ThresholdProfile profile_from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& what) { return Error(Errc::format_error, "format error: profile " + what); };
  if (!j.is_object()) throw bad("is not a JSON object");
  ThresholdProfile p;
  try {
    p.model_id = j.at("evaluator").get<std::string>();
    p.rho = j.at("rho").get<double>();
    const auto method = j.at("method").get<std::string>();
    if (method == "sweep") {
      p.method = CalibrationMethod::sweep;
    } else if (method == "percentile") {
      p.method = CalibrationMethod::percentile;
      p.percentile = j.at("p").get<double>();
    } else {
      throw bad("has unknown method '" + method + "'");
    }
    if (j.contains("counts")) {
      p.human_count = j["counts"].value("human", std::size_t{0});
      p.llm_count = j["counts"].value("llm", std::size_t{0});
    }
    if (j.contains("balanced_accuracy")) p.balanced_accuracy = j["balanced_accuracy"].get<double>();
    p.degenerate = j.value("degenerate", false);
    if (j.contains("created_at") && j["created_at"].is_string()) p.created_at = j["created_at"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("is malformed: ") + e.what());
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw bad(e.what());
  }
  return p;
}

std::string density_to_csv(const DensityCurve& curve) {
  std::string out = "grid,density\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.grid[i], curve.density[i]);
    out += buf;
  }
  return out;
}

}  // namespace spot

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <tuple>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace humor {

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  std::optional<double> rmse;  // absent when no rated example was seen
};

inline double accuracy_score(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw MetricsError("accuracy: empty or mismatched inputs");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(predictions.size());
}

// Positive-class F1; 0 when precision + recall is 0.
inline double f1_score(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw MetricsError("f1: empty or mismatched inputs");
  long long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    else if (predictions[i] == 1 && labels[i] == 0) ++fp;
    else if (predictions[i] == 0 && labels[i] == 1) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(tp) / denom;
}

inline double rmse_score(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty() || predictions.size() != targets.size())
    throw MetricsError("rmse: empty or mismatched inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

// ---- strategy comparison tables ----

// Aggregated result of one training strategy over a set of seeds.
struct StrategyRow {
  std::string name;  // one of: baseline, AT, LC, AT+LC, ST, MT, MT+WL
  Metrics mean;
  Metrics spread;  // population standard deviation over seeds
  int seed_count = 0;
};

inline StrategyRow aggregate_runs(const std::string& name, std::span<const Metrics> runs) {
  if (runs.empty()) throw MetricsError("aggregate_runs: no runs");
  StrategyRow row;
  row.name = name;
  row.seed_count = static_cast<int>(runs.size());

  auto mean_sd = [&](auto get) -> std::pair<double, double> {
    double m = 0.0;
    for (const Metrics& r : runs) m += get(r);
    m /= static_cast<double>(runs.size());
    double v = 0.0;
    for (const Metrics& r : runs) {
      const double d = get(r) - m;
      v += d * d;
    }
    return {m, std::sqrt(v / static_cast<double>(runs.size()))};
  };

  std::tie(row.mean.accuracy, row.spread.accuracy) =
      mean_sd([](const Metrics& m) { return m.accuracy; });
  std::tie(row.mean.f1, row.spread.f1) = mean_sd([](const Metrics& m) { return m.f1; });

  const bool all_rated = std::all_of(runs.begin(), runs.end(),
                                     [](const Metrics& m) { return m.rmse.has_value(); });
  if (all_rated) {
    double m = 0.0;
    for (const Metrics& r : runs) m += *r.rmse;
    m /= static_cast<double>(runs.size());
    double v = 0.0;
    for (const Metrics& r : runs) {
      const double d = *r.rmse - m;
      v += d * d;
    }
    row.mean.rmse = m;
    row.spread.rmse = std::sqrt(v / static_cast<double>(runs.size()));
  }
  return row;
}

// Fixed column order (strategy, Acc, F1, RMSE), four decimals, the best
// value in each column marked with '*'. Higher is better for Acc/F1, lower
// for RMSE; ties go to the earlier row. Byte-stable for identical inputs.
inline std::string render_comparison(std::span<const StrategyRow> rows) {
  if (rows.empty()) throw MetricsError("render_comparison: no rows");

  int best_acc = 0, best_f1 = 0, best_rmse = -1;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.mean.accuracy > rows[static_cast<std::size_t>(best_acc)].mean.accuracy) best_acc = i;
    if (r.mean.f1 > rows[static_cast<std::size_t>(best_f1)].mean.f1) best_f1 = i;
    if (r.mean.rmse) {
      if (best_rmse < 0 || *r.mean.rmse < *rows[static_cast<std::size_t>(best_rmse)].mean.rmse)
        best_rmse = i;
    }
  }

  auto cell = [](double mean, double sd, bool best, int seeds) {
    char buf[64];
    if (seeds > 1)
      std::snprintf(buf, sizeof(buf), "%.4f+-%.4f%s", mean, sd, best ? "*" : " ");
    else
      std::snprintf(buf, sizeof(buf), "%.4f%s", mean, best ? "*" : " ");
    return std::string(buf);
  };

  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %-16s %-16s %-16s %s\n", "strategy", "acc", "f1",
                "rmse", "seeds");
  out += line;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    const std::string acc = cell(r.mean.accuracy, r.spread.accuracy, i == best_acc, r.seed_count);
    const std::string f1 = cell(r.mean.f1, r.spread.f1, i == best_f1, r.seed_count);
    const std::string rm = r.mean.rmse
                               ? cell(*r.mean.rmse, r.spread.rmse ? *r.spread.rmse : 0.0,
                                      i == best_rmse, r.seed_count)
                               : std::string("-");
    std::snprintf(line, sizeof(line), "%-10s %-16s %-16s %-16s %d\n", r.name.c_str(), acc.c_str(),
                  f1.c_str(), rm.c_str(), r.seed_count);
    out += line;
  }
  return out;
}

}  // namespace humor

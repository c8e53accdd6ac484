#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mggp/dataset.hpp"
#include "mggp/errors.hpp"
#include "mggp/regression.hpp"

namespace mggp {

struct GradeBand {
  std::string label;
  double min_inclusive = 0.0;
};

/// Declarative grade bands over predicted totals, ordered by descending
/// minimum. The bottom band catches everything, and failure_threshold is the
/// lower edge of the lowest passing band: a prediction fails iff it falls
/// strictly below it (a score exactly on the threshold passes).
struct GradeBands {
  std::vector<GradeBand> bands;
  double failure_threshold = 40.0;

  /// Bands matching the bundled score data: D from 45, E from 40, F below.
  static GradeBands defaults() {
    GradeBands g;
    g.bands = {{"D", 45.0},
               {"E", 40.0},
               {"F", -std::numeric_limits<double>::infinity()}};
    g.failure_threshold = 40.0;
    return g;
  }

  /// Default labels when the threshold is untouched; otherwise a plain
  /// pass/fail split at the requested cutoff.
  static GradeBands with_threshold(double threshold) {
    if (threshold == 40.0) return defaults();
    GradeBands g;
    g.bands = {{"PASS", threshold},
               {"FAIL", -std::numeric_limits<double>::infinity()}};
    g.failure_threshold = threshold;
    return g;
  }

  void validate() const {
    if (bands.empty()) throw ConfigError("grade bands must not be empty");
    for (std::size_t i = 1; i < bands.size(); ++i)
      if (!(bands[i].min_inclusive < bands[i - 1].min_inclusive))
        throw ConfigError("grade band minimums must be strictly decreasing");
    if (bands.back().min_inclusive != -std::numeric_limits<double>::infinity())
      throw ConfigError("lowest grade band must be unbounded below");
  }

  /// First band whose minimum does not exceed the value.
  const std::string& label_for(double value) const {
    for (const auto& band : bands)
      if (band.min_inclusive <= value) return band.label;
    return bands.back().label;
  }
};

struct RowClassification {
  int row = 0;                 // 1-based data row
  double predicted = 0.0;
  std::string label;
  bool failed = false;
};

struct ClassificationReport {
  std::vector<RowClassification> rows;
  int fail_count = 0;
  int total_count = 0;
  double failure_rate_percent = 0.0;
};

/// Predicts every row, assigns its grade band and aggregates the failure
/// rate. Failure means strictly below the threshold.
inline ClassificationReport classify_rows(const FittedModel& model, const Dataset& data,
                                          const GradeBands& bands) {
  bands.validate();
  const auto predictions = predict(model, data);
  ClassificationReport report;
  report.total_count = static_cast<int>(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = predictions[i];
    const bool failed = p < bands.failure_threshold;
    report.rows.push_back({static_cast<int>(i) + 1, p, bands.label_for(p), failed});
    if (failed) ++report.fail_count;
  }
  report.failure_rate_percent =
      report.total_count > 0
          ? 100.0 * report.fail_count / report.total_count
          : 0.0;
  return report;
}

inline double failure_rate(const ClassificationReport& report) {
  if (report.total_count < 1)
    throw DataError("failure rate of an empty report is undefined");
  return 100.0 * report.fail_count / report.total_count;
}

}  // namespace mggp

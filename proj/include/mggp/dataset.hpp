#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mggp/errors.hpp"

namespace mggp {

/// Tabular training data: an R x C predictor matrix with a response column.
/// Rows are stored row-major so a single observation can be handed to tree
/// evaluation as a contiguous span.
struct Dataset {
  std::vector<std::string> var_names;      // C predictor names
  std::vector<std::vector<double>> rows;   // R rows of C values each
  std::vector<double> response;            // R target values
  std::string response_name;

  int num_rows() const noexcept { return static_cast<int>(rows.size()); }
  int num_vars() const noexcept { return static_cast<int>(var_names.size()); }

  std::span<const double> row(int i) const { return rows[static_cast<std::size_t>(i)]; }

  /// Column i as a fresh vector (predictors are stored row-major).
  std::vector<double> column(int i) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(i)]);
    return out;
  }

  /// Enforces the structural invariants: at least one row and one predictor,
  /// unique names, rectangular shape, all values finite.
  void validate() const {
    if (var_names.empty()) throw DataError("dataset has no predictor columns");
    if (rows.empty()) throw DataError("dataset has no rows");
    if (response.size() != rows.size())
      throw DataError("dataset response length does not match row count");
    std::unordered_set<std::string> seen;
    for (const auto& name : var_names)
      if (!seen.insert(name).second)
        throw DataError("duplicate predictor name: " + name);
    if (seen.count(response_name) != 0)
      throw DataError("response column duplicates a predictor name: " + response_name);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != var_names.size())
        throw DataError("dataset row " + std::to_string(i + 1) + " has wrong width");
      for (double v : rows[i])
        if (!std::isfinite(v))
          throw DataError("non-finite predictor value in row " + std::to_string(i + 1));
      if (!std::isfinite(response[i]))
        throw DataError("non-finite response value in row " + std::to_string(i + 1));
    }
  }
};

}  // namespace mggp

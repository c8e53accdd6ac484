#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mggp/dataset.hpp"
#include "mggp/errors.hpp"
#include "mggp/expr_tree.hpp"
#include "mggp/genetic_ops.hpp"

namespace mggp {

/// Root mean square error between two equal-length vectors.
inline double rmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw std::invalid_argument("rmse: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("rmse: empty input");
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - targets[i];
    sum_sq += r * r;
  }
  return std::sqrt(sum_sq / static_cast<double>(predictions.size()));
}

namespace detail {

/// Relative pivot threshold for declaring the design matrix rank deficient.
inline constexpr double kRankThreshold = 1e-10;

/// Design matrix: column 0 all ones, column j+1 the j-th gene evaluated over
/// every row. Returns nullopt when any entry is non-finite (a gene blew up
/// numerically on this data).
inline std::optional<Eigen::MatrixXd> design_matrix(std::span<const ExpressionTree> genes,
                                                    const Dataset& data) {
  const int rows = data.num_rows();
  const int cols = static_cast<int>(genes.size()) + 1;
  Eigen::MatrixXd phi(rows, cols);
  phi.col(0).setOnes();
  for (int j = 0; j < cols - 1; ++j) {
    const auto col = evaluate_column(genes[static_cast<std::size_t>(j)], data);
    for (int i = 0; i < rows; ++i) {
      if (!std::isfinite(col[static_cast<std::size_t>(i)])) return std::nullopt;
      phi(i, j + 1) = col[static_cast<std::size_t>(i)];
    }
  }
  return phi;
}

/// Minimum-norm least-squares solution via a rank-revealing complete
/// orthogonal decomposition (column-pivoted QR under the hood). Handles the
/// duplicate-gene rank-deficient systems GP populations routinely produce.
inline Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& phi,
                                           const Eigen::VectorXd& y) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(kRankThreshold);
  cod.compute(phi);
  return cod.solve(y);
}

}  // namespace detail

/// Least-squares gene weights (bias first). nullopt means the design matrix
/// contained non-finite entries; callers map that to the worst-fitness
/// sentinel rather than aborting the run.
inline std::optional<std::vector<double>> fit_weights(std::span<const ExpressionTree> genes,
                                                      const Dataset& data) {
  if (genes.empty()) throw std::invalid_argument("fit_weights: no genes");
  const auto phi = detail::design_matrix(genes, data);
  if (!phi) return std::nullopt;
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(data.response.data(),
                                        static_cast<Eigen::Index>(data.response.size()));
  const Eigen::VectorXd d = detail::solve_least_squares(*phi, y);
  return std::vector<double>(d.data(), d.data() + d.size());
}

/// A fitted multigene model ready for prediction on new data. Variables are
/// matched to datasets by name, so the model survives column reordering.
struct FittedModel {
  std::vector<ExpressionTree> genes;
  std::vector<double> weights;            // bias d0 first, then one per gene
  double train_rmse = 0.0;
  std::vector<std::string> var_names;     // names behind the genes' indices
};

namespace detail {

/// Maps each model variable actually used by some gene to its column in the
/// dataset. Throws naming the first missing column.
inline std::vector<int> variable_mapping(const FittedModel& model, const Dataset& data) {
  std::vector<bool> used(model.var_names.size(), false);
  for (const auto& gene : model.genes)
    for (int v : variables_used(gene)) used[static_cast<std::size_t>(v)] = true;
  std::vector<int> mapping(model.var_names.size(), -1);
  for (std::size_t v = 0; v < model.var_names.size(); ++v) {
    if (!used[v]) continue;
    bool found = false;
    for (int c = 0; c < data.num_vars(); ++c) {
      if (data.var_names[static_cast<std::size_t>(c)] == model.var_names[v]) {
        mapping[v] = c;
        found = true;
        break;
      }
    }
    if (!found)
      throw DataError("dataset is missing variable " + model.var_names[v] +
                      " required by the model");
  }
  return mapping;
}

}  // namespace detail

/// Pseudolinear prediction: d0 plus the weighted output of every gene.
inline std::vector<double> predict(const FittedModel& model, const Dataset& data) {
  if (model.weights.size() != model.genes.size() + 1)
    throw DataError("model weight count does not match gene count");
  const auto mapping = detail::variable_mapping(model, data);
  std::vector<double> mapped_row(model.var_names.size(), 0.0);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(data.num_rows()));
  for (int i = 0; i < data.num_rows(); ++i) {
    const auto row = data.row(i);
    for (std::size_t v = 0; v < mapping.size(); ++v)
      if (mapping[v] >= 0) mapped_row[v] = row[static_cast<std::size_t>(mapping[v])];
    double value = model.weights[0];
    for (std::size_t j = 0; j < model.genes.size(); ++j)
      value += model.weights[j + 1] * model.genes[j].evaluate(mapped_row);
    out.push_back(value);
  }
  return out;
}

/// Fits weights and fills in fitness (training RMSE) and complexity. Numeric
/// blowups do not abort: the individual simply receives the worst-fitness
/// sentinel and evolution moves on.
inline Individual evaluate_individual(Individual ind, const Dataset& data) {
  ind.refresh_complexity();
  const auto phi = detail::design_matrix(ind.genes, data);
  if (!phi) {
    ind.weights.clear();
    ind.fitness = kWorstFitness;
    return ind;
  }
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(data.response.data(),
                                        static_cast<Eigen::Index>(data.response.size()));
  const Eigen::VectorXd d = detail::solve_least_squares(*phi, y);
  const Eigen::VectorXd predictions = *phi * d;
  bool finite = true;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!std::isfinite(d[i])) finite = false;
  for (Eigen::Index i = 0; i < predictions.size(); ++i)
    if (!std::isfinite(predictions[i])) finite = false;
  if (!finite) {
    ind.weights.clear();
    ind.fitness = kWorstFitness;
    return ind;
  }
  ind.weights.assign(d.data(), d.data() + d.size());
  ind.fitness = rmse({predictions.data(), static_cast<std::size_t>(predictions.size())},
                     data.response);
  return ind;
}

/// Individual -> standalone model, binding the dataset's variable names.
inline FittedModel to_fitted_model(const Individual& ind, const Dataset& data) {
  if (!ind.evaluated() || ind.weights.empty())
    throw DataError("cannot export an unfitted individual as a model");
  FittedModel model;
  model.genes = ind.genes;
  model.weights = ind.weights;
  model.train_rmse = ind.fitness.value();
  model.var_names = data.var_names;
  return model;
}

}  // namespace mggp

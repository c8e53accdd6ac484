#pragma once

#include <unistd.h>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mggp/dataio.hpp"
#include "mggp/dataset.hpp"
#include "mggp/evolution.hpp"
#include "mggp/expr_tree.hpp"
#include "mggp/genetic_ops.hpp"
#include "mggp/regression.hpp"
#include "mggp/rng.hpp"

namespace support {

// ---------------------------------------------------------------------------
// The bundled 14-student score table, embedded so unit tests do not depend on
// file I/O. Columns are x1..x5 (continuous assessment parts) and x6 (CA
// total); the response is the course total. Nine rows are graded F.

inline constexpr int kRows = 14;
inline constexpr int kVars = 6;

inline constexpr std::array<std::array<double, kVars>, kRows> kScores = {{
    {0, 7, 0, 0, 0, 16},
    {6, 7, 0, 6, 5, 20},
    {1, 6, 3, 0, 0, 16},
    {0, 4, 4, 3, 2, 17},
    {0, 4, 2, 2, 1, 16},
    {0, 5, 0, 9, 6, 20},
    {0, 2, 1, 1, 0, 16},
    {0, 4, 0, 0, 0, 16},
    {5, 10, 0, 0, 5, 20},
    {0, 11, 4, 6, 5, 21},
    {8, 4, 2, 0, 0, 16},
    {0, 8, 6, 6, 0, 21},
    {0, 7, 0, 0, 4, 16},
    {0, 2, 0, 0, 0, 16},
}};

inline constexpr std::array<double, kRows> kTotals = {23, 44, 26, 30, 25, 40, 20,
                                                      20, 40, 47, 30, 41, 27, 18};

inline constexpr std::array<const char*, kRows> kGrades = {
    "F", "E", "F", "F", "F", "E", "F", "F", "E", "D", "F", "E", "F", "F"};

inline mggp::Dataset make_score_table() {
  mggp::Dataset data;
  data.var_names = {"x1", "x2", "x3", "x4", "x5", "x6"};
  data.response_name = "total";
  for (int r = 0; r < kRows; ++r) {
    data.rows.emplace_back(kScores[static_cast<std::size_t>(r)].begin(),
                           kScores[static_cast<std::size_t>(r)].end());
    data.response.push_back(kTotals[static_cast<std::size_t>(r)]);
  }
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// A scripted random source for driving stochastic operators down a known
// path. Each queue feeds one method; running a queue dry is a test bug.

class ScriptedRng {
 public:
  std::deque<std::uint64_t> u64s;
  std::deque<double> uniforms;
  std::deque<int> ints;
  std::deque<bool> bools;

  std::uint64_t next_u64() { return pop(u64s, "next_u64"); }
  double uniform() { return pop(uniforms, "uniform"); }
  std::uint64_t uniform_int(std::uint64_t bound) {
    const auto v = static_cast<std::uint64_t>(pop(ints, "uniform_int"));
    if (v >= bound)
      throw std::logic_error("scripted uniform_int value " + std::to_string(v) +
                             " out of bound " + std::to_string(bound));
    return v;
  }
  bool bernoulli(double) { return pop(bools, "bernoulli"); }

 private:
  template <typename Q>
  static typename Q::value_type pop(Q& queue, const char* what) {
    if (queue.empty()) throw std::logic_error(std::string("scripted queue empty: ") + what);
    auto v = queue.front();
    queue.pop_front();
    return v;
  }
};

static_assert(mggp::RandomSource<ScriptedRng>);

// ---------------------------------------------------------------------------
// Canonical text forms for determinism comparisons.

inline std::string serialize_individual(const mggp::Individual& ind,
                                        std::span<const std::string> var_names) {
  std::ostringstream out;
  for (const auto& gene : ind.genes) out << mggp::to_infix(gene, var_names) << ";";
  out << "|w:";
  for (double w : ind.weights) out << mggp::detail::format_double_17(w) << ",";
  out << "|f:";
  out << (ind.fitness ? mggp::detail::format_double_17(*ind.fitness) : std::string("none"));
  out << "|c:" << ind.complexity;
  return out.str();
}

inline std::string serialize_population(std::span<const mggp::Individual> population,
                                        std::span<const std::string> var_names) {
  std::ostringstream out;
  for (const auto& ind : population) out << serialize_individual(ind, var_names) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Independent least-squares oracle: forms the normal equations and solves by
// Gaussian elimination with partial pivoting. Deliberately shares no code
// with the engine's QR-based path.

inline std::vector<double> normal_equation_weights(
    const std::vector<mggp::ExpressionTree>& genes, const mggp::Dataset& data) {
  const std::size_t n = data.num_rows();
  const std::size_t m = genes.size() + 1;
  std::vector<std::vector<double>> phi(n, std::vector<double>(m, 1.0));
  for (std::size_t j = 0; j < genes.size(); ++j) {
    const auto col = mggp::evaluate_column(genes[j], data);
    for (std::size_t i = 0; i < n; ++i) phi[i][j + 1] = col[i];
  }

  std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
  std::vector<double> b(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < m; ++r) {
      b[r] += phi[i][r] * data.response[i];
      for (std::size_t c = 0; c < m; ++c) a[r][c] += phi[i][r] * phi[i][c];
    }

  double scale = 1.0;
  for (std::size_t r = 0; r < m; ++r) scale = std::max(scale, std::abs(a[r][r]));

  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-9 * scale)
      throw std::runtime_error("normal-equation oracle: singular system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < m; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> weights(m);
  for (std::size_t r = 0; r < m; ++r) weights[r] = b[r] / a[r][r];
  return weights;
}

// ---------------------------------------------------------------------------
// O(n^2) non-domination oracle over (fitness, complexity) pairs.

inline std::vector<bool> brute_force_dominated(const std::vector<double>& fitness,
                                               const std::vector<int>& complexity) {
  const std::size_t n = fitness.size();
  std::vector<bool> dominated(n, false);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool no_worse =
          fitness[j] <= fitness[i] && complexity[j] <= complexity[i];
      const bool strictly_better =
          fitness[j] < fitness[i] || complexity[j] < complexity[i];
      if (no_worse && strictly_better) {
        dominated[i] = true;
        break;
      }
    }
  return dominated;
}

// ---------------------------------------------------------------------------
// Random fixtures. std::mt19937_64 used on purpose: fixture generation should
// not depend on the generator under test.

inline mggp::Dataset random_dataset(std::mt19937_64& gen, int rows, int vars) {
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  mggp::Dataset data;
  for (int v = 0; v < vars; ++v) data.var_names.push_back("x" + std::to_string(v + 1));
  data.response_name = "y";
  for (int r = 0; r < rows; ++r) {
    std::vector<double> row;
    for (int v = 0; v < vars; ++v) row.push_back(value(gen));
    data.rows.push_back(std::move(row));
    data.response.push_back(value(gen));
  }
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// Scratch files.

inline std::filesystem::path make_temp_dir() {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("mggp_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline mggp::Individual random_individual(mggp::Rng& rng, int max_genes, int max_depth,
                                          int num_vars) {
  std::vector<mggp::ExpressionTree> genes;
  const int count = 1 + static_cast<int>(rng.uniform_int(max_genes));
  for (int i = 0; i < count; ++i)
    genes.push_back(mggp::random_tree(max_depth, mggp::BuildMethod::Grow, num_vars, rng));
  return mggp::make_individual(std::move(genes));
}

/// The exact-reconstruction model for the bundled table: one gene summing all
/// six columns, weights {0, 1}. Its predictions equal the observed totals.
inline mggp::FittedModel identity_model() {
  mggp::FittedModel model;
  model.var_names = {"x1", "x2", "x3", "x4", "x5", "x6"};
  model.genes.push_back(
      mggp::parse_infix("(((x1 + x2) + (x3 + x4)) + (x5 + x6))", model.var_names));
  model.weights = {0.0, 1.0};
  model.train_rmse = 0.0;
  return model;
}

}  // namespace support

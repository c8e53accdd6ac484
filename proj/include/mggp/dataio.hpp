#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mggp/classify.hpp"
#include "mggp/dataset.hpp"
#include "mggp/errors.hpp"
#include "mggp/evolution.hpp"
#include "mggp/regression.hpp"

namespace mggp {

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

/// Shortest decimal that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// 17 significant digits: enough for a bit-exact double round trip even with
/// strtod-style parsers.
inline std::string format_double_17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::optional<double> try_parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::optional<std::uint64_t> try_parse_u64(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::uint64_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::optional<long long> try_parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  long long value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed while writing " + path.string());
}

/// Variable names are embedded in expression text and model files, so they
/// must survive tokenization: letters, digits, '_' and '.' only.
inline bool valid_var_name(std::string_view name) noexcept {
  if (name.empty()) return false;
  for (char c : name)
    if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '_' && c != '.')
      return false;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset CSV.

/// Loads a CSV with a mandatory header row. Predictors default to every
/// column except the response and the exclude list; passing explicit
/// predictor names selects exactly those. Only selected columns are parsed,
/// so derived text columns can ride along unexcluded trouble-free. An empty
/// response name loads a response-free table (all-zero response), which is
/// what prediction inputs look like.
inline Dataset load_dataset(const std::filesystem::path& path,
                            const std::string& response_column,
                            std::span<const std::string> predictor_columns = {},
                            std::span<const std::string> exclude_columns = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path.string());

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (detail::trim(line).empty()) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw DataError("dataset file " + path.string() + " is empty");
  if (lines.size() == 1)
    throw DataError("dataset file " + path.string() + " has a header but no data rows");

  const auto header = detail::split(lines[0], ',');
  const auto column_index = [&header](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };

  const int response_idx = response_column.empty() ? -1 : column_index(response_column);
  if (!response_column.empty() && response_idx < 0)
    throw DataError("dataset is missing column " + response_column);

  std::vector<int> predictor_idx;
  std::vector<std::string> predictor_names;
  if (!predictor_columns.empty()) {
    for (const auto& name : predictor_columns) {
      const int idx = column_index(name);
      if (idx < 0) throw DataError("dataset is missing column " + name);
      predictor_idx.push_back(idx);
      predictor_names.push_back(name);
    }
  } else {
    const auto excluded = [&](const std::string& name) {
      for (const auto& e : exclude_columns)
        if (e == name) return true;
      return false;
    };
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<int>(i) == response_idx) continue;
      if (excluded(header[i])) continue;
      predictor_idx.push_back(static_cast<int>(i));
      predictor_names.push_back(header[i]);
    }
  }

  Dataset data;
  data.var_names = predictor_names;
  data.response_name = response_column;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = detail::split(lines[r], ',');
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(r) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    const auto cell_value = [&](int col) {
      const auto parsed = detail::try_parse_double(cells[static_cast<std::size_t>(col)]);
      if (!parsed)
        throw DataError("non-numeric value '" + cells[static_cast<std::size_t>(col)] +
                        "' at row " + std::to_string(r) + ", column " +
                        header[static_cast<std::size_t>(col)]);
      return *parsed;
    };
    std::vector<double> row;
    row.reserve(predictor_idx.size());
    for (int col : predictor_idx) row.push_back(cell_value(col));
    data.rows.push_back(std::move(row));
    data.response.push_back(response_idx < 0 ? 0.0 : cell_value(response_idx));
  }
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// Configuration files: flat key=value lines, '#' comments, unknown keys
// rejected. Missing keys keep the built-in defaults.

/// Everything a run needs beyond the dataset itself: engine parameters plus
/// classification threshold and dataset column selection.
struct AppConfig {
  RunConfig run{};
  double failure_threshold = 40.0;
  std::string response_column = "total";
  std::vector<std::string> exclude_columns = {"time", "exam_score", "grade"};
};

namespace detail {

inline std::string join(std::span<const std::string> parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace detail

/// The full effective configuration as ordered key=value pairs; this is what
/// gets echoed into run-log headers so any result can be replayed exactly.
inline std::vector<std::pair<std::string, std::string>> config_entries(const AppConfig& config) {
  using detail::format_double;
  return {
      {"population_size", std::to_string(config.run.population_size)},
      {"max_generations", std::to_string(config.run.max_generations)},
      {"tournament_size", std::to_string(config.run.tournament_size)},
      {"target_fitness", format_double(config.run.target_fitness)},
      {"max_tree_depth", std::to_string(config.run.max_tree_depth)},
      {"max_genes", std::to_string(config.run.max_genes)},
      {"p_crossover", format_double(config.run.rates.p_crossover)},
      {"p_mutation", format_double(config.run.rates.p_mutation)},
      {"p_reproduction", format_double(config.run.rates.p_reproduction)},
      {"p_gene_crossover", format_double(config.run.rates.p_gene_crossover_given_crossover)},
      {"seed", std::to_string(config.run.seed)},
      {"elitism_count", std::to_string(config.run.elitism_count)},
      {"failure_threshold", format_double(config.failure_threshold)},
      {"response_column", config.response_column},
      {"exclude_columns", detail::join(config.exclude_columns, ',')},
  };
}

/// Applies one key=value pair onto the config. Unknown keys and unparsable
/// values are configuration errors.
inline void apply_config_entry(AppConfig& config, const std::string& key,
                               const std::string& value) {
  const auto as_int = [&](int lo) {
    const auto v = detail::try_parse_int(value);
    if (!v || *v < lo || *v > std::numeric_limits<int>::max())
      throw ConfigError("invalid value '" + value + "' for " + key);
    return static_cast<int>(*v);
  };
  const auto as_double = [&] {
    const auto v = detail::try_parse_double(value);
    if (!v) throw ConfigError("invalid value '" + value + "' for " + key);
    return *v;
  };

  if (key == "population_size") config.run.population_size = as_int(1);
  else if (key == "max_generations") config.run.max_generations = as_int(1);
  else if (key == "tournament_size") config.run.tournament_size = as_int(1);
  else if (key == "target_fitness") config.run.target_fitness = as_double();
  else if (key == "max_tree_depth") config.run.max_tree_depth = as_int(0);
  else if (key == "max_genes") config.run.max_genes = as_int(1);
  else if (key == "p_crossover") config.run.rates.p_crossover = as_double();
  else if (key == "p_mutation") config.run.rates.p_mutation = as_double();
  else if (key == "p_reproduction") config.run.rates.p_reproduction = as_double();
  else if (key == "p_gene_crossover")
    config.run.rates.p_gene_crossover_given_crossover = as_double();
  else if (key == "seed") {
    const auto v = detail::try_parse_u64(value);
    if (!v) throw ConfigError("invalid value '" + value + "' for seed");
    config.run.seed = *v;
  } else if (key == "elitism_count") config.run.elitism_count = as_int(0);
  else if (key == "failure_threshold") config.failure_threshold = as_double();
  else if (key == "response_column") config.response_column = value;
  else if (key == "exclude_columns") {
    config.exclude_columns.clear();
    for (auto& name : detail::split(value, ','))
      if (!name.empty()) config.exclude_columns.push_back(std::move(name));
  } else {
    throw ConfigError("unknown configuration key: " + key);
  }
}

inline AppConfig parse_config_text(std::string_view text) {
  AppConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = detail::trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key=value, got '" + std::string(line) + "'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    apply_config_entry(config, key, value);
  }
  return config;
}

inline AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

// ---------------------------------------------------------------------------
// Model files.

inline constexpr int kModelFormatVersion = 1;

/// Plain text model layout: version line, variable names, one fully
/// parenthesized infix line per gene, the weights at 17 significant digits,
/// and the training RMSE. Loading reproduces predictions bit-for-bit.
inline void save_model(const FittedModel& model, const std::filesystem::path& path) {
  if (model.weights.size() != model.genes.size() + 1)
    throw DataError("model weight count does not match gene count");
  for (const auto& name : model.var_names)
    if (!detail::valid_var_name(name))
      throw DataError("variable name '" + name +
                      "' cannot be serialized; use letters, digits, '_' or '.'");
  auto out = detail::open_for_write(path);
  out << "multigene-model " << kModelFormatVersion << "\n";
  out << "vars " << detail::join(model.var_names, ' ') << "\n";
  for (const auto& gene : model.genes)
    out << "gene " << to_infix(gene, model.var_names) << "\n";
  out << "weights";
  for (double w : model.weights) out << ' ' << detail::format_double_17(w);
  out << "\n";
  out << "train_rmse " << detail::format_double_17(model.train_rmse) << "\n";
  detail::finish_write(out, path);
}

inline FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());

  const auto fail = [&path](std::size_t line_no, const std::string& what) -> void {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  FittedModel model;
  bool have_vars = false;
  bool have_weights = false;
  bool have_rmse = false;
  std::size_t line_no = 0;
  std::string line;

  if (!std::getline(in, line)) fail(1, "empty model file");
  ++line_no;
  {
    std::istringstream header(std::string{detail::trim(line)});
    std::string magic;
    int version = -1;
    header >> magic >> version;
    if (magic != "multigene-model") fail(line_no, "not a model file");
    if (version != kModelFormatVersion)
      fail(line_no, "unsupported model format version " + std::to_string(version));
  }

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::trim(line);
    if (text.empty()) continue;
    const std::size_t space = text.find(' ');
    const std::string_view tag = text.substr(0, space);
    const std::string_view rest =
        space == std::string_view::npos ? std::string_view{} : text.substr(space + 1);
    if (tag == "vars") {
      for (auto& name : detail::split(rest, ' '))
        if (!name.empty()) model.var_names.push_back(std::move(name));
      if (model.var_names.empty()) fail(line_no, "no variable names listed");
      have_vars = true;
    } else if (tag == "gene") {
      if (!have_vars) fail(line_no, "gene line before vars line");
      try {
        model.genes.push_back(parse_infix(rest, model.var_names));
      } catch (const ParseError& e) {
        fail(line_no, e.what());
      }
    } else if (tag == "weights") {
      for (const auto& token : detail::split(rest, ' ')) {
        if (token.empty()) continue;
        const auto w = detail::try_parse_double(token);
        if (!w) fail(line_no, "bad weight '" + token + "'");
        model.weights.push_back(*w);
      }
      if (model.weights.size() != model.genes.size() + 1)
        fail(line_no, "expected " + std::to_string(model.genes.size() + 1) +
                          " weights (bias plus one per gene), got " +
                          std::to_string(model.weights.size()));
      have_weights = true;
    } else if (tag == "train_rmse") {
      const auto v = detail::try_parse_double(rest);
      if (!v) fail(line_no, "bad train_rmse value");
      model.train_rmse = *v;
      have_rmse = true;
    } else {
      fail(line_no, "unrecognized line tag '" + std::string(tag) + "'");
    }
  }
  if (model.genes.empty()) fail(line_no, "model file lists no genes");
  if (!have_weights) fail(line_no, "model file has no weights line");
  if (!have_rmse) fail(line_no, "model file has no train_rmse line");
  return model;
}

/// One-line human-readable form of the fitted model: bias plus weighted
/// simplified genes, e.g. `3.5 + (x5 + x6) - 0.25*(x1 * x2)`. Unit weights
/// drop the `1*` prefix and a zero bias is omitted when genes exist.
inline std::string describe_model(const FittedModel& model) {
  std::string out;
  if (!(model.weights.size() == model.genes.size() + 1))
    throw DataError("model weight count does not match gene count");
  if (model.weights[0] != 0.0 || model.genes.empty())
    out = detail::format_double(model.weights[0]);
  for (std::size_t i = 0; i < model.genes.size(); ++i) {
    const double w = model.weights[i + 1];
    const std::string magnitude = detail::format_double(std::abs(w));
    std::string body = to_infix(simplify(model.genes[i]), model.var_names);
    if (magnitude != "1") body = magnitude + "*" + body;
    if (out.empty())
      out = (w < 0 ? "-" : "") + body;
    else
      out += (w < 0 ? " - " : " + ") + body;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run artifacts: convergence log, Pareto export, classification report.

/// Convergence CSV. The header comment lines echo every effective config
/// entry so the file alone suffices to replay the run.
inline void export_convergence(const RunLog& log, const AppConfig& config,
                               const std::filesystem::path& path) {
  if (log.records.empty()) throw DataError("cannot export an empty run log");
  auto out = detail::open_for_write(path);
  for (const auto& [key, value] : config_entries(config))
    out << "# " << key << '=' << value << "\n";
  out << "generation,best_fitness,mean_fitness,best_complexity\n";
  for (const auto& rec : log.records)
    out << rec.generation << ',' << detail::format_double(rec.best_fitness) << ','
        << detail::format_double(rec.mean_fitness) << ',' << rec.best_complexity
        << "\n";
  detail::finish_write(out, path);
}

inline void export_pareto(std::span<const ParetoPoint> points,
                          const std::filesystem::path& path) {
  if (points.empty()) throw DataError("cannot export an empty Pareto set");
  auto out = detail::open_for_write(path);
  out << "individual,complexity,fitness,on_front\n";
  for (const auto& p : points)
    out << p.individual_id << ',' << p.complexity << ','
        << detail::format_double(p.fitness) << ',' << (p.dominated ? "false" : "true")
        << "\n";
  detail::finish_write(out, path);
}

inline void export_report(const ClassificationReport& report,
                          const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "row,predicted,label,failed\n";
  for (const auto& row : report.rows)
    out << row.row << ',' << detail::format_double(row.predicted) << ',' << row.label
        << ',' << (row.failed ? "true" : "false") << "\n";
  out << "# failure_rate_percent=" << detail::format_double(report.failure_rate_percent)
      << "\n";
  detail::finish_write(out, path);
}

inline void export_predictions(std::span<const double> predictions,
                               const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "row,predicted\n";
  for (std::size_t i = 0; i < predictions.size(); ++i)
    out << (i + 1) << ',' << detail::format_double(predictions[i]) << "\n";
  detail::finish_write(out, path);
}

}  // namespace mggp

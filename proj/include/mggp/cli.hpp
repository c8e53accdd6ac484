#pragma once

#include <array>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mggp/dataio.hpp"
#include "mggp/evolution.hpp"

namespace mggp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitConfig = 4;
inline constexpr int kExitIo = 5;

namespace detail {

// One flag per config-file key; a supplied flag overrides the file value.
inline constexpr std::array<const char*, 15> kConfigKeys = {
    "population_size", "max_generations", "tournament_size", "target_fitness",
    "max_tree_depth",  "max_genes",       "p_crossover",     "p_mutation",
    "p_reproduction",  "p_gene_crossover", "seed",           "elitism_count",
    "failure_threshold", "response_column", "exclude_columns"};

struct ConfigFlags {
  std::array<std::string, kConfigKeys.size()> values{};
  std::array<CLI::Option*, kConfigKeys.size()> options{};
};

inline void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  for (std::size_t i = 0; i < kConfigKeys.size(); ++i)
    flags.options[i] = cmd->add_option(std::string("--") + kConfigKeys[i],
                                       flags.values[i],
                                       std::string("override config key ") + kConfigKeys[i]);
}

inline AppConfig resolve_config(const std::string& config_path, const ConfigFlags& flags) {
  AppConfig config = config_path.empty() ? AppConfig{} : load_config(config_path);
  for (std::size_t i = 0; i < kConfigKeys.size(); ++i)
    if (flags.options[i] != nullptr && flags.options[i]->count() > 0)
      apply_config_entry(config, kConfigKeys[i], flags.values[i]);
  return config;
}

}  // namespace detail

inline int cmd_train(const std::string& data_path, const AppConfig& config,
                     const std::string& out_model, const std::string& out_log,
                     const std::string& out_pareto, std::ostream& out) {
  config.run.validate();
  const Dataset data = load_dataset(data_path, config.response_column, {},
                                    config.exclude_columns);
  for (const auto& name : data.var_names)
    if (!mggp::detail::valid_var_name(name))
      throw DataError("column name '" + name +
                      "' cannot be used in models; use letters, digits, '_' or '.'");

  const RunResult result = run(config.run, data);

  save_model(result.best, out_model);
  export_convergence(result.log, config, out_log);
  export_pareto(pareto_front(result.final_population), out_pareto);

  out << "seed=" << config.run.seed << "\n";
  out << "generations=" << result.log.terminated_at << "\n";
  out << "model: " << describe_model(result.best) << "\n";
  out << "train_rmse=" << mggp::detail::format_double(result.best.train_rmse) << "\n";
  return kExitOk;
}

inline int cmd_predict(const std::string& model_path, const std::string& data_path,
                       const std::string& out_path, std::ostream& out) {
  const FittedModel model = load_model(model_path);
  const Dataset data = load_dataset(data_path, "", model.var_names);
  const std::vector<double> predictions = predict(model, data);
  export_predictions(predictions, out_path);
  out << "rows=" << predictions.size() << "\n";
  return kExitOk;
}

inline int cmd_rate(const std::string& model_path, const std::string& data_path,
                    const std::string& out_path, double threshold, std::ostream& out) {
  const FittedModel model = load_model(model_path);
  const Dataset data = load_dataset(data_path, "", model.var_names);
  const GradeBands bands = GradeBands::with_threshold(threshold);
  const ClassificationReport report = classify_rows(model, data, bands);
  export_report(report, out_path);
  out << "model: " << describe_model(model) << "\n";
  out << "failure_rate_percent=" << mggp::detail::format_double(report.failure_rate_percent)
      << "\n";
  return kExitOk;
}

/// Re-derives non-domination flags from an exported Pareto CSV. Useful after
/// hand-editing or merging exports: recomputes the front from the
/// (fitness, complexity) pairs, reports disagreements with the stored flags,
/// and optionally writes the corrected file.
inline int cmd_pareto(const std::string& in_path, const std::string& out_path,
                      std::ostream& out) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw DataError("cannot open " + in_path);

  std::vector<int> ids;
  std::vector<bool> stored_flags;
  std::vector<Individual> points;
  std::size_t line_no = 0;
  bool saw_header = false;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string_view text = mggp::detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (!saw_header) {
      if (text != "individual,complexity,fitness,on_front")
        throw DataError(in_path + ":" + std::to_string(line_no) +
                        ": expected header individual,complexity,fitness,on_front");
      saw_header = true;
      continue;
    }
    const auto cells = mggp::detail::split(text, ',');
    if (cells.size() != 4)
      throw DataError(in_path + ":" + std::to_string(line_no) + ": expected 4 cells");
    const auto id = mggp::detail::try_parse_int(cells[0]);
    const auto complexity = mggp::detail::try_parse_int(cells[1]);
    const auto fitness = mggp::detail::try_parse_double(cells[2]);
    if (!id || !complexity || !fitness || (cells[3] != "true" && cells[3] != "false"))
      throw DataError(in_path + ":" + std::to_string(line_no) + ": malformed row");
    ids.push_back(static_cast<int>(*id));
    stored_flags.push_back(cells[3] == "true");
    Individual ind;
    ind.fitness = *fitness;
    ind.complexity = static_cast<int>(*complexity);
    points.push_back(std::move(ind));
  }
  if (points.empty()) throw DataError(in_path + ": no Pareto rows");

  std::vector<ParetoPoint> recomputed = pareto_front(points);
  int mismatches = 0;
  int on_front = 0;
  for (auto& p : recomputed) {
    const auto row = static_cast<std::size_t>(p.individual_id);
    if (stored_flags[row] == p.dominated) ++mismatches;
    if (!p.dominated) ++on_front;
    p.individual_id = ids[row];
  }
  if (!out_path.empty()) export_pareto(recomputed, out_path);

  out << "points=" << recomputed.size() << "\n";
  out << "on_front=" << on_front << "\n";
  if (mismatches > 0) {
    out << "flag_mismatches=" << mismatches << "\n";
    return kExitData;
  }
  return kExitOk;
}

/// Full argument parsing and dispatch. Streams are injectable so tests can
/// capture output without touching the process-global stdio.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Multi-gene symbolic regression over tabular score data"};
  app.require_subcommand(1);

  std::string data_path, config_path, model_path, in_path;
  std::string out_model = "model.txt";
  std::string out_log = "convergence.csv";
  std::string out_pareto = "pareto.csv";
  std::string out_file;
  int threads = 1;
  double threshold = 40.0;
  detail::ConfigFlags flags;

  CLI::App* train = app.add_subcommand("train", "fit a model to a dataset");
  train->add_option("--data", data_path, "training dataset CSV")->required();
  train->add_option("--config", config_path, "key=value configuration file");
  train->add_option("--out-model", out_model, "model file to write")->capture_default_str();
  train->add_option("--out-log", out_log, "convergence CSV to write")->capture_default_str();
  train->add_option("--out-pareto", out_pareto, "Pareto CSV to write")->capture_default_str();
  train->add_option("--threads", threads, "worker threads (never changes results)")
      ->capture_default_str();
  detail::add_config_flags(train, flags);

  CLI::App* predict = app.add_subcommand("predict", "apply a saved model to new data");
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--data", data_path, "dataset CSV")->required();
  predict->add_option("--out", out_file, "predictions CSV to write");

  CLI::App* rate = app.add_subcommand("rate", "classify rows and report the failure rate");
  rate->add_option("--model", model_path, "model file")->required();
  rate->add_option("--data", data_path, "dataset CSV")->required();
  rate->add_option("--out", out_file, "report CSV to write");
  rate->add_option("--threshold", threshold, "failure threshold on the predicted score")
      ->capture_default_str();

  CLI::App* pareto = app.add_subcommand("pareto", "recheck flags in an exported Pareto CSV");
  pareto->add_option("--in", in_path, "Pareto CSV to read")->required();
  pareto->add_option("--out", out_file, "corrected Pareto CSV to write");

  try {
    app.parse(args.empty() ? std::vector<std::string>{}
                           : std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      AppConfig config = detail::resolve_config(config_path, flags);
      config.run.threads = threads;
      return cmd_train(data_path, config, out_model, out_log, out_pareto, out);
    }
    if (predict->parsed())
      return cmd_predict(model_path, data_path,
                         out_file.empty() ? "predictions.csv" : out_file, out);
    if (rate->parsed())
      return cmd_rate(model_path, data_path, out_file.empty() ? "report.csv" : out_file,
                      threshold, out);
    if (pareto->parsed()) return cmd_pareto(in_path, out_file, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}

inline int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace mggp::cli

// Acceptance gate for the engine: every release-blocking behavior in one
// standalone binary. Each numbered criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mggp/cli.hpp"
#include "mggp/classify.hpp"
#include "mggp/dataio.hpp"
#include "mggp/evolution.hpp"
#include "support.hpp"

namespace {

using namespace mggp;

int g_failures = 0;

struct CriterionResult {
  int number;
  std::string line;
};
std::vector<CriterionResult> g_results;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
  if (!detail.empty()) line << " (" << detail << ")";
  g_results.push_back({number, line.str()});
  if (!pass) ++g_failures;
}

void flush_report() {
  std::sort(g_results.begin(), g_results.end(),
            [](const CriterionResult& a, const CriterionResult& b) {
              return a.number < b.number;
            });
  for (const auto& r : g_results) std::cout << r.line << "\n";
}

int worker_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string data_path() { return std::string(MGGP_DATA_DIR) + "/student_scores.csv"; }

// Outcome of one fully observed training run, stepped manually so the best
// model can be snapshotted the moment it first clears RMSE 0.5.
struct SeedOutcome {
  double final_rmse = std::numeric_limits<double>::infinity();
  double seconds = 0.0;
  bool reached_half = false;
  int snapshot_vars = 0;
  int snapshot_genes = 0;
};

SeedOutcome observe_run(std::uint64_t seed, const Dataset& data, int max_generations) {
  RunConfig config;
  config.seed = seed;
  config.max_generations = max_generations;
  config.target_fitness = 1e-8;
  config.threads = worker_threads();

  SeedOutcome out;
  const auto start = std::chrono::steady_clock::now();

  auto population = initialize_population(config, data);
  Individual best_ever = population[static_cast<std::size_t>(best_index(population))];

  const auto snapshot = [&out](const Individual& ind) {
    if (out.reached_half) return;
    out.reached_half = true;
    std::set<int> vars;
    for (const auto& gene : ind.genes)
      for (int v : variables_used(simplify(gene))) vars.insert(v);
    out.snapshot_vars = static_cast<int>(vars.size());
    out.snapshot_genes = static_cast<int>(ind.genes.size());
  };
  if (best_ever.fitness.value() < 0.5) snapshot(best_ever);

  for (int g = 1; g <= max_generations; ++g) {
    population = step_generation(population, config, data, g);
    const Individual& gen_best =
        population[static_cast<std::size_t>(best_index(population))];
    if (strict_better(gen_best, best_ever)) best_ever = gen_best;
    if (best_ever.fitness.value() < 0.5) snapshot(best_ever);
    if (best_ever.fitness.value() <= config.target_fitness) break;
  }

  out.final_rmse = best_ever.fitness.value();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

// Criteria 1 and 3 share the same ten observed runs.
void criteria_exact_fit_and_parsimony(const Dataset& data) {
  bool sums_exact = true;
  for (int r = 0; r < data.num_rows(); ++r) {
    double sum = 0.0;
    for (double v : data.row(r)) sum += v;
    if (sum != data.response[static_cast<std::size_t>(r)]) sums_exact = false;
  }

  int successes = 0;
  double slowest = 0.0;
  int snapshots = 0;
  bool parsimony_ok = true;
  int worst_vars = 0;
  int worst_genes = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SeedOutcome out = observe_run(seed, data, 300);
    if (out.final_rmse < 1e-6) ++successes;
    slowest = std::max(slowest, out.seconds);
    if (out.reached_half) {
      ++snapshots;
      worst_vars = std::max(worst_vars, out.snapshot_vars);
      worst_genes = std::max(worst_genes, out.snapshot_genes);
      if (out.snapshot_vars > 6 || out.snapshot_genes > 4) parsimony_ok = false;
    }
  }

  {
    std::ostringstream detail;
    detail << successes << "/10 seeds below 1e-6, slowest run "
           << detail::format_double(std::round(slowest * 100.0) / 100.0) << " s";
    if (!sums_exact) detail << ", row sums do not reproduce the totals";
    report(1, "exact-fit recovery on the bundled table",
           sums_exact && successes >= 8 && slowest < 60.0, detail.str());
  }
  {
    std::ostringstream detail;
    detail << snapshots << "/10 runs snapshotted, max " << worst_vars
           << " variables and " << worst_genes << " genes";
    report(3, "parsimony of first sub-0.5 models", parsimony_ok && snapshots >= 8,
           detail.str());
  }
}

void criterion_convergence_shape(const Dataset& data) {
  std::vector<int> first_below_half;
  bool monotone = true;
  for (std::uint64_t seed = 101; seed <= 120; ++seed) {
    RunConfig config;
    config.seed = seed;
    config.max_generations = 300;
    // Target zero keeps each run going until the fit is bit-exact, which
    // logs a longer curve than stopping at a loose tolerance would.
    config.target_fitness = 0.0;
    config.threads = worker_threads();
    const RunResult result = run(config, data);

    int first = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < result.log.records.size(); ++i) {
      if (i > 0 && result.log.records[i].best_fitness >
                       result.log.records[i - 1].best_fitness)
        monotone = false;
      if (first == std::numeric_limits<int>::max() &&
          result.log.records[i].best_fitness < 0.5)
        first = result.log.records[i].generation;
    }
    first_below_half.push_back(first);
  }

  std::sort(first_below_half.begin(), first_below_half.end());
  const int lower_mid = first_below_half[9];
  const int upper_mid = first_below_half[10];
  const bool median_ok = lower_mid <= 200 && upper_mid <= 200;

  std::ostringstream detail;
  detail << "median first-generation below 0.5 is "
         << detail::format_double((lower_mid + upper_mid) / 2.0) << ", best fitness "
         << (monotone ? "non-increasing in all 20 runs" : "INCREASED in some run");
  report(2, "convergence shape across 20 seeds", median_ok && monotone, detail.str());
}

void criterion_pareto_oracle() {
  std::mt19937_64 gen(4242);
  std::uniform_int_distribution<int> size_dist(1, 200);
  std::uniform_int_distribution<int> complexity_dist(1, 15);
  std::uniform_int_distribution<int> fitness_step(0, 10);

  bool all_equal = true;
  for (int trial = 0; trial < 100 && all_equal; ++trial) {
    const int n = size_dist(gen);
    std::vector<Individual> population;
    std::vector<double> fitness;
    std::vector<int> complexity;
    for (int i = 0; i < n; ++i) {
      Individual ind = make_individual({ExpressionTree::terminal(0)});
      ind.fitness = 0.25 * fitness_step(gen);
      ind.complexity = complexity_dist(gen);
      fitness.push_back(*ind.fitness);
      complexity.push_back(ind.complexity);
      population.push_back(std::move(ind));
    }
    const auto points = pareto_front(population);
    const auto expected = support::brute_force_dominated(fitness, complexity);
    if (points.size() != static_cast<std::size_t>(n)) all_equal = false;
    for (const auto& p : points)
      if (p.dominated != expected[static_cast<std::size_t>(p.individual_id)])
        all_equal = false;
  }
  report(4, "pareto front equals the brute-force oracle", all_equal,
         "100 random populations up to 200 individuals");
}

void criterion_least_squares() {
  std::mt19937_64 gen(777);
  Rng tree_rng(778);
  bool weights_ok = true;
  bool residual_ok = true;
  bool duplicate_ok = true;
  int checked = 0;

  while (checked < 100) {
    const Dataset data = support::random_dataset(gen, 50, 6);
    std::vector<ExpressionTree> genes;
    const int m = 1 + static_cast<int>(tree_rng.uniform_int(4));
    for (int j = 0; j < m; ++j)
      genes.push_back(random_tree(3, BuildMethod::Grow, 6, tree_rng));

    std::vector<double> oracle;
    try {
      oracle = support::normal_equation_weights(genes, data);
    } catch (const std::runtime_error&) {
      continue;
    }
    const auto weights = fit_weights(genes, data);
    if (!weights || weights->size() != oracle.size()) {
      weights_ok = false;
      break;
    }
    double scale = 1.0;
    for (double w : oracle) scale = std::max(scale, std::abs(w));
    for (std::size_t i = 0; i < oracle.size(); ++i)
      if (std::abs((*weights)[i] - oracle[i]) > 1e-8 * scale) weights_ok = false;

    // Residual orthogonality against the design columns, using the engine's
    // own weights.
    std::vector<std::vector<double>> columns;
    columns.emplace_back(data.response.size(), 1.0);
    for (const auto& gene : genes) columns.push_back(evaluate_column(gene, data));
    std::vector<double> residual(data.response.size());
    for (std::size_t r = 0; r < residual.size(); ++r) {
      double fitted = 0.0;
      for (std::size_t c = 0; c < columns.size(); ++c)
        fitted += (*weights)[c] * columns[c][r];
      residual[r] = data.response[r] - fitted;
    }
    double rtr = 0.0;
    double rty = 0.0;
    for (const auto& col : columns) {
      double dot_r = 0.0;
      double dot_y = 0.0;
      for (std::size_t r = 0; r < residual.size(); ++r) {
        dot_r += col[r] * residual[r];
        dot_y += col[r] * data.response[r];
      }
      rtr += dot_r * dot_r;
      rty += dot_y * dot_y;
    }
    if (std::sqrt(rtr) / std::sqrt(rty) >= 1e-8) residual_ok = false;

    // Rank-deficient but consistent: duplicated gene, response built from it.
    {
      Dataset consistent = data;
      const auto col = evaluate_column(genes[0], consistent);
      for (std::size_t r = 0; r < consistent.response.size(); ++r)
        consistent.response[r] = 2.0 * col[r] + 1.0;
      std::vector<ExpressionTree> dup = {genes[0], genes[0]};
      const auto dup_weights = fit_weights(dup, consistent);
      if (!dup_weights) {
        duplicate_ok = false;
      } else {
        FittedModel model;
        model.genes = dup;
        model.weights = *dup_weights;
        model.var_names = consistent.var_names;
        const auto predictions = predict(model, consistent);
        for (std::size_t r = 0; r < predictions.size(); ++r)
          if (std::abs(predictions[r] - consistent.response[r]) > 1e-9)
            duplicate_ok = false;
      }
    }
    ++checked;
  }

  std::ostringstream detail;
  detail << "100 systems of 50 rows";
  if (!weights_ok) detail << "; weights diverged from the normal equations";
  if (!residual_ok) detail << "; residuals not orthogonal";
  if (!duplicate_ok) detail << "; duplicate-gene systems failed to reproduce y";
  report(5, "least-squares weighting matches the closed form",
         weights_ok && residual_ok && duplicate_ok, detail.str());
}

void criterion_failure_rate(const Dataset& data) {
  const auto report_rows =
      classify_rows(support::identity_model(), data, GradeBands::defaults());
  const double rate = report_rows.failure_rate_percent;
  report(6, "historical failure rate reproduction",
         std::abs(rate - 64.2857) <= 1e-4,
         "observed " + detail::format_double(rate) + "%");
}

void criterion_determinism() {
  const auto base = std::filesystem::temp_directory_path() /
                    ("mggp_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(base);

  const auto train_into = [&base](const std::string& tag, const std::string& threads) {
    const auto dir = base / tag;
    std::filesystem::create_directories(dir);
    std::ostringstream out, err;
    const std::vector<std::string> args = {
        "train", "--data", data_path(),
        "--out-model", (dir / "model.txt").string(),
        "--out-log", (dir / "convergence.csv").string(),
        "--out-pareto", (dir / "pareto.csv").string(),
        "--population_size", "60", "--max_generations", "30",
        "--seed", "12345", "--threads", threads};
    return mggp::cli::run_cli(args, out, err) == 0;
  };

  const bool ran = train_into("a", "1") && train_into("b", "1") && train_into("c", "4");
  bool identical = ran;
  for (const char* file : {"model.txt", "convergence.csv", "pareto.csv"}) {
    if (!ran) break;
    const std::string a = support::read_file(base / "a" / file);
    if (a.empty() || a != support::read_file(base / "b" / file) ||
        a != support::read_file(base / "c" / file))
      identical = false;
  }
  std::filesystem::remove_all(base);
  report(7, "byte-identical artifacts across reruns and thread counts", identical,
         "model, convergence and pareto files; 1 thread twice, then 4 threads");
}

bool property_round_trip() {
  const std::vector<std::string> names = {"x1", "x2", "x3", "x4", "x5", "x6"};
  Rng rng(31337);
  for (int i = 0; i < 10000; ++i) {
    const auto t = random_tree(4, BuildMethod::Grow, 6, rng);
    if (!structurally_equal(t, parse_infix(to_infix(t, names), names))) return false;
  }
  return true;
}

bool property_depth_closure() {
  Rng rng(90210);
  for (int i = 0; i < 10000; ++i) {
    const Individual a = support::random_individual(rng, 4, 4, 6);
    const Individual b = support::random_individual(rng, 4, 4, 6);
    const auto [sa, sb] = subtree_crossover(a, b, rng, 4);
    for (const auto& g : sa.genes)
      if (g.depth() > 4) return false;
    for (const auto& g : sb.genes)
      if (g.depth() > 4) return false;
  }
  for (int i = 0; i < 10000; ++i) {
    const Individual a = support::random_individual(rng, 4, 4, 6);
    const Individual b = support::random_individual(rng, 4, 4, 6);
    const auto [ga, gb] = gene_crossover(a, b, rng, 4);
    if (ga.genes.empty() || ga.genes.size() > 4) return false;
    if (gb.genes.empty() || gb.genes.size() > 4) return false;
    for (const auto& g : ga.genes)
      if (g.depth() > 4) return false;
    for (const auto& g : gb.genes)
      if (g.depth() > 4) return false;
  }
  for (int i = 0; i < 10000; ++i) {
    const Individual a = support::random_individual(rng, 4, 4, 6);
    const Individual m = subtree_mutation(a, rng, 4, 6);
    if (m.genes.size() != a.genes.size()) return false;
    for (const auto& g : m.genes)
      if (g.depth() > 4) return false;
  }
  return true;
}

bool property_rank_order() {
  // 20 individuals with distinct fitness: lexicographic rank equals index.
  std::vector<Individual> population;
  for (int i = 0; i < 20; ++i) {
    Individual ind = make_individual({ExpressionTree::terminal(0)});
    ind.fitness = 1.0 + i;
    ind.complexity = 1;
    population.push_back(std::move(ind));
  }

  constexpr int kTrials = 10000;
  Rng rng(5150);
  std::vector<int> wins(20, 0);
  for (int t = 0; t < kTrials; ++t) {
    const Individual& w =
        tournament_select<Rng>(population, 4, rng);
    ++wins[static_cast<std::size_t>(*w.fitness - 1.0)];
  }

  // Exact win probability of rank k (0-based): all four draws land at or
  // beyond k, minus all four landing strictly beyond it.
  const auto win_prob = [](int k) {
    const double at_or_beyond = (20.0 - k) / 20.0;
    const double beyond = (19.0 - k) / 20.0;
    return std::pow(at_or_beyond, 4) - std::pow(beyond, 4);
  };
  for (int k = 0; k < 20; ++k) {
    const double expected = kTrials * win_prob(k);
    const double sigma = std::sqrt(kTrials * win_prob(k) * (1.0 - win_prob(k)));
    if (std::abs(wins[static_cast<std::size_t>(k)] - expected) > 5.0 * sigma + 5.0)
      return false;
  }
  // Monotone up to sampling noise on adjacent ranks.
  for (int k = 0; k + 1 < 20; ++k) {
    const double noise =
        4.0 * std::sqrt(kTrials * (win_prob(k) + win_prob(k + 1))) + 1.0;
    if (wins[static_cast<std::size_t>(k)] + noise <
        wins[static_cast<std::size_t>(k + 1)])
      return false;
  }
  return true;
}

bool property_simplification(const Dataset& data) {
  Rng rng(246810);
  for (int i = 0; i < 1000; ++i) {
    const auto t = random_tree(4, BuildMethod::Grow, 6, rng);
    const auto s = simplify(t);
    for (int r = 0; r < data.num_rows(); ++r)
      if (s.evaluate(data.row(r)) != t.evaluate(data.row(r))) return false;
  }
  return true;
}

void criterion_property_suites(const Dataset& data) {
  const bool round_trip = property_round_trip();
  const bool closure = property_depth_closure();
  const bool rank = property_rank_order();
  const bool simplification = property_simplification(data);

  std::ostringstream detail;
  detail << "round-trip " << (round_trip ? "ok" : "FAILED") << ", depth-closure "
         << (closure ? "ok" : "FAILED") << ", rank-order " << (rank ? "ok" : "FAILED")
         << ", simplification " << (simplification ? "ok" : "FAILED");
  report(8, "property suites", round_trip && closure && rank && simplification,
         detail.str());
}

}  // namespace

int main() {
  Dataset data;
  try {
    data = load_dataset(data_path(), "total", {},
                        std::vector<std::string>{"time", "exam_score", "grade"});
  } catch (const std::exception& e) {
    std::cout << "FAIL criterion 0: bundled dataset unavailable (" << e.what() << ")\n";
    return 1;
  }

  criteria_exact_fit_and_parsimony(data);
  criterion_convergence_shape(data);
  criterion_pareto_oracle();
  criterion_least_squares();
  criterion_failure_rate(data);
  criterion_determinism();
  criterion_property_suites(data);

  flush_report();
  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(g_failures) + " CRITERIA FAILED")
            << "\n";
  return g_failures == 0 ? 0 : 1;
}

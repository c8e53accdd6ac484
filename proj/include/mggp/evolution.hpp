#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "mggp/dataset.hpp"
#include "mggp/errors.hpp"
#include "mggp/genetic_ops.hpp"
#include "mggp/regression.hpp"
#include "mggp/rng.hpp"

namespace mggp {

/// Full parameter set for one evolutionary run. Defaults follow the bundled
/// configuration: population 150, up to 500 generations, tournament size 4,
/// tree depth and gene count capped at 4, operators {+, -, *}.
struct RunConfig {
  int population_size = 150;
  int max_generations = 500;
  int tournament_size = 4;
  double target_fitness = 0.0;   // stop once best RMSE falls to this level
  int max_tree_depth = 4;        // lone terminal counts as depth 0
  int max_genes = 4;
  VariationRates rates{};
  std::uint64_t seed = 1;
  int elitism_count = 1;
  int threads = 1;               // worker threads; never changes results

  void validate() const {
    if (population_size < 1) throw ConfigError("population_size must be positive");
    if (max_generations < 1) throw ConfigError("max_generations must be positive");
    if (tournament_size < 1) throw ConfigError("tournament_size must be positive");
    if (!(target_fitness >= 0.0)) throw ConfigError("target_fitness must be non-negative");
    if (max_tree_depth < 0) throw ConfigError("max_tree_depth must be non-negative");
    if (max_genes < 1) throw ConfigError("max_genes must be positive");
    if (elitism_count < 0) throw ConfigError("elitism_count must be non-negative");
    if (elitism_count >= population_size)
      throw ConfigError("elitism_count must be smaller than population_size");
    if (threads < 1) throw ConfigError("threads must be positive");
    rates.validate();
  }
};

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;     // excludes worst-fitness sentinel individuals
  int best_complexity = 0;
  int excluded_count = 0;        // sentinel individuals left out of the mean
};

enum class TerminationReason { MaxGenerations, TargetReached };

struct RunLog {
  std::vector<GenerationRecord> records;
  int terminated_at = 0;
  TerminationReason reason = TerminationReason::MaxGenerations;
};

struct ParetoPoint {
  int individual_id = 0;         // index into the population passed in
  double fitness = 0.0;
  int complexity = 0;
  bool dominated = false;
};

/// Index of the lexicographically best evaluated individual.
/// Population index of the best individual under strict_better, so elites
/// and logs see the exact fitness minimum.
inline int best_index(std::span<const Individual> population) {
  if (population.empty()) throw std::invalid_argument("empty population");
  int best = 0;
  for (int i = 1; i < static_cast<int>(population.size()); ++i)
    if (strict_better(population[static_cast<std::size_t>(i)],
                      population[static_cast<std::size_t>(best)]))
      best = i;
  return best;
}

namespace detail {

/// Indices of the k best individuals under strict_better, by repeated
/// extraction.
inline std::vector<int> best_indices(std::span<const Individual> population, int k) {
  std::vector<int> chosen;
  std::vector<bool> taken(population.size(), false);
  for (int round = 0; round < k; ++round) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(population.size()); ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || strict_better(population[static_cast<std::size_t>(i)],
                                    population[static_cast<std::size_t>(best)]))
        best = i;
    }
    taken[static_cast<std::size_t>(best)] = true;
    chosen.push_back(best);
  }
  return chosen;
}

/// Runs fn(slot) for every slot in [begin, end), split across the requested
/// number of threads. Slots are independent, so the partition cannot change
/// any result.
template <class Fn>
void for_each_slot(int begin, int end, int threads, const Fn& fn) {
  const int span = end - begin;
  if (threads <= 1 || span <= 1) {
    for (int s = begin; s < end; ++s) fn(s);
    return;
  }
  const int workers = std::min(threads, span);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + span * w / workers;
    const int hi = begin + span * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (int s = lo; s < hi; ++s) fn(s);
    });
  }
  for (auto& t : pool) t.join();
}

/// Stream id 0 is reserved for initialization; generation g uses stream g.
inline constexpr std::uint64_t kInitStream = 0;

}  // namespace detail

/// Random initial population by ramped half-and-half: per-gene depth limits
/// cycle over [1, max_tree_depth] and the construction method alternates
/// between grow and full across cycles. Gene counts are uniform in
/// [1, max_genes]. Every individual comes back evaluated.
inline std::vector<Individual> initialize_population(const RunConfig& config,
                                                     const Dataset& data) {
  config.validate();
  const int num_vars = data.num_vars();
  std::vector<Individual> population(static_cast<std::size_t>(config.population_size));
  detail::for_each_slot(0, config.population_size, config.threads, [&](int slot) {
    Rng rng = Rng::derive(config.seed, detail::kInitStream,
                          static_cast<std::uint64_t>(slot));
    Individual ind;
    const int gene_count = 1 + rng.uniform_int(config.max_genes);
    for (int j = 0; j < gene_count; ++j) {
      const int ramp = slot * config.max_genes + j;
      const int depth_limit =
          config.max_tree_depth == 0 ? 0 : 1 + ramp % config.max_tree_depth;
      const BuildMethod method =
          (config.max_tree_depth != 0 && (ramp / config.max_tree_depth) % 2 == 0)
              ? BuildMethod::Grow
              : BuildMethod::Full;
      ind.genes.push_back(random_tree(depth_limit, method, num_vars, rng));
    }
    population[static_cast<std::size_t>(slot)] =
        evaluate_individual(std::move(ind), data);
  });
  return population;
}

/// One generation: elites are copied bit-for-bit, every remaining slot draws
/// an operator, selects parents by tournament and produces one evaluated
/// offspring. Each slot works from its own random stream derived from
/// (seed, generation, slot), so results do not depend on the thread count.
inline std::vector<Individual> step_generation(const std::vector<Individual>& population,
                                               const RunConfig& config,
                                               const Dataset& data, int generation) {
  const int n = static_cast<int>(population.size());
  const int num_vars = data.num_vars();
  std::vector<Individual> next(static_cast<std::size_t>(n));

  const auto elites = detail::best_indices(population, config.elitism_count);
  for (std::size_t e = 0; e < elites.size(); ++e)
    next[e] = population[static_cast<std::size_t>(elites[e])];

  detail::for_each_slot(config.elitism_count, n, config.threads, [&](int slot) {
    Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(generation),
                          static_cast<std::uint64_t>(slot));
    const double u = rng.uniform();
    Individual child;
    if (u < config.rates.p_crossover) {
      const Individual& p1 = tournament_select(std::span<const Individual>(population),
                                               config.tournament_size, rng);
      const Individual& p2 = tournament_select(std::span<const Individual>(population),
                                               config.tournament_size, rng);
      if (rng.bernoulli(config.rates.p_gene_crossover_given_crossover))
        child = gene_crossover(p1, p2, rng, config.max_genes).first;
      else
        child = subtree_crossover(p1, p2, rng, config.max_tree_depth).first;
      child = evaluate_individual(std::move(child), data);
    } else if (u < config.rates.p_crossover + config.rates.p_mutation) {
      const Individual& p = tournament_select(std::span<const Individual>(population),
                                              config.tournament_size, rng);
      child = subtree_mutation(p, rng, config.max_tree_depth, num_vars);
      child = evaluate_individual(std::move(child), data);
    } else {
      // Reproduction: the tournament winner is copied through unchanged,
      // fitted state included.
      child = tournament_select(std::span<const Individual>(population),
                                config.tournament_size, rng);
    }
    next[static_cast<std::size_t>(slot)] = std::move(child);
  });
  return next;
}

namespace detail {

inline GenerationRecord summarize(std::span<const Individual> population, int generation) {
  GenerationRecord rec;
  rec.generation = generation;
  const int best = best_index(population);
  rec.best_fitness = population[static_cast<std::size_t>(best)].fitness.value();
  rec.best_complexity = population[static_cast<std::size_t>(best)].complexity;
  double sum = 0.0;
  int counted = 0;
  for (const auto& ind : population) {
    const double f = ind.fitness.value();
    if (f == kWorstFitness) {
      ++rec.excluded_count;
      continue;
    }
    sum += f;
    ++counted;
  }
  rec.mean_fitness = counted > 0 ? sum / counted : kWorstFitness;
  return rec;
}

}  // namespace detail

struct RunResult {
  FittedModel best;
  RunLog log;
  std::vector<Individual> final_population;
};

/// The full generational loop. Stops at max_generations or as soon as the
/// best fitness reaches target_fitness; returns the best individual seen at
/// any point, not just the final generation's.
inline RunResult run(const RunConfig& config, const Dataset& data) {
  config.validate();
  data.validate();

  std::vector<Individual> population = initialize_population(config, data);
  Individual best_ever = population[static_cast<std::size_t>(best_index(population))];

  RunLog log;
  log.reason = TerminationReason::MaxGenerations;
  log.terminated_at = config.max_generations;
  for (int g = 1; g <= config.max_generations; ++g) {
    population = step_generation(population, config, data, g);
    log.records.push_back(detail::summarize(population, g));
    const Individual& gen_best =
        population[static_cast<std::size_t>(best_index(population))];
    if (strict_better(gen_best, best_ever)) best_ever = gen_best;
    if (best_ever.fitness.value() <= config.target_fitness) {
      log.reason = TerminationReason::TargetReached;
      log.terminated_at = g;
      break;
    }
  }

  RunResult result{to_fitted_model(best_ever, data), std::move(log), std::move(population)};
  return result;
}

/// Marks every individual dominated or not in the (fitness, complexity)
/// plane and returns all points sorted by complexity, then fitness. A point
/// is dominated when some other point is no worse on both axes and strictly
/// better on at least one.
inline std::vector<ParetoPoint> pareto_front(std::span<const Individual> population) {
  std::vector<ParetoPoint> points;
  points.reserve(population.size());
  for (int i = 0; i < static_cast<int>(population.size()); ++i) {
    const auto& ind = population[static_cast<std::size_t>(i)];
    points.push_back({i, ind.fitness.value(), ind.complexity, false});
  }
  std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.complexity != b.complexity) return a.complexity < b.complexity;
    if (a.fitness != b.fitness) return a.fitness < b.fitness;
    return a.individual_id < b.individual_id;
  });

  // One sweep over complexity groups: dominated iff a strictly simpler point
  // is no worse, or an equally complex point is strictly better.
  double prefix_min = std::numeric_limits<double>::infinity();
  bool has_prefix = false;
  std::size_t group_start = 0;
  while (group_start < points.size()) {
    std::size_t group_end = group_start;
    double group_min = std::numeric_limits<double>::infinity();
    while (group_end < points.size() &&
           points[group_end].complexity == points[group_start].complexity) {
      group_min = std::min(group_min, points[group_end].fitness);
      ++group_end;
    }
    for (std::size_t i = group_start; i < group_end; ++i)
      points[i].dominated = (has_prefix && prefix_min <= points[i].fitness) ||
                            group_min < points[i].fitness;
    prefix_min = std::min(prefix_min, group_min);
    has_prefix = true;
    group_start = group_end;
  }
  return points;
}

}  // namespace mggp

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mggp/errors.hpp"
#include "mggp/expr_tree.hpp"
#include "mggp/rng.hpp"

namespace mggp {

/// Fitness value assigned to individuals whose evaluation hit non-finite
/// numerics. Worse than any real fit, so evolution routes around them.
inline constexpr double kWorstFitness = std::numeric_limits<double>::infinity();

/// Relative tolerance under which two fitness values count as tied for the
/// lexicographic complexity tie-break.
inline constexpr double kFitnessTieTolerance = 1e-12;

/// A candidate model: 1..max_genes expression trees plus, once fitted, the
/// least-squares weights (bias first) and the training RMSE. A structural
/// change clears weights and fitness; complexity is kept current because it
/// depends only on the genes.
struct Individual {
  std::vector<ExpressionTree> genes;
  std::vector<double> weights;      // empty until fitted, else genes.size() + 1
  std::optional<double> fitness;    // nullopt until fitted; kWorstFitness on numeric failure
  int complexity = 0;               // sum of per-gene node counts

  bool evaluated() const noexcept { return fitness.has_value(); }

  void refresh_complexity() noexcept {
    complexity = 0;
    for (const auto& g : genes) complexity += g.node_count();
  }

  void invalidate() noexcept {
    weights.clear();
    fitness.reset();
  }
};

inline Individual make_individual(std::vector<ExpressionTree> genes) {
  Individual ind;
  ind.genes = std::move(genes);
  ind.refresh_complexity();
  return ind;
}

/// Tie test is taken from the side of the reference fitness.
inline bool fitness_tie(double reference, double other) noexcept {
  return std::abs(reference - other) <=
         kFitnessTieTolerance * std::max(1.0, std::abs(reference));
}

/// True when the challenger beats the incumbent under plain lexicographic
/// order: clearly lower fitness wins; near-tied fitness falls through to the
/// complexity comparison. Equal on both axes keeps the incumbent.
inline bool lex_better(const Individual& challenger, const Individual& incumbent) {
  const double fc = challenger.fitness.value();
  const double fi = incumbent.fitness.value();
  if (!fitness_tie(fi, fc)) return fc < fi;
  return challenger.complexity < incumbent.complexity;
}

/// Exact ordering used for elites, logging and the returned best: strictly
/// lower fitness wins and complexity only breaks exact fitness ties. Unlike
/// lex_better this never trades a sliver of fitness for simplicity, which is
/// what keeps the logged best fitness exactly non-increasing under elitism.
inline bool strict_better(const Individual& challenger, const Individual& incumbent) {
  const double fc = challenger.fitness.value();
  const double fi = incumbent.fitness.value();
  if (fc != fi) return fc < fi;
  return challenger.complexity < incumbent.complexity;
}

/// Operator mix for offspring creation. The three top-level probabilities
/// must sum to one.
struct VariationRates {
  double p_crossover = 0.85;
  double p_mutation = 0.10;
  double p_reproduction = 0.05;
  double p_gene_crossover_given_crossover = 0.20;

  void validate() const {
    for (double p : {p_crossover, p_mutation, p_reproduction,
                     p_gene_crossover_given_crossover})
      if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("variation probabilities must lie in [0, 1]");
    if (std::abs(p_crossover + p_mutation + p_reproduction - 1.0) > 1e-12)
      throw ConfigError("p_crossover + p_mutation + p_reproduction must equal 1");
  }
};

/// Plain lexicographic tournament: draw tournament_size entrants uniformly
/// with replacement, keep the entrant with the lowest fitness, break near
/// ties by complexity, and let the earlier draw win exact ties.
template <RandomSource R>
const Individual& tournament_select(std::span<const Individual> population,
                                    int tournament_size, R& rng) {
  if (population.empty())
    throw std::invalid_argument("tournament over an empty population");
  const int n = static_cast<int>(population.size());
  const Individual* winner = &population[static_cast<std::size_t>(rng.uniform_int(n))];
  for (int i = 1; i < tournament_size; ++i) {
    const Individual& entrant = population[static_cast<std::size_t>(rng.uniform_int(n))];
    if (lex_better(entrant, *winner)) winner = &entrant;
  }
  return *winner;
}

namespace detail {

/// Biased node pick: 90% operator nodes, 10% terminals, when both exist.
template <RandomSource R>
NodeLocation pick_node(const ExpressionTree& tree, R& rng) {
  const auto nodes = list_nodes(tree);
  std::vector<int> ops;
  std::vector<int> terms;
  for (const auto& loc : nodes)
    (loc.is_operator ? ops : terms).push_back(loc.index);
  if (ops.empty())
    return nodes[static_cast<std::size_t>(
        terms[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(terms.size())))])];
  if (rng.bernoulli(0.9))
    return nodes[static_cast<std::size_t>(
        ops[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(ops.size())))])];
  return nodes[static_cast<std::size_t>(
      terms[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(terms.size())))])];
}

}  // namespace detail

/// Swap one randomly chosen subtree between one gene of each parent. Node
/// pairs that would push either child gene past max_depth are redrawn up to
/// ten times; after that the genes are copied unchanged. Parents are not
/// modified; children come back unfitted.
template <RandomSource R>
std::pair<Individual, Individual> subtree_crossover(const Individual& a,
                                                    const Individual& b, R& rng,
                                                    int max_depth) {
  Individual child_a = a;
  Individual child_b = b;
  const int gene_a = rng.uniform_int(static_cast<int>(a.genes.size()));
  const int gene_b = rng.uniform_int(static_cast<int>(b.genes.size()));
  const ExpressionTree& tree_a = a.genes[static_cast<std::size_t>(gene_a)];
  const ExpressionTree& tree_b = b.genes[static_cast<std::size_t>(gene_b)];

  for (int attempt = 0; attempt < 10; ++attempt) {
    const NodeLocation loc_a = detail::pick_node(tree_a, rng);
    const NodeLocation loc_b = detail::pick_node(tree_b, rng);
    ExpressionTree new_a = replace_subtree(tree_a, loc_a.index, subtree_copy(tree_b, loc_b.index));
    ExpressionTree new_b = replace_subtree(tree_b, loc_b.index, subtree_copy(tree_a, loc_a.index));
    if (new_a.depth() <= max_depth && new_b.depth() <= max_depth) {
      child_a.genes[static_cast<std::size_t>(gene_a)] = std::move(new_a);
      child_b.genes[static_cast<std::size_t>(gene_b)] = std::move(new_b);
      break;
    }
  }
  child_a.invalidate();
  child_b.invalidate();
  child_a.refresh_complexity();
  child_b.refresh_complexity();
  return {std::move(child_a), std::move(child_b)};
}

namespace detail {

/// Non-empty random subset of [0, n): independent coin per position, with a
/// forced single pick when every coin came up empty.
template <RandomSource R>
std::vector<bool> random_subset(int n, R& rng) {
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  bool any = false;
  for (int i = 0; i < n; ++i) {
    if (rng.bernoulli(0.5)) {
      mask[static_cast<std::size_t>(i)] = true;
      any = true;
    }
  }
  if (!any) mask[static_cast<std::size_t>(rng.uniform_int(n))] = true;
  return mask;
}

template <RandomSource R>
void truncate_genes(std::vector<ExpressionTree>& genes, int max_genes, R& rng) {
  while (static_cast<int>(genes.size()) > max_genes) {
    const int drop = rng.uniform_int(static_cast<int>(genes.size()));
    genes.erase(genes.begin() + drop);
  }
}

}  // namespace detail

/// Exchange whole genes between parents: a random non-empty subset of gene
/// positions moves each way, and children over the gene budget drop random
/// genes until they fit. This is how individuals acquire or shed genes.
template <RandomSource R>
std::pair<Individual, Individual> gene_crossover(const Individual& a,
                                                 const Individual& b, R& rng,
                                                 int max_genes) {
  const auto mask_a = detail::random_subset(static_cast<int>(a.genes.size()), rng);
  const auto mask_b = detail::random_subset(static_cast<int>(b.genes.size()), rng);

  Individual child_a;
  Individual child_b;
  for (std::size_t i = 0; i < a.genes.size(); ++i)
    (mask_a[i] ? child_b : child_a).genes.push_back(a.genes[i]);
  for (std::size_t i = 0; i < b.genes.size(); ++i)
    (mask_b[i] ? child_a : child_b).genes.push_back(b.genes[i]);

  detail::truncate_genes(child_a.genes, max_genes, rng);
  detail::truncate_genes(child_b.genes, max_genes, rng);
  child_a.refresh_complexity();
  child_b.refresh_complexity();
  return {std::move(child_a), std::move(child_b)};
}

/// Replace one randomly chosen subtree with a fresh grow-mode tree whose
/// depth budget is whatever room remains below max_depth at that node.
template <RandomSource R>
Individual subtree_mutation(const Individual& a, R& rng, int max_depth, int num_vars) {
  Individual child = a;
  const int gene_idx = rng.uniform_int(static_cast<int>(a.genes.size()));
  const ExpressionTree& tree = a.genes[static_cast<std::size_t>(gene_idx)];
  const NodeLocation loc = detail::pick_node(tree, rng);
  const int budget = max_depth - loc.depth;
  ExpressionTree fresh = random_tree(budget, BuildMethod::Grow, num_vars, rng);
  child.genes[static_cast<std::size_t>(gene_idx)] =
      replace_subtree(tree, loc.index, fresh);
  child.invalidate();
  child.refresh_complexity();
  return child;
}

}  // namespace mggp

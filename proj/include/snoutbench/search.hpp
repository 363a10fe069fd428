// Copyright 2026 The snoutbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Evolutionary search over multisets of m operator vectors, and the random
// search it is compared against.
//
// A genome is the operator part of a solution; it is bound to the target's
// values only when answered. The fitness function is supplied by the caller.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/fleet.hpp"
#include "snoutbench/query.hpp"
#include "snoutbench/random.hpp"
#include "snoutbench/rule.hpp"

namespace snoutbench {

using Genome = std::vector<OperatorVec>;

struct SearchConfig {
  std::size_t population = 100;
  std::size_t elites = 10;
  std::size_t generations = 200;
  std::size_t m = 100;
  double p_copy = 0.025;
  double p_modify = 0.025;
  double p_change = -1.0;  // negative means 1/n
  double p_swap = -1.0;    // negative means 1/n
  bool qbs_deterministic = true;
  double stop_fitness = 0.9999;
  std::size_t stop_patience = 10;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (population == 0) throw Error(ErrorCode::kConfig, "population must be positive");
    if (elites >= population) throw Error(ErrorCode::kConfig, "elites must be fewer than the population");
    if (p_copy < 0 || p_modify < 0 || p_copy + p_modify > 1.0 + 1e-12) {
      throw Error(ErrorCode::kConfig, "need p_copy, p_modify >= 0 and p_copy + p_modify <= 1");
    }
    if (p_change < 0 || p_swap < 0 || p_change + p_swap > 1.0 + 1e-12) {
      throw Error(ErrorCode::kConfig, "need p_change, p_swap >= 0 and p_change + p_swap <= 1");
    }
  }

  // Fills the 1/n defaults for the per-attribute probabilities.
  SearchConfig resolved(std::size_t n) const {
    SearchConfig c = *this;
    const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    if (c.p_change < 0) c.p_change = inv;
    if (c.p_swap < 0) c.p_swap = inv;
    return c;
  }
};

inline void to_json(nlohmann::json& j, const SearchConfig& c) {
  j = {{"population", c.population},       {"elites", c.elites},
       {"generations", c.generations},     {"m", c.m},
       {"p_copy", c.p_copy},               {"p_modify", c.p_modify},
       {"p_change", c.p_change},           {"p_swap", c.p_swap},
       {"qbs_deterministic", c.qbs_deterministic},
       {"stop_fitness", c.stop_fitness},   {"stop_patience", c.stop_patience},
       {"rng_seed", c.rng_seed}};
}

inline OperatorVec random_query(std::size_t n, Rng& rng) {
  OperatorVec ops(n);
  for (auto& o : ops) o = static_cast<Op>(rng.uniform_below(3));
  return ops;
}

inline Genome random_solution(std::size_t m, std::size_t n, Rng& rng) {
  Genome g;
  g.reserve(m);
  for (std::size_t i = 0; i < m; ++i) g.push_back(random_query(n, rng));
  return g;
}

// Visits the attributes in random order. Each attribute not already swapped
// is changed to one of the two other operators with p_change, else swapped
// with the next attribute in the order with p_swap (skipped for the last).
inline OperatorVec modify_query(const OperatorVec& ops, double p_change, double p_swap, Rng& rng) {
  const std::size_t n = ops.size();
  OperatorVec out = ops;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::vector<std::uint8_t> swapped(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (swapped[i]) continue;
    const double u = rng.uniform();
    const std::size_t a = order[i];
    if (u < p_change) {
      const auto cur = static_cast<std::uint32_t>(ops[a]);
      const auto shift = static_cast<std::uint32_t>(1 + rng.uniform_below(2));
      out[a] = static_cast<Op>((cur + shift) % 3);
    } else if (u < p_change + p_swap && i + 1 < n) {
      const std::size_t b = order[i + 1];
      out[a] = ops[b];
      out[b] = ops[a];
      swapped[i + 1] = 1;
    }
  }
  return out;
}

inline Genome apply_mutation(const Genome& parent, const SearchConfig& cfg, Rng& rng) {
  Genome child;
  child.reserve(parent.size() * 2);
  for (const auto& q : parent) {
    const double u = rng.uniform();
    if (u < cfg.p_copy) {
      child.push_back(q);
      if (cfg.qbs_deterministic || rng.uniform() > 0.5) {
        child.push_back(modify_query(q, cfg.p_change, cfg.p_swap, rng));
      } else {
        child.push_back(q);
      }
    } else if (u < cfg.p_copy + cfg.p_modify) {
      child.push_back(modify_query(q, cfg.p_change, cfg.p_swap, rng));
    } else {
      child.push_back(q);
    }
  }
  rng.shuffle(std::span(child));
  child.resize(std::min(child.size(), parent.size()));
  return child;
}

// Roulette wheel; uniform when all fitnesses are zero.
inline std::size_t select_parent(std::span<const double> fitnesses, Rng& rng) {
  if (fitnesses.empty()) throw Error(ErrorCode::kInvalidArgument, "empty population");
  double total = 0.0;
  for (double f : fitnesses) {
    if (f < 0) throw Error(ErrorCode::kInvalidArgument, "negative fitness");
    total += f;
  }
  if (total <= 0.0) return static_cast<std::size_t>(rng.uniform_below(fitnesses.size()));
  const double r = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < fitnesses.size(); ++i) {
    if (fitnesses[i] <= 0.0) continue;
    acc += fitnesses[i];
    last_positive = i;
    if (r < acc) return i;
  }
  return last_positive;
}

struct GenerationStats {
  std::size_t generation = 0;
  double best = 0.0;
  double mean = 0.0;
};

struct SearchResult {
  Genome best;
  double best_fitness = 0.0;
  std::vector<GenerationStats> history;
  std::size_t evaluations = 0;
  bool stopped_early = false;
};

using FitnessFn = std::function<double(const Genome&)>;

// Each generation evaluates the new members, sorts by fitness, and (unless
// it is the last) keeps the elites and fills the rest with mutated
// roulette-selected parents. Elites keep their stored fitness.
inline SearchResult evolutionary_search(const FitnessFn& fitness, std::size_t n, SearchConfig cfg) {
  cfg = cfg.resolved(n);
  cfg.validate();
  Rng rng(cfg.rng_seed);
  SearchResult result;
  std::vector<Genome> pop;
  pop.reserve(cfg.population);
  for (std::size_t i = 0; i < cfg.population; ++i) pop.push_back(random_solution(cfg.m, n, rng));
  std::vector<double> fit(cfg.population, 0.0);
  std::size_t first_new = 0;
  std::size_t streak = 0;
  bool have_best = false;

  for (std::size_t g = 1; g <= cfg.generations; ++g) {
    for (std::size_t i = first_new; i < pop.size(); ++i) {
      fit[i] = fitness(pop[i]);
      ++result.evaluations;
      if (!have_best || fit[i] > result.best_fitness) {
        result.best = pop[i];
        result.best_fitness = fit[i];
        have_best = true;
      }
    }
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    std::vector<Genome> sorted_pop;
    std::vector<double> sorted_fit;
    sorted_pop.reserve(pop.size());
    for (std::size_t i : order) {
      sorted_pop.push_back(std::move(pop[i]));
      sorted_fit.push_back(fit[i]);
    }
    pop = std::move(sorted_pop);
    fit = std::move(sorted_fit);

    const double mean = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(fit.size());
    result.history.push_back({g, fit.front(), mean});
    streak = fit.front() > cfg.stop_fitness ? streak + 1 : 0;
    if (streak >= cfg.stop_patience) {
      result.stopped_early = g < cfg.generations;
      break;
    }
    if (g == cfg.generations) break;

    std::vector<Genome> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(cfg.elites));
    std::vector<double> next_fit(fit.begin(), fit.begin() + static_cast<std::ptrdiff_t>(cfg.elites));
    while (next.size() < cfg.population) {
      const std::size_t parent = select_parent(fit, rng);
      next.push_back(apply_mutation(pop[parent], cfg, rng));
      next_fit.push_back(0.0);
    }
    pop = std::move(next);
    fit = std::move(next_fit);
    first_new = cfg.elites;
  }
  return result;
}

// N generations of P fresh random solutions each.
inline SearchResult random_search(const FitnessFn& fitness, std::size_t n, SearchConfig cfg) {
  cfg = cfg.resolved(n);
  cfg.validate();
  Rng rng(cfg.rng_seed);
  SearchResult result;
  bool have_best = false;
  for (std::size_t g = 1; g <= cfg.generations; ++g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < cfg.population; ++i) {
      Genome s = random_solution(cfg.m, n, rng);
      const double f = fitness(s);
      ++result.evaluations;
      sum += f;
      if (!have_best || f > result.best_fitness) {
        result.best = std::move(s);
        result.best_fitness = f;
        have_best = true;
      }
    }
    result.history.push_back({g, result.best_fitness, sum / static_cast<double>(cfg.population)});
  }
  return result;
}

inline std::vector<std::uint32_t> genome_codes(const Genome& g) {
  std::vector<std::uint32_t> codes;
  codes.reserve(g.size());
  for (const auto& ops : g) codes.push_back(encode_ops(ops));
  return codes;
}

// Fitness of a genome against a fleet bound to one target.
inline FitnessFn fleet_fitness(AuxFleet& fleet, RuleHyper hyper) {
  if (fleet.train.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training fleet");
  return [&fleet, hyper](const Genome& g) {
    const auto values = fleet.train.front().values();
    const auto codes = canonical_codes(genome_codes(g), values);
    return evaluate_fitness(codes, fleet, hyper);
  };
}

inline void write_history_csv(std::ostream& os, std::span<const GenerationStats> history) {
  os << "generation,best_fitness,mean_fitness\n";
  for (const auto& h : history) os << h.generation << ',' << h.best << ',' << h.mean << '\n';
}

}  // namespace snoutbench

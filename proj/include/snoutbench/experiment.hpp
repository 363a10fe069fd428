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

// End-to-end attack runs: configuration, per-target fleets, strategies,
// test evaluation and reports.
//
// Seeds are derived from master_seed along (repetition, target, role), so a
// run is reproducible regardless of how jobs are spread over workers.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "snoutbench/baselines.hpp"
#include "snoutbench/budget.hpp"
#include "snoutbench/dataset.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/fleet.hpp"
#include "snoutbench/qbs.hpp"
#include "snoutbench/query.hpp"
#include "snoutbench/random.hpp"
#include "snoutbench/rule.hpp"
#include "snoutbench/search.hpp"

namespace snoutbench {

struct QbsConfig {
  std::string mechanism = "diffix";
  std::string threshold_mode = "noisy-floor";
  int tau = 0;
  double sigma = 0.0;
  double epsilon = 1.0;

  QbsKind kind() const {
    if (mechanism == "diffix") {
      if (threshold_mode == "noisy-floor") return QbsKind::diffix(DiffixThresholdMode::kNoisyFloor);
      if (threshold_mode == "as-printed") return QbsKind::diffix(DiffixThresholdMode::kAsPrinted);
      throw Error(ErrorCode::kConfig, "unknown diffix threshold_mode '" + threshold_mode + "'");
    }
    if (mechanism == "tablebuilder") return QbsKind::table_builder();
    if (mechanism == "simpleqbs") return QbsKind::simple(tau, sigma);
    if (mechanism == "dplaplace") return QbsKind::dp_laplace(epsilon);
    throw Error(ErrorCode::kConfig, "unknown qbs mechanism '" + mechanism + "'");
  }
};

struct CountsConfig {
  std::size_t n_train_datasets = 2000;
  std::size_t n_val_datasets = 1000;
  std::size_t n_test_datasets = 500;
  std::size_t dataset_size = 8000;
  std::size_t num_targets = 100;
  std::size_t repetitions = 5;
  std::size_t known_attributes = 5;
};

struct BaselineConfig {
  std::size_t ranking_samples = 100;
  double accept_score = 0.8;
  std::string chipperfield_rule = "value-is-s";
};

struct ExperimentConfig {
  std::string dataset_path;
  std::optional<nlohmann::json> schema;
  bool randomize_sensitive = true;
  QbsConfig qbs;
  Scenario scenario = Scenario::kAuxiliary;
  CountsConfig counts;
  // Negative mutation rates are filled in by resolve_config.
  SearchConfig search = [] {
    SearchConfig sc;
    sc.p_copy = -1.0;
    sc.p_modify = -1.0;
    return sc;
  }();
  RuleHyper rule;
  std::string strategy = "querysnout";
  BaselineConfig baseline;
  std::uint64_t master_seed = 0;
};

inline constexpr double kDefaultMutationRate = 0.025;

// Applies a named preset on top of the config.
inline void apply_preset(ExperimentConfig& cfg, std::string_view preset) {
  if (preset == "desk") {
    cfg.counts.num_targets = 10;
    cfg.counts.n_train_datasets = 400;
    cfg.counts.n_val_datasets = 200;
    cfg.counts.n_test_datasets = 100;
    cfg.counts.dataset_size = 1000;
    cfg.counts.repetitions = 1;
    cfg.search.generations = 50;
  } else if (preset == "full") {
    cfg.counts = CountsConfig{};
    cfg.search.generations = 200;
    cfg.search.population = 100;
    cfg.search.m = 100;
  } else {
    throw Error(ErrorCode::kConfig, "unknown preset '" + std::string(preset) + "'");
  }
}

// Fills every default that depends on other settings.
inline ExperimentConfig resolve_config(ExperimentConfig cfg) {
  const QbsKind kind = cfg.qbs.kind();
  cfg.search.qbs_deterministic = kind.deterministic();
  const double rate = kind.budgeted() && cfg.search.m > 0 ? 1.0 / static_cast<double>(cfg.search.m)
                                                          : kDefaultMutationRate;
  if (cfg.search.p_copy < 0) cfg.search.p_copy = rate;
  if (cfg.search.p_modify < 0) cfg.search.p_modify = rate;
  cfg.search = cfg.search.resolved(cfg.counts.known_attributes + 1);
  cfg.search.validate();
  if (cfg.counts.num_targets == 0 || cfg.counts.repetitions == 0) {
    throw Error(ErrorCode::kConfig, "need at least one target and one repetition");
  }
  if (cfg.counts.dataset_size < 2) throw Error(ErrorCode::kConfig, "dataset_size must be at least 2");
  if (cfg.counts.n_test_datasets == 0) throw Error(ErrorCode::kEmptyTestSet, "n_test_datasets is 0");
  if (cfg.strategy != "querysnout" && cfg.strategy != "random-search") {
    if (cfg.strategy.rfind("baseline:", 0) != 0) {
      throw Error(ErrorCode::kConfig, "unknown strategy '" + cfg.strategy + "'");
    }
    const auto b = parse_baseline(std::string_view(cfg.strategy).substr(9));
    if (baseline_mechanism(b) != kind.mechanism) {
      throw Error(ErrorCode::kConfig, cfg.strategy + " does not apply to " + kind.name());
    }
  } else if (cfg.counts.n_train_datasets == 0 || cfg.counts.n_val_datasets == 0) {
    throw Error(ErrorCode::kConfig, "search strategies need train and validation datasets");
  }
  if (cfg.baseline.chipperfield_rule != "value-is-s" && cfg.baseline.chipperfield_rule != "as-printed") {
    throw Error(ErrorCode::kConfig, "chipperfield_rule must be 'value-is-s' or 'as-printed'");
  }
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dataset"] = {{"path", c.dataset_path}, {"randomize_sensitive", c.randomize_sensitive}};
  if (c.schema) j["dataset"]["schema"] = *c.schema;
  j["qbs"] = {{"mechanism", c.qbs.mechanism}, {"threshold_mode", c.qbs.threshold_mode},
              {"tau", c.qbs.tau},             {"sigma", c.qbs.sigma},
              {"epsilon", c.qbs.epsilon}};
  j["scenario"] = std::string(scenario_name(c.scenario));
  j["counts"] = {{"n_train_datasets", c.counts.n_train_datasets},
                 {"n_val_datasets", c.counts.n_val_datasets},
                 {"n_test_datasets", c.counts.n_test_datasets},
                 {"dataset_size", c.counts.dataset_size},
                 {"num_targets", c.counts.num_targets},
                 {"repetitions", c.counts.repetitions},
                 {"known_attributes", c.counts.known_attributes}};
  j["search"] = c.search;
  j["rule"] = {{"l2", c.rule.l2}, {"max_iters", c.rule.max_iters}, {"tol", c.rule.tol}};
  j["strategy"] = c.strategy;
  j["baseline"] = {{"ranking_samples", c.baseline.ranking_samples},
                   {"accept_score", c.baseline.accept_score},
                   {"chipperfield_rule", c.baseline.chipperfield_rule}};
  j["master_seed"] = c.master_seed;
  return j;
}

namespace internal {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace internal

// Relative dataset paths are resolved against `base_dir` when that file
// exists there.
inline ExperimentConfig config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
    static const std::set<std::string> kKnown = {"dataset", "qbs",      "scenario", "counts",     "search",
                                                 "rule",    "strategy", "baseline", "master_seed"};
    for (const auto& [key, value] : j.items()) {
      if (!kKnown.count(key)) throw Error(ErrorCode::kConfig, "unknown config section '" + key + "'");
    }
    const auto& d = j.at("dataset");
    c.dataset_path = d.at("path").get<std::string>();
    if (!base_dir.empty() && std::filesystem::path(c.dataset_path).is_relative() &&
        std::filesystem::exists(base_dir / c.dataset_path)) {
      c.dataset_path = (base_dir / c.dataset_path).lexically_normal().string();
    }
    if (d.contains("schema")) c.schema = d.at("schema");
    internal::read_opt(d, "randomize_sensitive", c.randomize_sensitive);
    if (j.contains("qbs")) {
      const auto& q = j.at("qbs");
      internal::read_opt(q, "mechanism", c.qbs.mechanism);
      internal::read_opt(q, "threshold_mode", c.qbs.threshold_mode);
      internal::read_opt(q, "tau", c.qbs.tau);
      internal::read_opt(q, "sigma", c.qbs.sigma);
      internal::read_opt(q, "epsilon", c.qbs.epsilon);
    }
    if (j.contains("scenario")) c.scenario = parse_scenario(j.at("scenario").get<std::string>());
    if (j.contains("counts")) {
      const auto& n = j.at("counts");
      internal::read_opt(n, "n_train_datasets", c.counts.n_train_datasets);
      internal::read_opt(n, "n_val_datasets", c.counts.n_val_datasets);
      internal::read_opt(n, "n_test_datasets", c.counts.n_test_datasets);
      internal::read_opt(n, "dataset_size", c.counts.dataset_size);
      internal::read_opt(n, "num_targets", c.counts.num_targets);
      internal::read_opt(n, "repetitions", c.counts.repetitions);
      internal::read_opt(n, "known_attributes", c.counts.known_attributes);
    }
    if (j.contains("search")) {
      const auto& s = j.at("search");
      internal::read_opt(s, "population", c.search.population);
      internal::read_opt(s, "elites", c.search.elites);
      internal::read_opt(s, "generations", c.search.generations);
      internal::read_opt(s, "m", c.search.m);
      internal::read_opt(s, "p_copy", c.search.p_copy);
      internal::read_opt(s, "p_modify", c.search.p_modify);
      internal::read_opt(s, "p_change", c.search.p_change);
      internal::read_opt(s, "p_swap", c.search.p_swap);
      internal::read_opt(s, "stop_fitness", c.search.stop_fitness);
      internal::read_opt(s, "stop_patience", c.search.stop_patience);
    }
    if (j.contains("rule")) {
      const auto& r = j.at("rule");
      internal::read_opt(r, "l2", c.rule.l2);
      internal::read_opt(r, "max_iters", c.rule.max_iters);
      internal::read_opt(r, "tol", c.rule.tol);
    }
    internal::read_opt(j, "strategy", c.strategy);
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      internal::read_opt(b, "ranking_samples", c.baseline.ranking_samples);
      internal::read_opt(b, "accept_score", c.baseline.accept_score);
      internal::read_opt(b, "chipperfield_rule", c.baseline.chipperfield_rule);
    }
    internal::read_opt(j, "master_seed", c.master_seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad JSON in ") + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

inline Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  if (cfg.schema) return load_dataset(cfg.dataset_path, schema_from_json(*cfg.schema)).dataset;
  return load_csv_infer_schema(cfg.dataset_path).dataset;
}

// Seed derivation.
namespace seeds {

inline std::uint64_t repetition(std::uint64_t master, std::size_t rep) {
  return derive_seed(master, "repetition", std::to_string(rep));
}
inline std::uint64_t partition(std::uint64_t rep_seed, std::size_t attempt) {
  return derive_seed(rep_seed, "partition", std::to_string(attempt));
}
inline std::uint64_t target(std::uint64_t rep_seed, std::size_t t) {
  return derive_seed(rep_seed, "target", std::to_string(t));
}
inline std::uint64_t role(std::uint64_t target_seed, std::string_view tag) { return derive_seed(target_seed, tag, ""); }

}  // namespace seeds

struct PreparedRepetition {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::size_t attempts = 1;
  std::vector<std::size_t> kept_attributes;
  std::shared_ptr<const Dataset> train_pool;
  std::shared_ptr<const Dataset> val_pool;
  std::shared_ptr<const Dataset> test_pool;
  std::vector<TargetRecord> targets;
};

inline constexpr std::size_t kMaxPartitionAttempts = 50;

// Samples attributes, pools and targets; retries with a fresh attribute
// draw when the test pool has too few unique records.
inline PreparedRepetition prepare_repetition(const Dataset& full, const ExperimentConfig& cfg, std::size_t rep) {
  PreparedRepetition out;
  out.repetition = rep;
  out.seed = seeds::repetition(cfg.master_seed, rep);
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      Partition p = partition_and_pick_targets(full, cfg.counts.known_attributes, cfg.counts.num_targets,
                                               seeds::partition(out.seed, attempt));
      out.attempts = attempt + 1;
      out.kept_attributes = p.kept_attributes;
      out.train_pool = std::make_shared<const Dataset>(std::move(p.train_pool));
      out.val_pool = std::make_shared<const Dataset>(std::move(p.val_pool));
      out.test_pool = std::make_shared<const Dataset>(std::move(p.test_pool));
      out.targets = std::move(p.targets);
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotEnoughUniqueRecords || attempt + 1 >= kMaxPartitionAttempts) throw;
    }
  }
}

// Everything bound to one target: samplers for each split and the fleets.
struct TargetSetup {
  std::shared_ptr<AuxSampler> train_sampler;
  std::shared_ptr<AuxSampler> val_sampler;
  std::shared_ptr<AuxSampler> test_sampler;
  AuxFleet fleet;
  FleetPart test;
};

inline TargetSetup setup_target(const PreparedRepetition& prep, std::size_t t, const ExperimentConfig& cfg,
                                bool build_aux_fleet = true) {
  const TargetRecord& target = prep.targets.at(t);
  const std::uint64_t ts = seeds::target(prep.seed, t);
  const QbsKind kind = cfg.qbs.kind();
  const std::size_t size = cfg.counts.dataset_size;
  TargetSetup s;
  if (cfg.scenario == Scenario::kAuxiliary) {
    s.train_sampler = std::make_shared<AuxSampler>(Scenario::kAuxiliary, prep.train_pool, target, size,
                                                   seeds::role(ts, "sampler-train"), cfg.randomize_sensitive);
    s.val_sampler = std::make_shared<AuxSampler>(Scenario::kAuxiliary, prep.val_pool, target, size,
                                                 seeds::role(ts, "sampler-val"), cfg.randomize_sensitive);
    s.test_sampler = std::make_shared<AuxSampler>(Scenario::kAuxiliary, prep.test_pool, target, size,
                                                  seeds::role(ts, "sampler-test"), cfg.randomize_sensitive);
  } else {
    auto priv = std::make_shared<const Dataset>(make_exact_private_rows(
        *prep.test_pool, target, size, seeds::role(ts, "private"), cfg.randomize_sensitive));
    s.train_sampler = std::make_shared<AuxSampler>(Scenario::kExactButOne, priv, target, size,
                                                   seeds::role(ts, "sampler-train"), cfg.randomize_sensitive);
    s.val_sampler = std::make_shared<AuxSampler>(Scenario::kExactButOne, priv, target, size,
                                                 seeds::role(ts, "sampler-val"), cfg.randomize_sensitive);
    s.test_sampler = std::make_shared<AuxSampler>(Scenario::kExactButOne, priv, target, size,
                                                  seeds::role(ts, "sampler-test"), cfg.randomize_sensitive);
  }
  const auto train_seeds = split_instance_seeds(seeds::role(ts, "qbs-train"), cfg.counts.n_train_datasets);
  const auto val_seeds = split_instance_seeds(seeds::role(ts, "qbs-val"), cfg.counts.n_val_datasets);
  const auto test_seeds = split_instance_seeds(seeds::role(ts, "qbs-test"), cfg.counts.n_test_datasets);
  require_disjoint_seeds({train_seeds, val_seeds, test_seeds});
  if (build_aux_fleet) {
    s.fleet.train = build_fleet_part(*s.train_sampler, kind, train_seeds);
    s.fleet.val = build_fleet_part(*s.val_sampler, kind, val_seeds);
  }
  s.test = build_fleet_part(*s.test_sampler, kind, test_seeds);
  return s;
}

// Fraction of test datasets on which the rule recovers the target's bit.
inline double evaluate_on_test(std::span<const std::uint32_t> codes, const TrainedRule& rule, FleetPart& test) {
  if (test.empty()) throw Error(ErrorCode::kEmptyTestSet, "no test datasets");
  return accuracy(rule, build_matrix(codes, test));
}

inline double evaluate_on_test(const Solution& sol, const TrainedRule& rule, FleetPart& test) {
  const auto codes = solution_codes(sol);
  return evaluate_on_test(codes, rule, test);
}

struct TargetResult {
  std::size_t repetition = 0;
  std::size_t target = 0;
  std::vector<Code> known_values;
  int true_sensitive = 0;
  std::vector<std::string> solution;  // glyph lines, canonical order
  double fitness = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t evaluations = 0;
  std::size_t abstentions = 0;
  std::vector<GenerationStats> history;
  nlohmann::json rule;
  double runtime_seconds = 0.0;
};

// Trains the rule for a found solution and scores it on the test fleet.
inline void finish_search_result(TargetResult& r, const std::vector<std::uint32_t>& codes, TargetSetup& s,
                                 const ExperimentConfig& cfg) {
  const auto values = s.fleet.train.front().values();
  const auto fr = evaluate_fitness_detailed(codes, s.fleet, cfg.rule);
  r.train_accuracy = fr.train_accuracy;
  r.val_accuracy = fr.val_accuracy;
  r.rule = fr.rule.to_json();
  r.test_accuracy = evaluate_on_test(codes, fr.rule, s.test);
  r.solution = codes_to_solution(codes, values).to_glyph_lines();
}

inline TargetResult run_target(const PreparedRepetition& prep, std::size_t t, const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  TargetResult r;
  r.repetition = prep.repetition;
  r.target = t;
  r.known_values = prep.targets[t].known_values;
  r.true_sensitive = prep.targets[t].true_sensitive;
  const bool is_baseline = cfg.strategy.rfind("baseline:", 0) == 0;
  TargetSetup s = setup_target(prep, t, cfg, !is_baseline);
  const std::uint64_t ts = seeds::target(prep.seed, t);

  if (is_baseline) {
    BaselineKnowledge know;
    know.scenario = cfg.scenario;
    know.sampler = s.train_sampler.get();
    know.ranking_samples = cfg.baseline.ranking_samples;
    know.m_budget = cfg.search.m;
    know.accept_score = cfg.baseline.accept_score;
    know.chipperfield_rule =
        cfg.baseline.chipperfield_rule == "as-printed" ? ChipperfieldRule::kAsPrinted : ChipperfieldRule::kValueIsS;
    const auto rep = evaluate_baseline(parse_baseline(std::string_view(cfg.strategy).substr(9)), s.test, know);
    r.test_accuracy = rep.accuracy;
    r.abstentions = rep.abstentions;
  } else {
    SearchConfig sc = cfg.search;
    sc.rng_seed = seeds::role(ts, "search");
    const std::size_t n = cfg.counts.known_attributes + 1;
    const FitnessFn fitness = fleet_fitness(s.fleet, cfg.rule);
    const SearchResult res =
        cfg.strategy == "querysnout" ? evolutionary_search(fitness, n, sc) : random_search(fitness, n, sc);
    r.fitness = res.best_fitness;
    r.evaluations = res.evaluations;
    r.history = res.history;
    const auto codes = canonical_codes(genome_codes(res.best), s.fleet.train.front().values());
    finish_search_result(r, codes, s, cfg);
  }
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

struct AttackReport {
  nlohmann::json config;
  std::vector<TargetResult> targets;
  std::vector<double> repetition_means;
  std::vector<std::vector<std::size_t>> kept_attributes;
  double mean_accuracy = 0.0;
  double std_over_repetitions = 0.0;
  double runtime_seconds = 0.0;
};

inline void aggregate(AttackReport& rep, std::size_t repetitions) {
  rep.repetition_means.assign(repetitions, 0.0);
  std::vector<std::size_t> counts(repetitions, 0);
  for (const auto& t : rep.targets) {
    rep.repetition_means[t.repetition] += t.test_accuracy;
    ++counts[t.repetition];
  }
  for (std::size_t i = 0; i < repetitions; ++i) {
    if (counts[i]) rep.repetition_means[i] /= static_cast<double>(counts[i]);
  }
  double total = 0.0;
  for (const auto& t : rep.targets) total += t.test_accuracy;
  rep.mean_accuracy = rep.targets.empty() ? 0.0 : total / static_cast<double>(rep.targets.size());
  double var = 0.0;
  double rep_mean = std::accumulate(rep.repetition_means.begin(), rep.repetition_means.end(), 0.0) /
                    static_cast<double>(repetitions);
  for (double m : rep.repetition_means) var += (m - rep_mean) * (m - rep_mean);
  rep.std_over_repetitions = repetitions > 1 ? std::sqrt(var / static_cast<double>(repetitions - 1)) : 0.0;
}

using ProgressFn = std::function<void(const TargetResult&, std::size_t done, std::size_t total)>;

// Runs every (repetition, target) job on `workers` threads (0 = hardware
// concurrency).
inline AttackReport run_experiment(const ExperimentConfig& raw_cfg, std::size_t workers = 0,
                                   const ProgressFn& progress = {}) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = resolve_config(raw_cfg);
  const Dataset full = load_experiment_dataset(cfg);
  std::vector<PreparedRepetition> preps;
  for (std::size_t rep = 0; rep < cfg.counts.repetitions; ++rep) preps.push_back(prepare_repetition(full, cfg, rep));

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t rep = 0; rep < preps.size(); ++rep) {
    for (std::size_t t = 0; t < preps[rep].targets.size(); ++t) jobs.emplace_back(rep, t);
  }
  AttackReport report;
  report.config = config_to_json(cfg);
  for (const auto& p : preps) report.kept_attributes.push_back(p.kept_attributes);
  report.targets.resize(jobs.size());

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        report.targets[i] = run_target(preps[jobs[i].first], jobs[i].second, cfg);
        const std::size_t d = ++done;
        if (progress) {
          std::lock_guard<std::mutex> lock(mu);
          progress(report.targets[i], d, jobs.size());
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  aggregate(report, cfg.counts.repetitions);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// Run-time figures are kept out of report_to_json so that identical runs
// produce identical reports; see timing_to_json.
inline nlohmann::json report_to_json(const AttackReport& rep) {
  nlohmann::json j;
  j["config"] = rep.config;
  j["mean_accuracy"] = rep.mean_accuracy;
  j["std_over_repetitions"] = rep.std_over_repetitions;
  j["repetition_means"] = rep.repetition_means;
  j["kept_attributes"] = rep.kept_attributes;
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : rep.targets) {
    nlohmann::json h = nlohmann::json::array();
    for (const auto& g : t.history) h.push_back({g.generation, g.best, g.mean});
    targets.push_back({{"repetition", t.repetition},
                       {"target", t.target},
                       {"known_values", t.known_values},
                       {"true_sensitive", t.true_sensitive},
                       {"solution", t.solution},
                       {"fitness", t.fitness},
                       {"train_accuracy", t.train_accuracy},
                       {"val_accuracy", t.val_accuracy},
                       {"test_accuracy", t.test_accuracy},
                       {"evaluations", t.evaluations},
                       {"abstentions", t.abstentions},
                       {"history", h},
                       {"rule", t.rule}});
  }
  j["targets"] = targets;
  return j;
}

inline nlohmann::json timing_to_json(const AttackReport& rep) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& t : rep.targets) {
    per.push_back({{"repetition", t.repetition}, {"target", t.target}, {"seconds", t.runtime_seconds}});
  }
  return {{"total_seconds", rep.runtime_seconds}, {"targets", per}};
}

inline AttackReport report_from_json(const nlohmann::json& j) {
  AttackReport rep;
  rep.config = j.at("config");
  rep.mean_accuracy = j.at("mean_accuracy").get<double>();
  rep.std_over_repetitions = j.at("std_over_repetitions").get<double>();
  rep.repetition_means = j.at("repetition_means").get<std::vector<double>>();
  rep.kept_attributes = j.at("kept_attributes").get<std::vector<std::vector<std::size_t>>>();
  for (const auto& t : j.at("targets")) {
    TargetResult r;
    r.repetition = t.at("repetition").get<std::size_t>();
    r.target = t.at("target").get<std::size_t>();
    r.known_values = t.at("known_values").get<std::vector<Code>>();
    r.true_sensitive = t.at("true_sensitive").get<int>();
    r.solution = t.at("solution").get<std::vector<std::string>>();
    r.fitness = t.at("fitness").get<double>();
    r.train_accuracy = t.at("train_accuracy").get<double>();
    r.val_accuracy = t.at("val_accuracy").get<double>();
    r.test_accuracy = t.at("test_accuracy").get<double>();
    r.evaluations = t.at("evaluations").get<std::size_t>();
    r.abstentions = t.at("abstentions").get<std::size_t>();
    for (const auto& h : t.at("history")) {
      r.history.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>(), h.at(2).get<double>()});
    }
    r.rule = t.at("rule");
    rep.targets.push_back(std::move(r));
  }
  return rep;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  out << text;
}

// report.json, timing.json, report.csv, resolved_config.json,
// solutions/<rep>_<target>.txt and histories/<rep>_<target>.csv.
inline void write_report(const AttackReport& rep, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "solutions");
  fs::create_directories(dir / "histories");
  write_text(dir / "report.json", report_to_json(rep).dump(2) + "\n");
  write_text(dir / "timing.json", timing_to_json(rep).dump(2) + "\n");
  write_text(dir / "resolved_config.json", rep.config.dump(2) + "\n");
  std::ostringstream csv;
  csv << "repetition,target,true_sensitive,fitness,train_accuracy,val_accuracy,test_accuracy,evaluations,"
         "abstentions\n";
  for (const auto& t : rep.targets) {
    csv << t.repetition << ',' << t.target << ',' << t.true_sensitive << ',' << t.fitness << ','
        << t.train_accuracy << ',' << t.val_accuracy << ',' << t.test_accuracy << ',' << t.evaluations << ','
        << t.abstentions << '\n';
    const std::string stem = std::to_string(t.repetition) + "_" + std::to_string(t.target);
    std::string lines;
    for (const auto& l : t.solution) lines += l + "\n";
    write_text(dir / "solutions" / (stem + ".txt"), lines);
    std::ostringstream hist;
    write_history_csv(hist, t.history);
    write_text(dir / "histories" / (stem + ".csv"), hist.str());
  }
  write_text(dir / "report.csv", csv.str());
}

inline AttackReport load_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) throw Error(ErrorCode::kIo, "no report.json in " + dir.string());
  nlohmann::json j;
  in >> j;
  return report_from_json(j);
}

struct DifferenceAnalysis {
  std::size_t n_diff = 0;
  double acc_full = 0.0;
  double acc_diff_only = 0.0;
  double acc_random_subset = 0.0;
};

// Indices of queries that take part in a difference pair: two queries equal
// except for one known attribute that is NONE in one and NEQ in the other.
inline std::vector<std::size_t> difference_query_indices(std::span<const std::uint32_t> codes, std::size_t n) {
  std::vector<std::uint8_t> in_pair(codes.size(), 0);
  std::vector<OperatorVec> ops;
  ops.reserve(codes.size());
  for (std::uint32_t c : codes) ops.push_back(decode_ops(c, n));
  for (std::size_t a = 0; a < codes.size(); ++a) {
    for (std::size_t b = 0; b < codes.size(); ++b) {
      if (a == b) continue;
      std::size_t diffs = 0;
      std::size_t where = 0;
      for (std::size_t i = 0; i < n && diffs < 2; ++i) {
        if (ops[a][i] != ops[b][i]) {
          ++diffs;
          where = i;
        }
      }
      if (diffs == 1 && where + 1 < n && ops[a][where] == Op::kNone && ops[b][where] == Op::kNeq) {
        in_pair[a] = in_pair[b] = 1;
      }
    }
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (in_pair[i]) idx.push_back(i);
  }
  return idx;
}

inline AnswerMatrix select_columns(const AnswerMatrix& m, std::span<const std::size_t> cols) {
  AnswerMatrix out{Eigen::MatrixXd(m.x.rows(), static_cast<Eigen::Index>(cols.size())), m.y};
  for (std::size_t j = 0; j < cols.size(); ++j) out.x.col(static_cast<Eigen::Index>(j)) = m.x.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

// Retrains the rule on the difference queries only, and on a random column
// subset of the same size, and scores both on the test fleet.
inline DifferenceAnalysis analyze_difference_queries(std::span<const std::uint32_t> codes, AuxFleet& fleet,
                                                     FleetPart& test, const RuleHyper& hyper,
                                                     std::uint64_t seed = 0) {
  if (fleet.train.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training fleet");
  const std::size_t n = fleet.train.front().width();
  const auto train = build_matrix(codes, fleet.train);
  const auto tst = build_matrix(codes, test);
  DifferenceAnalysis out;
  const auto idx = difference_query_indices(codes, n);
  out.n_diff = idx.size();
  auto score = [&](std::span<const std::size_t> cols) {
    const auto rule = train_rule(select_columns(train, cols), hyper);
    return accuracy(rule, select_columns(tst, cols));
  };
  std::vector<std::size_t> all(codes.size());
  std::iota(all.begin(), all.end(), 0);
  out.acc_full = score(all);
  out.acc_diff_only = score(idx);
  Rng rng(seed);
  rng.partial_shuffle(std::span(all), idx.size());
  all.resize(idx.size());
  std::sort(all.begin(), all.end());
  out.acc_random_subset = score(all);
  return out;
}

// Rebuilds the fleets of a finished run and analyses each stored solution.
inline nlohmann::json analyze_run(const std::filesystem::path& dir) {
  const AttackReport rep = load_report(dir);
  ExperimentConfig cfg = config_from_json(rep.config);
  cfg = resolve_config(cfg);
  if (cfg.strategy.rfind("baseline:", 0) == 0) {
    throw Error(ErrorCode::kConfig, "baseline runs have no solutions to analyse");
  }
  const Dataset full = load_experiment_dataset(cfg);
  std::vector<PreparedRepetition> preps;
  for (std::size_t r = 0; r < cfg.counts.repetitions; ++r) preps.push_back(prepare_repetition(full, cfg, r));
  nlohmann::json per = nlohmann::json::array();
  double sum_full = 0, sum_diff = 0, sum_rand = 0, sum_n = 0;
  for (const auto& t : rep.targets) {
    TargetSetup s = setup_target(preps.at(t.repetition), t.target, cfg);
    std::vector<OperatorVec> ops;
    for (const auto& line : t.solution) ops.push_back(parse_glyphs(line));
    const auto codes = canonical_codes(genome_codes(ops), s.fleet.train.front().values());
    const auto a = analyze_difference_queries(codes, s.fleet, s.test, cfg.rule,
                                              seeds::role(seeds::target(preps[t.repetition].seed, t.target), "analysis"));
    per.push_back({{"repetition", t.repetition},
                   {"target", t.target},
                   {"n_diff", a.n_diff},
                   {"acc_full", a.acc_full},
                   {"acc_diff_only", a.acc_diff_only},
                   {"acc_random_subset", a.acc_random_subset}});
    sum_full += a.acc_full;
    sum_diff += a.acc_diff_only;
    sum_rand += a.acc_random_subset;
    sum_n += static_cast<double>(a.n_diff);
  }
  const double k = rep.targets.empty() ? 1.0 : static_cast<double>(rep.targets.size());
  return {{"targets", per},
          {"mean_n_diff", sum_n / k},
          {"mean_acc_full", sum_full / k},
          {"mean_acc_diff_only", sum_diff / k},
          {"mean_acc_random_subset", sum_rand / k}};
}

// Noise diagnostics for the configured mechanism: over many instance seeds,
// moments of (raw answer - true count) for a few fixed queries.
inline nlohmann::json qbs_stats(const ExperimentConfig& raw_cfg, std::size_t instances = 2000) {
  const ExperimentConfig cfg = resolve_config(raw_cfg);
  const QbsKind kind = cfg.qbs.kind();
  const Dataset full = load_experiment_dataset(cfg);
  const PreparedRepetition prep = prepare_repetition(full, cfg, 0);
  ExperimentConfig small = cfg;
  small.counts.n_train_datasets = 0;
  small.counts.n_val_datasets = 0;
  small.counts.n_test_datasets = 1;
  TargetSetup s = setup_target(prep, 0, small, false);
  const auto data = s.test.front().instance().dataset_ptr();
  const auto values = s.test.front().values();
  const std::size_t n = values.size();
  nlohmann::json out;
  out["qbs"] = kind.name();
  out["instances"] = instances;
  nlohmann::json queries = nlohmann::json::array();
  const std::vector<std::uint32_t> probe = {
      static_cast<std::uint32_t>(query_space_size(n) - 1),  // unconditioned
      encode_ops(OperatorVec([&] {
        OperatorVec o(n, Op::kNone);
        o[n - 1] = Op::kEq;
        return o;
      }())),
      0u};
  for (std::uint32_t code : probe) {
    double sum = 0, sq = 0;
    std::size_t unsuppressed = 0;
    std::int64_t t = 0;
    for (std::size_t k = 0; k < instances; ++k) {
      BoundQbs b(QbsInstance(kind, data, mix_seed(0x5747, k)), values);
      const RawAnswer a = kind.budgeted() ? b.answer_budgeted_raw(code, 1.0) : b.answer_raw(code);
      t = a.true_count;
      if (a.suppressed) continue;
      ++unsuppressed;
      const double e = a.raw - static_cast<double>(a.true_count);
      sum += e;
      sq += e * e;
    }
    const double u = static_cast<double>(std::max<std::size_t>(1, unsuppressed));
    const double mean = sum / u;
    queries.push_back({{"query", to_glyphs(decode_ops(code, n))},
                       {"true_count", t},
                       {"suppressed_fraction", 1.0 - static_cast<double>(unsuppressed) / static_cast<double>(instances)},
                       {"noise_mean", mean},
                       {"noise_variance", sq / u - mean * mean}});
  }
  out["queries"] = queries;
  return out;
}

}  // namespace snoutbench

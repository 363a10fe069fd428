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


// Acceptance checks, one per criterion. Each prints a single PASS/FAIL line
// (after any diagnostics) and exits non-zero on failure.
//
//   acceptance --criterion N [--cache-dir DIR] [--workers K]
//
// Criteria 4-7 run desk-scale experiments on data/adult.csv; their reports are
// cached under --cache-dir, keyed by the resolved config and this binary's
// modification time, so a rebuild always recomputes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/normal.hpp>

#include "CLI11.hpp"
#include "test_support.hpp"

namespace sb = snoutbench;
namespace fs = std::filesystem;
using namespace testing_support;
using sb::Op;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ---- shared fixtures -------------------------------------------------------

// t rows equal to the target and `filler` rows that differ everywhere.
std::shared_ptr<const sb::Dataset> block_dataset(std::size_t t, std::size_t filler = 10) {
  auto schema = make_schema({3, 3, 3, 3, 3, 2});
  sb::Dataset d(schema);
  for (std::size_t i = 0; i < filler; ++i) d.append_row(std::vector<sb::Code>{1, 1, 1, 1, 1, static_cast<sb::Code>(i % 2)});
  for (std::size_t i = 0; i < t; ++i) d.append_row(std::vector<sb::Code>{0, 0, 0, 0, 0, 0});
  return std::make_shared<const sb::Dataset>(d);
}

const std::vector<sb::Code> kBlockValues = {0, 0, 0, 0, 0, 0};

sb::Query block_query(std::size_t n_cond) {
  sb::OperatorVec ops(6, Op::kNone);
  for (std::size_t i = 0; i < n_cond; ++i) ops[i] = Op::kEq;
  return sb::bind_query(ops, kBlockValues);
}

// The target (last row, known values 0,0,0) is the only record with pivot
// value 0, so every (subset, pivot=1) pair isolates it.
std::shared_ptr<const sb::Dataset> pair_dataset(int target_s, std::size_t filler) {
  auto schema = make_schema({3, 3, 3, 2});
  sb::Dataset d(schema);
  for (std::size_t i = 0; i < filler; ++i) {
    d.append_row(std::vector<sb::Code>{0, static_cast<sb::Code>(1 + i % 2), static_cast<sb::Code>(i % 3),
                                       static_cast<sb::Code>(i % 2)});
  }
  d.append_row(std::vector<sb::Code>{0, 0, 0, static_cast<sb::Code>(target_s)});
  return std::make_shared<const sb::Dataset>(d);
}

bool unique_on(const sb::Dataset& d, std::size_t target_row, const std::vector<std::size_t>& attrs) {
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    if (r == target_row) continue;
    bool same = true;
    for (auto a : attrs) same = same && d.row(r)[a] == d.row(target_row)[a];
    if (same) return false;
  }
  return true;
}

sb::TargetRecord make_target(std::vector<sb::Code> known, int s) {
  sb::TargetRecord t;
  t.known_values = std::move(known);
  t.true_sensitive = s;
  return t;
}

// Optimal single-answer accuracy from the bin masses of the rounded, clamped
// Laplace answer under true counts 0 and 1.
double dp_bin_oracle(double epsilon) {
  boost::math::laplace_distribution<double> l0(0.0, 1.0 / epsilon), l1(1.0, 1.0 / epsilon);
  auto bin = [](const auto& dist, int n) {
    const double hi = boost::math::cdf(dist, n + 0.5);
    return n == 0 ? hi : hi - boost::math::cdf(dist, n - 0.5);
  };
  double acc = 0.0;
  for (int n = 0; n < 400; ++n) acc += 0.5 * std::max(bin(l0, n), bin(l1, n));
  return acc;
}

// ---- desk runs -------------------------------------------------------------

struct Context {
  fs::path cache_dir;
  std::size_t workers = 0;
  fs::path self;
};

sb::ExperimentConfig desk_config(const std::string& mechanism, sb::Scenario scenario) {
  sb::ExperimentConfig c = sb::load_config(fs::path(SNOUTBENCH_SOURCE_DIR) / "samples" / "diffix_auxiliary.json");
  sb::apply_preset(c, "desk");
  c.qbs.mechanism = mechanism;
  c.scenario = scenario;
  return c;
}

sb::AttackReport cached_run(const Context& ctx, const sb::ExperimentConfig& raw, const std::string& label) {
  const auto cfg = sb::resolve_config(raw);
  sb::Fnv1a h;
  const std::string key_text = sb::config_to_json(cfg).dump() + "|" +
                               std::to_string(fs::last_write_time(ctx.self).time_since_epoch().count());
  h.update(key_text);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h.digest()));
  const fs::path dir = ctx.cache_dir / (label + "_" + hex);
  if (fs::exists(dir / "report.json")) {
    std::printf("[%s] using cached report %s\n", label.c_str(), dir.c_str());
    return sb::load_report(dir);
  }
  std::printf("[%s] running %s on %s (%s)\n", label.c_str(), cfg.strategy.c_str(), cfg.qbs.kind().name().c_str(),
              std::string(sb::scenario_name(cfg.scenario)).c_str());
  std::fflush(stdout);
  auto rep = sb::run_experiment(cfg, ctx.workers, [&](const sb::TargetResult& r, std::size_t done, std::size_t total) {
    std::printf("[%s] %zu/%zu target %zu: fitness %.4f test %.4f (%.1fs)\n", label.c_str(), done, total, r.target,
                r.fitness, r.test_accuracy, r.runtime_seconds);
    std::fflush(stdout);
  });
  sb::write_report(rep, dir);
  return rep;
}

// ---- criteria --------------------------------------------------------------

Outcome criterion_1(const Context&) {
  Outcome o;
  std::mt19937_64 gen(101);
  auto d = std::make_shared<const sb::Dataset>(random_dataset(make_schema({2, 3, 3, 2}), 150, gen));
  const std::vector<sb::Code> values = {1, 2, 0, 0};
  const auto n = values.size();
  const auto space = static_cast<std::uint32_t>(sb::query_space_size(n));

  // Determinism over 100 repeats and across fresh instances with the same seed.
  bool deterministic = true;
  for (auto kind : {sb::QbsKind::diffix(), sb::QbsKind::table_builder()}) {
    sb::QbsInstance ref(kind, d, 33);
    for (std::uint32_t c = 0; c < space; ++c) {
      const auto q = sb::bind_query(sb::decode_ops(c, n), values);
      const auto first = ref.answer(q);
      for (int r = 0; r < 100 && deterministic; ++r) {
        sb::QbsInstance again(kind, d, 33);
        deterministic = deterministic && ref.answer(q) == first && again.answer(q) == first;
      }
    }
  }
  o.check(deterministic, "Diffix/TableBuilder deterministic over 100 repeats");

  // Query order does not change any answer.
  bool order_free = true;
  for (auto kind : {sb::QbsKind::diffix(), sb::QbsKind::table_builder()}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<std::uint32_t> codes(space);
      std::iota(codes.begin(), codes.end(), 0);
      sb::QbsInstance fwd(kind, d, 40 + rep);
      std::vector<std::int64_t> a(space), b(space);
      for (auto c : codes) a[c] = fwd.answer(sb::bind_query(sb::decode_ops(c, n), values));
      std::shuffle(codes.begin(), codes.end(), gen);
      sb::QbsInstance perm(kind, d, 40 + rep);
      for (auto c : codes) b[c] = perm.answer(sb::bind_query(sb::decode_ops(c, n), values));
      order_free = order_free && a == b;
    }
  }
  o.check(order_free, "query-order permutation invariant");

  // Nonnegative integer answers everywhere.
  bool nonneg = true;
  for (auto kind : {sb::QbsKind::diffix(), sb::QbsKind::diffix(sb::DiffixThresholdMode::kAsPrinted),
                    sb::QbsKind::table_builder(), sb::QbsKind::simple(2, 3.0), sb::QbsKind::dp_laplace(0.3)}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      sb::QbsInstance q(kind, d, seed);
      for (std::uint32_t c = 0; c < space; ++c) {
        const auto bq = sb::bind_query(sb::decode_ops(c, n), values);
        if (kind.budgeted()) q.reset_budget();
        const auto a = kind.budgeted() ? q.answer_budgeted_raw(bq, 1.0) : q.answer_raw(bq);
        nonneg = nonneg && a.value >= 0 && (a.suppressed ? a.value == 0 : a.value == sb::round_answer(a.raw));
      }
    }
  }
  o.check(nonneg, "answers are nonnegative rounded integers");

  // Diffix: unsuppressed pre-round noise variance 2 * n_cond.
  auto big = block_dataset(200);
  for (std::size_t n_cond : {1u, 3u, 5u}) {
    std::vector<double> xs;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      sb::QbsInstance q(sb::QbsKind::diffix(), big, sb::mix_seed(s, 17));
      const auto a = q.answer_raw(block_query(n_cond));
      if (!a.suppressed) xs.push_back(a.raw - 200.0);
    }
    const double expect = 2.0 * static_cast<double>(n_cond);
    const double v = moments(xs).variance;
    o.check(xs.size() == 10000 && std::abs(v / expect - 1.0) <= 0.05,
            "Diffix variance n_cond=" + std::to_string(n_cond) + fmt2(": %.3f vs %.0f", v, expect));
  }

  // TableBuilder noise uniform on {-2..2}.
  {
    std::vector<double> counts(5, 0.0);
    const int trials = 20000;
    bool in_range = true;
    for (int s = 0; s < trials; ++s) {
      sb::QbsInstance q(sb::QbsKind::table_builder(), big, static_cast<std::uint64_t>(s));
      const auto v = q.answer(block_query(5)) - 200;
      if (v < -2 || v > 2) {
        in_range = false;
        continue;
      }
      counts[static_cast<std::size_t>(v + 2)] += 1;
    }
    const std::vector<double> expected(5, trials / 5.0);
    const double p = chi_square_p(counts, expected);
    o.check(in_range && p > 0.001, fmt("TableBuilder noise chi-square p=%.3f", p));
  }

  // DPLaplace with the whole budget on one query: variance 2 / eps^2.
  for (double eps : {0.5, 1.0, 2.0}) {
    sb::QbsInstance q(sb::QbsKind::dp_laplace(eps), big, 5);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) {
      q.reset_budget();
      xs.push_back(q.answer_budgeted_raw(block_query(5), 1.0).raw - 200.0);
    }
    const double expect = 2.0 / (eps * eps);
    const double v = moments(xs).variance;
    o.check(std::abs(v / expect - 1.0) <= 0.05, fmt2("DPLaplace variance %.4f vs %.4f", v, expect));
  }
  return o;
}

Outcome criterion_2(const Context&) {
  Outcome o;
  for (double eps : {1.0, 5.0, 10.0}) {
    sb::BoundQbs q0(sb::QbsInstance(sb::QbsKind::dp_laplace(eps), pair_dataset(0, 5), 901), std::vector<sb::Code>{0, 0, 0, 0});
    sb::BoundQbs q1(sb::QbsInstance(sb::QbsKind::dp_laplace(eps), pair_dataset(1, 5), 902), std::vector<sb::Code>{0, 0, 0, 0});
    const int trials = 100000;
    int correct = 0;
    for (int i = 0; i < trials; ++i) {
      const int s = i % 2;
      auto& q = s == 0 ? q0 : q1;
      q.reset_budget();
      correct += sb::attack_dplaplace_uniqueness(q).prediction == s ? 1 : 0;
    }
    const double acc = static_cast<double>(correct) / trials;
    const double oracle = dp_bin_oracle(eps);
    o.check(std::abs(acc - oracle) <= 0.005, "eps=" + fmt("%g", eps) + fmt2(": %.4f vs oracle %.4f", acc, oracle));
  }
  return o;
}

Outcome criterion_3(const Context&) {
  Outcome o;
  const double eps = 1.0;
  sb::QbsInstance q(sb::QbsKind::dp_laplace(eps), block_dataset(50), 77);
  const int trials = 100000;
  double full = 0, split = 0;
  for (int i = 0; i < trials; ++i) {
    q.reset_budget();
    const double e = q.answer_budgeted_raw(block_query(5), 1.0).raw - 50.0;
    q.reset_budget();
    double mean = 0;
    for (int k = 0; k < 4; ++k) mean += q.answer_budgeted_raw(block_query(5), 0.25).raw - 50.0;
    mean /= 4.0;
    full += e * e;
    split += mean * mean;
  }
  const double ratio = split / full;
  o.check(std::abs(ratio / 4.0 - 1.0) <= 0.10, fmt("MSE ratio k=4 vs full budget %.3f", ratio));
  o.check(full <= split, "full budget no worse than averaging");
  return o;
}

Outcome criterion_4(const Context& ctx) {
  Outcome o;
  auto cfg = desk_config("simpleqbs", sb::Scenario::kAuxiliary);
  cfg.qbs.tau = 0;
  cfg.qbs.sigma = 0.0;
  cfg.counts.known_attributes = 3;
  const auto rep = cached_run(ctx, cfg, "simpleqbs_aux_k3");
  o.check(rep.mean_accuracy >= 0.99, fmt("mean test accuracy %.4f", rep.mean_accuracy));
  return o;
}

Outcome criterion_5(const Context& ctx) {
  Outcome o;
  const auto evo_cfg = desk_config("diffix", sb::Scenario::kAuxiliary);
  const auto evo = cached_run(ctx, evo_cfg, "diffix_aux");
  // Random search gets the evolutionary run's evaluation count, in
  // generations of 10 solutions.
  const auto resolved = sb::resolve_config(evo_cfg);
  const std::size_t budget =
      resolved.search.population + (resolved.search.generations - 1) * (resolved.search.population - resolved.search.elites);
  auto rnd_cfg = evo_cfg;
  rnd_cfg.strategy = "random-search";
  rnd_cfg.search.population = 10;
  rnd_cfg.search.elites = 0;
  rnd_cfg.search.generations = budget / 10;
  const auto rnd = cached_run(ctx, rnd_cfg, "diffix_aux_random");

  std::size_t wins = 0, max_evo_evals = 0, rnd_evals = 0;
  for (std::size_t i = 0; i < evo.targets.size(); ++i) {
    const auto& e = evo.targets[i];
    const auto& r = rnd.targets.at(i);
    max_evo_evals = std::max(max_evo_evals, e.evaluations);
    rnd_evals = std::max(rnd_evals, r.evaluations);
    std::printf("target %zu: evolution %.4f random %.4f\n", i, e.test_accuracy, r.test_accuracy);
    if (e.test_accuracy >= r.test_accuracy) ++wins;
  }
  const double gap = evo.mean_accuracy - rnd.mean_accuracy;
  o.check(rnd_evals <= max_evo_evals, "random evaluations " + std::to_string(rnd_evals) + " <= evolution " +
                                          std::to_string(max_evo_evals));
  o.check(wins >= 8, "evolution >= random on " + std::to_string(wins) + "/" + std::to_string(evo.targets.size()));
  o.check(gap >= 0.02, fmt("gap %+.4f", gap) + fmt2(" (evolution %.4f, random %.4f)", evo.mean_accuracy, rnd.mean_accuracy));
  return o;
}

Outcome criterion_6(const Context& ctx) {
  Outcome o;
  const auto rep = cached_run(ctx, desk_config("diffix", sb::Scenario::kAuxiliary), "diffix_aux");
  o.check(rep.mean_accuracy >= 0.68 && rep.mean_accuracy <= 0.85,
          fmt("noisy-floor mean test accuracy %.4f in [0.68, 0.85]", rep.mean_accuracy));
  o.check(rep.mean_accuracy >= 0.60, "at least 10pp above chance");
  return o;
}

Outcome criterion_7(const Context& ctx) {
  Outcome o;
  for (const std::string mech : {"diffix", "tablebuilder"}) {
    const auto aux = cached_run(ctx, desk_config(mech, sb::Scenario::kAuxiliary), mech + "_aux");
    const auto eb1 = cached_run(ctx, desk_config(mech, sb::Scenario::kExactButOne), mech + "_eb1");
    o.check(eb1.mean_accuracy >= aux.mean_accuracy,
            mech + fmt2(" exact-but-one %.4f vs auxiliary %.4f", eb1.mean_accuracy, aux.mean_accuracy));
  }
  return o;
}

Outcome criterion_8(const Context&) {
  Outcome o;
  std::mt19937_64 gen(808);
  std::normal_distribution<double> nd(0.0, 2.0);
  const int trials = 100000;
  int correct = 0;
  for (int i = 0; i < trials; ++i) {
    const int h = i % 2;
    double llr = 0;
    for (int k = 0; k < 5; ++k) {
      const double x = h + nd(gen);
      llr += sb::normal_log_pdf(x, 1.0, 4.0) - sb::normal_log_pdf(x, 0.0, 4.0);
    }
    correct += (llr > 0 ? 1 : 0) == h ? 1 : 0;
  }
  const double acc = static_cast<double>(correct) / trials;
  const double oracle = boost::math::cdf(boost::math::normal(), std::sqrt(5.0) / 4.0);
  o.check(std::abs(acc - 0.73) <= 0.03, fmt2("accuracy %.4f (closed form %.4f)", acc, oracle));
  return o;
}

Outcome criterion_9(const Context&) {
  Outcome o;
  // Difference pairs on random toy datasets where the target is unique on
  // the pair's attributes.
  {
    std::mt19937_64 gen(909);
    auto schema = make_schema({3, 3, 4, 2});
    int checked = 0;
    int datasets = 0;
    bool ok = true;
    for (int trial = 0; datasets < 1000 && trial < 1000000; ++trial) {
      auto d = random_dataset(schema, 6 + gen() % 20, gen);
      const std::size_t tr = gen() % d.num_rows();
      auto row = d.row(tr);
      auto target = make_target({row[0], row[1], row[2]}, static_cast<int>(row[3]));
      bool used = false;
      for (const auto& p : sb::candidate_pairs(target, static_cast<int>(gen() % 2))) {
        auto attrs = p.subset;
        attrs.push_back(p.pivot);
        if (!unique_on(d, tr, attrs)) continue;
        used = true;
        ++checked;
        const auto diff = sb::true_count(d, p.q1) - sb::true_count(d, p.q2);
        ok = ok && diff == (target.true_sensitive == p.s ? 1 : 0);
      }
      if (used) ++datasets;
    }
    o.check(ok && datasets == 1000,
            "T(q1)-T(q2) = 1{sensitive=s} on " + std::to_string(checked) + " pairs over " + std::to_string(datasets) +
                " datasets");
  }
  // Rinott: premises are an unsuppressed equal answer from equal query sets
  // with the target unique on the pair.
  {
    std::mt19937_64 gen(910);
    auto schema = make_schema({8, 8, 8, 2});
    std::size_t premises = 0, wrong = 0, collisions = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      auto d = random_dataset(schema, 80 + gen() % 80, gen);
      const std::size_t tr = d.num_rows() - 1;
      auto row = d.row(tr);
      auto target = make_target({row[0], row[1], row[2]}, static_cast<int>(row[3]));
      auto ds = std::make_shared<const sb::Dataset>(d);
      sb::BoundQbs qbs(sb::QbsInstance(sb::QbsKind::table_builder(), ds, static_cast<std::uint64_t>(trial)),
                       sb::query_values(target.known_values));
      for (int s = 0; s < 2; ++s) {
        for (const auto& p : sb::candidate_pairs(target, s)) {
          auto attrs = p.subset;
          attrs.push_back(p.pivot);
          if (!unique_on(d, tr, attrs)) continue;
          const auto a1 = qbs.answer(p.code1());
          const auto a2 = qbs.answer(p.code2());
          if (a1 == 0 || a2 == 0 || a1 != a2) continue;
          if (qbs.query_set(p.code1()) != qbs.query_set(p.code2())) {
            ++collisions;
            continue;
          }
          ++premises;
          const int pred = sb::attack_tablebuilder_rinott(qbs, std::vector<sb::DifferencePair>{p}).prediction;
          if (pred != target.true_sensitive) ++wrong;
        }
      }
    }
    std::printf("[rinott] premise cases %zu, equal answers from unequal sets %zu\n", premises, collisions);
    o.check(premises > 100 && wrong == 0,
            "Rinott wrong " + std::to_string(wrong) + " of " + std::to_string(premises) + " premise cases");
  }
  return o;
}

Outcome criterion_10(const Context&) {
  Outcome o;
  const std::size_t n = 6, m = 100;
  sb::Rng rng(1010);

  bool length = true, identity = true;
  sb::SearchConfig cfg;
  cfg.p_change = cfg.p_swap = 1.0 / static_cast<double>(n);
  for (int t = 0; t < 500; ++t) {
    const auto parent = sb::random_solution(m, n, rng);
    cfg.p_copy = rng.uniform() * 0.5;
    cfg.p_modify = rng.uniform() * 0.5;
    cfg.qbs_deterministic = t % 2 == 0;
    length = length && sb::apply_mutation(parent, cfg, rng).size() == m;
    sb::SearchConfig none = cfg;
    none.p_copy = none.p_modify = 0.0;
    auto child = sb::apply_mutation(parent, none, rng);
    auto a = sb::genome_codes(parent), b = sb::genome_codes(child);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    identity = identity && a == b;
  }
  o.check(length, "mutation preserves |solution|");
  o.check(identity, "p_copy=p_modify=0 is identity");

  bool multiset = true;
  for (int t = 0; t < 5000; ++t) {
    const auto q = sb::random_query(n, rng);
    auto out = sb::modify_query(q, 0.0, 0.3 + 0.7 * rng.uniform(), rng);
    auto a = q, b = out;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    multiset = multiset && a == b;
  }
  o.check(multiset, "swap-only modification preserves the operator multiset");

  bool roulette = true;
  const std::vector<double> fit = {1.0, 0.0};
  for (int t = 0; t < 10000; ++t) roulette = roulette && sb::select_parent(fit, rng) == 0;
  o.check(roulette, "roulette on [1,0] picks index 0");

  auto toy = make_toy_fleet(sb::QbsKind::diffix(), 60, 30, 1011);
  sb::SearchConfig sc;
  sc.population = 12;
  sc.elites = 3;
  sc.generations = 15;
  sc.m = 10;
  sc.rng_seed = 3;
  const auto res = sb::evolutionary_search(sb::fleet_fitness(toy.fleet, {}), 4, sc);
  bool monotone = true;
  for (std::size_t i = 1; i < res.history.size(); ++i) monotone = monotone && res.history[i].best >= res.history[i - 1].best;
  o.check(monotone, "elitist best-fitness history nondecreasing on Diffix");

  bool sums = true;
  for (int t = 0; t < 1000; ++t) {
    const auto sol = sb::random_solution(1 + rng.uniform_below(150), n, rng);
    const auto codes = sb::genome_codes(sol);
    const auto plan = sb::allocate_budget_codes(codes);
    double total = 0;
    for (const auto& it : plan) total += it.fraction;
    sums = sums && std::abs(total - 1.0) < 1e-9;
  }
  o.check(sums, "budget plans sum to 1");
  return o;
}

const std::map<int, std::pair<std::string, std::function<Outcome(const Context&)>>> kCriteria = {
    {1, {"mechanism statistics", criterion_1}},
    {2, {"DPLaplace optimal attack vs bin oracle", criterion_2}},
    {3, {"monotonicity of accuracy", criterion_3}},
    {4, {"trivial QBS sanity", criterion_4}},
    {5, {"evolution beats random search", criterion_5}},
    {6, {"Diffix desk accuracy band", criterion_6}},
    {7, {"exact-but-one dominates auxiliary", criterion_7}},
    {8, {"likelihood test calibration", criterion_8}},
    {9, {"difference attack correctness", criterion_9}},
    {10, {"search algebra", criterion_10}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> which;
  Context ctx;
  std::string cache = (fs::temp_directory_path() / "snoutbench_acceptance").string();
  app.add_option("--criterion", which, "Criterion number (repeatable; default all)")->check(CLI::Range(1, 10));
  app.add_option("--cache-dir", cache, "Where desk-run reports are cached");
  app.add_option("--workers", ctx.workers, "Worker threads (0 = all cores)");
  CLI11_PARSE(app, argc, argv);
  ctx.cache_dir = cache;
  ctx.self = fs::canonical("/proc/self/exe");
  fs::create_directories(ctx.cache_dir);
  if (which.empty()) {
    for (const auto& [k, v] : kCriteria) which.push_back(k);
  }

  bool all = true;
  std::vector<std::string> lines;
  for (int k : which) {
    const auto& [name, fn] = kCriteria.at(k);
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    all = all && o.pass;
    lines.push_back("criterion " + std::to_string(k) + " (" + name + "): " + (o.pass ? "PASS" : "FAIL") + " | " +
                    o.detail);
    std::printf("%s\n", lines.back().c_str());
    std::fflush(stdout);
  }
  if (which.size() > 1) {
    std::printf("\nsummary\n");
    for (const auto& l : lines) std::printf("%s\n", l.c_str());
  }
  return all ? 0 : 1;
}

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

// Hand-written attacks used as reference points.
//
// Most of them rest on difference pairs
//   q1 = AND_{a in A'} (a = r_a) AND s_attr = s
//   q2 = q1 AND (pivot != r_pivot)
// whose true counts differ by 1 exactly when the target is unique on
// A' + {pivot} and its sensitive value is s.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "snoutbench/dataset.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/fleet.hpp"
#include "snoutbench/qbs.hpp"
#include "snoutbench/query.hpp"

namespace snoutbench {

struct DifferencePair {
  std::vector<std::size_t> subset;
  std::size_t pivot = 0;
  int s = 0;
  Query q1;
  Query q2;

  std::uint32_t code1() const { return encode_ops(q1.ops); }
  std::uint32_t code2() const { return encode_ops(q2.ops); }
};

inline DifferencePair build_difference_pair(const TargetRecord& target, std::span<const std::size_t> subset,
                                            std::size_t pivot, int s) {
  const std::size_t known = target.known_values.size();
  if (pivot >= known) throw Error(ErrorCode::kInvalidPivot, "pivot must be a known attribute");
  if (std::find(subset.begin(), subset.end(), pivot) != subset.end()) {
    throw Error(ErrorCode::kInvalidPivot, "pivot is part of the subset");
  }
  if (s != 0 && s != 1) throw Error(ErrorCode::kInvalidArgument, "s must be 0 or 1");
  OperatorVec ops(known + 1, Op::kNone);
  for (std::size_t a : subset) {
    if (a >= known) throw Error(ErrorCode::kInvalidArgument, "subset attribute out of range");
    ops[a] = Op::kEq;
  }
  ops[known] = s == 0 ? Op::kEq : Op::kNeq;
  const auto values = query_values(target.known_values);
  DifferencePair p;
  p.subset.assign(subset.begin(), subset.end());
  std::sort(p.subset.begin(), p.subset.end());
  p.pivot = pivot;
  p.s = s;
  p.q1 = bind_query(ops, values);
  ops[pivot] = Op::kNeq;
  p.q2 = bind_query(ops, values);
  return p;
}

// Every (A', pivot) with pivot outside A', for the given s; subsets in
// ascending bitmask order, pivots ascending.
inline std::vector<DifferencePair> candidate_pairs(const TargetRecord& target, int s) {
  const std::size_t known = target.known_values.size();
  if (known > 20) throw Error(ErrorCode::kInvalidArgument, "too many known attributes to enumerate");
  std::vector<DifferencePair> out;
  for (std::uint32_t mask = 0; mask < (1u << known); ++mask) {
    std::vector<std::size_t> subset;
    for (std::size_t a = 0; a < known; ++a) {
      if (mask & (1u << a)) subset.push_back(a);
    }
    for (std::size_t pivot = 0; pivot < known; ++pivot) {
      if (mask & (1u << pivot)) continue;
      out.push_back(build_difference_pair(target, subset, pivot, s));
    }
  }
  return out;
}

enum class UniquenessMode { kExact, kEmpirical };

struct RankedPair {
  DifferencePair pair;
  double score = 0.0;
};

namespace internal {

// Checks one dataset whose last row is the target: the target is unique on
// A' + {pivot}, and both true counts exceed the threshold.
inline bool pair_usable(const Dataset& d, bool target_is_last, const DifferencePair& p,
                        double threshold) {
  const std::size_t others = target_is_last ? d.num_rows() - 1 : d.num_rows();
  std::int64_t t1 = 0;
  std::int64_t t2 = 0;
  for (std::size_t r = 0; r < others; ++r) {
    auto row = d.row(r);
    bool same = row[p.pivot] == p.q1.values[p.pivot];
    for (std::size_t a : p.subset) same = same && row[a] == p.q1.values[a];
    if (same) return false;
    if (matches(row, p.q1)) {
      ++t1;
      if (matches(row, p.q2)) ++t2;
    }
  }
  if (target_is_last && matches(d.row(others), p.q1)) ++t1;
  return static_cast<double>(t1) > threshold && static_cast<double>(t2) > threshold;
}

}  // namespace internal

// EMPIRICAL: score = fraction of `samples` draws from the sampler where the
// pair is usable. EXACT: score 1 if usable on the sampler's fixed dataset
// (the rows other than the target), else 0. Result sorted by descending
// score, ties in candidate order.
inline std::vector<RankedPair> rank_pairs(UniquenessMode mode, std::span<const DifferencePair> candidates,
                                          const AuxSampler& sampler, double threshold,
                                          std::size_t samples = 100) {
  std::vector<RankedPair> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) ranked.push_back({c, 0.0});
  if (candidates.empty()) return ranked;
  if (mode == UniquenessMode::kExact) {
    for (auto& r : ranked) {
      r.score = internal::pair_usable(sampler.source_pool(), false, r.pair, threshold) ? 1.0 : 0.0;
    }
  } else {
    if (samples == 0) throw Error(ErrorCode::kInvalidArgument, "empirical ranking needs samples");
    for (std::size_t k = 0; k < samples; ++k) {
      const Dataset d = sampler.sample(k);
      for (auto& r : ranked) r.score += internal::pair_usable(d, true, r.pair, threshold) ? 1.0 : 0.0;
    }
    for (auto& r : ranked) r.score /= static_cast<double>(samples);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedPair& a, const RankedPair& b) { return a.score > b.score; });
  return ranked;
}

struct AttackOutcome {
  int prediction = 0;
  bool abstained = false;
  std::size_t pairs_used = 0;
};

inline double normal_log_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - z * z / (2.0 * variance);
}

// Pairs with score >= accept_score, or the single best pair when none reach
// it but it has a positive score.
inline std::vector<RankedPair> accepted_pairs(std::span<const RankedPair> ranked, double accept_score) {
  std::vector<RankedPair> out;
  for (const auto& r : ranked) {
    if (r.score >= accept_score) out.push_back(r);
  }
  if (out.empty() && !ranked.empty() && ranked.front().score > 0.0) out.push_back(ranked.front());
  return out;
}

// Log-likelihood ratio of one observed difference: target value 1 gives
// N(0, 2); target value 0 gives N(1, 2|A'| + 2). Positive favours 1.
inline double gadotti_llr(double delta, std::size_t subset_size) {
  return normal_log_pdf(delta, 0.0, 2.0) -
         normal_log_pdf(delta, 1.0, 2.0 * static_cast<double>(subset_size) + 2.0);
}

// Pairs must use s = 0. Differences with a zero (suppressed) answer are
// skipped; evidence from the remaining pairs is summed.
inline AttackOutcome attack_diffix_gadotti(BoundQbs& qbs, std::span<const RankedPair> accepted) {
  AttackOutcome out;
  double llr = 0.0;
  for (const auto& r : accepted) {
    if (r.pair.s != 0) throw Error(ErrorCode::kInvalidArgument, "Gadotti pairs use s = 0");
    const std::int64_t a1 = qbs.answer(r.pair.code1());
    const std::int64_t a2 = qbs.answer(r.pair.code2());
    if (a1 == 0 || a2 == 0) continue;
    llr += gadotti_llr(static_cast<double>(a1 - a2), r.pair.subset.size());
    ++out.pairs_used;
  }
  if (out.pairs_used == 0) {
    out.abstained = true;
    return out;
  }
  out.prediction = llr > 0.0 ? 1 : 0;
  return out;
}

// Leave-one-out pairs: A' = all known attributes but j, pivot j, for every
// j and s in {0, 1}.
inline std::vector<DifferencePair> leave_one_out_pairs(const TargetRecord& target) {
  const std::size_t known = target.known_values.size();
  std::vector<DifferencePair> out;
  for (std::size_t j = 0; j < known; ++j) {
    std::vector<std::size_t> subset;
    for (std::size_t a = 0; a < known; ++a) {
      if (a != j) subset.push_back(a);
    }
    for (int s = 0; s < 2; ++s) out.push_back(build_difference_pair(target, subset, j, s));
  }
  return out;
}

// What to predict when a difference reaches 5. A true difference of 1 means
// the target's value is s (kValueIsS). kAsPrinted predicts 1 - s instead.
enum class ChipperfieldRule { kValueIsS, kAsPrinted };

namespace internal {

struct PairAnswers {
  const DifferencePair* pair;
  std::int64_t r1;
  std::int64_t r2;
  bool suppressed() const { return r1 == 0 || r2 == 0; }
};

inline std::vector<PairAnswers> ask_pairs(BoundQbs& qbs, std::span<const DifferencePair> pairs) {
  std::vector<PairAnswers> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({&p, qbs.answer(p.code1()), qbs.answer(p.code2())});
  return out;
}

// Predict 0 iff mu_0 > mu_1 over unsuppressed pairs.
inline AttackOutcome mean_difference_rule(std::span<const PairAnswers> answers) {
  double sum[2] = {0, 0};
  int count[2] = {0, 0};
  for (const auto& a : answers) {
    if (a.suppressed()) continue;
    sum[a.pair->s] += static_cast<double>(a.r1 - a.r2);
    ++count[a.pair->s];
  }
  AttackOutcome out;
  out.pairs_used = static_cast<std::size_t>(count[0] + count[1]);
  if (out.pairs_used == 0) {
    out.abstained = true;
    return out;
  }
  const double mu0 = count[0] ? sum[0] / count[0] : 0.0;
  const double mu1 = count[1] ? sum[1] / count[1] : 0.0;
  out.prediction = mu0 > mu1 ? 0 : 1;
  return out;
}

}  // namespace internal

inline AttackOutcome attack_tablebuilder_chipperfield(BoundQbs& qbs, std::span<const DifferencePair> pairs,
                                                      ChipperfieldRule rule = ChipperfieldRule::kValueIsS) {
  const auto answers = internal::ask_pairs(qbs, pairs);
  for (const auto& a : answers) {
    if (a.suppressed()) continue;
    if (a.r1 - a.r2 >= 5) {
      const int s = a.pair->s;
      return {rule == ChipperfieldRule::kValueIsS ? s : 1 - s, false, 1};
    }
  }
  return internal::mean_difference_rule(answers);
}

// An unsuppressed pair with equal answers predicts 1 - s; otherwise the
// mean-difference rule decides.
inline AttackOutcome attack_tablebuilder_rinott(BoundQbs& qbs, std::span<const DifferencePair> pairs) {
  const auto answers = internal::ask_pairs(qbs, pairs);
  for (const auto& a : answers) {
    if (!a.suppressed() && a.r1 == a.r2) return {1 - a.pair->s, false, 1};
  }
  return internal::mean_difference_rule(answers);
}

// The all-EQ query with s = 0.
inline std::uint32_t direct_query_code() { return 0; }

// tau = 0: ask the direct query m times, predict 0 iff the mean exceeds 1/2.
// tau > 0, sigma > 0: ask the best pair m/2 times each, predict s iff
// mean(r1) - mean(r2) > 1/2. tau > 0, sigma = 0: walk the m/2 best pairs
// until r1 > 0, r2 > 0 and r1 - r2 in {0, 1}; predict s iff r1 = r2 + 1.
inline AttackOutcome attack_simpleqbs(BoundQbs& qbs, std::span<const RankedPair> ranked, std::size_t m_budget) {
  const QbsKind& k = qbs.kind();
  if (k.mechanism != Mechanism::kSimpleQbs) throw Error(ErrorCode::kInvalidKind, "needs SimpleQBS");
  AttackOutcome out;
  if (m_budget == 0) {
    out.abstained = true;
    return out;
  }
  if (k.tau == 0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m_budget; ++i) sum += static_cast<double>(qbs.answer(direct_query_code()));
    out.prediction = sum / static_cast<double>(m_budget) > 0.5 ? 0 : 1;
    out.pairs_used = 1;
    return out;
  }
  const std::size_t half = std::max<std::size_t>(1, m_budget / 2);
  if (ranked.empty() || ranked.front().score <= 0.0) {
    out.abstained = true;
    return out;
  }
  if (k.sigma > 0.0) {
    const DifferencePair& p = ranked.front().pair;
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      s1 += static_cast<double>(qbs.answer(p.code1()));
      s2 += static_cast<double>(qbs.answer(p.code2()));
    }
    out.prediction = (s1 - s2) / static_cast<double>(half) > 0.5 ? p.s : 1 - p.s;
    out.pairs_used = 1;
    return out;
  }
  for (std::size_t i = 0; i < half && i < ranked.size(); ++i) {
    const DifferencePair& p = ranked[i].pair;
    const std::int64_t r1 = qbs.answer(p.code1());
    const std::int64_t r2 = qbs.answer(p.code2());
    if (r1 > 0 && r2 > 0 && (r1 - r2 == 0 || r1 - r2 == 1)) {
      out.prediction = r1 == r2 + 1 ? p.s : 1 - p.s;
      out.pairs_used = i + 1;
      return out;
    }
  }
  out.abstained = true;
  return out;
}

// Full budget on the direct query; predict 0 iff the answer is at least 1.
inline AttackOutcome attack_dplaplace_uniqueness(BoundQbs& qbs) {
  if (!qbs.kind().budgeted()) throw Error(ErrorCode::kInvalidKind, "needs DPLaplace");
  const std::int64_t a = qbs.answer_budgeted(direct_query_code(), 1.0);
  return {a >= 1 ? 0 : 1, false, 1};
}

enum class BaselineKind { kDiffixGadotti, kChipperfield, kRinott, kSimpleQbs, kDpUniqueness };

inline BaselineKind parse_baseline(std::string_view name) {
  if (name == "diffix-gadotti" || name == "gadotti") return BaselineKind::kDiffixGadotti;
  if (name == "tablebuilder-chipperfield" || name == "chipperfield") return BaselineKind::kChipperfield;
  if (name == "tablebuilder-rinott" || name == "rinott") return BaselineKind::kRinott;
  if (name == "simpleqbs" || name == "simpleqbs-averaging") return BaselineKind::kSimpleQbs;
  if (name == "dplaplace-uniqueness" || name == "uniqueness") return BaselineKind::kDpUniqueness;
  throw Error(ErrorCode::kConfig, "unknown baseline '" + std::string(name) + "'");
}

inline std::string_view baseline_name(BaselineKind b) {
  switch (b) {
    case BaselineKind::kDiffixGadotti: return "diffix-gadotti";
    case BaselineKind::kChipperfield: return "tablebuilder-chipperfield";
    case BaselineKind::kRinott: return "tablebuilder-rinott";
    case BaselineKind::kSimpleQbs: return "simpleqbs";
    case BaselineKind::kDpUniqueness: return "dplaplace-uniqueness";
  }
  return "?";
}

inline Mechanism baseline_mechanism(BaselineKind b) {
  switch (b) {
    case BaselineKind::kDiffixGadotti: return Mechanism::kDiffix;
    case BaselineKind::kChipperfield:
    case BaselineKind::kRinott: return Mechanism::kTableBuilder;
    case BaselineKind::kSimpleQbs: return Mechanism::kSimpleQbs;
    case BaselineKind::kDpUniqueness: return Mechanism::kDpLaplace;
  }
  return Mechanism::kDiffix;
}

struct BaselineKnowledge {
  Scenario scenario = Scenario::kAuxiliary;
  // Attacker-side sampler: the training distribution in AUXILIARY, the known
  // private rows in EXACT-BUT-ONE.
  const AuxSampler* sampler = nullptr;
  std::size_t ranking_samples = 100;
  std::size_t m_budget = 100;
  double accept_score = 0.8;
  ChipperfieldRule chipperfield_rule = ChipperfieldRule::kValueIsS;
};

struct BaselineReport {
  double accuracy = 0.0;
  std::size_t abstentions = 0;
  std::size_t trials = 0;
  std::size_t pairs_available = 0;
};

// Runs the attack once per test instance and scores it against the label.
inline BaselineReport evaluate_baseline(BaselineKind kind, FleetPart& test, const BaselineKnowledge& know) {
  if (test.empty()) throw Error(ErrorCode::kEmptyTestSet, "no test datasets");
  const QbsKind& qk = test.front().kind();
  if (qk.mechanism != baseline_mechanism(kind)) {
    throw Error(ErrorCode::kInvalidKind, std::string(baseline_name(kind)) + " does not apply to " + qk.name());
  }
  BaselineReport rep;
  rep.trials = test.size();
  std::vector<RankedPair> ranked;
  std::vector<DifferencePair> pairs;
  const bool needs_sampler =
      kind != BaselineKind::kDpUniqueness && !(kind == BaselineKind::kSimpleQbs && qk.tau == 0);
  if (needs_sampler && !know.sampler) {
    throw Error(ErrorCode::kInvalidArgument, "baseline needs the attacker's sampler");
  }
  const TargetRecord* target = know.sampler ? &know.sampler->target() : nullptr;
  const UniquenessMode mode =
      know.scenario == Scenario::kExactButOne ? UniquenessMode::kExact : UniquenessMode::kEmpirical;
  const double threshold = qk.nominal_threshold();

  switch (kind) {
    case BaselineKind::kDiffixGadotti: {
      const auto cands = candidate_pairs(*target, 0);
      ranked = accepted_pairs(rank_pairs(mode, cands, *know.sampler, threshold, know.ranking_samples),
                              know.accept_score);
      rep.pairs_available = ranked.size();
      break;
    }
    case BaselineKind::kChipperfield:
    case BaselineKind::kRinott: {
      if (know.scenario == Scenario::kAuxiliary) {
        pairs = leave_one_out_pairs(*target);
      } else {
        // Exact knowledge: keep only pairs on which the target is unique.
        std::vector<DifferencePair> cands = candidate_pairs(*target, 0);
        auto c1 = candidate_pairs(*target, 1);
        cands.insert(cands.end(), c1.begin(), c1.end());
        for (auto& r : rank_pairs(UniquenessMode::kExact, cands, *know.sampler, threshold)) {
          if (r.score > 0.0) pairs.push_back(std::move(r.pair));
        }
        if (pairs.empty()) pairs = leave_one_out_pairs(*target);
      }
      rep.pairs_available = pairs.size();
      break;
    }
    case BaselineKind::kSimpleQbs: {
      if (qk.tau > 0) {
        std::vector<DifferencePair> cands = candidate_pairs(*target, 0);
        auto c1 = candidate_pairs(*target, 1);
        cands.insert(cands.end(), c1.begin(), c1.end());
        ranked = rank_pairs(mode, cands, *know.sampler, threshold, know.ranking_samples);
        rep.pairs_available = ranked.size();
      }
      break;
    }
    case BaselineKind::kDpUniqueness: break;
  }

  std::size_t correct = 0;
  for (auto& qbs : test) {
    AttackOutcome o;
    switch (kind) {
      case BaselineKind::kDiffixGadotti: o = attack_diffix_gadotti(qbs, ranked); break;
      case BaselineKind::kChipperfield:
        o = attack_tablebuilder_chipperfield(qbs, pairs, know.chipperfield_rule);
        break;
      case BaselineKind::kRinott: o = attack_tablebuilder_rinott(qbs, pairs); break;
      case BaselineKind::kSimpleQbs: o = attack_simpleqbs(qbs, ranked, know.m_budget); break;
      case BaselineKind::kDpUniqueness:
        qbs.reset_budget();
        o = attack_dplaplace_uniqueness(qbs);
        break;
    }
    if (o.abstained) {
      ++rep.abstentions;
      o.prediction = 0;
    }
    correct += o.prediction == qbs.label() ? 1 : 0;
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return rep;
}

}  // namespace snoutbench

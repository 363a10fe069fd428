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

// Query-based systems: the protection mechanisms under attack.
//
//   Diffix        bucket suppression with a noisy threshold, plus one static
//                 and one dynamic N(0,1) layer per non-empty condition.
//   TableBuilder  suppression at 4, plus U{-2..2} seeded by the query set.
//   SimpleQBS     suppression at tau, plus fresh N(0, sigma^2) per call.
//   DPLaplace     Laplace noise of scale 1/(p * epsilon) for a partial budget
//                 p, refusing queries once the budget is spent.
//
// Every answer is clamped at 0 and rounded to the nearest integer; a
// suppressed query answers 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "snoutbench/dataset.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/query.hpp"
#include "snoutbench/random.hpp"

namespace snoutbench {

enum class Mechanism { kDiffix, kTableBuilder, kSimpleQbs, kDpLaplace };

// The printed Diffix formula suppresses at min(2, tau) with tau ~ N(4, 0.5),
// which is effectively a fixed threshold of 2. kNoisyFloor suppresses at
// max(2, tau) instead, giving the noisy threshold the mechanism is meant to
// have. Both are available; kNoisyFloor is the default.
enum class DiffixThresholdMode { kNoisyFloor, kAsPrinted };

inline constexpr double kDiffixThresholdMean = 4.0;
inline constexpr double kDiffixThresholdSd = 0.5;
inline constexpr double kDiffixThresholdFloor = 2.0;
inline constexpr std::int64_t kTableBuilderThreshold = 4;
inline constexpr std::int64_t kTableBuilderNoiseBound = 2;
inline constexpr double kBudgetTolerance = 1e-9;

struct QbsKind {
  Mechanism mechanism = Mechanism::kDiffix;
  int tau = 0;
  double sigma = 0.0;
  double epsilon = 1.0;
  DiffixThresholdMode threshold_mode = DiffixThresholdMode::kNoisyFloor;

  static QbsKind diffix(DiffixThresholdMode mode = DiffixThresholdMode::kNoisyFloor) {
    QbsKind k;
    k.mechanism = Mechanism::kDiffix;
    k.threshold_mode = mode;
    return k;
  }
  static QbsKind table_builder() {
    QbsKind k;
    k.mechanism = Mechanism::kTableBuilder;
    return k;
  }
  static QbsKind simple(int tau, double sigma) {
    QbsKind k;
    k.mechanism = Mechanism::kSimpleQbs;
    k.tau = tau;
    k.sigma = sigma;
    k.validate();
    return k;
  }
  static QbsKind dp_laplace(double epsilon) {
    QbsKind k;
    k.mechanism = Mechanism::kDpLaplace;
    k.epsilon = epsilon;
    k.validate();
    return k;
  }

  void validate() const {
    if (mechanism == Mechanism::kSimpleQbs && (tau < 0 || !(sigma >= 0.0))) {
      throw Error(ErrorCode::kConfig, "SimpleQBS needs tau >= 0 and sigma >= 0");
    }
    if (mechanism == Mechanism::kDpLaplace && !(epsilon > 0.0)) {
      throw Error(ErrorCode::kConfig, "DPLaplace needs epsilon > 0");
    }
  }

  // Same query, same answer, on every call.
  bool deterministic() const {
    return mechanism == Mechanism::kDiffix || mechanism == Mechanism::kTableBuilder;
  }
  bool budgeted() const { return mechanism == Mechanism::kDpLaplace; }
  // Answers depend on the query only through its true count.
  bool count_only() const {
    return mechanism == Mechanism::kSimpleQbs || mechanism == Mechanism::kDpLaplace;
  }

  // Nominal suppression threshold (answers with T <= threshold are refused),
  // used by attacks that reason about suppression. -1 means none.
  double nominal_threshold() const {
    switch (mechanism) {
      case Mechanism::kDiffix:
        return threshold_mode == DiffixThresholdMode::kNoisyFloor
                   ? kDiffixThresholdMean
                   : kDiffixThresholdFloor;
      case Mechanism::kTableBuilder: return static_cast<double>(kTableBuilderThreshold);
      case Mechanism::kSimpleQbs: return tau;
      case Mechanism::kDpLaplace: return -1;
    }
    return -1;
  }

  std::string name() const {
    std::ostringstream os;
    switch (mechanism) {
      case Mechanism::kDiffix:
        os << "diffix("
           << (threshold_mode == DiffixThresholdMode::kNoisyFloor ? "noisy-floor" : "as-printed")
           << ")";
        break;
      case Mechanism::kTableBuilder: os << "tablebuilder"; break;
      case Mechanism::kSimpleQbs: os << "simpleqbs(tau=" << tau << ",sigma=" << sigma << ")"; break;
      case Mechanism::kDpLaplace: os << "dplaplace(epsilon=" << epsilon << ")"; break;
    }
    return os.str();
  }
};

// Clamp at zero, then round half away from zero.
inline std::int64_t round_answer(double raw) {
  if (!(raw > 0.0)) return 0;
  return static_cast<std::int64_t>(std::llround(raw));
}

struct RawAnswer {
  std::int64_t true_count = 0;
  bool suppressed = false;
  // Noisy value before clamping and rounding; equals 0 when suppressed.
  double raw = 0.0;
  std::int64_t value = 0;
};

namespace internal {

inline RawAnswer finish(std::int64_t true_count, bool suppressed, double raw) {
  RawAnswer a;
  a.true_count = true_count;
  a.suppressed = suppressed;
  a.raw = suppressed ? 0.0 : raw;
  a.value = suppressed ? 0 : round_answer(raw);
  return a;
}

inline std::uint64_t query_set_seed(std::uint64_t instance_seed, std::string_view tag,
                                    std::string_view prefix,
                                    std::span<const std::uint32_t> query_set) {
  SeedHasher h(instance_seed, tag);
  h.add(prefix);
  for (std::uint32_t id : query_set) h.add_u32(id);
  return h.finish();
}

inline RawAnswer diffix_answer(std::uint64_t seed, DiffixThresholdMode mode, const Query& q,
                               std::span<const std::uint32_t> query_set) {
  const auto t = static_cast<std::int64_t>(query_set.size());
  const double tau = seeded_gaussian(query_set_seed(seed, "diffix-thresh", "", query_set),
                                     kDiffixThresholdMean, kDiffixThresholdSd);
  const double threshold = mode == DiffixThresholdMode::kNoisyFloor
                               ? std::max(kDiffixThresholdFloor, tau)
                               : std::min(kDiffixThresholdFloor, tau);
  if (static_cast<double>(t) <= threshold) return finish(t, true, 0.0);
  double raw = static_cast<double>(t);
  for (std::size_t i = 0; i < q.ops.size(); ++i) {
    if (q.ops[i] == Op::kNone) continue;
    const std::string key = condition_key(q, i);
    raw += seeded_gaussian(derive_seed(seed, "diffix-static", key), 0.0, 1.0);
    raw += seeded_gaussian(query_set_seed(seed, "diffix-dyn", key, query_set), 0.0, 1.0);
  }
  return finish(t, false, raw);
}

inline RawAnswer table_builder_answer(std::uint64_t seed,
                                      std::span<const std::uint32_t> query_set) {
  const auto t = static_cast<std::int64_t>(query_set.size());
  if (t <= kTableBuilderThreshold) return finish(t, true, 0.0);
  const std::int64_t u =
      seeded_uniform_int(query_set_seed(seed, "tb", "", query_set), -kTableBuilderNoiseBound,
                         kTableBuilderNoiseBound);
  return finish(t, false, static_cast<double>(t + u));
}

}  // namespace internal

// One mechanism bound to one dataset.
//
// Diffix and TableBuilder keep no mutable state and may answer from several
// threads. SimpleQBS (noise stream) and DPLaplace (noise stream and spent
// budget) must have a single owner.
class QbsInstance {
 public:
  QbsInstance(QbsKind kind, std::shared_ptr<const Dataset> dataset, std::uint64_t instance_seed)
      : kind_(kind),
        dataset_(std::move(dataset)),
        seed_(instance_seed),
        rng_(mix_seed(instance_seed, 0x5eed5eed5eedULL)) {
    kind_.validate();
    if (!dataset_) throw Error(ErrorCode::kInvalidArgument, "QBS needs a dataset");
  }

  const QbsKind& kind() const { return kind_; }
  const Dataset& dataset() const { return *dataset_; }
  const std::shared_ptr<const Dataset>& dataset_ptr() const { return dataset_; }
  std::uint64_t seed() const { return seed_; }
  double spent_budget() const { return spent_; }

  RawAnswer answer_raw(const Query& q) {
    require_unbudgeted();
    if (kind_.count_only()) return answer_raw_for_count(snoutbench::true_count(*dataset_, q));
    const auto ids = query_set(*dataset_, q);
    return answer_raw_with_set(q, ids);
  }

  std::int64_t answer(const Query& q) { return answer_raw(q).value; }

  // Same as answer_raw for a query whose query set has already been
  // computed on this instance's dataset.
  RawAnswer answer_raw_with_set(const Query& q, std::span<const std::uint32_t> query_set) {
    require_unbudgeted();
    switch (kind_.mechanism) {
      case Mechanism::kDiffix:
        return internal::diffix_answer(seed_, kind_.threshold_mode, q, query_set);
      case Mechanism::kTableBuilder:
        return internal::table_builder_answer(seed_, query_set);
      default:
        return answer_raw_for_count(static_cast<std::int64_t>(query_set.size()));
    }
  }

  // SimpleQBS only: answers a query with the given true count.
  RawAnswer answer_raw_for_count(std::int64_t true_count) {
    if (kind_.mechanism != Mechanism::kSimpleQbs) {
      throw Error(ErrorCode::kInvalidKind, "count-only answering needs SimpleQBS");
    }
    if (true_count <= kind_.tau) return internal::finish(true_count, true, 0.0);
    double raw = static_cast<double>(true_count);
    if (kind_.sigma > 0.0) raw += kind_.sigma * rng_.normal();
    return internal::finish(true_count, false, raw);
  }

  RawAnswer answer_budgeted_raw(const Query& q, double fraction) {
    require_budgeted();
    return answer_budgeted_raw_for_count(snoutbench::true_count(*dataset_, q), fraction);
  }

  std::int64_t answer_budgeted(const Query& q, double fraction) {
    return answer_budgeted_raw(q, fraction).value;
  }

  RawAnswer answer_budgeted_raw_for_count(std::int64_t true_count, double fraction) {
    require_budgeted();
    if (!(fraction > 0.0) || fraction > 1.0 + kBudgetTolerance) {
      throw Error(ErrorCode::kInvalidArgument, "budget fraction must be in (0, 1]");
    }
    if (spent_ + fraction > 1.0 + kBudgetTolerance) {
      throw Error(ErrorCode::kBudgetExhausted,
                  "spent " + std::to_string(spent_) + ", requested " + std::to_string(fraction));
    }
    spent_ = std::min(1.0, spent_ + fraction);
    const double scale = 1.0 / (fraction * kind_.epsilon);
    return internal::finish(true_count, false,
                            static_cast<double>(true_count) + rng_.laplace(scale));
  }

  void reset_budget() {
    require_budgeted();
    spent_ = 0.0;
  }

 private:
  void require_budgeted() const {
    if (!kind_.budgeted()) {
      throw Error(ErrorCode::kInvalidKind, kind_.name() + " has no privacy budget");
    }
  }
  void require_unbudgeted() const {
    if (kind_.budgeted()) {
      throw Error(ErrorCode::kInvalidKind, kind_.name() + " answers need a budget fraction");
    }
  }

  QbsKind kind_;
  std::shared_ptr<const Dataset> dataset_;
  std::uint64_t seed_;
  Rng rng_;
  double spent_ = 0.0;
};

inline std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kDiffix: return "diffix";
    case Mechanism::kTableBuilder: return "tablebuilder";
    case Mechanism::kSimpleQbs: return "simpleqbs";
    case Mechanism::kDpLaplace: return "dplaplace";
  }
  return "?";
}

}  // namespace snoutbench

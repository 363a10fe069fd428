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

// QBS instances bound to one target, answering queries by operator code.
//
// Every query the search asks is an operator vector bound to the same target
// values, so each row of a dataset only matters through which attributes
// agree with the target. BoundQbs reduces rows to that agreement bitmask once
// and answers from it; deterministic answers are cached per code. The answer
// itself always goes through QbsInstance, so cached and direct answers agree.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "snoutbench/dataset.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/qbs.hpp"
#include "snoutbench/query.hpp"

namespace snoutbench {

inline constexpr std::size_t kMaxCodedAttributes = 20;

namespace internal {

// Per-code memo: a flat table for small query spaces, a hash map otherwise.
template <typename T>
class CodeCache {
 public:
  static constexpr std::uint64_t kDenseLimit = 1u << 16;

  explicit CodeCache(std::uint64_t space = 0) : dense_(space <= kDenseLimit) {
    if (dense_) {
      values_.resize(space);
      filled_.assign(space, 0);
    }
  }

  const T* find(std::uint32_t code) const {
    if (dense_) return filled_[code] ? &values_[code] : nullptr;
    auto it = sparse_.find(code);
    return it == sparse_.end() ? nullptr : &it->second;
  }

  void put(std::uint32_t code, T value) {
    if (dense_) {
      values_[code] = std::move(value);
      filled_[code] = 1;
    } else {
      sparse_[code] = std::move(value);
    }
  }

 private:
  bool dense_;
  std::vector<T> values_;
  std::vector<std::uint8_t> filled_;
  std::unordered_map<std::uint32_t, T> sparse_;
};

}  // namespace internal

class BoundQbs {
 public:
  BoundQbs(QbsInstance instance, std::span<const Code> values)
      : instance_(std::move(instance)), values_(values.begin(), values.end()) {
    const Dataset& d = instance_.dataset();
    n_ = values_.size();
    if (n_ != d.width()) throw Error(ErrorCode::kSchemaMismatch, "query values do not match schema");
    if (n_ > kMaxCodedAttributes) {
      throw Error(ErrorCode::kInvalidArgument, "too many attributes for coded queries");
    }
    if (d.empty()) throw Error(ErrorCode::kInvalidArgument, "bound QBS needs a non-empty dataset");
    space_ = query_space_size(n_);
    row_patterns_.resize(d.num_rows());
    std::unordered_map<std::uint32_t, std::uint32_t> hist;
    for (std::size_t r = 0; r < d.num_rows(); ++r) {
      auto row = d.row(r);
      std::uint32_t p = 0;
      for (std::size_t i = 0; i < n_; ++i) p |= (row[i] == values_[i] ? 1u : 0u) << i;
      row_patterns_[r] = p;
      ++hist[p];
    }
    patterns_.assign(hist.begin(), hist.end());
    label_ = sampled_label(d);
    counts_ = internal::CodeCache<std::int64_t>(space_);
    if (instance_.kind().deterministic()) answers_ = internal::CodeCache<std::int64_t>(space_);
  }

  const QbsInstance& instance() const { return instance_; }
  QbsInstance& instance() { return instance_; }
  const QbsKind& kind() const { return instance_.kind(); }
  std::span<const Code> values() const { return values_; }
  std::size_t width() const { return n_; }
  // The target's sensitive bit in this dataset.
  int label() const { return label_; }

  Query query(std::uint32_t code) const { return bind_query(decode_ops(code, n_), values_); }

  std::int64_t true_count(std::uint32_t code) {
    check(code);
    if (const auto* c = counts_.find(code)) return *c;
    const auto [eq, neq] = masks(code);
    std::int64_t t = 0;
    for (const auto& [p, c] : patterns_) {
      if ((p & eq) == eq && (p & neq) == 0) t += c;
    }
    counts_.put(code, t);
    return t;
  }

  std::vector<std::uint32_t> query_set(std::uint32_t code) const {
    check(code);
    const auto [eq, neq] = masks(code);
    std::vector<std::uint32_t> ids;
    for (std::size_t r = 0; r < row_patterns_.size(); ++r) {
      const std::uint32_t p = row_patterns_[r];
      if ((p & eq) == eq && (p & neq) == 0) ids.push_back(static_cast<std::uint32_t>(r));
    }
    return ids;
  }

  // Unbudgeted mechanisms only.
  std::int64_t answer(std::uint32_t code) {
    const QbsKind& k = instance_.kind();
    if (k.deterministic()) {
      if (const auto* a = answers_.find(code)) return *a;
      const auto ids = query_set(code);
      const std::int64_t v = instance_.answer_raw_with_set(query(code), ids).value;
      answers_.put(code, v);
      return v;
    }
    return instance_.answer_raw_for_count(true_count(code)).value;
  }

  // Fresh, uncached answer with all intermediate values.
  RawAnswer answer_raw(std::uint32_t code) {
    if (instance_.kind().count_only()) {
      return instance_.answer_raw_for_count(true_count(code));
    }
    const auto ids = query_set(code);
    return instance_.answer_raw_with_set(query(code), ids);
  }

  std::int64_t answer_budgeted(std::uint32_t code, double fraction) {
    return instance_.answer_budgeted_raw_for_count(true_count(code), fraction).value;
  }

  RawAnswer answer_budgeted_raw(std::uint32_t code, double fraction) {
    return instance_.answer_budgeted_raw_for_count(true_count(code), fraction);
  }

  void reset_budget() { instance_.reset_budget(); }

 private:
  struct Masks {
    std::uint32_t eq;
    std::uint32_t neq;
  };

  void check(std::uint32_t code) const {
    if (code >= space_) throw Error(ErrorCode::kInvalidArgument, "query code out of range");
  }

  Masks masks(std::uint32_t code) const {
    Masks m{0, 0};
    for (std::size_t i = 0; i < n_; ++i) {
      const std::uint32_t op = code % 3;
      code /= 3;
      if (op == 0) m.eq |= 1u << i;
      if (op == 1) m.neq |= 1u << i;
    }
    return m;
  }

  QbsInstance instance_;
  std::vector<Code> values_;
  std::size_t n_ = 0;
  std::uint64_t space_ = 0;
  std::vector<std::uint32_t> row_patterns_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> patterns_;
  int label_ = 0;
  internal::CodeCache<std::int64_t> counts_;
  internal::CodeCache<std::int64_t> answers_;
};

using FleetPart = std::vector<BoundQbs>;

struct AuxFleet {
  FleetPart train;
  FleetPart val;
};

// Instance seeds for one split: seed_k = mix(split_seed, k).
inline std::vector<std::uint64_t> split_instance_seeds(std::uint64_t split_seed, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t k = 0; k < count; ++k) seeds[k] = mix_seed(split_seed, k);
  return seeds;
}

// Throws unless all seeds across the given splits are distinct.
inline void require_disjoint_seeds(std::initializer_list<std::span<const std::uint64_t>> splits) {
  std::unordered_set<std::uint64_t> seen;
  for (auto split : splits) {
    for (std::uint64_t s : split) {
      if (!seen.insert(s).second) {
        throw Error(ErrorCode::kInvalidArgument, "instance seeds are not pairwise distinct");
      }
    }
  }
}

// Draws one dataset per seed from the sampler and binds a QBS to each.
inline FleetPart build_fleet_part(const AuxSampler& sampler, const QbsKind& kind,
                                  std::span<const std::uint64_t> instance_seeds) {
  const auto values = query_values(sampler.target().known_values);
  FleetPart part;
  part.reserve(instance_seeds.size());
  for (std::size_t k = 0; k < instance_seeds.size(); ++k) {
    auto data = std::make_shared<const Dataset>(sampler.sample(k));
    part.emplace_back(QbsInstance(kind, std::move(data), instance_seeds[k]), values);
  }
  return part;
}

}  // namespace snoutbench

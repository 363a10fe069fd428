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

// Splitting a privacy budget over a multiset of queries: each distinct query
// gets a share proportional to how often it occurs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "snoutbench/errors.hpp"
#include "snoutbench/query.hpp"

namespace snoutbench {

struct BudgetedPlan {
  std::vector<std::pair<Query, double>> items;
  double total = 0.0;
};

struct CodedPlanItem {
  std::uint32_t code;
  std::size_t multiplicity;
  double fraction;
};

inline BudgetedPlan allocate_budget(const Solution& sol) {
  const std::size_t m = sol.size();
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "cannot allocate budget to no queries");
  std::map<std::string, std::pair<const Query*, std::size_t>> groups;
  for (const auto& q : sol.queries()) {
    auto [it, inserted] = groups.try_emplace(canonical_key(q), &q, 0);
    ++it->second.second;
  }
  BudgetedPlan plan;
  for (const auto& [key, group] : groups) {
    const double f = static_cast<double>(group.second) / static_cast<double>(m);
    plan.items.emplace_back(*group.first, f);
    plan.total += f;
  }
  return plan;
}

// Same grouping over operator codes bound to one target; items come out in
// ascending code order.
inline std::vector<CodedPlanItem> allocate_budget_codes(std::span<const std::uint32_t> codes) {
  if (codes.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot allocate budget to no queries");
  std::vector<std::uint32_t> sorted(codes.begin(), codes.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CodedPlanItem> items;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    items.push_back({sorted[i], j - i,
                     static_cast<double>(j - i) / static_cast<double>(sorted.size())});
    i = j;
  }
  return items;
}

}  // namespace snoutbench

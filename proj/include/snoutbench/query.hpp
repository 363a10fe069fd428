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

// Counting queries made of one condition per attribute: "=", "!=" or no
// condition. Conditions on known attributes compare against the target's
// value; the condition on the sensitive attribute compares against 0, so
// "=" selects s = 0 and "!=" selects s = 1.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "snoutbench/dataset.hpp"
#include "snoutbench/errors.hpp"

namespace snoutbench {

enum class Op : std::uint8_t { kEq = 0, kNeq = 1, kNone = 2 };

inline constexpr std::array<Op, 3> kAllOps = {Op::kEq, Op::kNeq, Op::kNone};

constexpr std::string_view op_code(Op op) {
  switch (op) {
    case Op::kEq: return "EQ";
    case Op::kNeq: return "NEQ";
    case Op::kNone: return "NONE";
  }
  return "?";
}

constexpr char op_glyph(Op op) {
  switch (op) {
    case Op::kEq: return '=';
    case Op::kNeq: return '!';
    case Op::kNone: return '_';
  }
  return '?';
}

using OperatorVec = std::vector<Op>;

struct Query {
  OperatorVec ops;
  std::vector<Code> values;

  std::size_t size() const { return ops.size(); }
  std::size_t condition_count() const {
    return static_cast<std::size_t>(std::count_if(ops.begin(), ops.end(),
                                                  [](Op o) { return o != Op::kNone; }));
  }
  bool operator==(const Query&) const = default;
};

// Values a query binds for a target: its known values, then 0 for the
// sensitive attribute.
inline std::vector<Code> query_values(std::span<const Code> known_values) {
  std::vector<Code> v(known_values.begin(), known_values.end());
  v.push_back(0);
  return v;
}

inline Query bind_query(OperatorVec ops, std::span<const Code> values) {
  if (ops.size() != values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "operator and value vectors differ in length");
  }
  return Query{std::move(ops), std::vector<Code>(values.begin(), values.end())};
}

inline bool matches(std::span<const Code> row, const Query& q) {
  for (std::size_t i = 0; i < q.ops.size(); ++i) {
    switch (q.ops[i]) {
      case Op::kEq:
        if (row[i] != q.values[i]) return false;
        break;
      case Op::kNeq:
        if (row[i] == q.values[i]) return false;
        break;
      case Op::kNone:
        break;
    }
  }
  return true;
}

inline std::int64_t true_count(const Dataset& d, const Query& q) {
  std::int64_t count = 0;
  for (std::size_t i = 0; i < d.num_rows(); ++i) count += matches(d.row(i), q) ? 1 : 0;
  return count;
}

// Ascending user ids of matching rows.
inline std::vector<std::uint32_t> query_set(const Dataset& d, const Query& q) {
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    if (matches(d.row(i), q)) ids.push_back(static_cast<std::uint32_t>(i));
  }
  return ids;
}

// "<attr_index>:<op_code>:<value>" for one non-empty condition.
inline std::string condition_key(const Query& q, std::size_t i) {
  if (i >= q.ops.size()) throw Error(ErrorCode::kInvalidArgument, "attribute index out of range");
  if (q.ops[i] == Op::kNone) {
    throw Error(ErrorCode::kNoCondition, "attribute " + std::to_string(i) + " has no condition");
  }
  std::string key = std::to_string(i);
  key += ':';
  key += op_code(q.ops[i]);
  key += ':';
  key += std::to_string(q.values[i]);
  return key;
}

// Condition keys of all non-empty conditions in ascending attribute order,
// each terminated by ';'. Empty for the unconditioned query.
inline std::string canonical_key(const Query& q) {
  std::string key;
  for (std::size_t i = 0; i < q.ops.size(); ++i) {
    if (q.ops[i] == Op::kNone) continue;
    key += condition_key(q, i);
    key += ';';
  }
  return key;
}

// Compact text form, one glyph per attribute: "=.!._".
inline std::string to_glyphs(std::span<const Op> ops) {
  std::string s;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) s += '.';
    s += op_glyph(ops[i]);
  }
  return s;
}

inline OperatorVec parse_glyphs(std::string_view text) {
  OperatorVec ops;
  for (char c : text) {
    switch (c) {
      case '=': ops.push_back(Op::kEq); break;
      case '!': ops.push_back(Op::kNeq); break;
      case '_': ops.push_back(Op::kNone); break;
      case '.': break;
      default:
        throw Error(ErrorCode::kInvalidArgument, "bad query glyph '" + std::string(1, c) + "'");
    }
  }
  return ops;
}

// Index of an operator vector in [0, 3^n): sum of op_i * 3^i.
inline std::uint32_t encode_ops(std::span<const Op> ops) {
  std::uint32_t code = 0;
  for (std::size_t i = ops.size(); i-- > 0;) code = code * 3 + static_cast<std::uint32_t>(ops[i]);
  return code;
}

inline OperatorVec decode_ops(std::uint32_t code, std::size_t n) {
  OperatorVec ops(n);
  for (std::size_t i = 0; i < n; ++i) {
    ops[i] = static_cast<Op>(code % 3);
    code /= 3;
  }
  return ops;
}

inline std::uint64_t query_space_size(std::size_t n) {
  std::uint64_t s = 1;
  for (std::size_t i = 0; i < n; ++i) s *= 3;
  return s;
}

// Number of multisets of m queries over 3^n queries: C(3^n + m - 1, m).
inline boost::multiprecision::cpp_int search_space_size(std::size_t n, std::size_t m) {
  using boost::multiprecision::cpp_int;
  cpp_int k = 1;
  for (std::size_t i = 0; i < n; ++i) k *= 3;
  // C(k + m - 1, m) = prod_{i=1..m} (k - 1 + i) / i, exact at every step.
  cpp_int result = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    result *= (k - 1 + i);
    result /= i;
  }
  return result;
}

// A multiset of m queries, kept sorted by canonical key so that the feature
// order of the learned rule does not depend on how the multiset was built.
class Solution {
 public:
  Solution() = default;

  explicit Solution(std::vector<Query> queries) {
    std::vector<std::pair<std::string, Query>> keyed;
    keyed.reserve(queries.size());
    for (auto& q : queries) keyed.emplace_back(canonical_key(q), std::move(q));
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    queries_.reserve(keyed.size());
    for (auto& [key, q] : keyed) queries_.push_back(std::move(q));
  }

  static Solution from_ops(std::span<const OperatorVec> ops, std::span<const Code> values) {
    std::vector<Query> qs;
    qs.reserve(ops.size());
    for (const auto& o : ops) qs.push_back(bind_query(o, values));
    return Solution(std::move(qs));
  }

  const std::vector<Query>& queries() const { return queries_; }
  const Query& operator[](std::size_t i) const { return queries_[i]; }
  std::size_t size() const { return queries_.size(); }
  bool empty() const { return queries_.empty(); }

  std::vector<OperatorVec> ops() const {
    std::vector<OperatorVec> out;
    out.reserve(queries_.size());
    for (const auto& q : queries_) out.push_back(q.ops);
    return out;
  }

  std::vector<std::string> to_glyph_lines() const {
    std::vector<std::string> out;
    out.reserve(queries_.size());
    for (const auto& q : queries_) out.push_back(to_glyphs(q.ops));
    return out;
  }

  bool operator==(const Solution&) const = default;

 private:
  std::vector<Query> queries_;
};

}  // namespace snoutbench

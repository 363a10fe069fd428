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

// Categorical datasets, target selection, and the auxiliary-dataset samplers
// that generate the attacker's training, validation and test datasets.
//
// Conventions used throughout the library:
//  * The last attribute is the sensitive one and is binary.
//  * A sampled dataset always carries the target record as its last row, so
//    the label of a sampled dataset is the sensitive code of that row.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/random.hpp"

namespace snoutbench {

using Code = std::uint32_t;

struct Schema {
  std::vector<std::string> attribute_names;
  std::vector<std::uint32_t> cardinalities;

  std::size_t size() const { return attribute_names.size(); }
  std::size_t sensitive_index() const { return size() - 1; }
  std::size_t known_count() const { return size() - 1; }

  void validate() const {
    if (attribute_names.size() != cardinalities.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "names and cardinalities differ in length");
    }
    if (size() < 2) throw Error(ErrorCode::kSchemaMismatch, "need at least two attributes");
    std::set<std::string> seen(attribute_names.begin(), attribute_names.end());
    if (seen.size() != attribute_names.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "attribute names must be unique");
    }
    for (auto c : cardinalities) {
      if (c == 0) throw Error(ErrorCode::kSchemaMismatch, "cardinality must be positive");
    }
    if (cardinalities.back() != 2) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "sensitive attribute '" + attribute_names.back() + "' must be binary");
    }
  }

  // Keeps the listed known attributes (in the given order) plus the sensitive one.
  Schema project(std::span<const std::size_t> keep) const {
    Schema out;
    for (std::size_t a : keep) {
      if (a >= known_count()) throw Error(ErrorCode::kInvalidArgument, "projection index");
      out.attribute_names.push_back(attribute_names[a]);
      out.cardinalities.push_back(cardinalities[a]);
    }
    out.attribute_names.push_back(attribute_names.back());
    out.cardinalities.push_back(cardinalities.back());
    return out;
  }

  bool operator==(const Schema&) const = default;
};

// Row-major table of attribute codes. User ids are the row indices.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::shared_ptr<const Schema> schema) : schema_(std::move(schema)) {
    schema_->validate();
  }

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }

  std::size_t num_rows() const { return width() == 0 ? 0 : cells_.size() / width(); }
  std::size_t width() const { return schema_ ? schema_->size() : 0; }
  bool empty() const { return cells_.empty(); }

  std::span<const Code> row(std::size_t i) const {
    return {cells_.data() + i * width(), width()};
  }
  std::span<const Code> cells() const { return cells_; }

  void reserve(std::size_t rows) { cells_.reserve(rows * width()); }

  void append_row(std::span<const Code> values) {
    if (values.size() != width()) {
      throw Error(ErrorCode::kSchemaMismatch, "row width does not match schema");
    }
    for (std::size_t a = 0; a < values.size(); ++a) {
      if (values[a] >= schema_->cardinalities[a]) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "code out of range for attribute '" + schema_->attribute_names[a] + "'");
      }
    }
    cells_.insert(cells_.end(), values.begin(), values.end());
  }

  int sensitive(std::size_t i) const {
    return static_cast<int>(cells_[i * width() + width() - 1]);
  }
  void set_sensitive(std::size_t i, int bit) {
    cells_[i * width() + width() - 1] = static_cast<Code>(bit != 0);
  }

  bool operator==(const Dataset& other) const {
    return (schema_ == other.schema_ || (schema_ && other.schema_ && *schema_ == *other.schema_)) &&
           cells_ == other.cells_;
  }

 private:
  std::shared_ptr<const Schema> schema_;
  std::vector<Code> cells_;
};

// Per-column dictionaries: values[a][code] is the original string.
struct Encoding {
  std::vector<std::vector<std::string>> values;

  nlohmann::json to_json(const Schema& schema) const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t a = 0; a < values.size(); ++a) j[schema.attribute_names[a]] = values[a];
    return j;
  }
};

struct LoadedTable {
  Dataset dataset;
  Encoding encoding;
};

namespace internal {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV line. Double quotes group commas; "" is an escaped quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.push_back(trim(cell));
  return out;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline RawCsv read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  RawCsv csv;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      csv.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != csv.header.size()) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "row " + std::to_string(csv.rows.size() + 1) + " has " +
                        std::to_string(cells.size()) + " columns, header has " +
                        std::to_string(csv.header.size()));
      }
      csv.rows.push_back(std::move(cells));
    }
  }
  return csv;
}

inline LoadedTable encode(const RawCsv& csv, const Schema& schema) {
  auto shared = std::make_shared<const Schema>(schema);
  LoadedTable out{Dataset(shared), Encoding{}};
  const std::size_t n = schema.size();
  out.encoding.values.resize(n);
  std::vector<std::unordered_map<std::string, Code>> dict(n);
  std::vector<Code> row(n);
  out.dataset.reserve(csv.rows.size());
  for (const auto& cells : csv.rows) {
    for (std::size_t a = 0; a < n; ++a) {
      auto [it, inserted] = dict[a].try_emplace(cells[a], static_cast<Code>(dict[a].size()));
      if (inserted) {
        if (it->second >= schema.cardinalities[a]) {
          throw Error(ErrorCode::kSchemaMismatch, "attribute '" + schema.attribute_names[a] +
                                                      "' has more than " +
                                                      std::to_string(schema.cardinalities[a]) +
                                                      " distinct values (saw '" + cells[a] + "')");
        }
        out.encoding.values[a].push_back(cells[a]);
      }
      row[a] = it->second;
    }
    out.dataset.append_row(row);
  }
  return out;
}

}  // namespace internal

// Loads a CSV against an explicit schema. Values are dictionary-encoded per
// column in first-seen order. An empty file yields an empty dataset.
inline LoadedTable load_dataset(const std::filesystem::path& path, const Schema& schema) {
  schema.validate();
  auto csv = internal::read_csv(path);
  if (csv.header.empty()) return {Dataset(std::make_shared<const Schema>(schema)), {}};
  if (csv.header.size() != schema.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "file has " + std::to_string(csv.header.size()) +
                                                " columns, schema has " +
                                                std::to_string(schema.size()));
  }
  return internal::encode(csv, schema);
}

// Loads a CSV and infers the schema from the header and the distinct values
// seen per column. The last column must be binary.
inline LoadedTable load_csv_infer_schema(const std::filesystem::path& path) {
  auto csv = internal::read_csv(path);
  if (csv.header.size() < 2) throw Error(ErrorCode::kSchemaMismatch, "need at least two columns");
  Schema schema;
  schema.attribute_names = csv.header;
  for (std::size_t a = 0; a < csv.header.size(); ++a) {
    std::set<std::string_view> distinct;
    for (const auto& r : csv.rows) distinct.insert(r[a]);
    schema.cardinalities.push_back(static_cast<std::uint32_t>(std::max<std::size_t>(1, distinct.size())));
  }
  // An all-constant sensitive column is still declared binary.
  if (schema.cardinalities.back() == 1) schema.cardinalities.back() = 2;
  return internal::encode(csv, schema);
}

inline Schema schema_from_json(const nlohmann::json& j) {
  Schema s;
  s.attribute_names = j.at("attribute_names").get<std::vector<std::string>>();
  s.cardinalities = j.at("cardinalities").get<std::vector<std::uint32_t>>();
  s.validate();
  return s;
}

inline nlohmann::json schema_to_json(const Schema& s) {
  return {{"attribute_names", s.attribute_names}, {"cardinalities", s.cardinalities}};
}

// Keeps the listed known attributes plus the sensitive one.
inline Dataset project(const Dataset& d, std::span<const std::size_t> keep) {
  auto schema = std::make_shared<const Schema>(d.schema().project(keep));
  Dataset out(schema);
  out.reserve(d.num_rows());
  std::vector<Code> row(keep.size() + 1);
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    auto src = d.row(i);
    for (std::size_t k = 0; k < keep.size(); ++k) row[k] = src[keep[k]];
    row.back() = src.back();
    out.append_row(row);
  }
  return out;
}

inline Dataset select_rows(const Dataset& d, std::span<const std::size_t> rows) {
  Dataset out(d.schema_ptr());
  out.reserve(rows.size());
  for (std::size_t r : rows) out.append_row(d.row(r));
  return out;
}

struct TargetRecord {
  std::vector<Code> known_values;
  int true_sensitive = 0;
  // Row of the target in the pool it was drawn from.
  std::size_t source_row = 0;

  std::vector<Code> full_record(int sensitive_bit) const {
    std::vector<Code> r = known_values;
    r.push_back(static_cast<Code>(sensitive_bit != 0));
    return r;
  }
};

inline bool same_known(std::span<const Code> row, std::span<const Code> known) {
  return std::equal(known.begin(), known.end(), row.begin());
}

namespace internal {

struct KnownKeyHash {
  std::size_t operator()(const std::vector<Code>& key) const {
    Fnv1a h;
    for (Code c : key) h.update_u32_le(c);
    return static_cast<std::size_t>(h.digest());
  }
};

inline std::unordered_map<std::vector<Code>, std::size_t, KnownKeyHash> known_counts(
    const Dataset& d) {
  std::unordered_map<std::vector<Code>, std::size_t, KnownKeyHash> counts;
  const std::size_t k = d.schema().known_count();
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    auto r = d.row(i);
    ++counts[std::vector<Code>(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k))];
  }
  return counts;
}

}  // namespace internal

// Rows whose known attributes appear exactly once in `d`.
inline std::vector<std::size_t> unique_rows(const Dataset& d) {
  auto counts = internal::known_counts(d);
  const std::size_t k = d.schema().known_count();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    auto r = d.row(i);
    if (counts[std::vector<Code>(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k))] == 1) {
      out.push_back(i);
    }
  }
  return out;
}

struct Partition {
  // Indices (into the source schema) of the kept known attributes.
  std::vector<std::size_t> kept_attributes;
  Dataset train_pool;
  Dataset val_pool;
  Dataset test_pool;
  std::vector<TargetRecord> targets;
};

// Samples the known attributes, splits the rows into three equal pools and
// draws unique target records from the test pool.
inline Partition partition_and_pick_targets(const Dataset& d, std::size_t known_attr_count,
                                            std::size_t num_targets, std::uint64_t rng_seed) {
  if (d.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  if (known_attr_count == 0 || known_attr_count + 1 > d.schema().size()) {
    throw Error(ErrorCode::kInvalidArgument, "known_attr_count must be in [1, n-1]");
  }
  Rng rng(rng_seed);
  Partition p;

  std::vector<std::size_t> attrs(d.schema().known_count());
  std::iota(attrs.begin(), attrs.end(), 0);
  rng.partial_shuffle(std::span(attrs), known_attr_count);
  p.kept_attributes.assign(attrs.begin(), attrs.begin() + static_cast<std::ptrdiff_t>(known_attr_count));
  std::sort(p.kept_attributes.begin(), p.kept_attributes.end());

  Dataset projected = project(d, p.kept_attributes);
  std::vector<std::size_t> order(projected.num_rows());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  const std::size_t third = order.size() / 3;
  auto slice = [&](std::size_t k) {
    return select_rows(projected, std::span(order).subspan(k * third, third));
  };
  p.train_pool = slice(0);
  p.val_pool = slice(1);
  p.test_pool = slice(2);

  auto candidates = unique_rows(p.test_pool);
  if (candidates.size() < num_targets) {
    throw Error(ErrorCode::kNotEnoughUniqueRecords,
                std::to_string(candidates.size()) + " unique records in the test pool, " +
                    std::to_string(num_targets) + " requested");
  }
  rng.partial_shuffle(std::span(candidates), num_targets);
  for (std::size_t t = 0; t < num_targets; ++t) {
    auto r = p.test_pool.row(candidates[t]);
    TargetRecord target;
    target.known_values.assign(r.begin(), r.end() - 1);
    target.true_sensitive = static_cast<int>(r.back());
    target.source_row = candidates[t];
    p.targets.push_back(std::move(target));
  }
  return p;
}

enum class Scenario { kAuxiliary, kExactButOne };

inline std::string_view scenario_name(Scenario s) {
  return s == Scenario::kAuxiliary ? "auxiliary" : "exact-but-one";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "auxiliary" || s == "AUXILIARY") return Scenario::kAuxiliary;
  if (s == "exact-but-one" || s == "EXACT-BUT-ONE" || s == "exact_but_one") {
    return Scenario::kExactButOne;
  }
  throw Error(ErrorCode::kConfig, "unknown scenario '" + std::string(s) + "'");
}

// Builds the non-target rows of an EXACT-BUT-ONE private dataset:
// dataset_size - 1 rows drawn from `pool` without replacement, duplicates of
// the target removed, sensitive bits randomised once (when requested).
inline Dataset make_exact_private_rows(const Dataset& pool, const TargetRecord& target,
                                       std::size_t dataset_size, std::uint64_t seed,
                                       bool randomize_sensitive = true) {
  if (dataset_size == 0 || dataset_size > pool.num_rows() + 1) {
    throw Error(ErrorCode::kSizeTooLarge, "dataset_size exceeds pool size + 1");
  }
  Rng rng(seed);
  std::vector<std::size_t> idx(pool.num_rows());
  std::iota(idx.begin(), idx.end(), 0);
  rng.partial_shuffle(std::span(idx), dataset_size - 1);
  Dataset out(pool.schema_ptr());
  out.reserve(dataset_size - 1);
  for (std::size_t k = 0; k + 1 < dataset_size; ++k) {
    auto r = pool.row(idx[k]);
    if (same_known(r, target.known_values)) continue;
    out.append_row(r);
    if (randomize_sensitive) out.set_sensitive(out.num_rows() - 1, rng.bernoulli(0.5));
  }
  return out;
}

// Generates auxiliary datasets containing the target (as the last row) with
// a uniformly random sensitive bit.
//
// AUXILIARY: the pool is the attacker's auxiliary split; each draw picks
// dataset_size - 1 pool rows, drops duplicates of the target and appends it.
// EXACT-BUT-ONE: the pool is the fixed private dataset without the target
// (see make_exact_private_rows); each draw only re-randomises the target bit.
//
// Immutable after construction; every draw seeds its own generator from
// (seed, draw_index), so concurrent draws are safe.
class AuxSampler {
 public:
  AuxSampler(Scenario scenario, std::shared_ptr<const Dataset> source_pool, TargetRecord target,
             std::size_t dataset_size, std::uint64_t seed, bool randomize_sensitive = true)
      : scenario_(scenario),
        pool_(std::move(source_pool)),
        target_(std::move(target)),
        dataset_size_(dataset_size),
        seed_(seed),
        randomize_sensitive_(randomize_sensitive) {
    if (!pool_) throw Error(ErrorCode::kInvalidArgument, "sampler needs a source pool");
    if (target_.known_values.size() != pool_->schema().known_count()) {
      throw Error(ErrorCode::kSchemaMismatch, "target width does not match pool schema");
    }
    if (scenario_ == Scenario::kAuxiliary &&
        (dataset_size_ == 0 || dataset_size_ > pool_->num_rows() + 1)) {
      throw Error(ErrorCode::kSizeTooLarge, "dataset_size " + std::to_string(dataset_size_) +
                                                " exceeds pool size + 1 (" +
                                                std::to_string(pool_->num_rows() + 1) + ")");
    }
  }

  Scenario scenario() const { return scenario_; }
  const TargetRecord& target() const { return target_; }
  const Dataset& source_pool() const { return *pool_; }
  std::size_t dataset_size() const { return dataset_size_; }
  std::uint64_t seed() const { return seed_; }

  Dataset sample(std::uint64_t draw_index) const {
    Rng rng(mix_seed(seed_, draw_index));
    Dataset out(pool_->schema_ptr());
    if (scenario_ == Scenario::kExactButOne) {
      out = *pool_;
    } else {
      std::vector<std::size_t> idx(pool_->num_rows());
      std::iota(idx.begin(), idx.end(), 0);
      rng.partial_shuffle(std::span(idx), dataset_size_ - 1);
      out.reserve(dataset_size_);
      for (std::size_t k = 0; k + 1 < dataset_size_; ++k) {
        auto r = pool_->row(idx[k]);
        if (same_known(r, target_.known_values)) continue;
        out.append_row(r);
        if (randomize_sensitive_) out.set_sensitive(out.num_rows() - 1, rng.bernoulli(0.5));
      }
    }
    const int bit = rng.bernoulli(0.5) ? 1 : 0;
    out.append_row(target_.full_record(bit));
    return out;
  }

 private:
  Scenario scenario_;
  std::shared_ptr<const Dataset> pool_;
  TargetRecord target_;
  std::size_t dataset_size_;
  std::uint64_t seed_;
  bool randomize_sensitive_;
};

inline Dataset sample_aux(const AuxSampler& s, std::uint64_t draw_index) {
  return s.sample(draw_index);
}

// Label of a sampled dataset: the target's sensitive bit.
inline int sampled_label(const Dataset& d) { return d.sensitive(d.num_rows() - 1); }

}  // namespace snoutbench

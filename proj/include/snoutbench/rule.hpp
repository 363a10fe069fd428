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

// Answer matrices and the learned attack rule.
//
// The rule is an L2-regularised logistic regression on standardised answers,
// fitted by Newton's method. The penalty (l2/2)|w|^2 skips the bias. A
// solution's fitness is min(train accuracy, validation accuracy).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "snoutbench/budget.hpp"
#include "snoutbench/errors.hpp"
#include "snoutbench/fleet.hpp"
#include "snoutbench/query.hpp"

namespace snoutbench {

struct RuleHyper {
  double l2 = 1.0;
  int max_iters = 500;
  double tol = 1e-6;
};

struct AnswerMatrix {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

struct TrainedRule {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd means;
  Eigen::VectorXd sds;
  int iterations = 0;
  bool converged = false;

  std::size_t features() const { return static_cast<std::size_t>(weights.size()); }

  nlohmann::json to_json() const {
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"weights", vec(weights)}, {"bias", bias},       {"feature_means", vec(means)},
            {"feature_sds", vec(sds)}, {"iterations", iterations}, {"converged", converged}};
  }
};

// Operator codes of the queries, in an order that depends only on the
// multiset: ascending canonical key of the bound query.
inline std::vector<std::uint32_t> canonical_codes(std::span<const std::uint32_t> codes,
                                                  std::span<const Code> values) {
  std::vector<std::pair<std::string, std::uint32_t>> keyed;
  keyed.reserve(codes.size());
  for (std::uint32_t c : codes) {
    keyed.emplace_back(canonical_key(bind_query(decode_ops(c, values.size()), values)), c);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint32_t> out;
  out.reserve(keyed.size());
  for (const auto& kc : keyed) out.push_back(kc.second);
  return out;
}

inline std::vector<std::uint32_t> solution_codes(const Solution& sol) {
  std::vector<std::uint32_t> codes;
  codes.reserve(sol.size());
  for (const auto& q : sol.queries()) codes.push_back(encode_ops(q.ops));
  return codes;
}

inline Solution codes_to_solution(std::span<const std::uint32_t> codes, std::span<const Code> values) {
  std::vector<OperatorVec> ops;
  ops.reserve(codes.size());
  for (std::uint32_t c : codes) ops.push_back(decode_ops(c, values.size()));
  return Solution::from_ops(ops, values);
}

// X[k][j] = answer of instance k to query j, in the given column order.
// Budgeted instances are reset and spend their budget over the distinct
// queries in proportion to multiplicity; a repeated query fills each of its
// columns with the same answer. Otherwise each column is answered separately,
// which gives fresh noise per occurrence on non-deterministic mechanisms.
inline AnswerMatrix build_matrix(std::span<const std::uint32_t> codes, FleetPart& part) {
  const auto d = static_cast<Eigen::Index>(part.size());
  const auto m = static_cast<Eigen::Index>(codes.size());
  AnswerMatrix mat{Eigen::MatrixXd(d, m), Eigen::VectorXd(d)};
  if (part.empty()) return mat;
  const bool budgeted = part.front().kind().budgeted();
  std::vector<CodedPlanItem> plan;
  std::vector<std::vector<Eigen::Index>> columns;
  if (budgeted && m > 0) {
    plan = allocate_budget_codes(codes);
    columns.resize(plan.size());
    for (Eigen::Index j = 0; j < m; ++j) {
      auto it = std::lower_bound(plan.begin(), plan.end(), codes[static_cast<std::size_t>(j)],
                                 [](const CodedPlanItem& p, std::uint32_t c) { return p.code < c; });
      columns[static_cast<std::size_t>(it - plan.begin())].push_back(j);
    }
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    BoundQbs& qbs = part[static_cast<std::size_t>(k)];
    mat.y(k) = qbs.label();
    if (budgeted) {
      qbs.reset_budget();
      for (std::size_t g = 0; g < plan.size(); ++g) {
        const auto v = static_cast<double>(qbs.answer_budgeted(plan[g].code, plan[g].fraction));
        for (Eigen::Index j : columns[g]) mat.x(k, j) = v;
      }
    } else {
      for (Eigen::Index j = 0; j < m; ++j) {
        mat.x(k, j) = static_cast<double>(qbs.answer(codes[static_cast<std::size_t>(j)]));
      }
    }
  }
  return mat;
}

// Solution form: columns follow the solution's canonical order.
inline AnswerMatrix build_matrix(const Solution& sol, FleetPart& part) {
  if (!part.empty()) {
    const auto values = part.front().values();
    for (const auto& q : sol.queries()) {
      if (!std::equal(q.values.begin(), q.values.end(), values.begin(), values.end())) {
        throw Error(ErrorCode::kInvalidArgument, "solution is bound to a different target");
      }
    }
  }
  const auto codes = solution_codes(sol);
  return build_matrix(codes, part);
}

namespace internal {

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logistic_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w, double l2) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += y(i) > 0.5 ? softplus(-z(i)) : softplus(z(i));
  return loss + 0.5 * l2 * w.squaredNorm();
}

}  // namespace internal

inline Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& means,
                                   const Eigen::VectorXd& sds) {
  return (x.rowwise() - means.transpose()).array().rowwise() / sds.transpose().array();
}

inline TrainedRule train_rule(const AnswerMatrix& mat, const RuleHyper& hyper = {}) {
  const Eigen::Index d = mat.x.rows();
  const Eigen::Index m = mat.x.cols();
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "cannot train a rule on no samples");
  TrainedRule rule;
  rule.means = mat.x.colwise().mean().transpose();
  rule.sds = ((mat.x.rowwise() - rule.means.transpose()).array().square().colwise().sum() /
              static_cast<double>(d))
                 .sqrt()
                 .transpose();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(rule.sds(j) > 1e-12)) rule.sds(j) = 1.0;
  }
  rule.weights = Eigen::VectorXd::Zero(m);

  const double positives = mat.y.sum();
  if (positives == 0.0 || positives == static_cast<double>(d)) {
    // One class only: predict it everywhere.
    rule.bias = positives > 0 ? 1.0 : -1.0;
    rule.converged = true;
    return rule;
  }

  const Eigen::MatrixXd z = standardize(mat.x, rule.means, rule.sds);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  double b = std::log(positives / (static_cast<double>(d) - positives));
  Eigen::VectorXd lin = Eigen::VectorXd::Constant(d, b);
  double obj = internal::logistic_objective(lin, mat.y, w, hyper.l2);
  Eigen::VectorXd p(d), weight(d);
  Eigen::MatrixXd h(m + 1, m + 1);
  Eigen::VectorXd g(m + 1);

  for (int it = 0; it < hyper.max_iters; ++it) {
    for (Eigen::Index i = 0; i < d; ++i) {
      p(i) = internal::sigmoid(lin(i));
      weight(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd r = p - mat.y;
    g.head(m) = z.transpose() * r + hyper.l2 * w;
    g(m) = r.sum();
    rule.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() < hyper.tol) {
      rule.converged = true;
      break;
    }
    const Eigen::MatrixXd zw = z.array().colwise() * weight.array().sqrt();
    h.topLeftCorner(m, m).setZero();
    h.topLeftCorner(m, m).selfadjointView<Eigen::Lower>().rankUpdate(zw.transpose());
    h.topLeftCorner(m, m) = h.topLeftCorner(m, m).selfadjointView<Eigen::Lower>();
    h.topLeftCorner(m, m).diagonal().array() += hyper.l2;
    h.block(0, m, m, 1) = z.transpose() * weight;
    h.block(m, 0, 1, m) = h.block(0, m, m, 1).transpose();
    h(m, m) = weight.sum() + 1e-12;
    const Eigen::VectorXd step = h.ldlt().solve(g);

    // Damped Newton: halve the step until the objective does not increase.
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k) {
      const Eigen::VectorXd w_new = w - t * step.head(m);
      const double b_new = b - t * step(m);
      const Eigen::VectorXd lin_new = (z * w_new).array() + b_new;
      const double obj_new = internal::logistic_objective(lin_new, mat.y, w_new, hyper.l2);
      if (obj_new <= obj) {
        w = w_new;
        b = b_new;
        lin = lin_new;
        obj = obj_new;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      rule.converged = true;
      break;
    }
  }
  rule.weights = w;
  rule.bias = b;
  return rule;
}

inline double decision_value(const TrainedRule& rule, std::span<const double> x) {
  if (x.size() != rule.features()) throw Error(ErrorCode::kInvalidArgument, "feature count mismatch");
  double z = rule.bias;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    z += rule.weights(jj) * (x[j] - rule.means(jj)) / rule.sds(jj);
  }
  return z;
}

// 1 iff the predicted probability exceeds one half.
inline int predict(const TrainedRule& rule, std::span<const double> x) {
  return decision_value(rule, x) > 0.0 ? 1 : 0;
}

inline double accuracy(const TrainedRule& rule, const AnswerMatrix& mat) {
  const Eigen::Index d = mat.x.rows();
  if (d == 0) throw Error(ErrorCode::kEmptyTestSet, "no samples to score");
  const Eigen::VectorXd lin =
      (standardize(mat.x, rule.means, rule.sds) * rule.weights).array() + rule.bias;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < d; ++i) correct += ((lin(i) > 0.0 ? 1.0 : 0.0) == mat.y(i)) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(d);
}

struct FitnessResult {
  double fitness = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  TrainedRule rule;
};

inline FitnessResult evaluate_fitness_detailed(std::span<const std::uint32_t> codes, AuxFleet& fleet,
                                               const RuleHyper& hyper = {}) {
  const auto train = build_matrix(codes, fleet.train);
  const auto val = build_matrix(codes, fleet.val);
  FitnessResult r;
  r.rule = train_rule(train, hyper);
  r.train_accuracy = accuracy(r.rule, train);
  r.val_accuracy = accuracy(r.rule, val);
  r.fitness = std::min(r.train_accuracy, r.val_accuracy);
  return r;
}

inline double evaluate_fitness(std::span<const std::uint32_t> codes, AuxFleet& fleet,
                               const RuleHyper& hyper = {}) {
  return evaluate_fitness_detailed(codes, fleet, hyper).fitness;
}

inline double evaluate_fitness(const Solution& sol, AuxFleet& fleet, const RuleHyper& hyper = {}) {
  const auto codes = solution_codes(sol);
  return evaluate_fitness(codes, fleet, hyper);
}

}  // namespace snoutbench

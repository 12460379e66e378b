// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OBSPART_PLACEMENT_HPP_
#define OBSPART_PLACEMENT_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "obspart/matroids.hpp"
#include "obspart/maximize.hpp"
#include "obspart/measures.hpp"
#include "obspart/partition.hpp"
#include "obspart/sysmodel.hpp"

namespace obspart {

enum class ObjectiveMode { kGlobal, kLocal };

inline std::string mode_name(ObjectiveMode mode) {
  return mode == ObjectiveMode::kGlobal ? "global" : "local";
}

enum class PlacementSolver { kGreedy, kContinuous };

struct SensorConfig {
  std::vector<int> selected;
  std::vector<int> budgets;
  ObjectiveMode mode = ObjectiveMode::kGlobal;
  double value = 0.0;      // achieved objective, normalized f(empty) = 0
  double value_raw = 0.0;  // unshifted measure(s)
};

// Splits a total sensor budget across blocks proportionally to block size by
// the largest-remainder rule; residue goes to the largest blocks first, and
// no block ever receives more than its size.
inline std::vector<int> budgets_from_total(const Partition& p, int r) {
  const int n_y = p.n_y();
  validate_partition(p, n_y);
  if (r < 0 || r > n_y) {
    throw std::invalid_argument("total sensor count " + std::to_string(r) +
                                " outside [0, " + std::to_string(n_y) + "]");
  }
  const int kappa = p.kappa;
  std::vector<int> budgets(kappa, 0);
  if (r == 0 || n_y == 0) return budgets;

  std::vector<long long> remainder(kappa, 0);
  int assigned = 0;
  for (int i = 0; i < kappa; ++i) {
    const long long scaled =
        static_cast<long long>(r) * static_cast<long long>(p.blocks[i].size());
    budgets[i] = static_cast<int>(scaled / n_y);
    remainder[i] = scaled % n_y;
    assigned += budgets[i];
  }
  std::vector<int> order(kappa);
  for (int i = 0; i < kappa; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    if (remainder[lhs] != remainder[rhs]) return remainder[lhs] > remainder[rhs];
    if (p.blocks[lhs].size() != p.blocks[rhs].size()) {
      return p.blocks[lhs].size() > p.blocks[rhs].size();
    }
    return lhs < rhs;
  });
  int residue = r - assigned;
  while (residue > 0) {
    bool progressed = false;
    for (int i : order) {
      if (residue == 0) break;
      if (budgets[i] < static_cast<int>(p.blocks[i].size())) {
        ++budgets[i];
        --residue;
        progressed = true;
      }
    }
    if (!progressed) {
      throw std::logic_error("budget allocation failed to place the residue");
    }
  }
  return budgets;
}

namespace detail {

inline SetFunction placement_objective(const ContributionGramians& cg,
                                       const Partition& p, ObjectiveMode mode,
                                       const Metric& m) {
  if (mode == ObjectiveMode::kGlobal) return make_set_function(cg, m);
  // Local mode sums per-subsystem measures; the same memoized block function
  // serves every subsystem because they share contributions and metric.
  auto block_fn = std::make_shared<SetFunction>(make_set_function(cg, m));
  const int n_y = cg.n_y();
  std::vector<int> owner(n_y, -1);
  for (int i = 0; i < p.kappa; ++i) {
    for (int v : p.blocks[i]) owner[v] = i;
  }
  const int kappa = p.kappa;
  return SetFunction(n_y,
                     [block_fn, owner, kappa](const std::vector<int>& subset) {
                       std::vector<std::vector<int>> per_block(kappa);
                       for (int v : subset) per_block[owner[v]].push_back(v);
                       double total = 0.0;
                       for (auto& states : per_block) {
                         total += (*block_fn)(std::move(states));
                       }
                       return total;
                     });
}

}  // namespace detail

// Sensor placement under the per-block budgets: picks R with
// |R ∩ S_i| <= r_i maximizing either the whole-selection measure (global) or
// the sum of per-subsystem measures (local).
inline std::pair<SensorConfig, SolveTrace> solve_placement(
    const ContributionGramians& cg, const Partition& p,
    const std::vector<int>& budgets, ObjectiveMode mode, const Metric& m,
    PlacementSolver solver, const SolverConfig& cfg) {
  const int n_y = cg.n_y();
  validate_partition(p, n_y);
  cfg.validate();
  if (static_cast<int>(budgets.size()) != p.kappa) {
    throw std::invalid_argument("expected one budget per block, got " +
                                std::to_string(budgets.size()) + " for " +
                                std::to_string(p.kappa) + " blocks");
  }
  for (int i = 0; i < p.kappa; ++i) {
    if (budgets[i] < 0 || budgets[i] > static_cast<int>(p.blocks[i].size())) {
      throw std::invalid_argument(
          "infeasible budget " + std::to_string(budgets[i]) + " for block " +
          std::to_string(i) + " of size " +
          std::to_string(p.blocks[i].size()));
    }
  }

  const SetFunction objective = detail::placement_objective(cg, p, mode, m);
  const Matroid matroid(GroundSet::plain(n_y), p.blocks, budgets);

  std::vector<int> selected;
  SolveTrace trace;
  if (solver == PlacementSolver::kGreedy) {
    GreedyResult res = greedy(objective, matroid, cfg.lazy);
    selected = std::move(res.selected);
    trace = std::move(res.trace);
  } else {
    ContinuousGreedyResult res = continuous_greedy(objective, matroid, cfg);
    selected = round_point(res.x, matroid, objective, cfg.rounding, cfg.samples,
                           cfg.seed, cfg.threads);
    trace = std::move(res.trace);
  }

  SensorConfig config;
  config.selected = std::move(selected);
  config.budgets = budgets;
  config.mode = mode;
  config.value = objective(config.selected);
  const double offset = empty_measure(cg.n_x(), m);
  const int offset_count = (mode == ObjectiveMode::kGlobal) ? 1 : p.kappa;
  config.value_raw = std::isfinite(offset)
                         ? config.value + offset_count * offset
                         : config.value;
  return {std::move(config), std::move(trace)};
}

// Both sides of the subsystem-decomposition bound at a fixed selection R,
// on raw (unshifted) measures: global = measure of the whole selection,
// local = sum of per-subsystem measures. Equality holds for trace; rank
// satisfies the reverse inequality (global <= local); for logdet the
// direction depends on the spectrum, so `holds` is reported as a diagnostic
// only.
struct BoundDiagnostic {
  MetricKind metric = MetricKind::kTrace;
  double global_value = 0.0;
  double local_sum = 0.0;
  double gap = 0.0;  // global - local
  bool holds = false;
};

inline BoundDiagnostic bound_check(const ContributionGramians& cg,
                                   const Partition& p,
                                   const std::vector<int>& R, const Metric& m) {
  const int n_y = cg.n_y();
  validate_partition(p, n_y);
  BoundDiagnostic diag;
  diag.metric = m.kind;
  diag.global_value = measure(full_gramian(cg, R).W, m);
  std::vector<char> in_R(n_y, 0);
  for (int v : R) {
    if (v < 0 || v >= n_y) {
      throw std::invalid_argument("selection index " + std::to_string(v) +
                                  " out of range");
    }
    in_R[v] = 1;
  }
  diag.local_sum = 0.0;
  for (int i = 0; i < p.kappa; ++i) {
    std::vector<int> local;
    for (int v : p.blocks[i]) {
      if (in_R[v]) local.push_back(v);
    }
    diag.local_sum += measure(full_gramian(cg, local).W, m);
  }
  diag.gap = diag.global_value - diag.local_sum;
  switch (m.kind) {
    case MetricKind::kTrace:
      diag.holds = std::abs(diag.gap) <= 1e-9;
      break;
    case MetricKind::kRank:
      diag.holds = diag.gap <= 1e-9;
      break;
    case MetricKind::kLogDet:
      diag.holds = diag.gap >= -1e-9;
      break;
  }
  return diag;
}

}  // namespace obspart

#endif  // OBSPART_PLACEMENT_HPP_

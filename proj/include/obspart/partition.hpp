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

#ifndef OBSPART_PARTITION_HPP_
#define OBSPART_PARTITION_HPP_

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "obspart/matroids.hpp"
#include "obspart/maximize.hpp"
#include "obspart/measures.hpp"
#include "obspart/sysmodel.hpp"

namespace obspart {

// A partition of the measurable state set into kappa blocks. Blocks are
// disjoint, may be empty, and together cover every state exactly once.
struct Partition {
  int kappa = 0;
  std::vector<std::vector<int>> blocks;
  std::string provenance;  // "p2-solver", "spectral", or "manual"

  int n_y() const {
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.size();
    return static_cast<int>(total);
  }
};

inline void validate_partition(const Partition& p, int n_y) {
  if (p.kappa != static_cast<int>(p.blocks.size())) {
    throw std::invalid_argument("partition kappa does not match block count");
  }
  std::vector<int> owner(n_y, -1);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    for (int v : p.blocks[b]) {
      if (v < 0 || v >= n_y) {
        throw std::invalid_argument("partition state " + std::to_string(v) +
                                    " out of range [0, " + std::to_string(n_y) +
                                    ")");
      }
      if (owner[v] != -1) {
        throw std::invalid_argument("partition assigns state " +
                                    std::to_string(v) + " twice");
      }
      owner[v] = static_cast<int>(b);
    }
  }
  for (int v = 0; v < n_y; ++v) {
    if (owner[v] == -1) {
      throw std::invalid_argument("partition leaves state " +
                                  std::to_string(v) + " unassigned");
    }
  }
}

struct PartitionReport {
  std::vector<double> block_values;  // f_i(S_i), normalized to f_i(empty) = 0
  double total = 0.0;                // sum of block values
  double total_raw = 0.0;            // unshifted measures summed
  std::optional<double> modularity_q;
  std::vector<int> completed_states;  // states assigned by the completion pass
  SolveTrace trace;
};

// The partitioning objective over the extended ground X = C x V:
// f(S) = sum_i f_block({v : (i,v) in S}), where f_block is the shared
// memoized per-subsystem set function. A marginal change to one (i, v) only
// re-evaluates subsystem i; the other terms come straight from the cache.
inline SetFunction build_p2_objective(const ContributionGramians& cg, int kappa,
                                      const Metric& m) {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  const int n_y = cg.n_y();
  const GroundSet ground = GroundSet::product(kappa, n_y);
  auto block_fn = std::make_shared<SetFunction>(make_set_function(cg, m));
  return SetFunction(ground.size,
                     [block_fn, ground, kappa](const std::vector<int>& subset) {
                       std::vector<std::vector<int>> per_block(kappa);
                       for (int e : subset) {
                         const auto [i, v] = ground.decode(e);
                         per_block[i].push_back(v);
                       }
                       double total = 0.0;
                       for (auto& states : per_block) {
                         total += (*block_fn)(std::move(states));
                       }
                       return total;
                     });
}

inline std::vector<int> encode_p1(const Partition& p) {
  const int n_y = p.n_y();
  validate_partition(p, n_y);
  const GroundSet ground = GroundSet::product(p.kappa, n_y);
  std::vector<int> encoded;
  for (int i = 0; i < p.kappa; ++i) {
    for (int v : p.blocks[i]) encoded.push_back(ground.encode(i, v));
  }
  std::sort(encoded.begin(), encoded.end());
  return encoded;
}

inline Partition decode_p2(const std::vector<int>& S, int n_y, int kappa) {
  const GroundSet ground = GroundSet::product(kappa, n_y);
  Partition p;
  p.kappa = kappa;
  p.blocks.assign(kappa, {});
  p.provenance = "p2-solver";
  std::vector<int> owner(n_y, -1);
  for (int e : S) {
    if (e < 0 || e >= ground.size) {
      throw std::invalid_argument("extended element " + std::to_string(e) +
                                  " out of range");
    }
    const auto [i, v] = ground.decode(e);
    if (owner[v] != -1) {
      throw std::invalid_argument("state " + std::to_string(v) +
                                  " selected by more than one subsystem");
    }
    owner[v] = i;
    p.blocks[i].push_back(v);
  }
  for (int v = 0; v < n_y; ++v) {
    if (owner[v] == -1) {
      throw std::invalid_argument("state " + std::to_string(v) +
                                  " is not assigned to any subsystem");
    }
  }
  for (auto& b : p.blocks) std::sort(b.begin(), b.end());
  return p;
}

enum class PartitionSolver { kGreedy, kContinuous };

namespace detail {

// Greedy state-to-subsystem assignment. Repeatedly assigns the (state,
// subsystem) pair of maximum marginal gain; ties prefer the emptiest block,
// then the lowest extended-element index. Used both as the greedy P2 solver
// (which must keep assigning through zero-gain ties to reach a cover) and as
// the completion pass after rounding.
struct P2Assignment {
  std::vector<std::vector<int>> blocks;
  std::vector<double> block_values;
  std::vector<double> gains;
  std::vector<double> objective;
  int negative_marginals = 0;
  std::vector<int> assigned_order;  // states in assignment order
};

inline void p2_assign_greedy(const SetFunction& block_fn, int kappa, int n_y,
                             std::vector<int>& owner, P2Assignment& out) {
  if (out.blocks.empty()) out.blocks.assign(kappa, {});
  if (out.block_values.empty()) {
    out.block_values.assign(kappa, 0.0);
    for (int i = 0; i < kappa; ++i) {
      out.block_values[i] = block_fn(out.blocks[i]);
    }
  }
  const GroundSet ground = GroundSet::product(kappa, n_y);
  int remaining = 0;
  for (int v = 0; v < n_y; ++v) {
    if (owner[v] == -1) ++remaining;
  }
  while (remaining > 0) {
    int best_state = -1, best_block = -1;
    double best_gain = 0.0;
    for (int v = 0; v < n_y; ++v) {
      if (owner[v] != -1) continue;
      for (int i = 0; i < kappa; ++i) {
        const double gain =
            block_fn.marginal(out.blocks[i], v);
        if (gain < 0.0) ++out.negative_marginals;
        bool better = false;
        if (best_state == -1) {
          better = true;
        } else if (gain != best_gain) {
          better = gain > best_gain;
        } else if (out.blocks[i].size() != out.blocks[best_block].size()) {
          better = out.blocks[i].size() < out.blocks[best_block].size();
        } else {
          better = ground.encode(i, v) < ground.encode(best_block, best_state);
        }
        if (better) {
          best_state = v;
          best_block = i;
          best_gain = gain;
        }
      }
    }
    auto& blk = out.blocks[best_block];
    blk.insert(std::lower_bound(blk.begin(), blk.end(), best_state),
               best_state);
    out.block_values[best_block] = block_fn(blk);
    owner[best_state] = best_block;
    out.assigned_order.push_back(best_state);
    out.gains.push_back(best_gain);
    double total = 0.0;
    for (double b : out.block_values) total += b;
    out.objective.push_back(total);
    --remaining;
  }
}

}  // namespace detail

// Solves the partitioning problem over contribution Gramians. The greedy
// solver assigns states directly; the continuous solver runs continuous
// greedy on the extended ground, rounds, and completes any state whose block
// mass rounded to nothing so that the exact-cover constraint always holds.
inline std::pair<Partition, PartitionReport> solve_partition(
    const ContributionGramians& cg, int kappa, const Metric& m,
    const SolverConfig& cfg, PartitionSolver solver) {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  cfg.validate();
  const detail::StopWatch watch;
  const int n_y = cg.n_y();
  const SetFunction block_fn = make_set_function(cg, m);
  const std::uint64_t evals0 = block_fn.evaluations();

  detail::P2Assignment assignment;
  std::vector<int> owner(n_y, -1);
  SolveTrace trace;
  std::uint64_t solver_evals = 0;

  if (solver == PartitionSolver::kGreedy) {
    detail::p2_assign_greedy(block_fn, kappa, n_y, owner, assignment);
    trace.gains = assignment.gains;
    trace.objective = assignment.objective;
    trace.negative_marginals = assignment.negative_marginals;
  } else {
    const SetFunction objective = build_p2_objective(cg, kappa, m);
    const Matroid matroid = build_extended_matroid(n_y, kappa);
    ContinuousGreedyResult cg_result = continuous_greedy(objective, matroid, cfg);
    const std::vector<int> rounded =
        round_point(cg_result.x, matroid, objective, cfg.rounding, cfg.samples,
                    cfg.seed, cfg.threads);
    trace = std::move(cg_result.trace);
    solver_evals = objective.evaluations();

    assignment.blocks.assign(kappa, {});
    const GroundSet ground = GroundSet::product(kappa, n_y);
    for (int e : rounded) {
      const auto [i, v] = ground.decode(e);
      assignment.blocks[i].push_back(v);
      owner[v] = i;
    }
    for (auto& b : assignment.blocks) std::sort(b.begin(), b.end());
    detail::p2_assign_greedy(block_fn, kappa, n_y, owner, assignment);
  }

  Partition partition;
  partition.kappa = kappa;
  partition.blocks = assignment.blocks;
  partition.provenance = "p2-solver";
  validate_partition(partition, n_y);

  PartitionReport report;
  report.block_values.resize(kappa);
  for (int i = 0; i < kappa; ++i) {
    report.block_values[i] = block_fn(partition.blocks[i]);
    report.total += report.block_values[i];
  }
  const double offset = empty_measure(cg.n_x(), m);
  report.total_raw =
      std::isfinite(offset) ? report.total + kappa * offset : report.total;
  if (solver == PartitionSolver::kContinuous) {
    report.completed_states = assignment.assigned_order;
  }
  report.trace = std::move(trace);
  report.trace.evaluations = solver_evals + (block_fn.evaluations() - evals0);
  report.trace.wall_seconds = watch.seconds();
  return {std::move(partition), std::move(report)};
}

inline std::pair<Partition, PartitionReport> solve_partition(
    const LtiSystem& sys, const Horizon& horizon, int kappa, const Metric& m,
    const SolverConfig& cfg, PartitionSolver solver) {
  return solve_partition(contribution_gramians(sys, horizon), kappa, m, cfg,
                         solver);
}

}  // namespace obspart

#endif  // OBSPART_PARTITION_HPP_

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

#ifndef OBSPART_ORACLE_HPP_
#define OBSPART_ORACLE_HPP_

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "obspart/measures.hpp"
#include "obspart/partition.hpp"
#include "obspart/placement.hpp"
#include "obspart/sysmodel.hpp"

namespace obspart {

constexpr double kBruteForceLimit = 1e6;

struct BrutePartitionResult {
  Partition partition;
  double value = 0.0;  // sum of block values, normalized to f(empty) = 0
  std::uint64_t enumerated = 0;
};

// Exhaustive reference for the partition solvers: walks every labeled
// assignment of states to blocks in lexicographic order and keeps the first
// argmax, so ties resolve to the lexicographically smallest assignment.
inline BrutePartitionResult brute_partition(const ContributionGramians& cg,
                                            int kappa, const Metric& m) {
  const int n_y = cg.n_y();
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  double count = 1.0;
  for (int v = 0; v < n_y; ++v) {
    count *= kappa;
    if (count > kBruteForceLimit) {
      throw std::invalid_argument(
          "brute_partition would enumerate kappa^n_y > 1e6 assignments");
    }
  }

  SetFunction block_fn = make_set_function(cg, m);
  std::vector<int> assignment(n_y, 0);
  std::vector<int> best_assignment;
  double best_value = -std::numeric_limits<double>::infinity();
  std::uint64_t enumerated = 0;
  std::vector<std::vector<int>> blocks(kappa);

  while (true) {
    for (auto& b : blocks) b.clear();
    for (int v = 0; v < n_y; ++v) blocks[assignment[v]].push_back(v);
    double value = 0.0;
    for (const auto& b : blocks) value += block_fn(b);
    ++enumerated;
    if (value > best_value) {
      best_value = value;
      best_assignment = assignment;
    }
    // Odometer increment on the last state keeps the scan lexicographic.
    int pos = n_y - 1;
    while (pos >= 0 && assignment[pos] == kappa - 1) {
      assignment[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++assignment[pos];
  }

  BrutePartitionResult result;
  result.partition.kappa = kappa;
  result.partition.blocks.assign(kappa, {});
  for (int v = 0; v < n_y; ++v) {
    result.partition.blocks[best_assignment[v]].push_back(v);
  }
  result.partition.provenance = "brute";
  result.value = best_value;
  result.enumerated = enumerated;
  return result;
}

struct BrutePlacementResult {
  SensorConfig config;
  std::uint64_t enumerated = 0;
};

namespace detail {

// Number of subsets of size at most max_size from n items, saturating well
// above the brute-force limit so the guard can run before any allocation.
inline double subset_count_up_to(int n, int max_size) {
  double total = 0.0;
  double binom = 1.0;  // C(n, 0)
  for (int size = 0; size <= std::min(max_size, n); ++size) {
    total += binom;
    if (total > 1e18) return total;
    binom = binom * (n - size) / (size + 1);
  }
  return total;
}

inline std::vector<std::vector<int>> subsets_up_to(
    const std::vector<int>& items, int max_size) {
  std::vector<std::vector<int>> out;
  const int n = static_cast<int>(items.size());
  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  for (int size = 0; size <= std::min(max_size, n); ++size) {
    std::vector<int> pick(size);
    for (int i = 0; i < size; ++i) pick[i] = i;
    while (true) {
      std::vector<int> subset(size);
      for (int i = 0; i < size; ++i) subset[i] = sorted[pick[i]];
      out.push_back(std::move(subset));
      int i = size - 1;
      while (i >= 0 && pick[i] == n - size + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return out;
}

}  // namespace detail

// Exhaustive reference for solve_placement: enumerates every selection that
// respects the per-block budgets and keeps the argmax, breaking exact ties
// toward the lexicographically smallest sorted selection.
inline BrutePlacementResult brute_placement(const ContributionGramians& cg,
                                            const Partition& p,
                                            const std::vector<int>& budgets,
                                            ObjectiveMode mode,
                                            const Metric& m) {
  const int n_y = cg.n_y();
  validate_partition(p, n_y);
  if (static_cast<int>(budgets.size()) != p.kappa) {
    throw std::invalid_argument("expected one budget per block");
  }
  // Validate budgets and bound the enumeration arithmetically before any
  // subset list is materialized.
  double count = 1.0;
  for (int i = 0; i < p.kappa; ++i) {
    const int block_size = static_cast<int>(p.blocks[i].size());
    if (budgets[i] < 0 || budgets[i] > block_size) {
      throw std::invalid_argument(
          "budget " + std::to_string(budgets[i]) + " for block " +
          std::to_string(i) + " outside [0, " + std::to_string(block_size) +
          "]");
    }
    count *= detail::subset_count_up_to(block_size, budgets[i]);
    if (count > kBruteForceLimit) {
      throw std::invalid_argument(
          "brute_placement would enumerate more than 1e6 selections");
    }
  }
  std::vector<std::vector<std::vector<int>>> choices(p.kappa);
  for (int i = 0; i < p.kappa; ++i) {
    choices[i] = detail::subsets_up_to(p.blocks[i], budgets[i]);
  }

  const SetFunction objective = detail::placement_objective(cg, p, mode, m);
  std::vector<std::size_t> pick(p.kappa, 0);
  std::vector<int> best;
  double best_value = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::uint64_t enumerated = 0;

  while (true) {
    std::vector<int> selection;
    for (int i = 0; i < p.kappa; ++i) {
      const auto& subset = choices[i][pick[i]];
      selection.insert(selection.end(), subset.begin(), subset.end());
    }
    std::sort(selection.begin(), selection.end());
    const double value = objective(selection);
    ++enumerated;
    if (!have_best || value > best_value ||
        (value == best_value && selection < best)) {
      have_best = true;
      best_value = value;
      best = std::move(selection);
    }
    int i = p.kappa - 1;
    while (i >= 0 && pick[i] + 1 == choices[i].size()) {
      pick[i] = 0;
      --i;
    }
    if (i < 0) break;
    ++pick[i];
  }

  BrutePlacementResult result;
  result.config.selected = std::move(best);
  result.config.budgets = budgets;
  result.config.mode = mode;
  result.config.value = best_value;
  const double offset = empty_measure(cg.n_x(), m);
  const int offset_count = (mode == ObjectiveMode::kGlobal) ? 1 : p.kappa;
  result.config.value_raw = std::isfinite(offset)
                                ? best_value + offset_count * offset
                                : best_value;
  result.enumerated = enumerated;
  return result;
}

struct Violation {
  std::vector<int> a;
  std::vector<int> b;   // superset side, a subset of b
  int element = -1;     // added element for submodularity; -1 for monotonicity
  std::string kind;     // "submodularity" or "monotonicity"
  double shortfall = 0.0;
};

struct SubmodularityReport {
  bool submodular = true;
  bool monotone = true;
  std::uint64_t violation_count = 0;
  std::vector<Violation> witnesses;  // smallest by (a, b, element), capped
};

constexpr std::size_t kMaxWitnesses = 64;

namespace detail {

inline std::vector<int> mask_to_subset(unsigned mask) {
  std::vector<int> subset;
  for (int v = 0; mask != 0; ++v, mask >>= 1) {
    if (mask & 1u) subset.push_back(v);
  }
  return subset;
}

inline bool violation_less(const Violation& lhs, const Violation& rhs) {
  return std::tie(lhs.a, lhs.b, lhs.element) <
         std::tie(rhs.a, rhs.b, rhs.element);
}

inline void keep_smallest(std::vector<Violation>& witnesses, Violation v) {
  witnesses.push_back(std::move(v));
  if (witnesses.size() >= 2 * kMaxWitnesses) {
    std::sort(witnesses.begin(), witnesses.end(), violation_less);
    witnesses.resize(kMaxWitnesses);
  }
}

}  // namespace detail

// Exhaustive diminishing-returns and monotonicity check over a ground set of
// at most 12 elements. Every (A, B, s) with A subset of B and s outside B is
// tested against f(A + s) - f(A) >= f(B + s) - f(B), and every nested pair
// against f(A) <= f(B), both with slack 1e-9. Only the kMaxWitnesses smallest
// witnesses are materialized; violation_count is exact.
inline SubmodularityReport check_submodular_monotone(const SetFunction& f,
                                                     int n) {
  if (n < 0) throw std::invalid_argument("ground size must be >= 0");
  if (n > 12) {
    throw std::invalid_argument("ground size " + std::to_string(n) +
                                " exceeds the exhaustive-check limit of 12");
  }
  constexpr double kSlack = 1e-9;
  const unsigned total = 1u << n;
  std::vector<double> value(total);
  for (unsigned mask = 0; mask < total; ++mask) {
    value[mask] = f(detail::mask_to_subset(mask));
  }

  SubmodularityReport report;
  for (unsigned b = 0; b < total; ++b) {
    // Proper subsets of b via the standard submask walk, plus the empty set.
    for (unsigned a = (b - 1) & b;; a = (a - 1) & b) {
      if (a == b) break;  // only possible at b == 0
      if (value[b] < value[a] - kSlack) {
        ++report.violation_count;
        report.monotone = false;
        detail::keep_smallest(
            report.witnesses,
            Violation{detail::mask_to_subset(a), detail::mask_to_subset(b), -1,
                      "monotonicity", value[a] - value[b]});
      }
      for (int s = 0; s < n; ++s) {
        const unsigned bit = 1u << s;
        if (b & bit) continue;
        const double gain_a = value[a | bit] - value[a];
        const double gain_b = value[b | bit] - value[b];
        if (gain_a < gain_b - kSlack) {
          ++report.violation_count;
          report.submodular = false;
          detail::keep_smallest(
              report.witnesses,
              Violation{detail::mask_to_subset(a), detail::mask_to_subset(b),
                        s, "submodularity", gain_b - gain_a});
        }
      }
      if (a == 0) break;
    }
  }
  std::sort(report.witnesses.begin(), report.witnesses.end(),
            detail::violation_less);
  if (report.witnesses.size() > kMaxWitnesses) {
    report.witnesses.resize(kMaxWitnesses);
  }
  return report;
}

}  // namespace obspart

#endif  // OBSPART_ORACLE_HPP_

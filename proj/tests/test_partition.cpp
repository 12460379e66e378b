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

#include "obspart/partition.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "obspart/oracle.hpp"

namespace {

using obspart::ContributionGramians;
using obspart::Metric;
using obspart::Partition;
using obspart::PartitionSolver;
using obspart::SetFunction;
using obspart::SolverConfig;

ContributionGramians gramians_for(const obspart::LtiSystem& sys, int N = 15) {
  return obspart::contribution_gramians(sys, N);
}

TEST(Partition, ValidatePartitionCatchesBadCovers) {
  Partition p;
  p.kappa = 2;
  p.blocks = {{0, 1}, {2}};
  EXPECT_NO_THROW(obspart::validate_partition(p, 3));
  // Missing state.
  EXPECT_THROW(obspart::validate_partition(p, 4), std::invalid_argument);
  // Duplicate state.
  p.blocks = {{0, 1}, {1, 2}};
  EXPECT_THROW(obspart::validate_partition(p, 3), std::invalid_argument);
  // Out-of-range state.
  p.blocks = {{0, 3}, {1, 2}};
  EXPECT_THROW(obspart::validate_partition(p, 3), std::invalid_argument);
  // Block count mismatch.
  p.kappa = 3;
  p.blocks = {{0, 1}, {2}};
  EXPECT_THROW(obspart::validate_partition(p, 3), std::invalid_argument);
}

TEST(Partition, ExtendedObjectiveSumsBlockProjections) {
  const obspart::LtiSystem sys = obtest::random_stable_system(4, 5, 0.8, 3);
  const ContributionGramians cg = gramians_for(sys);
  const Metric m = Metric::logdet(1e-10);
  const int kappa = 3;
  const SetFunction block_fn = obspart::make_set_function(cg, m);
  const SetFunction objective = obspart::build_p2_objective(cg, kappa, m);
  const obspart::GroundSet ground = obspart::GroundSet::product(kappa, 5);

  EXPECT_EQ(objective.ground_size(), 15);
  EXPECT_DOUBLE_EQ(objective({}), 0.0);

  // Mixed assignment: block 0 gets {0, 3}, block 1 gets {1}, block 2 {2, 4}.
  const std::vector<int> S = {
      ground.encode(0, 0), ground.encode(0, 3), ground.encode(1, 1),
      ground.encode(2, 2), ground.encode(2, 4)};
  const double expected =
      block_fn({0, 3}) + block_fn({1}) + block_fn({2, 4});
  EXPECT_NEAR(objective(S), expected, 1e-12);
}

TEST(Partition, EncodeDecodeRoundTripAllAssignments) {
  const int n_y = 5, kappa = 3;
  std::vector<int> owner(n_y, 0);
  int count = 0;
  while (true) {
    Partition p;
    p.kappa = kappa;
    p.blocks.assign(kappa, {});
    for (int v = 0; v < n_y; ++v) p.blocks[owner[v]].push_back(v);
    const std::vector<int> enc = obspart::encode_p1(p);
    EXPECT_EQ(static_cast<int>(enc.size()), n_y);
    const Partition back = obspart::decode_p2(enc, n_y, kappa);
    EXPECT_EQ(back.blocks, p.blocks);
    ++count;

    int pos = n_y - 1;
    while (pos >= 0 && owner[pos] == kappa - 1) owner[pos--] = 0;
    if (pos < 0) break;
    ++owner[pos];
  }
  EXPECT_EQ(count, 243);  // 3^5 assignments
}

TEST(Partition, DecodeRejectsNonCovers) {
  const obspart::GroundSet g = obspart::GroundSet::product(2, 3);
  // State 2 unassigned.
  EXPECT_THROW(obspart::decode_p2({g.encode(0, 0), g.encode(1, 1)}, 3, 2),
               std::invalid_argument);
  // State 0 claimed twice.
  EXPECT_THROW(obspart::decode_p2({g.encode(0, 0), g.encode(1, 0),
                                   g.encode(0, 1), g.encode(0, 2)},
                                  3, 2),
               std::invalid_argument);
  // Element outside the extended ground.
  EXPECT_THROW(obspart::decode_p2({6}, 3, 2), std::invalid_argument);
}

TEST(Partition, GreedyBalancesIdenticalStates) {
  // A = 0 makes every contribution e_v e_v^T. Under the trace measure every
  // marginal is exactly 1.0, so the tie rules alone decide: emptiest block
  // first, then lowest extended index. States then alternate between the
  // blocks. (logdet would leave sub-ulp noise between mathematically equal
  // marginals, which defeats the exact-tie comparison on purpose.)
  obspart::LtiSystem sys;
  sys.A = Eigen::MatrixXd::Zero(6, 6);
  sys.C = Eigen::MatrixXd::Identity(6, 6);
  for (int v = 0; v < 6; ++v) sys.state_labels.push_back("s");
  const auto [p, report] = obspart::solve_partition(
      gramians_for(sys), 2, Metric::trace(), SolverConfig{},
      PartitionSolver::kGreedy);
  EXPECT_EQ(p.blocks[0], (std::vector<int>{0, 2, 4}));
  EXPECT_EQ(p.blocks[1], (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(p.provenance, "p2-solver");
  ASSERT_EQ(report.block_values.size(), 2u);
  EXPECT_NEAR(report.block_values[0], report.block_values[1], 1e-9);
}

TEST(Partition, ReportTotalsAndOffsets) {
  const obspart::LtiSystem sys = obtest::random_stable_system(4, 4, 0.8, 8);
  const ContributionGramians cg = gramians_for(sys);
  const Metric m = Metric::logdet(1e-10);
  const auto [p, report] = obspart::solve_partition(
      cg, 2, m, SolverConfig{}, PartitionSolver::kGreedy);

  const SetFunction block_fn = obspart::make_set_function(cg, m);
  double total = 0.0;
  for (int i = 0; i < 2; ++i) total += block_fn(p.blocks[i]);
  EXPECT_NEAR(report.total, total, 1e-12);
  EXPECT_NEAR(report.total_raw,
              total + 2 * obspart::empty_measure(4, m), 1e-9);
  EXPECT_GT(report.trace.evaluations, 0u);

  // Trace has no offset: raw and shifted totals agree.
  const auto [pt, rt] = obspart::solve_partition(
      cg, 2, Metric::trace(), SolverConfig{}, PartitionSolver::kGreedy);
  (void)pt;
  EXPECT_DOUBLE_EQ(rt.total, rt.total_raw);
}

TEST(Partition, GreedyWithinBruteForceBounds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const obspart::LtiSystem sys =
        obtest::random_stable_system(4, 5, 0.85, 200 + seed);
    const ContributionGramians cg = gramians_for(sys);
    const Metric m = Metric::logdet(1e-10);
    const auto [p, report] = obspart::solve_partition(
        cg, 2, m, SolverConfig{}, PartitionSolver::kGreedy);
    const obspart::BrutePartitionResult best =
        obspart::brute_partition(cg, 2, m);
    EXPECT_LE(report.total, best.value + 1e-9);
    EXPECT_GE(report.total, 0.5 * best.value - 1e-9);
  }
}

TEST(Partition, ContinuousSolverProducesValidDeterministicCover) {
  const obspart::LtiSystem sys = obtest::random_stable_system(4, 5, 0.85, 17);
  const ContributionGramians cg = gramians_for(sys);
  SolverConfig cfg;
  cfg.steps = 6;
  cfg.samples = 40;
  cfg.seed = 4;
  const auto [p, report] = obspart::solve_partition(
      cg, 2, Metric::logdet(1e-10), cfg, PartitionSolver::kContinuous);
  EXPECT_NO_THROW(obspart::validate_partition(p, 5));
  EXPECT_EQ(report.trace.objective.size(), 6u);

  const auto [p2, report2] = obspart::solve_partition(
      cg, 2, Metric::logdet(1e-10), cfg, PartitionSolver::kContinuous);
  EXPECT_EQ(p.blocks, p2.blocks);
  EXPECT_EQ(report.block_values, report2.block_values);
  EXPECT_EQ(report.completed_states, report2.completed_states);
}

TEST(Partition, CompletionAssignsLeftoverStates) {
  // Drive the completion pass directly with a partial assignment, as if
  // rounding had dropped states 1 and 3.
  const obspart::LtiSystem sys = obtest::random_stable_system(4, 4, 0.8, 23);
  const ContributionGramians cg = gramians_for(sys);
  const SetFunction block_fn =
      obspart::make_set_function(cg, Metric::logdet(1e-10));

  obspart::detail::P2Assignment assignment;
  assignment.blocks = {{0}, {2}};
  std::vector<int> owner = {0, -1, 1, -1};
  obspart::detail::p2_assign_greedy(block_fn, 2, 4, owner, assignment);

  EXPECT_EQ(assignment.assigned_order.size(), 2u);
  for (int v : assignment.assigned_order) {
    EXPECT_TRUE(v == 1 || v == 3);
  }
  Partition p;
  p.kappa = 2;
  p.blocks = assignment.blocks;
  EXPECT_NO_THROW(obspart::validate_partition(p, 4));
  // Block values were refreshed to match the final blocks.
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(assignment.block_values[i], block_fn(p.blocks[i]), 1e-12);
  }
}

TEST(Partition, SingleBlockCollectsEverything) {
  const obspart::LtiSystem sys = obtest::random_stable_system(3, 4, 0.7, 31);
  const ContributionGramians cg = gramians_for(sys);
  const auto [p, report] = obspart::solve_partition(
      cg, 1, Metric::trace(), SolverConfig{}, PartitionSolver::kGreedy);
  EXPECT_EQ(p.blocks[0], (std::vector<int>{0, 1, 2, 3}));
  const SetFunction f = obspart::make_set_function(cg, Metric::trace());
  EXPECT_NEAR(report.total, f({0, 1, 2, 3}), 1e-12);
}

TEST(Partition, RejectsBadArguments) {
  const obspart::LtiSystem sys = obtest::random_stable_system(3, 3, 0.7, 2);
  const ContributionGramians cg = gramians_for(sys);
  EXPECT_THROW(obspart::solve_partition(cg, 0, Metric::trace(), SolverConfig{},
                                        PartitionSolver::kGreedy),
               std::invalid_argument);
  SolverConfig bad;
  bad.steps = 0;
  EXPECT_THROW(obspart::solve_partition(cg, 2, Metric::trace(), bad,
                                        PartitionSolver::kContinuous),
               std::invalid_argument);
}

TEST(Partition, HorizonOverloadMatchesGramianOverload) {
  const obspart::LtiSystem sys = obtest::random_stable_system(3, 4, 0.75, 41);
  const auto [p1, r1] = obspart::solve_partition(
      sys, obspart::Horizon::finite(15), 2, Metric::logdet(1e-10),
      SolverConfig{}, PartitionSolver::kGreedy);
  const auto [p2, r2] = obspart::solve_partition(
      obspart::contribution_gramians(sys, 15), 2, Metric::logdet(1e-10),
      SolverConfig{}, PartitionSolver::kGreedy);
  EXPECT_EQ(p1.blocks, p2.blocks);
  EXPECT_NEAR(r1.total, r2.total, 1e-12);
}

}  // namespace

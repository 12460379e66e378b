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

#ifndef OBSPART_MATROIDS_HPP_
#define OBSPART_MATROIDS_HPP_

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace obspart {

// Ground set for a matroid. A plain ground indexes measurable states
// directly. The extended ground X used by the partitioning problem carries
// kappa copies of each state: element (i, v) means "state v assigned to
// subsystem i" and is encoded as the flat index i * n_y + v.
struct GroundSet {
  int size = 0;
  bool extended = false;
  int kappa = 0;
  int n_y = 0;

  static GroundSet plain(int n) {
    if (n < 0) throw std::invalid_argument("ground size must be >= 0");
    return GroundSet{n, false, 0, n};
  }
  static GroundSet product(int kappa, int n_y) {
    if (kappa < 1 || n_y < 1) {
      throw std::invalid_argument("extended ground requires kappa, n_y >= 1");
    }
    return GroundSet{kappa * n_y, true, kappa, n_y};
  }

  int encode(int subsystem, int state) const {
    return subsystem * n_y + state;
  }
  std::pair<int, int> decode(int element) const {
    return {element / n_y, element % n_y};
  }
};

// Minimal independence oracle; concrete matroids below are all partition
// matroids but solvers that only need feasibility queries can accept this.
class IndependenceOracle {
 public:
  virtual ~IndependenceOracle() = default;
  virtual bool is_independent(const std::vector<int>& subset) const = 0;
};

// Partition matroid: disjoint blocks covering the ground, one capacity per
// block. A uniform matroid is the single-block case.
class Matroid : public IndependenceOracle {
 public:
  Matroid(GroundSet ground, std::vector<std::vector<int>> blocks,
          std::vector<int> capacities)
      : ground_(ground),
        blocks_(std::move(blocks)),
        capacities_(std::move(capacities)) {
    if (blocks_.size() != capacities_.size()) {
      throw std::invalid_argument("one capacity per block required");
    }
    block_of_.assign(ground_.size, -1);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (capacities_[b] < 0) {
        throw std::invalid_argument("capacities must be >= 0");
      }
      for (int e : blocks_[b]) {
        if (e < 0 || e >= ground_.size) {
          throw std::invalid_argument("block element " + std::to_string(e) +
                                      " out of range");
        }
        if (block_of_[e] != -1) {
          throw std::invalid_argument("blocks must be disjoint: element " +
                                      std::to_string(e) + " repeated");
        }
        block_of_[e] = static_cast<int>(b);
      }
    }
    for (int e = 0; e < ground_.size; ++e) {
      if (block_of_[e] == -1) {
        throw std::invalid_argument("blocks must cover the ground: element " +
                                    std::to_string(e) + " missing");
      }
    }
  }

  static Matroid uniform(int n, int capacity) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    return Matroid(GroundSet::plain(n), {std::move(all)}, {capacity});
  }

  const GroundSet& ground() const { return ground_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& capacities() const { return capacities_; }
  int block_of(int element) const { return block_of_[element]; }
  int block_count() const { return static_cast<int>(blocks_.size()); }

  bool is_independent(const std::vector<int>& subset) const override {
    std::vector<int> used(blocks_.size(), 0);
    std::vector<char> seen(ground_.size, 0);
    for (int e : subset) {
      if (e < 0 || e >= ground_.size) {
        throw std::invalid_argument("subset element " + std::to_string(e) +
                                    " outside the ground set");
      }
      if (seen[e]) continue;
      seen[e] = 1;
      const int b = block_of_[e];
      if (++used[b] > capacities_[b]) return false;
    }
    return true;
  }

  // Per block, takes the capacity_b heaviest strictly positive weights, ties
  // resolved toward the lowest element index. This is the exact linear
  // maximizer over the matroid polytope for nonnegative weights.
  std::vector<int> max_weight_independent(const std::vector<double>& weights) const {
    if (static_cast<int>(weights.size()) != ground_.size) {
      throw std::invalid_argument("weights length must equal the ground size");
    }
    std::vector<int> selected;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      std::vector<int> candidates;
      for (int e : blocks_[b]) {
        if (weights[e] > 0.0) candidates.push_back(e);
      }
      std::sort(candidates.begin(), candidates.end(), [&](int lhs, int rhs) {
        if (weights[lhs] != weights[rhs]) return weights[lhs] > weights[rhs];
        return lhs < rhs;
      });
      const int take =
          std::min<int>(capacities_[b], static_cast<int>(candidates.size()));
      selected.insert(selected.end(), candidates.begin(),
                      candidates.begin() + take);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
  }

 private:
  GroundSet ground_;
  std::vector<std::vector<int>> blocks_;
  std::vector<int> capacities_;
  std::vector<int> block_of_;
};

// Matroid for the partitioning problem: ground X = C x V with one block per
// state holding its kappa subsystem copies, every capacity 1, so independent
// sets assign each state to at most one subsystem.
inline Matroid build_extended_matroid(int n_y, int kappa) {
  const GroundSet ground = GroundSet::product(kappa, n_y);
  std::vector<std::vector<int>> blocks(n_y);
  for (int v = 0; v < n_y; ++v) {
    for (int i = 0; i < kappa; ++i) blocks[v].push_back(ground.encode(i, v));
  }
  return Matroid(ground, std::move(blocks), std::vector<int>(n_y, 1));
}

}  // namespace obspart

#endif  // OBSPART_MATROIDS_HPP_

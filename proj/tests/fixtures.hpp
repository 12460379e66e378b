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

#ifndef OBSPART_TESTS_FIXTURES_HPP_
#define OBSPART_TESTS_FIXTURES_HPP_

#include <random>
#include <vector>

#include "obspart/measures.hpp"
#include "obspart/partition.hpp"
#include "obspart/sysmodel.hpp"

namespace obtest {

inline Eigen::MatrixXd random_matrix(int rows, int cols,
                                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

// Random system rescaled to the requested spectral radius; C defaults to
// one random row per measured state.
inline obspart::LtiSystem random_stable_system(int n_x, int n_y, double rho,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd A = random_matrix(n_x, n_x, rng);
  double radius = obspart::spectral_radius(A);
  while (radius < 1e-6) {
    A = random_matrix(n_x, n_x, rng);
    radius = obspart::spectral_radius(A);
  }
  obspart::LtiSystem sys;
  sys.name = "random";
  sys.A = A * (rho / radius);
  sys.C = random_matrix(n_y, n_x, rng);
  for (int v = 0; v < n_y; ++v) {
    sys.state_labels.push_back("x" + std::to_string(v));
  }
  return sys;
}

// Same dynamics, but every state directly measured (C = I).
inline obspart::LtiSystem identity_measured_system(int n_x, double rho,
                                                   std::uint64_t seed) {
  obspart::LtiSystem sys = random_stable_system(n_x, n_x, rho, seed);
  sys.C = Eigen::MatrixXd::Identity(n_x, n_x);
  return sys;
}

// Block-diagonal dynamics: dense coupling inside each group, none across.
// C = I and each group forms a clique in the adjacency.
inline obspart::LtiSystem coupled_groups_system(
    const std::vector<int>& group_sizes, double diag, double coupling) {
  int n = 0;
  for (int s : group_sizes) n += s;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  int base = 0;
  for (int s : group_sizes) {
    for (int r = 0; r < s; ++r) {
      for (int c = 0; c < s; ++c) {
        A(base + r, base + c) = (r == c) ? diag : coupling;
        if (r != c) adj(base + r, base + c) = 1;
      }
    }
    base += s;
  }
  obspart::LtiSystem sys;
  sys.name = "coupled-groups";
  sys.A = A;
  sys.C = Eigen::MatrixXd::Identity(n, n);
  for (int v = 0; v < n; ++v) {
    sys.state_labels.push_back("x" + std::to_string(v));
  }
  sys.adjacency = adj;
  return sys;
}

inline obspart::Partition random_partition(int n_y, int kappa,
                                           std::mt19937_64& rng) {
  obspart::Partition p;
  p.kappa = kappa;
  p.blocks.assign(kappa, {});
  p.provenance = "manual";
  std::uniform_int_distribution<int> pick(0, kappa - 1);
  for (int v = 0; v < n_y; ++v) p.blocks[pick(rng)].push_back(v);
  return p;
}

inline obspart::SetFunction modular_fn(std::vector<double> weights) {
  const int n = static_cast<int>(weights.size());
  return obspart::SetFunction(n, [weights](const std::vector<int>& s) {
    double total = 0.0;
    for (int v : s) total += weights[v];
    return total;
  });
}

// Coverage of a single shared item: 0 on the empty set, 1 otherwise. Its
// multilinear extension is F(x) = 1 - prod_s (1 - x_s).
inline obspart::SetFunction coverage_fn(int n) {
  return obspart::SetFunction(n, [](const std::vector<int>& s) {
    return s.empty() ? 0.0 : 1.0;
  });
}

}  // namespace obtest

#endif  // OBSPART_TESTS_FIXTURES_HPP_

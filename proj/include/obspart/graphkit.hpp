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

#ifndef OBSPART_GRAPHKIT_HPP_
#define OBSPART_GRAPHKIT_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "obspart/common.hpp"
#include "obspart/partition.hpp"

namespace obspart {

struct InteractionGraph {
  int n = 0;
  Eigen::MatrixXi adj;       // symmetric 0/1, zero diagonal
  std::vector<int> degrees;  // row sums
  int edges = 0;             // sum of degrees / 2
};

inline InteractionGraph graph_from_adjacency(const Eigen::MatrixXi& adj) {
  if (adj.rows() != adj.cols()) {
    throw std::invalid_argument("adjacency must be square");
  }
  InteractionGraph g;
  g.n = static_cast<int>(adj.rows());
  g.adj = adj;
  g.degrees.assign(g.n, 0);
  int degree_sum = 0;
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      const int a = adj(i, j);
      if (a != 0 && a != 1) {
        throw std::invalid_argument("adjacency entries must be 0 or 1");
      }
      if (i == j && a != 0) {
        throw std::invalid_argument("adjacency must have a zero diagonal");
      }
      if (adj(i, j) != adj(j, i)) {
        throw std::invalid_argument("adjacency must be symmetric");
      }
      g.degrees[i] += a;
    }
    degree_sum += g.degrees[i];
  }
  g.edges = degree_sum / 2;
  return g;
}

// Two states are adjacent iff they co-participate in at least one reaction.
inline InteractionGraph adjacency_from_reactions(
    const std::vector<std::vector<int>>& reactions, int n) {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (const auto& participants : reactions) {
    for (int a : participants) {
      if (a < 0 || a >= n) {
        throw std::invalid_argument("reaction participant " +
                                    std::to_string(a) + " out of range [0, " +
                                    std::to_string(n) + ")");
      }
      for (int b : participants) {
        if (a != b) adj(a, b) = 1;
      }
    }
  }
  return graph_from_adjacency(adj);
}

// Newman modularity Q = (1/2m) sum_ij [A_ij - a_i a_j / 2m] delta(c_i, c_j),
// accumulated per block as (internal weight)/2m - (degree share)^2 so that a
// single-block partition scores exactly 0.
inline double modularity(const InteractionGraph& g, const Partition& p) {
  validate_partition(p, g.n);
  if (g.edges == 0) {
    throw std::invalid_argument("modularity is undefined on an empty graph");
  }
  const double two_m = 2.0 * g.edges;
  double q = 0.0;
  for (const auto& block : p.blocks) {
    long long internal = 0;  // ordered pairs, so internal edges count twice
    long long degree_sum = 0;
    for (int i : block) {
      degree_sum += g.degrees[i];
      for (int j : block) internal += g.adj(i, j);
    }
    const double share = degree_sum / two_m;
    q += internal / two_m - share * share;
  }
  return q;
}

namespace detail {

struct KMeansResult {
  std::vector<int> assignment;
  double inertia = 0.0;
};

// Lloyd iterations from a k-means++ seeding. Ties in both seeding and
// assignment resolve to the lowest index so results depend only on the seed.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k,
                           std::uint64_t seed, int restarts = 20,
                           int max_iters = 100) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || n < 1) throw std::invalid_argument("kmeans needs k >= 1, n >= 1");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < restarts; ++restart) {
    std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(restart));
    // Seeding: first centroid uniform, then proportional to squared distance.
    std::vector<int> centers;
    centers.push_back(
        std::min<int>(n - 1, static_cast<int>(uniform01(rng) * n)));
    std::vector<double> dist2(n);
    while (static_cast<int>(centers.size()) < k) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int c : centers) {
          nearest = std::min(nearest, (points.row(i) - points.row(c)).squaredNorm());
        }
        dist2[i] = nearest;
        total += nearest;
      }
      int next = -1;
      if (total <= 0.0) {
        for (int i = 0; i < n && next == -1; ++i) {
          if (std::find(centers.begin(), centers.end(), i) == centers.end()) {
            next = i;
          }
        }
        if (next == -1) next = 0;  // fewer distinct points than k
      } else {
        const double u = uniform01(rng) * total;
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
          cum += dist2[i];
          if (u < cum) {
            next = i;
            break;
          }
        }
        if (next == -1) next = n - 1;
      }
      centers.push_back(next);
    }

    Eigen::MatrixXd centroids(k, points.cols());
    for (int c = 0; c < k; ++c) centroids.row(c) = points.row(centers[c]);

    std::vector<int> assignment(n, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int nearest = 0;
        double nearest_d = (points.row(i) - centroids.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          const double d = (points.row(i) - centroids.row(c)).squaredNorm();
          if (d < nearest_d) {
            nearest_d = d;
            nearest = c;
          }
        }
        if (assignment[i] != nearest) {
          assignment[i] = nearest;
          changed = true;
        }
      }
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      std::vector<int> counts(k, 0);
      for (int i = 0; i < n; ++i) {
        sums.row(assignment[i]) += points.row(i);
        ++counts[assignment[i]];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) centroids.row(c) = sums.row(c) / counts[c];
      }
      if (!changed) break;
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      inertia += (points.row(i) - centroids.row(assignment[i])).squaredNorm();
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.assignment = assignment;
    }
  }
  return best;
}

}  // namespace detail

// Spectral clustering baseline. Isolated nodes become singleton blocks (the
// normalized Laplacian is undefined at degree zero); the remaining nodes are
// embedded in the eigenvectors of the kappa' smallest eigenvalues of
// D^{-1/2} (D - A) D^{-1/2} (kappa' = kappa minus the singleton count),
// row-normalized, and clustered by seeded k-means++. Null eigenvectors are
// kept in the embedding: they carry the connected-component indicators, and
// dropping them loses exactly the structure the baseline must recover when
// the graph is disconnected.
inline Partition spectral_partition(const InteractionGraph& g, int kappa,
                                    std::uint64_t seed) {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  std::vector<int> isolated, active;
  for (int i = 0; i < g.n; ++i) {
    (g.degrees[i] == 0 ? isolated : active).push_back(i);
  }
  const int required =
      static_cast<int>(isolated.size()) + (active.empty() ? 0 : 1);
  if (kappa < required) {
    throw std::invalid_argument(
        "kappa = " + std::to_string(kappa) + " is smaller than the " +
        std::to_string(isolated.size()) +
        " isolated nodes + 1 required for the remainder");
  }

  Partition p;
  p.kappa = kappa;
  p.provenance = "spectral";
  const int kappa_rest = kappa - static_cast<int>(isolated.size());

  if (!active.empty()) {
    const int n = static_cast<int>(active.size());
    Eigen::MatrixXd norm_lap(n, n);
    for (int r = 0; r < n; ++r) {
      const double dr = g.degrees[active[r]];
      for (int c = 0; c < n; ++c) {
        const double dc = g.degrees[active[c]];
        const double a = g.adj(active[r], active[c]);
        norm_lap(r, c) = ((r == c ? dr : 0.0) - a) / std::sqrt(dr * dc);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(norm_lap);
    const int dims = std::min(kappa_rest, n);
    Eigen::MatrixXd embedding = es.eigenvectors().leftCols(dims);
    for (int r = 0; r < n; ++r) {
      const double norm = embedding.row(r).norm();
      if (norm > 0.0) embedding.row(r) /= norm;
    }
    const detail::KMeansResult clusters =
        detail::kmeans(embedding, dims, seed);
    std::vector<std::vector<int>> blocks(kappa_rest);
    for (int r = 0; r < n; ++r) {
      blocks[clusters.assignment[r]].push_back(active[r]);
    }
    p.blocks = std::move(blocks);
  } else {
    p.blocks.assign(kappa_rest, {});
  }
  for (int node : isolated) p.blocks.push_back({node});
  validate_partition(p, g.n);
  return p;
}

}  // namespace obspart

#endif  // OBSPART_GRAPHKIT_HPP_

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

#ifndef OBSPART_MAXIMIZE_HPP_
#define OBSPART_MAXIMIZE_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "obspart/common.hpp"
#include "obspart/matroids.hpp"
#include "obspart/measures.hpp"

namespace obspart {

enum class Rounding { kRandomized, kPipage };

inline std::string rounding_name(Rounding r) {
  return r == Rounding::kRandomized ? "randomized" : "pipage";
}

struct SolverConfig {
  int steps = 10;     // continuous-greedy iterations T
  int samples = 100;  // Monte Carlo samples per estimate
  std::uint64_t seed = 0;
  Rounding rounding = Rounding::kPipage;
  bool lazy = false;
  int threads = 1;

  void validate() const {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  }
};

struct SolveTrace {
  std::vector<double> objective;  // value after each accepted step
  std::vector<double> gains;      // marginal gain / selected gradient mass
  int negative_marginals = 0;     // sampled or exact negative gains seen
  double wall_seconds = 0.0;
  std::uint64_t evaluations = 0;  // set-function cache misses consumed
};

struct GreedyResult {
  std::vector<int> selected;
  double value = 0.0;
  SolveTrace trace;
};

namespace detail {

class StopWatch {
 public:
  StopWatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void validate_point(const Eigen::VectorXd& x, int ground_size) {
  if (static_cast<int>(x.size()) != ground_size) {
    throw std::invalid_argument("fractional point has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(ground_size));
  }
  for (Eigen::Index s = 0; s < x.size(); ++s) {
    if (x(s) < -1e-9 || x(s) > 1.0 + 1e-9) {
      throw std::invalid_argument("fractional coordinate " +
                                  std::to_string(x(s)) + " outside [0, 1]");
    }
  }
}

inline std::vector<int> sample_set(const Eigen::VectorXd& x,
                                   std::mt19937_64& rng) {
  std::vector<int> subset;
  for (Eigen::Index s = 0; s < x.size(); ++s) {
    if (uniform01(rng) < x(s)) subset.push_back(static_cast<int>(s));
  }
  return subset;
}

}  // namespace detail

// Greedy maximization over a partition matroid. Adds the feasible element of
// maximum marginal gain (ties toward the lowest index) until no feasible
// element improves the value. Lazy mode keeps a priority queue of stale
// upper bounds and re-evaluates only the queue head; for submodular f the
// bounds are valid upper bounds, so the output matches eager mode exactly.
inline GreedyResult greedy(const SetFunction& f, const Matroid& M,
                           bool lazy = false) {
  if (f.ground_size() != M.ground().size) {
    throw std::invalid_argument("set function and matroid ground sizes differ");
  }
  const detail::StopWatch watch;
  const std::uint64_t evals0 = f.evaluations();
  const int n = f.ground_size();

  GreedyResult result;
  std::vector<char> member(n, 0);
  std::vector<int> used(M.block_count(), 0);
  std::vector<int> current;
  double value = f({});
  const double base = value;

  auto feasible = [&](int e) {
    return !member[e] && used[M.block_of(e)] < M.capacities()[M.block_of(e)];
  };

  if (!lazy) {
    while (true) {
      int best = -1;
      double best_gain = 0.0;
      for (int e = 0; e < n; ++e) {
        if (!feasible(e)) continue;
        const double gain = f.marginal(current, e);
        if (gain < 0.0) ++result.trace.negative_marginals;
        if (best == -1 ? gain > 0.0 : gain > best_gain) {
          best = e;
          best_gain = gain;
        }
      }
      if (best == -1) break;
      member[best] = 1;
      ++used[M.block_of(best)];
      current.insert(std::lower_bound(current.begin(), current.end(), best),
                     best);
      value += best_gain;
      result.trace.gains.push_back(best_gain);
      result.trace.objective.push_back(value - base);
    }
  } else {
    struct Entry {
      double bound;
      int element;
      int stamp;  // |S| at which the bound was computed
    };
    auto worse = [](const Entry& a, const Entry& b) {
      if (a.bound != b.bound) return a.bound < b.bound;
      return a.element > b.element;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> queue(worse);
    for (int e = 0; e < n; ++e) {
      const double gain = f.marginal({}, e);
      if (gain < 0.0) ++result.trace.negative_marginals;
      queue.push(Entry{gain, e, 0});
    }
    while (!queue.empty()) {
      const Entry top = queue.top();
      queue.pop();
      if (!feasible(top.element)) continue;
      const int size = static_cast<int>(current.size());
      if (top.stamp == size) {
        if (top.bound <= 0.0) break;
        member[top.element] = 1;
        ++used[M.block_of(top.element)];
        current.insert(
            std::lower_bound(current.begin(), current.end(), top.element),
            top.element);
        value += top.bound;
        result.trace.gains.push_back(top.bound);
        result.trace.objective.push_back(value - base);
      } else {
        const double gain = f.marginal(current, top.element);
        if (gain < 0.0) ++result.trace.negative_marginals;
        queue.push(Entry{gain, top.element, size});
      }
    }
  }

  result.selected = std::move(current);
  result.value = value - base;
  result.trace.wall_seconds = watch.seconds();
  result.trace.evaluations = f.evaluations() - evals0;
  return result;
}

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of the multilinear extension F(x) = E[f(S_x)]: each
// sample i draws its set from a stream derived from (seed, i), so estimates
// are identical for any worker count.
inline SampleStats multilinear_stats(const SetFunction& f,
                                     const Eigen::VectorXd& x, int samples,
                                     std::uint64_t seed, int threads = 1) {
  detail::validate_point(x, f.ground_size());
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  std::vector<double> values(samples);
  parallel_for(samples, threads, [&](int i) {
    std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(i));
    values[i] = f(detail::sample_set(x, rng));
  });
  SampleStats stats;
  for (double v : values) stats.mean += v;
  stats.mean /= samples;
  if (samples > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.std_error = std::sqrt(ss / (samples - 1)) / std::sqrt(double(samples));
  }
  return stats;
}

inline double multilinear_estimate(const SetFunction& f,
                                   const Eigen::VectorXd& x, int samples,
                                   std::uint64_t seed, int threads = 1) {
  return multilinear_stats(f, x, samples, seed, threads).mean;
}

struct GradientStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
};

// Sampled partial derivatives dF/dx_s = E[f(S u {s}) - f(S \ {s})] with one
// common random set per sample reused across every coordinate.
inline GradientStats gradient_stats(const SetFunction& f,
                                    const Eigen::VectorXd& x, int samples,
                                    std::uint64_t seed, int threads = 1) {
  detail::validate_point(x, f.ground_size());
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const int n = f.ground_size();
  Eigen::MatrixXd diffs(samples, n);
  parallel_for(samples, threads, [&](int i) {
    std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(i));
    const std::vector<int> base = detail::sample_set(x, rng);
    std::vector<char> member(n, 0);
    for (int e : base) member[e] = 1;
    const double f_base = f(base);
    for (int s = 0; s < n; ++s) {
      if (member[s]) {
        std::vector<int> without;
        without.reserve(base.size() - 1);
        for (int e : base) {
          if (e != s) without.push_back(e);
        }
        diffs(i, s) = f_base - f(std::move(without));
      } else {
        std::vector<int> with = base;
        with.push_back(s);
        diffs(i, s) = f(std::move(with)) - f_base;
      }
    }
  });
  GradientStats stats;
  stats.mean = diffs.colwise().mean();
  stats.std_error = Eigen::VectorXd::Zero(n);
  if (samples > 1) {
    for (int s = 0; s < n; ++s) {
      const double mu = stats.mean(s);
      double ss = 0.0;
      for (int i = 0; i < samples; ++i) {
        ss += (diffs(i, s) - mu) * (diffs(i, s) - mu);
      }
      stats.std_error(s) =
          std::sqrt(ss / (samples - 1)) / std::sqrt(double(samples));
    }
  }
  return stats;
}

inline Eigen::VectorXd gradient_estimate(const SetFunction& f,
                                         const Eigen::VectorXd& x, int samples,
                                         std::uint64_t seed, int threads = 1) {
  return gradient_stats(f, x, samples, seed, threads).mean;
}

struct ContinuousGreedyResult {
  Eigen::VectorXd x;
  SolveTrace trace;
};

namespace detail {

// Seed-index tags keeping the derived streams of the solver stages disjoint.
inline constexpr std::uint64_t kGradientTag = 0;
inline constexpr std::uint64_t kObjectiveTag = 1u << 20;
inline constexpr std::uint64_t kRoundingTag = 2u << 20;

}  // namespace detail

// Continuous greedy for monotone submodular f over a partition matroid:
// T steps of x <- x + (1/T) * 1_{S*} where S* maximizes the sampled gradient
// over the matroid. Negative sampled partials are truncated to zero before
// selection; coordinates are clipped at 1 against floating drift.
inline ContinuousGreedyResult continuous_greedy(const SetFunction& f,
                                                const Matroid& M,
                                                const SolverConfig& cfg) {
  cfg.validate();
  if (f.ground_size() != M.ground().size) {
    throw std::invalid_argument("set function and matroid ground sizes differ");
  }
  const detail::StopWatch watch;
  const std::uint64_t evals0 = f.evaluations();
  const int n = f.ground_size();
  ContinuousGreedyResult result;
  result.x = Eigen::VectorXd::Zero(n);
  const double step = 1.0 / cfg.steps;

  for (int t = 1; t <= cfg.steps; ++t) {
    Eigen::VectorXd grad = gradient_estimate(
        f, result.x, cfg.samples,
        derive_seed(cfg.seed, detail::kGradientTag + t), cfg.threads);
    std::vector<double> weights(n);
    for (int s = 0; s < n; ++s) {
      if (grad(s) < 0.0) {
        ++result.trace.negative_marginals;
        grad(s) = 0.0;
      }
      weights[s] = grad(s);
    }
    const std::vector<int> chosen = M.max_weight_independent(weights);
    double mass = 0.0;
    for (int e : chosen) {
      result.x(e) = std::min(1.0, result.x(e) + step);
      mass += weights[e];
    }
    result.trace.gains.push_back(mass);
    result.trace.objective.push_back(multilinear_estimate(
        f, result.x, cfg.samples,
        derive_seed(cfg.seed, detail::kObjectiveTag + t), cfg.threads));
  }

  // The update keeps every block sum within capacity by construction; verify
  // against drift before handing the point to rounding.
  const auto& caps = M.capacities();
  for (int b = 0; b < M.block_count(); ++b) {
    double total = 0.0;
    for (int e : M.blocks()[b]) total += result.x(e);
    if (total > caps[b] + 1e-9) {
      throw std::logic_error("continuous greedy produced an infeasible point");
    }
  }
  result.trace.wall_seconds = watch.seconds();
  result.trace.evaluations = f.evaluations() - evals0;
  return result;
}

// Rounds a fractional matroid point to an independent integral set.
//
// randomized: valid only when every capacity is 1. Each block draws at most
// one element with probability equal to its coordinate (a deficit below 1 is
// the probability of selecting none).
//
// pipage: while two fractional coordinates share a block, mass is shifted
// between the two largest of them toward whichever segment endpoint has the
// larger sampled F (both endpoints estimated with a shared seed); leftover
// lone fractional coordinates are resolved the same way against 0/1.
inline std::vector<int> round_point(const Eigen::VectorXd& x, const Matroid& M,
                                    const SetFunction& f, Rounding method,
                                    int samples, std::uint64_t seed,
                                    int threads = 1) {
  detail::validate_point(x, M.ground().size);
  const auto& caps = M.capacities();
  for (int b = 0; b < M.block_count(); ++b) {
    double total = 0.0;
    for (int e : M.blocks()[b]) total += x(e);
    if (total > caps[b] + 1e-9) {
      throw std::invalid_argument("fractional point violates block capacity " +
                                  std::to_string(b));
    }
  }

  std::vector<int> selected;
  if (method == Rounding::kRandomized) {
    for (int c : caps) {
      if (c > 1) {
        throw std::invalid_argument(
            "randomized rounding requires capacity-1 blocks");
      }
    }
    std::mt19937_64 rng =
        make_stream(seed, detail::kRoundingTag);
    for (int b = 0; b < M.block_count(); ++b) {
      const double u = uniform01(rng);
      double cum = 0.0;
      for (int e : M.blocks()[b]) {
        cum += x(e);
        if (u < cum) {
          selected.push_back(e);
          break;
        }
      }
    }
  } else {
    const double tol = 1e-9;
    Eigen::VectorXd y = x.cwiseMax(0.0).cwiseMin(1.0);
    auto fractional = [&](int e) { return y(e) > tol && y(e) < 1.0 - tol; };
    std::uint64_t round_index = 0;
    const int guard = 4 * M.ground().size + 8;
    for (int iter = 0; iter < guard; ++iter) {
      int block = -1, a = -1, c = -1;
      for (int b = 0; b < M.block_count() && block == -1; ++b) {
        std::vector<int> frac;
        for (int e : M.blocks()[b]) {
          if (fractional(e)) frac.push_back(e);
        }
        if (frac.size() >= 2) {
          std::sort(frac.begin(), frac.end(), [&](int lhs, int rhs) {
            if (y(lhs) != y(rhs)) return y(lhs) > y(rhs);
            return lhs < rhs;
          });
          block = b;
          a = frac[0];
          c = frac[1];
        }
      }
      if (block == -1) break;
      const double d1 = std::min(1.0 - y(a), y(c));
      const double d2 = std::min(y(a), 1.0 - y(c));
      Eigen::VectorXd up = y, down = y;
      up(a) += d1;
      up(c) -= d1;
      down(a) -= d2;
      down(c) += d2;
      const std::uint64_t s =
          derive_seed(seed, detail::kRoundingTag + 1 + round_index++);
      const double f_up = multilinear_estimate(f, up, samples, s, threads);
      const double f_down = multilinear_estimate(f, down, samples, s, threads);
      y = (f_up >= f_down) ? up : down;
    }
    // At most one fractional coordinate can remain per block; settle each
    // against its 0/1 endpoints (ties keep the element: f is monotone).
    for (int b = 0; b < M.block_count(); ++b) {
      for (int e : M.blocks()[b]) {
        if (!fractional(e)) continue;
        int ones = 0;
        for (int other : M.blocks()[b]) {
          if (y(other) >= 1.0 - tol) ++ones;
        }
        if (ones + 1 > caps[b]) {
          y(e) = 0.0;
          continue;
        }
        Eigen::VectorXd up = y, down = y;
        up(e) = 1.0;
        down(e) = 0.0;
        const std::uint64_t s =
            derive_seed(seed, detail::kRoundingTag + 1 + round_index++);
        const double f_up = multilinear_estimate(f, up, samples, s, threads);
        const double f_down = multilinear_estimate(f, down, samples, s, threads);
        y = (f_up >= f_down) ? up : down;
      }
    }
    for (int e = 0; e < M.ground().size; ++e) {
      if (y(e) > 0.5) selected.push_back(e);
    }
  }

  std::sort(selected.begin(), selected.end());
  if (!M.is_independent(selected)) {
    throw std::logic_error("rounding produced a dependent set");
  }
  return selected;
}

}  // namespace obspart

#endif  // OBSPART_MAXIMIZE_HPP_

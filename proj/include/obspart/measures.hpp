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

#ifndef OBSPART_MEASURES_HPP_
#define OBSPART_MEASURES_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "obspart/common.hpp"
#include "obspart/sysmodel.hpp"

namespace obspart {

enum class MetricKind { kTrace, kLogDet, kRank };

inline std::string metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kTrace: return "trace";
    case MetricKind::kLogDet: return "logdet";
    case MetricKind::kRank: return "rank";
  }
  return "unknown";
}

// Scalar observability measure of a Gramian. logdet is regularized as
// logdet(W + eps I); with eps = 0 a singular W maps to -inf, which orders
// below every finite value. Rank counts eigenvalues above a relative
// threshold so the cutoff scales with the spectrum.
struct Metric {
  MetricKind kind = MetricKind::kLogDet;
  double epsilon = 1e-10;      // logdet regularization
  double rank_rel_tol = 1e-9;  // relative eigenvalue cutoff for rank

  static Metric trace() { return Metric{MetricKind::kTrace, 0.0, 1e-9}; }
  static Metric logdet(double eps = 1e-10) {
    return Metric{MetricKind::kLogDet, eps, 1e-9};
  }
  static Metric rank(double rel_tol = 1e-9) {
    return Metric{MetricKind::kRank, 0.0, rel_tol};
  }

  void validate() const {
    if (epsilon < 0.0) throw std::invalid_argument("epsilon must be >= 0");
    if (!(rank_rel_tol > 0.0 && rank_rel_tol < 1.0)) {
      throw std::invalid_argument("rank_rel_tol must lie in (0, 1)");
    }
  }
};

namespace detail {

inline void check_symmetric(const Eigen::MatrixXd& W) {
  if (W.rows() != W.cols()) {
    throw std::invalid_argument("measure requires a square matrix");
  }
  const double scale = std::max(1.0, W.norm());
  if ((W - W.transpose()).norm() > 1e-9 * scale) {
    throw std::invalid_argument("measure requires a symmetric matrix");
  }
}

// Eigenvalues of a symmetric PSD matrix, ascending, with small negative
// values (round-off) clamped to zero. Throws if genuinely indefinite.
inline Eigen::VectorXd psd_eigenvalues(const Eigen::MatrixXd& W) {
  const Eigen::MatrixXd S = (W + W.transpose()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  Eigen::VectorXd lam = es.eigenvalues();
  const double lam_max = lam.size() ? lam.maxCoeff() : 0.0;
  const double neg_tol = 1e-9 * std::max(lam_max, 1e-12) + 1e-12;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -neg_tol) {
      throw std::invalid_argument("measure requires a PSD matrix: eigenvalue " +
                                  std::to_string(lam(i)) + " is negative");
    }
    if (lam(i) < 0.0) lam(i) = 0.0;
  }
  return lam;
}

}  // namespace detail

inline double measure(const Eigen::MatrixXd& W, const Metric& m) {
  m.validate();
  detail::check_symmetric(W);
  switch (m.kind) {
    case MetricKind::kTrace:
      // Indefiniteness cannot change a trace, so the spectral validation is
      // skipped here to keep this path O(n).
      return W.trace();
    case MetricKind::kLogDet: {
      const Eigen::VectorXd lam = detail::psd_eigenvalues(W);
      double total = 0.0;
      for (Eigen::Index i = 0; i < lam.size(); ++i) {
        const double shifted = lam(i) + m.epsilon;
        if (shifted <= 0.0) return -std::numeric_limits<double>::infinity();
        total += std::log(shifted);
      }
      return total;
    }
    case MetricKind::kRank: {
      const Eigen::VectorXd lam = detail::psd_eigenvalues(W);
      const double lam_max = lam.size() ? lam.maxCoeff() : 0.0;
      const double cutoff =
          m.rank_rel_tol * std::max(lam_max, std::numeric_limits<double>::min());
      int rank = 0;
      for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > cutoff) ++rank;
      }
      return static_cast<double>(rank);
    }
  }
  throw std::logic_error("unreachable metric kind");
}

inline double measure(const GramianMatrix& W, const Metric& m) {
  return measure(W.W, m);
}

// Value of the empty selection (the zero Gramian) under a metric; the offset
// removed by the f(empty) = 0 normalization.
inline double empty_measure(int n_x, const Metric& m) {
  m.validate();
  switch (m.kind) {
    case MetricKind::kTrace:
    case MetricKind::kRank:
      return 0.0;
    case MetricKind::kLogDet:
      if (m.epsilon <= 0.0) return -std::numeric_limits<double>::infinity();
      return n_x * std::log(m.epsilon);
  }
  throw std::logic_error("unreachable metric kind");
}

// Memoized set function over ground set {0, .., n-1}. Subsets are canonical
// sorted index vectors; repeated queries return bit-identical cached values
// and the evaluation counter moves only on cache misses. The cache accepts
// concurrent readers and writers, so one instance may be shared by parallel
// sampling workers.
class SetFunction {
 public:
  using Evaluator = std::function<double(const std::vector<int>&)>;

  SetFunction() = default;
  SetFunction(int ground_size, Evaluator evaluator)
      : impl_(std::make_shared<Impl>()) {
    if (ground_size < 0) throw std::invalid_argument("ground size must be >= 0");
    impl_->n = ground_size;
    impl_->evaluator = std::move(evaluator);
  }

  int ground_size() const { return impl_->n; }

  double operator()(std::vector<int> subset) const {
    canonicalize(subset);
    {
      std::shared_lock lock(impl_->mutex);
      auto it = impl_->memo.find(subset);
      if (it != impl_->memo.end()) return it->second;
    }
    const double value = impl_->evaluator(subset);
    std::unique_lock lock(impl_->mutex);
    auto [it, inserted] = impl_->memo.try_emplace(std::move(subset), value);
    if (inserted) impl_->misses.fetch_add(1, std::memory_order_relaxed);
    return it->second;
  }

  // f(base + {element}) - f(base); base must not contain element.
  double marginal(const std::vector<int>& base, int element) const {
    std::vector<int> extended = base;
    extended.push_back(element);
    return (*this)(std::move(extended)) - (*this)(base);
  }

  std::uint64_t evaluations() const {
    return impl_->misses.load(std::memory_order_relaxed);
  }

 private:
  struct Impl {
    int n = 0;
    Evaluator evaluator;
    mutable std::unordered_map<std::vector<int>, double, IndexVectorHash> memo;
    mutable std::shared_mutex mutex;
    mutable std::atomic<std::uint64_t> misses{0};
  };

  void canonicalize(std::vector<int>& subset) const {
    std::sort(subset.begin(), subset.end());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (subset[i] < 0 || subset[i] >= impl_->n) {
        throw std::invalid_argument("subset index " +
                                    std::to_string(subset[i]) +
                                    " out of range [0, " +
                                    std::to_string(impl_->n) + ")");
      }
      if (i > 0 && subset[i] == subset[i - 1]) {
        throw std::invalid_argument("subset contains duplicate index " +
                                    std::to_string(subset[i]));
      }
    }
  }

  std::shared_ptr<Impl> impl_;
};

// f(R) = measure(sum of contribs over R) shifted so that f(empty) = 0. When
// the empty value is not finite (logdet with eps = 0) the raw value is
// returned unshifted and singular selections keep the -inf sentinel.
inline SetFunction make_set_function(const ContributionGramians& cg,
                                     const Metric& m) {
  m.validate();
  const double offset = empty_measure(cg.n_x(), m);
  const double shift = std::isfinite(offset) ? offset : 0.0;
  const int n_x = cg.n_x();
  auto contribs = std::make_shared<std::vector<Eigen::MatrixXd>>(cg.contribs);
  return SetFunction(
      cg.n_y(), [contribs, m, shift, n_x](const std::vector<int>& subset) {
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_x, n_x);
        for (int v : subset) W += (*contribs)[v];
        return measure(W, m) - shift;
      });
}

}  // namespace obspart

#endif  // OBSPART_MEASURES_HPP_

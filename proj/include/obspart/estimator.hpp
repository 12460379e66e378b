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

#ifndef OBSPART_ESTIMATOR_HPP_
#define OBSPART_ESTIMATOR_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "obspart/common.hpp"
#include "obspart/sysmodel.hpp"

namespace obspart {

struct KfConfig {
  double Qn = 1e-4;  // process-noise covariance scale (Q = Qn * I)
  double Rn = 1e-4;  // measurement-noise covariance scale (R = Rn * I)
  double P0 = 1e-1;  // initial error-covariance scale (P = P0 * I)
  int trials = 50;
  int N = 1000;  // steps per trial, one measurement update each
  std::uint64_t seed = 0;

  void validate() const {
    if (!(Qn > 0.0) || !(Rn > 0.0) || !(P0 > 0.0)) {
      throw std::invalid_argument("noise and covariance scales must be > 0");
    }
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (N < 1) throw std::invalid_argument("horizon must be >= 1");
  }
};

struct KfScore {
  std::vector<double> per_trial;  // time-averaged relative error per trial
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation over trials
};

struct KfCovariances {
  Eigen::MatrixXd predicted;  // P at the final step, before its update
  Eigen::MatrixXd updated;    // P at the final step, after its update
};

namespace detail {

inline std::vector<int> checked_sensor_rows(const std::vector<int>& rows,
                                            int n_y) {
  if (rows.empty()) {
    throw std::invalid_argument("sensor set must be nonempty");
  }
  std::vector<int> sorted = rows;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.front() < 0 || sorted.back() >= n_y) {
    throw std::invalid_argument("sensor row out of range [0, " +
                                std::to_string(n_y) + ")");
  }
  return sorted;
}

inline void check_filter_stability(const LtiSystem& sys) {
  const double radius = spectral_radius(sys.A);
  if (radius > 1.0 + 1e-9) {
    throw std::invalid_argument(
        "spectral radius " + std::to_string(radius) +
        " exceeds 1; unstable systems are rejected for this horizon");
  }
}

// Gains and covariances do not depend on the measurements, so one pass
// serves every trial. Joseph form keeps the covariance PSD over long runs.
struct KfPlan {
  std::vector<Eigen::MatrixXd> gains;  // one n_x x |R| gain per step
  Eigen::MatrixXd predicted_last;
  Eigen::MatrixXd updated_last;
};

inline KfPlan build_kf_plan(const Eigen::MatrixXd& A,
                            const Eigen::MatrixXd& c_rows,
                            const KfConfig& cfg) {
  const int n_x = static_cast<int>(A.rows());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n_x, n_x);
  const Eigen::MatrixXd r_cov =
      cfg.Rn * Eigen::MatrixXd::Identity(c_rows.rows(), c_rows.rows());

  KfPlan plan;
  plan.gains.reserve(cfg.N);
  Eigen::MatrixXd p_pred = cfg.P0 * eye;
  Eigen::MatrixXd p_post;
  for (int k = 0; k < cfg.N; ++k) {
    const Eigen::MatrixXd innovation =
        c_rows * p_pred * c_rows.transpose() + r_cov;
    Eigen::LLT<Eigen::MatrixXd> llt(innovation);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error(
          "innovation covariance is numerically singular at step " +
          std::to_string(k) + "; Rn is too small relative to machine "
          "precision");
    }
    const Eigen::MatrixXd gain = llt.solve(c_rows * p_pred).transpose();
    const Eigen::MatrixXd shrink = eye - gain * c_rows;
    p_post = shrink * p_pred * shrink.transpose() +
             gain * r_cov * gain.transpose();
    symmetrize(p_post);
    plan.gains.push_back(gain);
    if (k + 1 < cfg.N) {
      p_pred = A * p_post * A.transpose() + cfg.Qn * eye;
      symmetrize(p_pred);
    }
  }
  plan.predicted_last = p_pred;
  plan.updated_last = p_post;
  return plan;
}

// One simulated trajectory plus the filter that tracks it. Noise is drawn
// for all n_y outputs in a fixed order so that two runs with different
// sensor subsets but the same seed see the same realizations.
inline double run_kf_trial(const LtiSystem& sys, const std::vector<int>& rows,
                           const KfPlan& plan, const KfConfig& cfg,
                           std::uint64_t trial) {
  const int n_x = sys.n_x();
  const int n_y = sys.n_y();
  const double x0_std = std::sqrt(cfg.P0);
  const double w_std = std::sqrt(cfg.Qn);
  const double v_std = std::sqrt(cfg.Rn);

  std::mt19937_64 rng = make_stream(cfg.seed, trial);
  Eigen::VectorXd x(n_x);
  for (int i = 0; i < n_x; ++i) x(i) = x0_std * gaussian(rng);
  Eigen::VectorXd x_hat = Eigen::VectorXd::Zero(n_x);
  Eigen::VectorXd noise(n_y);

  double error_sum = 0.0;
  int counted = 0;
  for (int k = 0; k < cfg.N; ++k) {
    if (k > 0) {
      Eigen::VectorXd w(n_x);
      for (int i = 0; i < n_x; ++i) w(i) = w_std * gaussian(rng);
      x = sys.A * x + w;
      x_hat = sys.A * x_hat;
    }
    for (int i = 0; i < n_y; ++i) noise(i) = v_std * gaussian(rng);
    Eigen::VectorXd residual(static_cast<int>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const int row = rows[r];
      const double y = sys.C.row(row).dot(x) + noise(row);
      residual(static_cast<int>(r)) = y - sys.C.row(row).dot(x_hat);
    }
    x_hat += plan.gains[k] * residual;
    const double truth_norm = x.norm();
    if (truth_norm > 0.0) {
      error_sum += (x_hat - x).norm() / truth_norm;
      ++counted;
    }
  }
  return counted > 0 ? error_sum / counted : 0.0;
}

}  // namespace detail

// Deterministic covariance/gain recursion for a sensor subset; useful on its
// own for steady-state checks.
inline KfCovariances kf_covariances(const LtiSystem& sys,
                                    const std::vector<int>& sensor_rows,
                                    const KfConfig& cfg) {
  cfg.validate();
  detail::check_filter_stability(sys);
  const std::vector<int> rows =
      detail::checked_sensor_rows(sensor_rows, sys.n_y());
  Eigen::MatrixXd c_rows(static_cast<int>(rows.size()), sys.n_x());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    c_rows.row(static_cast<int>(r)) = sys.C.row(rows[r]);
  }
  const detail::KfPlan plan = detail::build_kf_plan(sys.A, c_rows, cfg);
  return KfCovariances{plan.predicted_last, plan.updated_last};
}

// Scores a sensor configuration by Monte-Carlo state estimation: for each
// trial, simulate x_{k+1} = A x_k + w_k, y_k = C_R x_k + v_k, run the
// predict/update recursion from x_hat = 0, P = P0 * I, and average the
// relative error |x_hat - x| / |x| over the horizon.
inline KfScore kalman_score(const LtiSystem& sys,
                            const std::vector<int>& sensor_rows,
                            const KfConfig& cfg, int threads = 1) {
  cfg.validate();
  detail::check_filter_stability(sys);
  const std::vector<int> rows =
      detail::checked_sensor_rows(sensor_rows, sys.n_y());
  Eigen::MatrixXd c_rows(static_cast<int>(rows.size()), sys.n_x());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    c_rows.row(static_cast<int>(r)) = sys.C.row(rows[r]);
  }
  const detail::KfPlan plan = detail::build_kf_plan(sys.A, c_rows, cfg);

  KfScore score;
  score.per_trial.assign(cfg.trials, 0.0);
  parallel_for(cfg.trials, threads, [&](int trial) {
    score.per_trial[trial] = detail::run_kf_trial(
        sys, rows, plan, cfg, static_cast<std::uint64_t>(trial));
  });

  double sum = 0.0;
  for (double e : score.per_trial) sum += e;
  score.mean = sum / cfg.trials;
  if (cfg.trials > 1) {
    double ss = 0.0;
    for (double e : score.per_trial) ss += (e - score.mean) * (e - score.mean);
    score.stdev = std::sqrt(ss / (cfg.trials - 1));
  }
  return score;
}

}  // namespace obspart

#endif  // OBSPART_ESTIMATOR_HPP_

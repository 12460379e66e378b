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

#ifndef OBSPART_SYSMODEL_HPP_
#define OBSPART_SYSMODEL_HPP_

#include <Eigen/Dense>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "obspart/common.hpp"

namespace obspart {

// Observation horizon: a finite step count N, or the infinite-horizon limit.
struct Horizon {
  bool infinite = false;
  int steps = 0;

  static Horizon finite(int n) { return Horizon{false, n}; }
  static Horizon unbounded() { return Horizon{true, 0}; }

  std::string label() const {
    return infinite ? std::string("infinite") : std::to_string(steps);
  }
};

// Discrete-time LTI system x[k+1] = A x[k], y[k] = C x[k]. Each row of C
// observes one measurable state; the ground set V for all set functions is
// the row index set {0, .., n_y - 1}.
struct LtiSystem {
  std::string name;
  Eigen::MatrixXd A;
  Eigen::MatrixXd C;
  std::vector<std::string> state_labels;              // one per row of C
  std::optional<Eigen::MatrixXi> adjacency;           // n_x x n_x, 0/1
  std::vector<std::vector<int>> reactions;            // participant indices

  int n_x() const { return static_cast<int>(A.rows()); }
  int n_y() const { return static_cast<int>(C.rows()); }
};

// One PSD matrix per measurable state: contribs[v] accumulates the energy
// row v of C injects into the observability Gramian over the horizon. Any
// subsystem or selection Gramian is the plain sum of its members' entries.
struct ContributionGramians {
  Horizon horizon;
  std::vector<Eigen::MatrixXd> contribs;

  int n_y() const { return static_cast<int>(contribs.size()); }
  int n_x() const {
    return contribs.empty() ? 0 : static_cast<int>(contribs[0].rows());
  }
};

struct GramianMatrix {
  Eigen::MatrixXd W;
  Horizon horizon;
  std::vector<int> selection;  // the subset of V this Gramian covers
};

inline double spectral_radius(const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

inline void symmetrize(Eigen::MatrixXd& W) {
  W = ((W + W.transpose()) * 0.5).eval();
}

inline Eigen::MatrixXd parse_matrix(const nlohmann::json& j,
                                    const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("field \"" + field +
                                "\" must be a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd M;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array()) {
      throw std::invalid_argument("field \"" + field + "\" row " +
                                  std::to_string(r) + " is not an array");
    }
    if (r == 0) {
      cols = row.size();
      if (cols == 0) {
        throw std::invalid_argument("field \"" + field + "\" has empty rows");
      }
      M.resize(rows, cols);
    } else if (row.size() != cols) {
      throw std::invalid_argument(
          "dimension mismatch in \"" + field + "\": row " + std::to_string(r) +
          " has " + std::to_string(row.size()) + " entries, expected " +
          std::to_string(cols) + " (rectangular array required)");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw std::invalid_argument("field \"" + field +
                                    "\" contains a non-numeric entry");
      }
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          row[c].get<double>();
    }
  }
  return M;
}

}  // namespace detail

// Parses and validates a system from its JSON representation. See the README
// for the schema: {"name"?, "A", "C", "state_labels"?, "adjacency"?,
// "reactions"?}.
inline LtiSystem parse_system(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("system JSON must be an object");
  if (!j.contains("A") || !j.contains("C")) {
    throw std::invalid_argument("system JSON requires fields \"A\" and \"C\"");
  }

  LtiSystem sys;
  sys.name = j.value("name", std::string());
  sys.A = detail::parse_matrix(j["A"], "A");
  if (sys.A.rows() != sys.A.cols()) {
    throw std::invalid_argument(
        "dimension mismatch in \"A\": got " + std::to_string(sys.A.rows()) +
        "x" + std::to_string(sys.A.cols()) + ", expected a square matrix");
  }
  sys.C = detail::parse_matrix(j["C"], "C");
  const int n_x = sys.n_x();
  const int n_y = sys.n_y();
  if (sys.C.cols() != n_x) {
    throw std::invalid_argument(
        "dimension mismatch in \"C\": rows have " +
        std::to_string(sys.C.cols()) + " entries, expected " +
        std::to_string(n_x) + " columns to match A");
  }

  if (j.contains("state_labels")) {
    const auto& labels = j["state_labels"];
    if (!labels.is_array() || static_cast<int>(labels.size()) != n_y) {
      throw std::invalid_argument(
          "dimension mismatch in \"state_labels\": expected " +
          std::to_string(n_y) + " entries (one per row of C)");
    }
    for (const auto& l : labels) {
      if (!l.is_string()) {
        throw std::invalid_argument("\"state_labels\" entries must be strings");
      }
      sys.state_labels.push_back(l.get<std::string>());
    }
  } else {
    for (int v = 0; v < n_y; ++v) sys.state_labels.push_back("x" + std::to_string(v));
  }

  if (j.contains("adjacency")) {
    const Eigen::MatrixXd adj = detail::parse_matrix(j["adjacency"], "adjacency");
    if (adj.rows() != n_x || adj.cols() != n_x) {
      throw std::invalid_argument(
          "dimension mismatch in \"adjacency\": expected " +
          std::to_string(n_x) + "x" + std::to_string(n_x));
    }
    Eigen::MatrixXi a(n_x, n_x);
    for (int r = 0; r < n_x; ++r) {
      for (int c = 0; c < n_x; ++c) {
        const double val = adj(r, c);
        if (val != 0.0 && val != 1.0) {
          throw std::invalid_argument("\"adjacency\" entries must be 0 or 1");
        }
        a(r, c) = static_cast<int>(val);
      }
    }
    if (a != a.transpose().eval()) {
      throw std::invalid_argument("\"adjacency\" must be symmetric");
    }
    for (int r = 0; r < n_x; ++r) {
      if (a(r, r) != 0) {
        throw std::invalid_argument("\"adjacency\" must have a zero diagonal");
      }
    }
    sys.adjacency = a;
  }

  if (j.contains("reactions")) {
    const auto& rx = j["reactions"];
    if (!rx.is_array()) throw std::invalid_argument("\"reactions\" must be an array");
    for (const auto& r : rx) {
      if (!r.is_array()) {
        throw std::invalid_argument("\"reactions\" entries must be index lists");
      }
      std::vector<int> participants;
      for (const auto& p : r) {
        if (!p.is_number_integer()) {
          throw std::invalid_argument("reaction participants must be integers");
        }
        const int idx = p.get<int>();
        if (idx < 0 || idx >= n_x) {
          throw std::invalid_argument(
              "reaction participant " + std::to_string(idx) +
              " out of range [0, " + std::to_string(n_x) + ")");
        }
        participants.push_back(idx);
      }
      sys.reactions.push_back(std::move(participants));
    }
  }
  return sys;
}

inline LtiSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open system file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("parse failure in " + path + ": " + e.what());
  }
  return parse_system(j);
}

// Per-state contribution Gramians over a finite horizon:
//   contribs[v] = sum_{k=0}^{N-1} (A^k)^T c_v^T c_v A^k
// computed by the row recursion p_{k+1} = p_k A from p_0 = c_v, so no matrix
// power is ever formed. Cost O(N n_x^2) per state.
inline ContributionGramians contribution_gramians(const LtiSystem& sys, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const int n_x = sys.n_x();
  ContributionGramians out;
  out.horizon = Horizon::finite(horizon);
  out.contribs.resize(sys.n_y());
  for (int v = 0; v < sys.n_y(); ++v) {
    Eigen::RowVectorXd p = sys.C.row(v);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_x, n_x);
    for (int k = 0; k < horizon; ++k) {
      W.noalias() += p.transpose() * p;
      p = p * sys.A;
    }
    detail::symmetrize(W);
    out.contribs[v] = std::move(W);
  }
  return out;
}

inline GramianMatrix full_gramian(const ContributionGramians& cg,
                                  const std::vector<int>& selection) {
  const int n_x = cg.n_x();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_x, n_x);
  for (int v : selection) {
    if (v < 0 || v >= cg.n_y()) {
      throw std::invalid_argument("selection index " + std::to_string(v) +
                                  " out of range [0, " +
                                  std::to_string(cg.n_y()) + ")");
    }
    W += cg.contribs[v];
  }
  return GramianMatrix{std::move(W), cg.horizon, selection};
}

// Full-system finite-horizon Gramian computed directly from the stacked C,
// independent of the per-state decomposition. Used as the reference object
// when checking contribution additivity.
inline Eigen::MatrixXd system_gramian(const LtiSystem& sys, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  Eigen::MatrixXd P = sys.C;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(sys.n_x(), sys.n_x());
  for (int k = 0; k < horizon; ++k) {
    W.noalias() += P.transpose() * P;
    P = P * sys.A;
  }
  detail::symmetrize(W);
  return W;
}

namespace detail {

// Smith doubling for A^T W A - W + Q = 0 with rho(A) < 1: accumulate
// W <- W + M^T W M, M <- M^2, so after j rounds W holds 2^j horizon terms.
inline Eigen::MatrixXd smith_lyapunov(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& Q, double tol,
                                      int max_doublings) {
  const double rho = spectral_radius(A);
  if (rho >= 1.0 - 1e-9) {
    std::ostringstream msg;
    msg << "infinite-horizon Gramian requires a stable system: spectral radius "
        << rho << " >= 1";
    throw std::invalid_argument(msg.str());
  }
  Eigen::MatrixXd W = Q;
  symmetrize(W);
  Eigen::MatrixXd M = A;
  for (int j = 0; j < max_doublings; ++j) {
    const Eigen::MatrixXd update = M.transpose() * W * M;
    W += update;
    symmetrize(W);
    M = (M * M).eval();
    if (update.norm() <= tol) {
      const double residual =
          (A.transpose() * W * A - W + Q).norm();
      if (residual <= tol) return W;
    }
  }
  throw std::runtime_error(
      "Lyapunov solve did not converge within " +
      std::to_string(max_doublings) + " doublings (tol " + std::to_string(tol) +
      ")");
}

}  // namespace detail

inline GramianMatrix lyapunov_gramian(const LtiSystem& sys, double tol = 1e-12,
                                      int max_doublings = 200) {
  const Eigen::MatrixXd Q = sys.C.transpose() * sys.C;
  Eigen::MatrixXd W = detail::smith_lyapunov(sys.A, Q, tol, max_doublings);
  std::vector<int> all(sys.n_y());
  for (int v = 0; v < sys.n_y(); ++v) all[v] = v;
  return GramianMatrix{std::move(W), Horizon::unbounded(), std::move(all)};
}

// Infinite-horizon analogue of contribution_gramians: one Smith solve per
// output row with Q = c_v^T c_v. Additivity carries over unchanged.
inline ContributionGramians contribution_gramians_infinite(
    const LtiSystem& sys, double tol = 1e-12, int max_doublings = 200) {
  ContributionGramians out;
  out.horizon = Horizon::unbounded();
  out.contribs.resize(sys.n_y());
  for (int v = 0; v < sys.n_y(); ++v) {
    const Eigen::RowVectorXd c = sys.C.row(v);
    const Eigen::MatrixXd Q = c.transpose() * c;
    out.contribs[v] = detail::smith_lyapunov(sys.A, Q, tol, max_doublings);
  }
  return out;
}

inline ContributionGramians contribution_gramians(const LtiSystem& sys,
                                                  const Horizon& horizon,
                                                  double tol = 1e-12) {
  return horizon.infinite ? contribution_gramians_infinite(sys, tol)
                          : contribution_gramians(sys, horizon.steps);
}

inline double lyapunov_residual(const LtiSystem& sys, const Eigen::MatrixXd& W) {
  return (sys.A.transpose() * W * sys.A - W + sys.C.transpose() * sys.C).norm();
}

}  // namespace obspart

#endif  // OBSPART_SYSMODEL_HPP_

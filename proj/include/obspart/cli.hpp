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

#ifndef OBSPART_CLI_HPP_
#define OBSPART_CLI_HPP_

#include <array>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "obspart/estimator.hpp"
#include "obspart/graphkit.hpp"
#include "obspart/matroids.hpp"
#include "obspart/maximize.hpp"
#include "obspart/measures.hpp"
#include "obspart/oracle.hpp"
#include "obspart/partition.hpp"
#include "obspart/placement.hpp"
#include "obspart/sysmodel.hpp"

namespace obspart {
namespace cli {

using Json = nlohmann::ordered_json;

// JSON has no representation for non-finite numbers (the serializer would
// emit null); strings keep them readable and round-trippable.
inline Json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline std::string format_double(double x) {
  if (!std::isfinite(x)) {
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  }
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline std::vector<int> parse_int_list(const std::string& text,
                                       const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::size_t b = item.find_first_not_of(" \t");
    const std::size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos) {
      throw std::invalid_argument(flag + " has an empty entry");
    }
    item = item.substr(b, e - b + 1);
    int value = 0;
    const auto res =
        std::from_chars(item.data(), item.data() + item.size(), value);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw std::invalid_argument(flag + " entry \"" + item +
                                  "\" is not an integer");
    }
    out.push_back(value);
  }
  return out;
}

struct Options {
  std::string system;
  std::string partition_file;
  std::string sensors_file;
  std::string out;       // report destination; empty means stdout
  std::string emit_csv;  // CSV series destination
  std::string metric = "logdet";
  double epsilon = 1e-10;
  double rank_tol = 1e-9;
  int horizon = 1000;
  bool infinite = false;
  int kappa = 0;
  std::string solver = "greedy";
  int steps = 10;
  int samples = 100;
  std::string rounding = "pipage";
  bool lazy = false;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 resolves through OBSPART_THREADS, then 1
  std::string selection;
  int sensors_total = -1;
  std::string budgets;
  std::string mode = "global";
  std::string rows;
  int trials = 50;
  double qn = 1e-4;
  double rn = 1e-4;
  double p0 = 1e-1;
  int from_kappa = 0;
  int to_kappa = 0;
};

inline Metric metric_from(const Options& o) {
  if (o.metric == "trace") return Metric::trace();
  if (o.metric == "logdet") return Metric::logdet(o.epsilon);
  if (o.metric == "rank") return Metric::rank(o.rank_tol);
  throw std::invalid_argument("unknown metric \"" + o.metric + "\"");
}

inline Horizon horizon_from(const Options& o) {
  return o.infinite ? Horizon::unbounded() : Horizon::finite(o.horizon);
}

inline Rounding rounding_from(const Options& o) {
  if (o.rounding == "pipage") return Rounding::kPipage;
  if (o.rounding == "randomized") return Rounding::kRandomized;
  throw std::invalid_argument("unknown rounding \"" + o.rounding + "\"");
}

inline ObjectiveMode objective_mode_from(const Options& o) {
  if (o.mode == "global") return ObjectiveMode::kGlobal;
  if (o.mode == "local") return ObjectiveMode::kLocal;
  throw std::invalid_argument("unknown mode \"" + o.mode + "\"");
}

inline PartitionSolver partition_solver_from(const Options& o) {
  if (o.solver == "greedy") return PartitionSolver::kGreedy;
  if (o.solver == "continuous") return PartitionSolver::kContinuous;
  throw std::invalid_argument("unknown solver \"" + o.solver + "\"");
}

inline PlacementSolver placement_solver_from(const Options& o) {
  if (o.solver == "greedy") return PlacementSolver::kGreedy;
  if (o.solver == "continuous") return PlacementSolver::kContinuous;
  throw std::invalid_argument("unknown solver \"" + o.solver + "\"");
}

inline int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("OBSPART_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

inline SolverConfig solver_config_from(const Options& o) {
  SolverConfig cfg;
  cfg.steps = o.steps;
  cfg.samples = o.samples;
  cfg.seed = o.seed;
  cfg.rounding = rounding_from(o);
  cfg.lazy = o.lazy;
  cfg.threads = resolve_threads(o.threads);
  return cfg;
}

// Worker count and wall time never enter the report: reports must be
// byte-identical for any --threads value and across repeated runs.
struct RunReport {
  std::string command;
  std::vector<std::string> argv_echo;
  Json config = Json::object();
  Json outputs = Json::object();
  Json values = Json::object();
  Json diagnostics = Json::object();
  std::uint64_t seed = 0;

  Json to_json() const {
    Json j;
    j["tool"] = Json{{"name", "obspart"}, {"version", kVersion}};
    j["command"] = command;
    j["argv"] = argv_echo;
    j["config"] = config;
    j["outputs"] = outputs;
    j["values"] = values;
    j["diagnostics"] = diagnostics;
    j["seed"] = seed;
    return j;
  }
};

inline Json metric_config(const Metric& m) {
  Json j;
  j["kind"] = metric_name(m.kind);
  j["epsilon"] = json_number(m.epsilon);
  j["rank_rel_tol"] = json_number(m.rank_rel_tol);
  return j;
}

inline Json solver_config_json(const Options& o) {
  Json j;
  j["solver"] = o.solver;
  j["steps"] = o.steps;
  j["samples"] = o.samples;
  j["rounding"] = o.rounding;
  j["lazy"] = o.lazy;
  return j;
}

inline Json blocks_json(const std::vector<std::vector<int>>& blocks) {
  Json arr = Json::array();
  for (const auto& block : blocks) arr.push_back(block);
  return arr;
}

inline Json labels_for(const std::vector<int>& rows, const LtiSystem& sys) {
  Json arr = Json::array();
  for (int v : rows) arr.push_back(sys.state_labels[v]);
  return arr;
}

inline Json block_labels_json(const std::vector<std::vector<int>>& blocks,
                              const LtiSystem& sys) {
  Json arr = Json::array();
  for (const auto& block : blocks) arr.push_back(labels_for(block, sys));
  return arr;
}

inline Json matrix_json(const Eigen::MatrixXd& W) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < W.cols(); ++c) {
      row.push_back(json_number(W(r, c)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::optional<InteractionGraph> system_graph(const LtiSystem& sys) {
  if (!sys.adjacency.has_value() && sys.reactions.empty()) return std::nullopt;
  if (sys.n_y() != sys.n_x()) {
    throw std::invalid_argument(
        "the interaction graph needs one measured row per state "
        "(n_y == n_x)");
  }
  if (sys.adjacency.has_value()) return graph_from_adjacency(*sys.adjacency);
  return adjacency_from_reactions(sys.reactions, sys.n_x());
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

inline Partition partition_from_json(const nlohmann::json& j, int n_y) {
  const nlohmann::json* node = &j;
  if (!node->contains("blocks") && node->contains("outputs")) {
    node = &j.at("outputs");
  }
  if (!node->contains("blocks")) {
    throw std::invalid_argument("partition JSON requires a \"blocks\" array");
  }
  const auto& blocks = node->at("blocks");
  if (!blocks.is_array()) {
    throw std::invalid_argument("\"blocks\" must be an array of index arrays");
  }
  Partition p;
  p.kappa = static_cast<int>(blocks.size());
  p.provenance = node->value("provenance", "manual");
  for (const auto& block : blocks) {
    if (!block.is_array()) {
      throw std::invalid_argument("\"blocks\" entries must be index arrays");
    }
    std::vector<int> states;
    for (const auto& v : block) {
      if (!v.is_number_integer()) {
        throw std::invalid_argument("block entries must be integers");
      }
      states.push_back(v.get<int>());
    }
    p.blocks.push_back(std::move(states));
  }
  validate_partition(p, n_y);
  return p;
}

inline Partition load_partition(const std::string& path, int n_y) {
  return partition_from_json(load_json_file(path), n_y);
}

inline std::vector<int> selected_from_json(const nlohmann::json& j) {
  const nlohmann::json* node = &j;
  if (!node->contains("selected") && node->contains("outputs")) {
    node = &j.at("outputs");
  }
  if (!node->contains("selected")) {
    throw std::invalid_argument(
        "sensor JSON requires a \"selected\" index array");
  }
  std::vector<int> rows;
  for (const auto& v : node->at("selected")) {
    if (!v.is_number_integer()) {
      throw std::invalid_argument("\"selected\" entries must be integers");
    }
    rows.push_back(v.get<int>());
  }
  return rows;
}

inline void write_text(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << text;
}

// Per-block normalized values, their sum, and the raw (unshifted) sum for a
// fixed partition; shared by the baseline and sweep reports.
struct PartitionScore {
  std::vector<double> block_values;
  double total = 0.0;
  double total_raw = 0.0;
};

inline PartitionScore score_partition(const ContributionGramians& cg,
                                      const Partition& p, const Metric& m) {
  SetFunction block_fn = make_set_function(cg, m);
  PartitionScore score;
  for (const auto& block : p.blocks) {
    const double v = block_fn(block);
    score.block_values.push_back(v);
    score.total += v;
  }
  const double offset = empty_measure(cg.n_x(), m);
  score.total_raw = std::isfinite(offset) ? score.total + p.kappa * offset
                                          : score.total;
  return score;
}

inline void run_sysinfo(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  report.config["system"] = o.system;
  const double radius = spectral_radius(sys.A);
  report.outputs["name"] = sys.name;
  report.outputs["n_x"] = sys.n_x();
  report.outputs["n_y"] = sys.n_y();
  report.outputs["spectral_radius"] = json_number(radius);
  report.outputs["schur_stable"] = radius < 1.0 - 1e-9;
  report.outputs["state_labels"] = sys.state_labels;
  report.outputs["has_adjacency"] = sys.adjacency.has_value();
  report.outputs["reaction_count"] = sys.reactions.size();
}

inline void run_gramian(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const Horizon h = horizon_from(o);
  const ContributionGramians cg = contribution_gramians(sys, h);
  std::vector<int> selection;
  if (o.selection.empty()) {
    selection.resize(sys.n_y());
    for (int v = 0; v < sys.n_y(); ++v) selection[v] = v;
  } else {
    selection = parse_int_list(o.selection, "--selection");
  }
  const GramianMatrix G = full_gramian(cg, selection);

  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["selection"] = G.selection;
  report.config["metric"] = metric_config(metric_from(o));
  report.outputs["W"] = matrix_json(G.W);
  report.values["trace"] = json_number(measure(G.W, Metric::trace()));
  report.values["logdet"] =
      json_number(measure(G.W, Metric::logdet(o.epsilon)));
  report.values["rank"] = json_number(measure(G.W, Metric::rank(o.rank_tol)));
  if (h.infinite) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(sys.n_x(), sys.n_x());
    for (int v : G.selection) {
      q += sys.C.row(v).transpose() * sys.C.row(v);
    }
    const double residual =
        (sys.A.transpose() * G.W * sys.A - G.W + q).norm();
    report.diagnostics["lyapunov_residual"] = json_number(residual);
  }
}

inline void run_partition(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const Horizon h = horizon_from(o);
  const Metric m = metric_from(o);
  const SolverConfig cfg = solver_config_from(o);
  const auto [p, rep] =
      solve_partition(sys, h, o.kappa, m, cfg, partition_solver_from(o));

  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["kappa"] = o.kappa;
  report.config["metric"] = metric_config(m);
  report.config["solve"] = solver_config_json(o);
  report.outputs["kappa"] = p.kappa;
  report.outputs["provenance"] = p.provenance;
  report.outputs["blocks"] = blocks_json(p.blocks);
  report.outputs["block_labels"] = block_labels_json(p.blocks, sys);
  report.outputs["completed_states"] = rep.completed_states;
  Json block_values = Json::array();
  for (double v : rep.block_values) block_values.push_back(json_number(v));
  report.values["block_values"] = std::move(block_values);
  report.values["total"] = json_number(rep.total);
  report.values["total_raw"] = json_number(rep.total_raw);
  const std::optional<InteractionGraph> graph = system_graph(sys);
  if (graph.has_value() && graph->edges > 0) {
    report.values["modularity_q"] = json_number(modularity(*graph, p));
  } else {
    report.values["modularity_q"] = nullptr;
  }
  report.diagnostics["evaluations"] = rep.trace.evaluations;
  report.diagnostics["negative_marginals"] = rep.trace.negative_marginals;
}

inline void run_place(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const Horizon h = horizon_from(o);
  const Metric m = metric_from(o);
  const SolverConfig cfg = solver_config_from(o);
  const ContributionGramians cg = contribution_gramians(sys, h);

  Partition p;
  std::string partition_source;
  if (!o.partition_file.empty()) {
    p = load_partition(o.partition_file, sys.n_y());
    partition_source = o.partition_file;
  } else if (o.kappa > 0) {
    p = solve_partition(cg, o.kappa, m, cfg, partition_solver_from(o)).first;
    partition_source = "solved";
  } else {
    throw std::invalid_argument("place requires --partition-file or --kappa");
  }

  std::vector<int> budgets;
  if (o.sensors_total >= 0) {
    budgets = budgets_from_total(p, o.sensors_total);
  } else if (!o.budgets.empty()) {
    budgets = parse_int_list(o.budgets, "--budgets");
    if (static_cast<int>(budgets.size()) != p.kappa) {
      throw std::invalid_argument(
          "--budgets needs one entry per block (" + std::to_string(p.kappa) +
          " blocks, got " + std::to_string(budgets.size()) + ")");
    }
  } else {
    throw std::invalid_argument("place requires --sensors or --budgets");
  }

  const ObjectiveMode mode = objective_mode_from(o);
  const auto [sensors, trace] = solve_placement(
      cg, p, budgets, mode, m, placement_solver_from(o), cfg);
  const BoundDiagnostic bound = bound_check(cg, p, sensors.selected, m);

  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["metric"] = metric_config(m);
  report.config["solve"] = solver_config_json(o);
  report.config["mode"] = o.mode;
  report.config["partition_source"] = partition_source;
  report.config["sensors_total"] =
      o.sensors_total >= 0 ? Json(o.sensors_total) : Json(nullptr);
  report.outputs["selected"] = sensors.selected;
  report.outputs["selected_labels"] = labels_for(sensors.selected, sys);
  report.outputs["budgets"] = sensors.budgets;
  report.outputs["mode"] = mode_name(sensors.mode);
  report.outputs["blocks"] = blocks_json(p.blocks);
  report.values["value"] = json_number(sensors.value);
  report.values["value_raw"] = json_number(sensors.value_raw);
  report.diagnostics["bound"] = Json{
      {"metric", metric_name(bound.metric)},
      {"global_value", json_number(bound.global_value)},
      {"local_sum", json_number(bound.local_sum)},
      {"gap", json_number(bound.gap)},
      {"holds", bound.holds}};
  report.diagnostics["evaluations"] = trace.evaluations;
  report.diagnostics["negative_marginals"] = trace.negative_marginals;
}

inline void run_baseline_spectral(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const std::optional<InteractionGraph> graph = system_graph(sys);
  if (!graph.has_value()) {
    throw std::invalid_argument(
        "system has no interaction graph (provide adjacency or reactions)");
  }
  const Partition p = spectral_partition(*graph, o.kappa, o.seed);
  const Horizon h = horizon_from(o);
  const Metric m = metric_from(o);
  const PartitionScore score =
      score_partition(contribution_gramians(sys, h), p, m);

  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["kappa"] = o.kappa;
  report.config["metric"] = metric_config(m);
  report.outputs["kappa"] = p.kappa;
  report.outputs["provenance"] = p.provenance;
  report.outputs["blocks"] = blocks_json(p.blocks);
  report.outputs["block_labels"] = block_labels_json(p.blocks, sys);
  Json block_values = Json::array();
  for (double v : score.block_values) block_values.push_back(json_number(v));
  report.values["block_values"] = std::move(block_values);
  report.values["total"] = json_number(score.total);
  report.values["total_raw"] = json_number(score.total_raw);
  report.values["modularity_q"] = graph->edges > 0
                                      ? json_number(modularity(*graph, p))
                                      : Json(nullptr);
}

inline void run_modularity(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const std::optional<InteractionGraph> graph = system_graph(sys);
  if (!graph.has_value()) {
    throw std::invalid_argument(
        "system has no interaction graph (provide adjacency or reactions)");
  }
  const Partition p = load_partition(o.partition_file, sys.n_y());
  report.config["system"] = o.system;
  report.config["partition_file"] = o.partition_file;
  report.outputs["kappa"] = p.kappa;
  report.outputs["blocks"] = blocks_json(p.blocks);
  report.values["modularity_q"] = json_number(modularity(*graph, p));
}

inline void run_verify_kf(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  std::vector<int> rows;
  if (!o.sensors_file.empty()) {
    rows = selected_from_json(load_json_file(o.sensors_file));
  } else if (!o.rows.empty()) {
    rows = parse_int_list(o.rows, "--rows");
  } else {
    throw std::invalid_argument("verify-kf requires --sensors-file or --rows");
  }
  KfConfig kc;
  kc.Qn = o.qn;
  kc.Rn = o.rn;
  kc.P0 = o.p0;
  kc.trials = o.trials;
  kc.N = o.horizon;
  kc.seed = o.seed;
  const KfScore score =
      kalman_score(sys, rows, kc, resolve_threads(o.threads));

  report.config["system"] = o.system;
  report.config["trials"] = kc.trials;
  report.config["horizon"] = kc.N;
  report.config["Qn"] = json_number(kc.Qn);
  report.config["Rn"] = json_number(kc.Rn);
  report.config["P0"] = json_number(kc.P0);
  std::vector<int> sorted = rows;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  report.outputs["rows"] = sorted;
  report.outputs["labels"] = labels_for(sorted, sys);
  Json per_trial = Json::array();
  for (double e : score.per_trial) per_trial.push_back(json_number(e));
  report.values["mean"] = json_number(score.mean);
  report.values["stdev"] = json_number(score.stdev);
  report.values["per_trial"] = std::move(per_trial);

  if (!o.emit_csv.empty()) {
    std::string csv = "trial,relative_error\n";
    for (std::size_t i = 0; i < score.per_trial.size(); ++i) {
      csv += std::to_string(i) + "," + format_double(score.per_trial[i]) +
             "\n";
    }
    write_text(csv, o.emit_csv);
  }
}

inline void run_oracle_partition(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const Horizon h = horizon_from(o);
  const Metric m = metric_from(o);
  const BrutePartitionResult res =
      brute_partition(contribution_gramians(sys, h), o.kappa, m);
  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["kappa"] = o.kappa;
  report.config["metric"] = metric_config(m);
  report.outputs["kappa"] = res.partition.kappa;
  report.outputs["provenance"] = res.partition.provenance;
  report.outputs["blocks"] = blocks_json(res.partition.blocks);
  report.outputs["block_labels"] = block_labels_json(res.partition.blocks, sys);
  report.values["value"] = json_number(res.value);
  report.values["enumerated"] = res.enumerated;
}

inline void run_oracle_place(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const Horizon h = horizon_from(o);
  const Metric m = metric_from(o);
  const ContributionGramians cg = contribution_gramians(sys, h);
  const Partition p = load_partition(o.partition_file, sys.n_y());
  std::vector<int> budgets;
  if (o.sensors_total >= 0) {
    budgets = budgets_from_total(p, o.sensors_total);
  } else if (!o.budgets.empty()) {
    budgets = parse_int_list(o.budgets, "--budgets");
  } else {
    throw std::invalid_argument(
        "oracle place requires --sensors or --budgets");
  }
  const BrutePlacementResult res =
      brute_placement(cg, p, budgets, objective_mode_from(o), m);
  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["metric"] = metric_config(m);
  report.config["mode"] = o.mode;
  report.config["partition_file"] = o.partition_file;
  report.outputs["selected"] = res.config.selected;
  report.outputs["selected_labels"] = labels_for(res.config.selected, sys);
  report.outputs["budgets"] = res.config.budgets;
  report.outputs["mode"] = mode_name(res.config.mode);
  report.values["value"] = json_number(res.config.value);
  report.values["value_raw"] = json_number(res.config.value_raw);
  report.values["enumerated"] = res.enumerated;
}

inline void run_oracle_check(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  const Horizon h = horizon_from(o);
  const Metric m = metric_from(o);
  const SetFunction f = make_set_function(contribution_gramians(sys, h), m);
  const SubmodularityReport res = check_submodular_monotone(f, sys.n_y());
  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["metric"] = metric_config(m);
  report.outputs["submodular"] = res.submodular;
  report.outputs["monotone"] = res.monotone;
  report.outputs["violation_count"] = res.violation_count;
  Json witnesses = Json::array();
  for (const Violation& v : res.witnesses) {
    witnesses.push_back(Json{{"a", v.a},
                             {"b", v.b},
                             {"element", v.element},
                             {"kind", v.kind},
                             {"shortfall", json_number(v.shortfall)}});
  }
  report.outputs["witnesses"] = std::move(witnesses);
}

inline void run_sweep_kappa(const Options& o, RunReport& report) {
  const LtiSystem sys = load_system(o.system);
  if (o.from_kappa < 1 || o.to_kappa < o.from_kappa ||
      o.to_kappa > sys.n_y()) {
    throw std::invalid_argument(
        "sweep range must satisfy 1 <= from <= to <= " +
        std::to_string(sys.n_y()));
  }
  const Horizon h = horizon_from(o);
  const Metric m = metric_from(o);
  const SolverConfig cfg = solver_config_from(o);
  const ContributionGramians cg = contribution_gramians(sys, h);
  const std::optional<InteractionGraph> graph = system_graph(sys);
  const bool has_edges = graph.has_value() && graph->edges > 0;

  report.config["system"] = o.system;
  report.config["horizon"] = h.label();
  report.config["from"] = o.from_kappa;
  report.config["to"] = o.to_kappa;
  report.config["metric"] = metric_config(m);
  report.config["solve"] = solver_config_json(o);

  Json rows = Json::array();
  std::string csv =
      "kappa,total,total_raw,modularity_q,spectral_total,"
      "spectral_modularity_q\n";
  for (int kappa = o.from_kappa; kappa <= o.to_kappa; ++kappa) {
    const auto [p, rep] =
        solve_partition(cg, kappa, m, cfg, partition_solver_from(o));
    Json row;
    row["kappa"] = kappa;
    row["total"] = json_number(rep.total);
    row["total_raw"] = json_number(rep.total_raw);
    std::string q_cell, sp_total_cell, sp_q_cell;
    if (has_edges) {
      const double q = modularity(*graph, p);
      row["modularity_q"] = json_number(q);
      q_cell = format_double(q);
    } else {
      row["modularity_q"] = nullptr;
    }
    if (graph.has_value()) {
      try {
        const Partition sp = spectral_partition(*graph, kappa, o.seed);
        const PartitionScore score = score_partition(cg, sp, m);
        row["spectral_total"] = json_number(score.total);
        sp_total_cell = format_double(score.total);
        if (has_edges) {
          const double q = modularity(*graph, sp);
          row["spectral_modularity_q"] = json_number(q);
          sp_q_cell = format_double(q);
        } else {
          row["spectral_modularity_q"] = nullptr;
        }
      } catch (const std::invalid_argument&) {
        // kappa below the isolated-node floor: no spectral baseline here.
        row["spectral_total"] = nullptr;
        row["spectral_modularity_q"] = nullptr;
      }
    } else {
      row["spectral_total"] = nullptr;
      row["spectral_modularity_q"] = nullptr;
    }
    rows.push_back(std::move(row));
    csv += std::to_string(kappa) + "," + format_double(rep.total) + "," +
           format_double(rep.total_raw) + "," + q_cell + "," + sp_total_cell +
           "," + sp_q_cell + "\n";
  }
  report.outputs["rows"] = std::move(rows);
  if (!o.emit_csv.empty()) write_text(csv, o.emit_csv);
}

inline void add_metric_flags(CLI::App* sc, Options& o) {
  sc->add_option("--metric", o.metric, "Observability metric")
      ->check(CLI::IsMember({"trace", "logdet", "rank"}))
      ->capture_default_str();
  sc->add_option("--epsilon", o.epsilon, "logdet regularization")
      ->capture_default_str();
  sc->add_option("--rank-tol", o.rank_tol, "relative rank cutoff")
      ->capture_default_str();
}

inline void add_horizon_flags(CLI::App* sc, Options& o) {
  auto* steps = sc->add_option("--horizon", o.horizon, "Gramian horizon N")
                    ->capture_default_str();
  auto* inf = sc->add_flag("--infinite", o.infinite,
                           "Infinite-horizon Gramian (Lyapunov)");
  steps->excludes(inf);
}

inline void add_solver_flags(CLI::App* sc, Options& o) {
  sc->add_option("--solver", o.solver, "greedy or continuous")
      ->check(CLI::IsMember({"greedy", "continuous"}))
      ->capture_default_str();
  sc->add_option("--steps", o.steps, "continuous-greedy steps T")
      ->capture_default_str();
  sc->add_option("--samples", o.samples, "Monte Carlo samples per estimate")
      ->capture_default_str();
  sc->add_option("--rounding", o.rounding, "pipage or randomized")
      ->check(CLI::IsMember({"pipage", "randomized"}))
      ->capture_default_str();
  sc->add_flag("--lazy", o.lazy, "Lazy-greedy priority queue");
  sc->add_option("--threads", o.threads,
                 "Worker threads (OBSPART_THREADS fallback)");
}

inline void add_seed_flag(CLI::App* sc, Options& o) {
  sc->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
}

inline void add_out_flag(CLI::App* sc, Options& o) {
  sc->add_option("--out", o.out, "Report destination (default stdout)");
}

inline int run(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"observability-driven partitioning and sensor placement for "
               "discrete-time LTI systems"};
  app.require_subcommand(1);

  auto* sysinfo = app.add_subcommand("sysinfo", "Summarize a system file");
  sysinfo->add_option("--system", o.system, "System JSON")->required();
  add_out_flag(sysinfo, o);

  auto* gramian =
      app.add_subcommand("gramian", "Observability Gramian of a selection");
  gramian->add_option("--system", o.system, "System JSON")->required();
  gramian->add_option("--selection", o.selection,
                      "Comma-separated measured rows (default: all)");
  add_horizon_flags(gramian, o);
  add_metric_flags(gramian, o);
  add_out_flag(gramian, o);

  auto* partition = app.add_subcommand(
      "partition", "Partition the measurable states into subsystems");
  partition->add_option("--system", o.system, "System JSON")->required();
  partition->add_option("--kappa", o.kappa, "Number of subsystems")
      ->required()
      ->check(CLI::PositiveNumber);
  add_horizon_flags(partition, o);
  add_metric_flags(partition, o);
  add_solver_flags(partition, o);
  add_seed_flag(partition, o);
  add_out_flag(partition, o);

  auto* place =
      app.add_subcommand("place", "Sensor placement over a partition");
  place->add_option("--system", o.system, "System JSON")->required();
  auto* pf = place->add_option("--partition-file", o.partition_file,
                               "Partition JSON (blocks)");
  auto* pk = place->add_option("--kappa", o.kappa,
                               "Solve the partition first with this kappa")
                 ->check(CLI::PositiveNumber);
  pf->excludes(pk);
  auto* st = place->add_option("--sensors", o.sensors_total,
                               "Total sensor budget, split by block size");
  auto* bl = place->add_option("--budgets", o.budgets,
                               "Comma-separated per-block budgets");
  st->excludes(bl);
  place->add_option("--mode", o.mode, "global or local objective")
      ->check(CLI::IsMember({"global", "local"}))
      ->capture_default_str();
  add_horizon_flags(place, o);
  add_metric_flags(place, o);
  add_solver_flags(place, o);
  add_seed_flag(place, o);
  add_out_flag(place, o);

  auto* baseline = app.add_subcommand(
      "baseline-spectral", "Spectral-clustering baseline partition");
  baseline->add_option("--system", o.system, "System JSON")->required();
  baseline->add_option("--kappa", o.kappa, "Number of blocks")
      ->required()
      ->check(CLI::PositiveNumber);
  add_horizon_flags(baseline, o);
  add_metric_flags(baseline, o);
  add_seed_flag(baseline, o);
  add_out_flag(baseline, o);

  auto* modq =
      app.add_subcommand("modularity", "Modularity of a given partition");
  modq->add_option("--system", o.system, "System JSON")->required();
  modq->add_option("--partition-file", o.partition_file, "Partition JSON")
      ->required();
  add_out_flag(modq, o);

  auto* kf = app.add_subcommand(
      "verify-kf", "Kalman-filter Monte Carlo score for a sensor set");
  kf->add_option("--system", o.system, "System JSON")->required();
  auto* sf = kf->add_option("--sensors-file", o.sensors_file,
                            "Placement JSON (selected rows)");
  auto* rl = kf->add_option("--rows", o.rows, "Comma-separated sensor rows");
  sf->excludes(rl);
  kf->add_option("--trials", o.trials, "Monte Carlo trials")
      ->capture_default_str();
  kf->add_option("--horizon", o.horizon, "Steps per trial")
      ->capture_default_str();
  kf->add_option("--qn", o.qn, "Process-noise scale")->capture_default_str();
  kf->add_option("--rn", o.rn, "Measurement-noise scale")
      ->capture_default_str();
  kf->add_option("--p0", o.p0, "Initial covariance scale")
      ->capture_default_str();
  kf->add_option("--threads", o.threads,
                 "Worker threads (OBSPART_THREADS fallback)");
  kf->add_option("--emit-csv", o.emit_csv, "Per-trial CSV destination");
  add_seed_flag(kf, o);
  add_out_flag(kf, o);

  auto* oracle =
      app.add_subcommand("oracle", "Brute-force baselines and checkers");
  oracle->require_subcommand(1);
  auto* obp = oracle->add_subcommand("partition", "Exhaustive partitioning");
  obp->add_option("--system", o.system, "System JSON")->required();
  obp->add_option("--kappa", o.kappa, "Number of subsystems")
      ->required()
      ->check(CLI::PositiveNumber);
  add_horizon_flags(obp, o);
  add_metric_flags(obp, o);
  add_out_flag(obp, o);
  auto* obs = oracle->add_subcommand("place", "Exhaustive sensor placement");
  obs->add_option("--system", o.system, "System JSON")->required();
  obs->add_option("--partition-file", o.partition_file, "Partition JSON")
      ->required();
  auto* ost = obs->add_option("--sensors", o.sensors_total,
                              "Total budget, split by block size");
  auto* obl = obs->add_option("--budgets", o.budgets,
                              "Comma-separated per-block budgets");
  ost->excludes(obl);
  obs->add_option("--mode", o.mode, "global or local objective")
      ->check(CLI::IsMember({"global", "local"}))
      ->capture_default_str();
  add_horizon_flags(obs, o);
  add_metric_flags(obs, o);
  add_out_flag(obs, o);
  auto* obc = oracle->add_subcommand(
      "check", "Exhaustive submodularity and monotonicity check");
  obc->add_option("--system", o.system, "System JSON")->required();
  add_horizon_flags(obc, o);
  add_metric_flags(obc, o);
  add_out_flag(obc, o);

  auto* sweep = app.add_subcommand(
      "sweep-kappa", "Partition quality across a range of kappa");
  sweep->add_option("--system", o.system, "System JSON")->required();
  sweep->add_option("--from", o.from_kappa, "First kappa")->required();
  sweep->add_option("--to", o.to_kappa, "Last kappa")->required();
  add_horizon_flags(sweep, o);
  add_metric_flags(sweep, o);
  add_solver_flags(sweep, o);
  add_seed_flag(sweep, o);
  sweep->add_option("--emit-csv", o.emit_csv, "Series CSV destination");
  add_out_flag(sweep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Json err;
    err["error"] = Json{{"kind", "usage"}, {"message", e.what()}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  }

  RunReport report;
  // The echo skips --threads, --out, and --emit-csv: they steer execution and
  // I/O, not the computation, and reports must stay byte-identical across
  // worker counts and destinations.
  for (int i = 1; i < argc; ++i) {
    const std::string token = argv[i];
    const bool plumbing = token == "--threads" || token == "--out" ||
                          token == "--emit-csv";
    if (plumbing) {
      ++i;  // skip the flag's value as well
      continue;
    }
    if (token.rfind("--threads=", 0) == 0 || token.rfind("--out=", 0) == 0 ||
        token.rfind("--emit-csv=", 0) == 0) {
      continue;
    }
    report.argv_echo.push_back(token);
  }
  report.seed = o.seed;
  const auto started = std::chrono::steady_clock::now();
  try {
    if (app.got_subcommand(sysinfo)) {
      report.command = "sysinfo";
      run_sysinfo(o, report);
    } else if (app.got_subcommand(gramian)) {
      report.command = "gramian";
      run_gramian(o, report);
    } else if (app.got_subcommand(partition)) {
      report.command = "partition";
      run_partition(o, report);
    } else if (app.got_subcommand(place)) {
      report.command = "place";
      run_place(o, report);
    } else if (app.got_subcommand(baseline)) {
      report.command = "baseline-spectral";
      run_baseline_spectral(o, report);
    } else if (app.got_subcommand(modq)) {
      report.command = "modularity";
      run_modularity(o, report);
    } else if (app.got_subcommand(kf)) {
      report.command = "verify-kf";
      run_verify_kf(o, report);
    } else if (app.got_subcommand(oracle)) {
      if (oracle->got_subcommand(obp)) {
        report.command = "oracle partition";
        run_oracle_partition(o, report);
      } else if (oracle->got_subcommand(obs)) {
        report.command = "oracle place";
        run_oracle_place(o, report);
      } else {
        report.command = "oracle check";
        run_oracle_check(o, report);
      }
    } else {
      report.command = "sweep-kappa";
      run_sweep_kappa(o, report);
    }
    report.config["seed"] = o.seed;
    write_text(report.to_json().dump(2) + "\n", o.out);
  } catch (const std::exception& e) {
    Json err;
    err["error"] =
        Json{{"kind", "validation"}, {"message", e.what()}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  }
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - started;
  std::cerr << "obspart: " << report.command << " wall_seconds="
            << format_double(elapsed.count()) << " threads="
            << resolve_threads(o.threads) << "\n";
  return 0;
}

}  // namespace cli
}  // namespace obspart

#endif  // OBSPART_CLI_HPP_

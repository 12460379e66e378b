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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

using nlohmann::json;

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Runs the installed binary with output capture. Each invocation gets its own
// scratch files so tests stay independent.
CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string tag =
      testing::TempDir() + "cli_" + std::to_string(counter++);
  const std::string out_path = tag + ".out";
  const std::string err_path = tag + ".err";
  const std::string command = std::string(OBSPART_BIN) + " " + args + " > " +
                              out_path + " 2> " + err_path;
  const int status = std::system(command.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out_path);
  res.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return res;
}

std::string data_file(const std::string& name) {
  return std::string(OBSPART_DATA_DIR) + "/" + name;
}

std::string temp_file(const std::string& name) {
  return testing::TempDir() + name;
}

TEST(Cli, SysinfoReportsSystemFacts) {
  const CliResult res = run_cli("sysinfo --system " + data_file("chain5.json"));
  ASSERT_EQ(res.exit_code, 0) << res.err;
  const json report = json::parse(res.out);
  EXPECT_EQ(report["tool"]["name"], "obspart");
  EXPECT_EQ(report["command"], "sysinfo");
  EXPECT_EQ(report["outputs"]["n_x"], 5);
  EXPECT_EQ(report["outputs"]["n_y"], 5);
  EXPECT_TRUE(report["outputs"]["schur_stable"].get<bool>());
  EXPECT_LT(report["outputs"]["spectral_radius"].get<double>(), 1.0);
  EXPECT_EQ(report["outputs"]["state_labels"].size(), 5u);
  // Timing and worker counts live on stderr, never in the report.
  EXPECT_EQ(res.out.find("wall_seconds"), std::string::npos);
  EXPECT_NE(res.err.find("wall_seconds"), std::string::npos);
}

TEST(Cli, ReportsAreByteIdenticalAcrossRuns) {
  const std::string cmd = "partition --system " + data_file("chain5.json") +
                          " --kappa 2 --horizon 40 --seed 3";
  const CliResult a = run_cli(cmd);
  const CliResult b = run_cli(cmd);
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ReportsAreByteIdenticalAcrossThreadCounts) {
  const std::string base = "partition --system " + data_file("chain5.json") +
                           " --kappa 2 --horizon 40 --solver continuous"
                           " --steps 4 --samples 30 --seed 5 --threads ";
  const CliResult one = run_cli(base + "1");
  const CliResult two = run_cli(base + "2");
  const CliResult four = run_cli(base + "4");
  ASSERT_EQ(one.exit_code, 0) << one.err;
  ASSERT_EQ(two.exit_code, 0) << two.err;
  EXPECT_EQ(one.out, two.out);
  EXPECT_EQ(one.out, four.out);
  // The echoed argv omits the worker-count plumbing that must not affect
  // the report.
  const json report = json::parse(one.out);
  for (const auto& tok : report["argv"]) {
    EXPECT_EQ(tok.get<std::string>().rfind("--threads", 0), std::string::npos);
  }
}

TEST(Cli, ReportRoundTripsThroughItsOwnSerialization) {
  const CliResult res = run_cli("gramian --system " + data_file("chain5.json") +
                                " --horizon 25");
  ASSERT_EQ(res.exit_code, 0) << res.err;
  // Reports keep insertion order, so the round trip must too.
  const nlohmann::ordered_json report = nlohmann::ordered_json::parse(res.out);
  EXPECT_EQ(report.dump(2) + "\n", res.out);
}

TEST(Cli, GramianInfiniteReportsResidual) {
  const CliResult res =
      run_cli("gramian --system " + data_file("chain5.json") + " --infinite");
  ASSERT_EQ(res.exit_code, 0) << res.err;
  const json report = json::parse(res.out);
  EXPECT_LT(report["diagnostics"]["lyapunov_residual"].get<double>(), 1e-9);
  EXPECT_EQ(report["values"]["rank"].get<double>(), 5.0);
  EXPECT_EQ(report["outputs"]["W"].size(), 5u);
}

TEST(Cli, GramianRejectsConflictingHorizons) {
  const CliResult res = run_cli("gramian --system " + data_file("chain5.json") +
                                " --horizon 10 --infinite");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_EQ(err["error"]["kind"], "usage");
}

TEST(Cli, UnknownFlagIsUsageError) {
  const CliResult res = run_cli("sysinfo --system " + data_file("chain5.json") +
                                " --no-such-flag");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_EQ(err["error"]["kind"], "usage");
  EXPECT_FALSE(err["error"]["message"].get<std::string>().empty());
}

TEST(Cli, PartitionFileInteropWithPlace) {
  const std::string part = temp_file("interop_partition.json");
  const CliResult solve =
      run_cli("partition --system " + data_file("two_cliques.json") +
              " --kappa 2 --horizon 50 --out " + part);
  ASSERT_EQ(solve.exit_code, 0) << solve.err;

  const CliResult place =
      run_cli("place --system " + data_file("two_cliques.json") +
              " --partition-file " + part + " --sensors 3 --horizon 50");
  ASSERT_EQ(place.exit_code, 0) << place.err;
  const json report = json::parse(place.out);
  EXPECT_EQ(report["outputs"]["selected"].size(), 3u);
  EXPECT_EQ(report["config"]["sensors_total"], 3);
  const json bound = report["diagnostics"]["bound"];
  EXPECT_TRUE(bound.contains("global_value"));
  EXPECT_TRUE(bound.contains("local_sum"));
  std::remove(part.c_str());
}

TEST(Cli, PlaceRejectsOverBudgetRequests) {
  const CliResult res =
      run_cli("place --system " + data_file("two_cliques.json") +
              " --kappa 2 --sensors 99 --horizon 50");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_EQ(err["error"]["kind"], "validation");
  // The message names the feasible range.
  EXPECT_NE(err["error"]["message"].get<std::string>().find("[0, 6]"),
            std::string::npos);
}

TEST(Cli, PlaceRequiresSensorsOrBudgets) {
  const CliResult res = run_cli("place --system " +
                                data_file("two_cliques.json") +
                                " --kappa 2 --horizon 50");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_NE(err["error"]["message"].get<std::string>().find("--sensors"),
            std::string::npos);
}

TEST(Cli, PlaceRejectsPartitionFileTogetherWithKappa) {
  const CliResult res =
      run_cli("place --system " + data_file("two_cliques.json") +
              " --kappa 2 --partition-file /tmp/nope.json --sensors 2");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_EQ(err["error"]["kind"], "usage");
}

TEST(Cli, ModularityOfSingleBlockIsExactlyZero) {
  // Hand-written single-block partition file.
  const std::string part = temp_file("single_block.json");
  {
    std::ofstream out(part);
    out << R"({"kappa": 1, "blocks": [[0, 1, 2, 3, 4, 5]]})";
  }
  const CliResult res =
      run_cli("modularity --system " + data_file("two_cliques.json") +
              " --partition-file " + part);
  ASSERT_EQ(res.exit_code, 0) << res.err;
  const json report = json::parse(res.out);
  EXPECT_EQ(report["values"]["modularity_q"].get<double>(), 0.0);
  std::remove(part.c_str());
}

TEST(Cli, BaselineSpectralRecoversCliques) {
  const CliResult res =
      run_cli("baseline-spectral --system " + data_file("two_cliques.json") +
              " --kappa 2 --horizon 50 --seed 1");
  ASSERT_EQ(res.exit_code, 0) << res.err;
  const json report = json::parse(res.out);
  EXPECT_EQ(report["outputs"]["provenance"], "spectral");
  EXPECT_DOUBLE_EQ(report["values"]["modularity_q"].get<double>(), 0.5);
  json blocks = report["outputs"]["blocks"];
  ASSERT_EQ(blocks.size(), 2u);
}

TEST(Cli, BaselineSpectralNeedsAGraph) {
  // chain5 carries reactions, so strip them through a temp copy.
  json system = json::parse(slurp(data_file("chain5.json")));
  system.erase("reactions");
  const std::string path = temp_file("no_graph.json");
  {
    std::ofstream out(path);
    out << system.dump();
  }
  const CliResult res =
      run_cli("baseline-spectral --system " + path + " --kappa 2");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_NE(err["error"]["message"].get<std::string>().find("graph"),
            std::string::npos);
  std::remove(path.c_str());
}

TEST(Cli, VerifyKfEmitsPerTrialCsv) {
  const std::string csv = temp_file("kf_trials.csv");
  const CliResult res =
      run_cli("verify-kf --system " + data_file("chain5.json") +
              " --rows 0,2 --trials 6 --horizon 40 --emit-csv " + csv);
  ASSERT_EQ(res.exit_code, 0) << res.err;
  const json report = json::parse(res.out);
  EXPECT_EQ(report["values"]["per_trial"].size(), 6u);
  EXPECT_GT(report["values"]["mean"].get<double>(), 0.0);
  EXPECT_EQ(report["outputs"]["rows"], json({0, 2}));

  std::istringstream lines(slurp(csv));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    if (count == 0) {
      EXPECT_EQ(line, "trial,relative_error");
    }
    ++count;
  }
  EXPECT_EQ(count, 7);  // header + one row per trial
  std::remove(csv.c_str());
}

TEST(Cli, VerifyKfRequiresASensorSource) {
  const CliResult res =
      run_cli("verify-kf --system " + data_file("chain5.json"));
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_NE(err["error"]["message"].get<std::string>().find("--rows"),
            std::string::npos);
}

TEST(Cli, SweepKappaEmitsCsvAndRows) {
  const std::string csv = temp_file("sweep.csv");
  const CliResult res =
      run_cli("sweep-kappa --system " + data_file("chain5.json") +
              " --from 1 --to . --horizon 30 --emit-csv " + csv);
  EXPECT_EQ(res.exit_code, 2);  // "." is not an integer

  const CliResult ok =
      run_cli("sweep-kappa --system " + data_file("chain5.json") +
              " --from 1 --to 3 --horizon 30 --emit-csv " + csv);
  ASSERT_EQ(ok.exit_code, 0) << ok.err;
  const json report = json::parse(ok.out);
  ASSERT_EQ(report["outputs"]["rows"].size(), 3u);
  EXPECT_EQ(report["outputs"]["rows"][0]["kappa"], 1);
  EXPECT_EQ(report["outputs"]["rows"][0]["modularity_q"].get<double>(), 0.0);

  std::istringstream lines(slurp(csv));
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header,
            "kappa,total,total_raw,modularity_q,spectral_total,"
            "spectral_modularity_q");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
  }
  EXPECT_EQ(rows, 3);
  std::remove(csv.c_str());
}

TEST(Cli, SweepKappaValidatesRange) {
  const CliResult res =
      run_cli("sweep-kappa --system " + data_file("chain5.json") +
              " --from 3 --to 2 --horizon 30");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_EQ(err["error"]["kind"], "validation");
}

TEST(Cli, OraclePartitionAtLeastMatchesGreedy) {
  const CliResult greedy =
      run_cli("partition --system " + data_file("chain5.json") +
              " --kappa 2 --horizon 30");
  const CliResult brute =
      run_cli("oracle partition --system " + data_file("chain5.json") +
              " --kappa 2 --horizon 30");
  ASSERT_EQ(greedy.exit_code, 0) << greedy.err;
  ASSERT_EQ(brute.exit_code, 0) << brute.err;
  const double greedy_total =
      json::parse(greedy.out)["values"]["total"].get<double>();
  const json brute_report = json::parse(brute.out);
  const double brute_value = brute_report["values"]["value"].get<double>();
  EXPECT_EQ(brute_report["values"]["enumerated"], 32);  // 2^5
  EXPECT_GE(brute_value, greedy_total - 1e-9);
}

TEST(Cli, OracleCheckReportsCleanMeasures) {
  const CliResult res = run_cli("oracle check --system " +
                                data_file("chain5.json") + " --horizon 30");
  ASSERT_EQ(res.exit_code, 0) << res.err;
  const json report = json::parse(res.out);
  EXPECT_TRUE(report["outputs"]["submodular"].get<bool>());
  EXPECT_TRUE(report["outputs"]["monotone"].get<bool>());
  EXPECT_EQ(report["outputs"]["violation_count"], 0);
  EXPECT_TRUE(report["outputs"]["witnesses"].empty());
}

TEST(Cli, MissingSystemFileIsValidationError) {
  const CliResult res = run_cli("sysinfo --system /nonexistent/system.json");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_EQ(err["error"]["kind"], "validation");
}

TEST(Cli, NoSubcommandPrintsUsageError) {
  const CliResult res = run_cli("");
  EXPECT_EQ(res.exit_code, 2);
  const json err = json::parse(res.err);
  EXPECT_EQ(err["error"]["kind"], "usage");
}

}  // namespace

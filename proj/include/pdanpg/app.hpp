/*
 * Copyright 2026 The pdanpg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Run orchestration shared by the C API and the command-line driver: request
// documents, derived constants, run manifests and the paired benchmark.

#include "pdanpg/cmdp.hpp"
#include "pdanpg/diagnostics.hpp"
#include "pdanpg/optimizer.hpp"
#include "pdanpg/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pdanpg {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// User-facing knobs of one run. Unset optionals are derived from the instance.
struct RunSpec {
    std::size_t K = 1000;
    std::optional<std::size_t> H;  // inner loop length; lemma6_params minimum when absent
    ScheduleMode schedule = ScheduleMode::theorem1;
    InnerMode inner = InnerMode::asgd;
    std::uint64_t seed = 0;
    std::optional<double> eta;
    std::optional<double> zeta;
    std::optional<double> lambda_max;
    std::optional<double> L;
    std::optional<double> mu_F;
    std::optional<double> sgd_step;
    double c_bar = kDefaultInnerLenConstant;
    std::size_t cadence = 0;
    bool timing = false;
};

struct SolveRequest {
    EnvConfig env;
    PolicyConfig policy;  // feature seed defaults to the env seed
    RunSpec run;
};

struct DerivedConstants {
    double G = 0.0;
    double B = 0.0;
    std::optional<double> mu_F;
    double max_jc = 0.0;
    double c_slater = 0.0;
    double lambda_max = 0.0;
    std::optional<double> sigma_squared;
    double j_star = 0.0;
    double lambda_star = 0.0;
    std::optional<std::size_t> min_inner_len;
};

struct SolvePlan {
    TabularCmdp cmdp;
    FeaturePolicy policy;
    Schedule schedule;
    RunOptions options;
    DerivedConstants derived;
};

struct SolveOutcome {
    SolvePlan plan;
    RunResult result;
    std::string trace;     // trace.csv contents
    std::string manifest;  // manifest.json contents
};

/// Accepts a request document or a previously written solve manifest.
[[nodiscard]] SolveRequest parse_solve_request(const std::string& text);
[[nodiscard]] SolvePlan plan_solve(const SolveRequest& request);
[[nodiscard]] SolveOutcome execute_solve(const SolveRequest& request);
/// Writes trace.csv and manifest.json into dir, creating it if needed.
void write_solve_outputs(const SolveOutcome& outcome, const std::filesystem::path& dir);
[[nodiscard]] std::string solve_summary_json(const SolveOutcome& outcome);

struct BenchArm {
    InnerMode mode = InnerMode::asgd;
    std::optional<std::size_t> H;  // defaults to run.H
};

struct BenchRequest {
    EnvConfig env;
    PolicyConfig policy;
    RunSpec run;  // shared settings; seed and inner are set per job
    std::vector<std::uint64_t> seeds;
    std::vector<BenchArm> arms;
};

struct BenchStat {
    double mean = 0.0;
    std::optional<double> se;  // absent with a single seed
};

struct BenchRow {
    std::string mode;
    std::size_t inner_len = 0;
    std::size_t seeds = 0;
    BenchStat gap;
    BenchStat violation;
    BenchStat env_steps;
    BenchStat inner_err;
};

struct BenchOutcome {
    std::vector<BenchRow> rows;
    std::string csv;
    std::string manifest;
};

inline constexpr const char* kBenchHeader =
    "mode,H,seeds,gap_mean,gap_se,violation_mean,violation_se,env_steps_mean,env_steps_se,inner_err_mean,inner_err_se";

[[nodiscard]] BenchRequest parse_bench_request(const std::string& text);
[[nodiscard]] BenchOutcome execute_bench(const BenchRequest& request);
void write_bench_outputs(const BenchOutcome& outcome, const std::filesystem::path& dir);

[[nodiscard]] BenchStat summarize(const std::vector<double>& values);

/// Instance summary printed by `generate`: S, A, gamma, max J_c, c_slater.
[[nodiscard]] std::string instance_summary_json(const TabularCmdp& cmdp);
/// Constrained optimum record printed by `oracle`. Throws infeasible.
[[nodiscard]] std::string oracle_record_json(const TabularCmdp& cmdp);

struct DiagnoseRequest {
    DiagnoseOptions options;
    bool random_theta = false;  // draw theta ~ N(0, I) from the diagnostics seed
};

[[nodiscard]] DiagnoseRequest parse_diagnose_request(const std::string& text);
[[nodiscard]] Vector random_theta(std::size_t dim, std::uint64_t seed);
[[nodiscard]] std::string diagnose_report_json(const DiagnoseReport& report);

/// Fills defaults that depend on the environment (feature seed).
[[nodiscard]] PolicyConfig default_policy_config(const EnvConfig& env);
/// Policy document whose missing feature seed falls back to the env seed.
[[nodiscard]] PolicyConfig parse_policy_for_env(const std::string& text, const EnvConfig& env);

} // namespace pdanpg

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

#include "pdanpg/cmdp.hpp"
#include "pdanpg/oracle.hpp"
#include "pdanpg/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pdanpg {

/// Learning parameters of the accelerated inner loop plus its length H.
struct AsgdParams {
    double alpha = 0.0;
    double beta = 0.0;
    double xi = 0.0;
    double delta = 0.0;
    std::size_t inner_len = 0;  // H, even

    void validate() const;
};

inline constexpr double kDefaultInnerLenConstant = 5.0;

/// alpha = 3 sqrt5 G^2 / (mu_F + 3 sqrt5 G^2), beta = mu_F / (9 G^2),
/// xi = 1 / (3 sqrt5 G^2), delta = 1 / (5 G^2). inner_len is the smallest even
/// H >= c_bar (G^2/mu_F) log(sqrt(d) G^2/mu_F).
[[nodiscard]] AsgdParams lemma6_params(double G, double mu_F, std::size_t dim,
                                       double c_bar = kDefaultInnerLenConstant);

/// 0.9 * lambda_min(F_rho(theta)).
[[nodiscard]] double default_mu_f(const TabularCmdp& cmdp, const FeaturePolicy& policy);

/// Gradient of the inner quadratic at omega for inner step h.
using GradientSource = std::function<Vector(const Vector& omega, std::size_t h)>;

/// Iterates of the accelerated inner loop. y and z are transient per step.
struct AsgdState {
    Vector x;
    Vector v;
    Vector tail_sum;
    std::size_t h = 0;

    explicit AsgdState(std::size_t dim)
        : x(Vector::Zero(static_cast<Eigen::Index>(dim))), v(Vector::Zero(static_cast<Eigen::Index>(dim))),
          tail_sum(Vector::Zero(static_cast<Eigen::Index>(dim))) {}
};

/// One accelerated step; adds x_{h+1} to tail_sum when H/2 < h+1 <= H.
void asgd_step(AsgdState& state, const AsgdParams& params, const GradientSource& source);

/// Runs H steps from x0 = v0 = 0 and returns (2/H) sum_{H/2 < h <= H} x_h.
/// H = 0 returns the zero vector.
[[nodiscard]] Vector asgd_inner(const GradientSource& source, const AsgdParams& params, std::size_t dim);

/// Plain SGD from zero with the same tail-averaging window.
[[nodiscard]] Vector sgd_baseline_inner(const GradientSource& source, std::size_t inner_len, double step,
                                        std::size_t dim);

enum class ScheduleMode { theorem1, alternate_constant, manual };

struct Schedule {
    double eta = 0.0;
    double zeta = 0.0;
    double lambda_max = 0.0;
    std::size_t K = 0;
    ScheduleMode mode = ScheduleMode::manual;

    void validate() const;
};

/// lambda_max = 2 / ((1-gamma) c_slater), zeta = lambda_max (1-gamma)/sqrt(K),
/// eta = (1-gamma)^2 / ((1 + lambda_max) sqrt(K)).
[[nodiscard]] Schedule theorem1_schedule(double gamma, std::size_t K, double c_slater);

/// eta = mu_F^2 / (4 G^2 L (1 + lambda_max)); zeta chosen by the caller.
[[nodiscard]] Schedule alternate_schedule(const AssumptionConstants& constants, double lambda_max, std::size_t K,
                                          double zeta);

[[nodiscard]] Schedule manual_schedule(double eta, double zeta, double lambda_max, std::size_t K);

enum class InnerMode { asgd, sgd, exact };

[[nodiscard]] std::string schedule_mode_name(ScheduleMode mode);
[[nodiscard]] std::string inner_mode_name(InnerMode mode);
[[nodiscard]] ScheduleMode parse_schedule_mode(const std::string& name);
[[nodiscard]] InnerMode parse_inner_mode(const std::string& name);

struct RunOptions {
    InnerMode inner = InnerMode::asgd;
    AsgdParams asgd;              // asgd mode; asgd.inner_len is H
    std::size_t sgd_inner_len = 0;  // sgd mode
    double sgd_step = 0.0;
    std::uint64_t seed = 0;
    bool instrument = true;
    std::size_t cadence = 0;  // 0 selects every ceil(K / 10^4)-th iteration
    bool record_wall_clock = false;
    PseudoinverseOptions pinv;
    std::optional<double> j_star;  // computed by constrained_optimum when absent
    /// Test hook: replaces the sampled J_c estimate used by the dual update.
    std::function<double(std::size_t k)> dual_feed;
};

struct TraceRow {
    std::size_t k = 0;
    double lambda = 0.0;
    double j_r = 0.0;
    double j_c = 0.0;
    double gap = 0.0;        // j_star - j_r
    double violation = 0.0;  // max(0, -j_c)
    double inner_err = 0.0;  // ||omega_k - omega*_k||
    std::uint64_t env_steps = 0;  // cumulative through iteration k
    double wall_ms = 0.0;
};

struct RunResult {
    std::vector<TraceRow> trace;
    std::vector<Vector> thetas;    // theta_0 .. theta_{K-1}
    std::vector<double> lambdas;   // lambda_0 .. lambda_K
    Vector final_theta;
    std::uint64_t env_steps = 0;
    double j_star = 0.0;
    double avg_gap = 0.0;
    double avg_violation = 0.0;
    double final_inner_err = 0.0;       // mean inner_err over the last tenth of the trace
    std::optional<std::size_t> best_feasible_k;  // largest J_r among instrumented iterates with J_c >= 0
};

[[nodiscard]] RunResult pd_anpg_run(const TabularCmdp& cmdp, const FeaturePolicy& policy0, const Schedule& schedule,
                                    const RunOptions& options);

/// Column order is fixed: k,lambda,j_r,j_c,gap,violation,inner_err,env_steps,wall_ms.
inline constexpr const char* kTraceHeader = "k,lambda,j_r,j_c,gap,violation,inner_err,env_steps,wall_ms";
[[nodiscard]] std::string trace_csv(const std::vector<TraceRow>& trace);
void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

/// Shortest round-trip decimal form, independent of locale.
[[nodiscard]] std::string format_number(double value);

} // namespace pdanpg

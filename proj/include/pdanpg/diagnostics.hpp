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
#include "pdanpg/policy.hpp"
#include "pdanpg/sampler.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pdanpg {

enum class CheckStatus { pass, fail, inconclusive };

[[nodiscard]] std::string check_status_name(CheckStatus status);

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::fail;
    double measured = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

/// Statistical checks compare |mean - target| against this many standard errors.
inline constexpr double kStandardErrors = 3.0;
/// A statistical check is inconclusive when its standard error exceeds this
/// fraction of the checked quantity.
inline constexpr double kInconclusiveRatio = 0.2;

[[nodiscard]] CheckStatus mean_check(double mean, double standard_error, double target, double scale);

struct DiagnoseOptions {
    std::size_t samples = 100'000;
    std::uint64_t seed = 0;
    double lambda = 1.0;
    std::size_t bound_draws = 100;   // random (theta, lambda) for the gradient-norm bound
    std::size_t pd_pairs = 50;       // random policy pairs for the performance-difference identity
    SamplerOptions sampler;
};

struct DiagnoseReport {
    std::vector<CheckResult> checks;

    [[nodiscard]] bool all_pass() const;
    [[nodiscard]] const CheckResult* find(const std::string& name) const;
};

/// Full estimator and oracle suite at the policy's current theta.
[[nodiscard]] DiagnoseReport run_diagnostics(const TabularCmdp& cmdp, const FeaturePolicy& policy,
                                             const DiagnoseOptions& options);

/// Running first and second moments of a vector-valued statistic.
struct MomentAccumulator {
    Vector sum;
    Vector sum_sq;
    std::size_t count = 0;

    explicit MomentAccumulator(std::size_t dim = 1)
        : sum(Vector::Zero(static_cast<Eigen::Index>(dim))), sum_sq(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

    void add(const Vector& x) {
        sum += x;
        sum_sq += x.cwiseProduct(x);
        ++count;
    }
    void add(double x) { add(Vector::Constant(1, x)); }
    void merge(const MomentAccumulator& other) {
        sum += other.sum;
        sum_sq += other.sum_sq;
        count += other.count;
    }
    [[nodiscard]] Vector mean() const { return sum / static_cast<double>(count); }
    /// Standard error of the mean, per component.
    [[nodiscard]] Vector standard_error() const;
};

/// Splits [0, n) into fixed chunks processed by up to `threads` workers and
/// returns the per-chunk results in chunk order, so reductions do not depend
/// on the worker count. threads = 0 reads ARTIFACT_THREADS (default: hardware).
template <class Result>
std::vector<Result> chunked_parallel(std::size_t n, std::size_t chunk,
                                     const std::function<Result(std::size_t begin, std::size_t end)>& work,
                                     std::size_t threads = 0);

[[nodiscard]] std::size_t worker_threads(std::size_t requested = 0);

} // namespace pdanpg

#include "pdanpg/detail/chunked_parallel.hpp"

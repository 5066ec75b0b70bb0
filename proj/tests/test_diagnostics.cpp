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

#include "support.hpp"

#include "pdanpg/diagnostics.hpp"
#include "pdanpg/error.hpp"

#include <doctest.h>

#include <numeric>

using namespace pdanpg;
using namespace testing;

namespace {

FeaturePolicy default_policy(const TabularCmdp& m) {
    PolicyConfig c;
    c.seed = 7;
    return FeaturePolicy::from_config(m, c);
}

} // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("mean check thresholds") {
    CHECK(mean_check(10.0, 0.1, 10.2, 10.0) == CheckStatus::pass);
    CHECK(mean_check(10.0, 0.1, 10.4, 10.0) == CheckStatus::fail);
    CHECK(mean_check(10.0, 3.0, 10.0, 10.0) == CheckStatus::inconclusive);
    CHECK(check_status_name(CheckStatus::inconclusive) == "inconclusive");
}

TEST_CASE("moment accumulator standard error") {
    MomentAccumulator acc(1);
    for (const double x : {1.0, 2.0, 3.0, 4.0}) acc.add(x);
    CHECK(acc.mean()(0) == doctest::Approx(2.5));
    // sample variance 5/3 over n = 4
    CHECK(acc.standard_error()(0) == doctest::Approx(std::sqrt(5.0 / 12.0)));
}

TEST_CASE("chunked reduction does not depend on the worker count") {
    const std::function<double(std::size_t, std::size_t)> work = [](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += 1.0 / static_cast<double>(i + 1);
        return s;
    };
    const auto one = chunked_parallel<double>(100'003, 1000, work, 1);
    const auto many = chunked_parallel<double>(100'003, 1000, work, 7);
    REQUIRE(one.size() == 101);
    CHECK(one == many);
    CHECK(chunked_parallel<double>(0, 10, work, 3).empty());
    CHECK(worker_threads(3) == 3);
}

TEST_CASE("all checks pass on the random instance") {
    const auto m = seed7();
    auto p = default_policy(m);
    p.set_theta(normal_vector(p.dim(), 12));
    DiagnoseOptions opt;
    opt.samples = 100'000;
    opt.seed = 1;
    const auto report = run_diagnostics(m, p, opt);
    for (const auto& c : report.checks) {
        INFO(c.name << ": " << c.detail);
        CHECK(c.status == CheckStatus::pass);
    }
    CHECK(report.all_pass());
    for (const char* name : {"score_identity", "bellman_consistency", "occupancy_identity", "fisher_psd",
                             "performance_difference", "finite_difference_score", "finite_difference_gradient",
                             "gradient_norm_bound", "unbiased_jc", "unbiased_gradient", "second_moment_jc",
                             "second_moment_q", "second_moment_v", "variance_certificate", "step_accounting"})
        CHECK(report.find(name) != nullptr);
}

TEST_CASE("an injected off-by-one is caught") {
    const auto m = seed7().with_cost(Matrix::Ones(5, 3));
    const auto p = default_policy(m);
    DiagnoseOptions opt;
    opt.samples = 100'000;
    opt.seed = 2;
    opt.sampler.drop_final_term = true;
    const auto report = run_diagnostics(m, p, opt);
    const auto* jc = report.find("unbiased_jc");
    REQUIRE(jc != nullptr);
    CHECK(jc->status == CheckStatus::fail);
    CHECK(jc->reference == doctest::Approx(10.0));
    CHECK_FALSE(report.all_pass());
}

TEST_CASE("too few samples is inconclusive, not a pass") {
    const auto m = seed7();
    DiagnoseOptions opt;
    opt.samples = 10;
    const auto report = run_diagnostics(m, default_policy(m), opt);
    CHECK_FALSE(report.all_pass());
    CHECK(report.find("unbiased_gradient")->status == CheckStatus::inconclusive);
}

TEST_CASE("option validation") {
    const auto m = seed7();
    DiagnoseOptions opt;
    opt.samples = 1;
    CHECK_THROWS_AS((void)run_diagnostics(m, default_policy(m), opt), Error);
    opt.samples = 100;
    opt.lambda = -1.0;
    CHECK_THROWS_AS((void)run_diagnostics(m, default_policy(m), opt), Error);
}

} // TEST_SUITE

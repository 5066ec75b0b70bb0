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

#include "pdanpg/error.hpp"
#include "pdanpg/optimizer.hpp"

#include <doctest.h>

#include <sstream>

using namespace pdanpg;
using namespace testing;

namespace {

/// Gradient of 0.5 w'Fw - b'w, optionally with additive Gaussian noise.
GradientSource quadratic(const Matrix& F, const Vector& b, double noise = 0.0, std::uint64_t seed = 0) {
    return [F, b, noise, seed](const Vector& w, std::size_t h) {
        Vector g = F * w - b;
        if (noise > 0.0) {
            RngStream rng(seed, h);
            for (Eigen::Index i = 0; i < g.size(); ++i) g(i) += noise * rng.normal();
        }
        return g;
    };
}

AsgdParams with_len(AsgdParams p, std::size_t H) {
    p.inner_len = H;
    return p;
}

TabularCmdp three_state() {
    EnvConfig c;
    c.seed = 3;
    c.gamma = 0.9;
    c.random = {3, 2};
    return make_cmdp(c);
}

FeaturePolicy policy_for(const TabularCmdp& m) {
    PolicyConfig c;
    c.seed = 3;
    return FeaturePolicy::from_config(m, c);
}

} // namespace

TEST_SUITE("optimizer") {

TEST_CASE("accelerated step parameters") {
    const auto p = lemma6_params(2.0, 0.5, 10);
    CHECK(p.alpha == doctest::Approx(0.98170).epsilon(1e-5));
    CHECK(p.beta == doctest::Approx(0.5 / 36.0).epsilon(1e-14));
    CHECK(p.xi == doctest::Approx(1.0 / (12.0 * std::sqrt(5.0))).epsilon(1e-14));
    CHECK(p.delta == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(p.inner_len % 2 == 0);
    // smallest even integer above 5 * 8 * log(sqrt(10) * 8)
    const double threshold = 5.0 * 8.0 * std::log(std::sqrt(10.0) * 8.0);
    CHECK(static_cast<double>(p.inner_len) >= threshold);
    CHECK(static_cast<double>(p.inner_len) < threshold + 2.0);

    const auto unit = lemma6_params(1.0, 1.0, 1);
    CHECK(unit.delta == doctest::Approx(0.2));
    CHECK(unit.beta == doctest::Approx(1.0 / 9.0));
    CHECK(lemma6_params(4.0, 0.5, 10).delta == doctest::Approx(p.delta / 4.0));

    CHECK_THROWS_AS((void)lemma6_params(2.0, 0.0, 10), Error);
    CHECK_THROWS_AS((void)lemma6_params(0.0, 1.0, 10), Error);
}

TEST_CASE("accelerated inner loop on a deterministic quadratic") {
    const Matrix F = Matrix::Identity(1, 1);
    const Vector b = Vector::Constant(1, 3.0);
    const auto params = lemma6_params(1.0, 1.0, 1);
    CHECK(std::abs(asgd_inner(quadratic(F, b), with_len(params, 200), 1)(0) - 3.0) <= 1e-6);

    // error decays geometrically in H
    const double e1 = std::abs(asgd_inner(quadratic(F, b), with_len(params, 20), 1)(0) - 3.0);
    const double e2 = std::abs(asgd_inner(quadratic(F, b), with_len(params, 40), 1)(0) - 3.0);
    CHECK(e2 < 0.5 * e1);

    CHECK(asgd_inner(quadratic(F, b), with_len(params, 0), 1).norm() == 0.0);
    CHECK_THROWS_AS((void)asgd_inner(quadratic(F, b), with_len(params, 3), 1), Error);
}

TEST_CASE("accelerated inner loop on a noisy quadratic") {
    Matrix F(2, 2);
    F << 1.0, 0.2, 0.2, 0.5;
    const Vector b = (Vector(2) << 1.0, -1.0).finished();
    const Vector target = F.ldlt().solve(b);
    const auto params = lemma6_params(1.2, 0.4, 2);
    const auto mse = [&](std::size_t H) {
        Moments m;
        for (std::uint64_t run = 0; run < 200; ++run)
            m.add((asgd_inner(quadratic(F, b, 0.5, run), with_len(params, H), 2) - target).squaredNorm());
        return m.mean();
    };
    const double short_run = mse(64);
    const double long_run = mse(1024);
    CHECK(long_run < short_run);
    CHECK(long_run < 0.01);
}

TEST_CASE("plain SGD baseline") {
    const Matrix F = Matrix::Identity(3, 3);
    const Vector b = normal_vector(3, 1);
    CHECK(sgd_baseline_inner(quadratic(F, b), 0, 1.0, 3).norm() == 0.0);
    CHECK((sgd_baseline_inner(quadratic(F, b), 2, 1.0, 3) - b).norm() < 1e-15);
    CHECK_THROWS_AS((void)sgd_baseline_inner(quadratic(F, b), 2, 0.0, 3), Error);
}

TEST_CASE("step-size schedules") {
    const auto s = theorem1_schedule(0.9, 10'000, 0.5);
    CHECK(s.lambda_max == doctest::Approx(40.0));
    CHECK(s.zeta == doctest::Approx(0.04));
    CHECK(s.eta == doctest::Approx(0.01 / (41.0 * 100.0)).epsilon(1e-12));
    CHECK(s.eta == doctest::Approx(2.439e-6).epsilon(1e-3));

    const auto four = theorem1_schedule(0.9, 40'000, 0.5);
    CHECK(four.eta == doctest::Approx(s.eta / 2.0));
    CHECK(four.zeta == doctest::Approx(s.zeta / 2.0));
    CHECK(theorem1_schedule(0.5, 100, 2.0).lambda_max == doctest::Approx(2.0));

    AssumptionConstants k;
    k.G = 2.0;
    k.B = 2.0;
    k.mu_F = 0.5;
    k.L = 10.0;
    const auto alt = alternate_schedule(k, 4.0, 100, 0.01);
    CHECK(alt.eta == doctest::Approx(3.125e-4));
    k.mu_F = 1.0;
    CHECK(alternate_schedule(k, 4.0, 100, 0.01).eta == doctest::Approx(4.0 * alt.eta));
    k.L = 20.0;
    k.mu_F = 0.5;
    CHECK(alternate_schedule(k, 4.0, 100, 0.01).eta == doctest::Approx(alt.eta / 2.0));
    k.L.reset();
    CHECK_THROWS_AS((void)alternate_schedule(k, 4.0, 100, 0.01), Error);

    CHECK_THROWS_AS(manual_schedule(-1.0, 0.1, 1.0, 10).validate(), Error);
    CHECK(parse_schedule_mode("alternate") == ScheduleMode::alternate_constant);
    CHECK(parse_inner_mode("sgd") == InnerMode::sgd);
    CHECK_THROWS_AS((void)parse_inner_mode("adam"), Error);
}

TEST_CASE("dual update") {
    const auto m = three_state();
    const auto p = policy_for(m);
    RunOptions opt;
    opt.inner = InnerMode::exact;

    SUBCASE("zero dual step keeps lambda at zero") {
        const auto r = pd_anpg_run(m, p, manual_schedule(1e-2, 0.0, 5.0, 50), opt);
        for (const double l : r.lambdas) CHECK(l == 0.0);
    }
    SUBCASE("projection clamps to [0, lambda_max]") {
        opt.dual_feed = [](std::size_t k) { return k < 5 ? -10.0 : 10.0; };
        const auto r = pd_anpg_run(m, p, manual_schedule(1e-3, 1.0, 3.0, 10), opt);
        REQUIRE(r.lambdas.size() == 11);
        CHECK(r.lambdas[1] == 3.0);
        CHECK(r.lambdas[5] == 3.0);
        CHECK(r.lambdas[6] == 0.0);
        CHECK(r.lambdas[10] == 0.0);
    }
}

TEST_CASE("small exact steps increase the reward value") {
    const auto m = three_state();
    const auto p = policy_for(m);
    RunOptions opt;
    opt.inner = InnerMode::exact;
    opt.cadence = 1;
    const auto r = pd_anpg_run(m, p, manual_schedule(1e-3, 0.0, 1.0, 200), opt);
    REQUIRE(r.trace.size() == 200);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].j_r >= r.trace[i - 1].j_r - 1e-12);
    CHECK(r.trace.back().inner_err == 0.0);
}

TEST_CASE("runs are deterministic") {
    const auto m = three_state();
    const auto p = policy_for(m);
    RunOptions opt;
    opt.inner = InnerMode::asgd;
    opt.asgd = with_len(lemma6_params(2.0, 0.1, p.dim()), 16);
    opt.seed = 42;
    const auto schedule = theorem1_schedule(m.gamma(), 20, 0.3);
    const auto a = pd_anpg_run(m, p, schedule, opt);
    const auto b = pd_anpg_run(m, p, schedule, opt);
    CHECK(trace_csv(a.trace) == trace_csv(b.trace));
    CHECK(a.final_theta == b.final_theta);
    CHECK(a.env_steps > 0);
    opt.seed = 43;
    CHECK(pd_anpg_run(m, p, schedule, opt).final_theta != a.final_theta);
}

TEST_CASE("trace CSV layout") {
    TraceRow row;
    row.k = 3;
    row.lambda = 0.5;
    row.j_r = 1.25;
    row.env_steps = 100;
    std::istringstream lines(trace_csv({row}));
    std::string header;
    std::string first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == kTraceHeader);
    CHECK(first.rfind("3,0.5,1.25,", 0) == 0);
    CHECK(format_number(0.1) == "0.1");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

} // TEST_SUITE

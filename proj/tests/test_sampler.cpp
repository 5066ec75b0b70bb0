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
#include "pdanpg/oracle.hpp"
#include "pdanpg/sampler.hpp"

#include <doctest.h>

using namespace pdanpg;
using namespace testing;

namespace {

FeaturePolicy seeded_policy(const TabularCmdp& m, std::uint64_t theta_seed) {
    PolicyConfig c;
    c.seed = 7;
    auto p = FeaturePolicy::from_config(m, c);
    p.set_theta(normal_vector(p.dim(), theta_seed));
    return p;
}

} // namespace

TEST_SUITE("sampler") {

TEST_CASE("geometric horizon law") {
    RngStream rng(3, 1);
    Moments m;
    for (int i = 0; i < 1'000'000; ++i) m.add(static_cast<double>(geometric_horizon(rng, 0.9)));
    CHECK(std::abs(m.mean() - 9.0) <= 3.0 * m.se());

    RngStream short_rng(3, 2);
    int zeros = 0;
    constexpr int n = 100'000;
    for (int i = 0; i < n; ++i) zeros += geometric_horizon(short_rng, 0.01) == 0 ? 1 : 0;
    const double p0 = static_cast<double>(zeros) / n;
    CHECK(std::abs(p0 - 0.99) <= 3.0 * std::sqrt(0.99 * 0.01 / n));

    RngStream capped(3, 3);
    for (int i = 0; i < 1000; ++i) CHECK(geometric_horizon(capped, 0.99, 5) <= 5);
}

TEST_CASE("trajectory steps average 3/(1-gamma)") {
    const auto m = seed7();
    const auto p = seeded_policy(m, 1);
    const SamplerContext ctx(m, p);
    Moments steps;
    for (std::uint64_t i = 0; i < 100'000; ++i) {
        auto rng = RngStream::derive(17, i, 0, StreamPurpose::diagnostics);
        steps.add(static_cast<double>(ctx.sample(0.5, rng).trajectory_steps));
    }
    CHECK(std::abs(steps.mean() - 30.0) <= 3.0 * steps.se());
}

TEST_CASE("constant cost gives J_c = 1/(1-gamma)") {
    const auto m = single_state(0.0, 1.0);
    const FeaturePolicy p(1, 1, Matrix::Zero(1, 1), Vector::Zero(1));
    const SamplerContext ctx(m, p);
    Moments jc;
    for (std::uint64_t i = 0; i < 100'000; ++i) {
        auto rng = RngStream::derive(5, i, 0, StreamPurpose::diagnostics);
        jc.add(ctx.sample_cost_value(rng));
    }
    CHECK(std::abs(jc.mean() - 10.0) <= 3.0 * jc.se());
}

TEST_CASE("estimates are unbiased on the random instance") {
    const auto m = seed7();
    const auto p = seeded_policy(m, 2);
    const double lambda = 0.8;
    const double gamma = m.gamma();
    const auto fh = fisher_and_h(m, p, lambda);
    const double jc = evaluate_policy(m, p, Signal::cost).j;
    const Vector omega = normal_vector(p.dim(), 44);
    const Vector target = fh.fisher * omega - fh.grad_l;

    const SamplerContext ctx(m, p);
    constexpr std::uint64_t n = 400'000;
    Moments jc_hat;
    std::vector<Moments> grad(p.dim());
    std::vector<Moments> h(p.dim());
    for (std::uint64_t i = 0; i < n; ++i) {
        auto rng = RngStream::derive(23, i, 0, StreamPurpose::diagnostics);
        const auto s = ctx.sample(lambda, rng);
        jc_hat.add(s.j_c_hat);
        const Vector g = s.gradient_at(omega, gamma);
        const Vector hh = s.h_hat();
        for (std::size_t k = 0; k < p.dim(); ++k) {
            grad[k].add(g(static_cast<Eigen::Index>(k)));
            h[k].add(hh(static_cast<Eigen::Index>(k)));
        }
    }
    // 4 standard errors leaves room for testing many components at once
    CHECK(std::abs(jc_hat.mean() - jc) <= 4.0 * jc_hat.se());
    for (std::size_t k = 0; k < p.dim(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        CHECK(std::abs(grad[k].mean() - target(i)) <= 4.0 * grad[k].se());
        CHECK(std::abs(h[k].mean() - fh.h(i)) <= 4.0 * h[k].se());
    }
}

TEST_CASE("dropping the final term biases the cost estimate") {
    const auto m = single_state(0.0, 1.0);
    const FeaturePolicy p(1, 1, Matrix::Zero(1, 1), Vector::Zero(1));
    SamplerOptions faulty;
    faulty.drop_final_term = true;
    const SamplerContext ctx(m, p, faulty);
    Moments jc;
    for (std::uint64_t i = 0; i < 50'000; ++i) {
        auto rng = RngStream::derive(5, i, 0, StreamPurpose::diagnostics);
        jc.add(ctx.sample_cost_value(rng));
    }
    CHECK(std::abs(jc.mean() - 9.0) <= 3.0 * jc.se());
}

TEST_CASE("samples are reproducible per stream") {
    const auto m = seed7();
    const auto p = seeded_policy(m, 3);
    auto a = RngStream::derive(9, 4, 2, StreamPurpose::inner_gradient);
    auto b = RngStream::derive(9, 4, 2, StreamPurpose::inner_gradient);
    const auto x = sample_algorithm1(m, p, 1.0, a);
    const auto y = sample_algorithm1(m, p, 1.0, b);
    CHECK(x.j_c_hat == y.j_c_hat);
    CHECK(x.score == y.score);
    CHECK(x.trajectory_steps == y.trajectory_steps);
}

TEST_CASE("variance constant") {
    CHECK(variance_sigma_squared(0.9, 2.0, 0.5, 4.0) == doctest::Approx(4.0e7).epsilon(1e-12));
    // hand value: (2*16/0.25 + 32) * 25 / 1e-4
    CHECK((2.0 * 16.0 / 0.25 + 32.0) * 25.0 / 1e-4 == doctest::Approx(4.0e7));
}

TEST_CASE("variance certificate") {
    const auto m = seed7();
    const auto p = seeded_policy(m, 4);
    const double lambda = 1.0;
    auto k = p.analytic_constants();
    k.mu_F = default_mu_f(m, p);
    const double lambda_max = 2.0 / ((1.0 - m.gamma()) * slater_constant(m).c_slater);
    const auto sol = solve_exact(m, p, lambda);

    const auto exact = variance_certificate(m, p, lambda, sol.npg, 0, 1, k, lambda_max, VarianceMode::exact_gradient);
    CHECK(exact.empirical_sq_norm < 1e-16);

    const auto cert = variance_certificate(m, p, lambda, sol.npg, 20'000, 1, k, lambda_max);
    CHECK(cert.trace_fisher == doctest::Approx(sol.fisher.trace()));
    CHECK(cert.empirical_sq_norm + 3.0 * cert.standard_error <= cert.bound);
    CHECK_THROWS_AS((void)variance_certificate(m, p, lambda, Vector::Zero(3), 10, 1, k, lambda_max), Error);
}

} // TEST_SUITE

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
#include "pdanpg/oracle.hpp"

#include <doctest.h>

using namespace pdanpg;
using namespace testing;

namespace {

FeaturePolicy random_policy(const TabularCmdp& m, std::uint64_t theta_seed, double scale = 1.0) {
    PolicyConfig c;
    c.seed = 7;
    auto p = FeaturePolicy::from_config(m, c);
    p.set_theta(normal_vector(p.dim(), theta_seed, scale));
    return p;
}

FeaturePolicy trivial_policy(std::size_t A) {
    return FeaturePolicy(1, A, Matrix::Zero(static_cast<Eigen::Index>(A), 1), Vector::Zero(1));
}

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("geometric series on a single state") {
    const auto m = single_state(0.5, 1.0);
    const auto v = evaluate_policy(m, trivial_policy(1), Signal::cost);
    CHECK(v.v(0) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(v.j == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(occupancy(m, trivial_policy(1)).state(0) == doctest::Approx(1.0));
}

TEST_CASE("zero signal gives zero tables") {
    const auto m = seed7();
    const auto p = random_policy(m, 1);
    const auto v = evaluate_table(m, p.probability_table(), Matrix::Zero(5, 3));
    CHECK(v.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.q.cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.adv.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evaluation matches value iteration") {
    const auto m = seed7();
    for (const std::uint64_t seed : {1, 2, 3}) {
        const auto p = random_policy(m, seed, 2.0);
        const Matrix pi = p.probability_table();
        for (const Signal g : {Signal::reward, Signal::cost}) {
            const Matrix& table = g == Signal::reward ? m.reward() : m.cost();
            const Vector reference = value_iteration(m, pi, table);
            const auto v = evaluate_policy(m, p, g);
            CHECK((v.v - reference).cwiseAbs().maxCoeff() < 1e-9);
            // Q from its definition
            for (std::size_t s = 0; s < 5; ++s) {
                for (std::size_t a = 0; a < 3; ++a) {
                    double q = table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
                    for (std::size_t t = 0; t < 5; ++t) q += m.gamma() * m.transition(s, a, t) * reference(static_cast<Eigen::Index>(t));
                    CHECK(std::abs(v.q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) - q) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("occupancy matches the truncated power sum") {
    const auto m = seed7();
    const auto p = random_policy(m, 4, 2.0);
    const auto occ = occupancy(m, p);
    const Vector reference = truncated_occupancy(m, p.probability_table(), 2000);
    CHECK((occ.state - reference).cwiseAbs().maxCoeff() < 1e-8);
    const double jr = occ.state_action.cwiseProduct(m.reward()).sum() / (1.0 - m.gamma());
    CHECK(std::abs(jr - evaluate_policy(m, p, Signal::reward).j) < 1e-9);
}

TEST_CASE("two-action Fisher by hand") {
    Matrix phi(2, 1);
    phi << 1.0, 0.0;
    const FeaturePolicy p(1, 2, phi, Vector::Zero(1));
    Matrix r(1, 2);
    r << 0.3, 0.7;
    const TabularCmdp m(r, Matrix::Zero(1, 2), Matrix::Ones(2, 1), 0.9, Vector::Ones(1));
    const auto fh = fisher_and_h(m, p, 0.0);
    CHECK(fh.fisher(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    // brute-force sum over (s, a) with hand-computed scores +-0.5
    CHECK(0.5 * 0.25 + 0.5 * 0.25 == doctest::Approx(fh.fisher(0, 0)));
}

TEST_CASE("Fisher and gradient against independent sums") {
    const auto m = seed7();
    const auto p = random_policy(m, 6);
    const double lambda = 0.7;
    const auto fh = fisher_and_h(m, p, lambda);
    const Matrix pi = p.probability_table();
    const Vector d = truncated_occupancy(m, pi, 3000);
    const Matrix signal = m.reward() + lambda * m.cost();
    const Vector v = value_iteration(m, pi, signal);
    Matrix F = Matrix::Zero(10, 10);
    Vector H = Vector::Zero(10);
    for (std::size_t s = 0; s < 5; ++s) {
        for (std::size_t a = 0; a < 3; ++a) {
            const double nu = d(static_cast<Eigen::Index>(s)) * pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
            double q = signal(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
            for (std::size_t t = 0; t < 5; ++t) q += m.gamma() * m.transition(s, a, t) * v(static_cast<Eigen::Index>(t));
            const Vector sc = p.score(s, a);
            F += nu * sc * sc.transpose();
            H += nu * (q - v(static_cast<Eigen::Index>(s))) * sc;
        }
    }
    CHECK((fh.fisher - F).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((fh.h - H).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((fh.grad_l - H / (1.0 - m.gamma())).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("reward gradient matches central differences") {
    const auto m = seed7();
    const auto p = random_policy(m, 8);
    const auto fh = fisher_and_h(m, p, 0.0);
    constexpr double eps = 1e-5;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        Vector up = p.theta();
        Vector down = p.theta();
        up(static_cast<Eigen::Index>(i)) += eps;
        down(static_cast<Eigen::Index>(i)) -= eps;
        const double fd = (value_j(m, p.with_theta(up).probability_table(), m.reward()) -
                           value_j(m, p.with_theta(down).probability_table(), m.reward())) / (2.0 * eps);
        CHECK(std::abs(fd - fh.grad_l(static_cast<Eigen::Index>(i))) < 1e-5);
    }
}

TEST_CASE("gradient norm bound over sampled parameters") {
    const auto m = seed7();
    const double gamma = m.gamma();
    const double lambda_max = 2.0 / ((1.0 - gamma) * slater_constant(m).c_slater);
    RngStream rng(5, 5);
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto p = random_policy(m, 100 + i, 3.0);
        const double lambda = rng.uniform(0.0, lambda_max);
        const double bound = p.analytic_constants().G * (1.0 + lambda_max) / ((1.0 - gamma) * (1.0 - gamma));
        CHECK(fisher_and_h(m, p, lambda).grad_l.norm() <= bound);
    }
}

TEST_CASE("pseudoinverse natural gradient") {
    const Vector g = normal_vector(4, 2);
    CHECK((exact_npg(Matrix::Identity(4, 4), g) - g).norm() < 1e-14);

    Matrix F = Matrix::Zero(2, 2);
    F(0, 0) = 2.0;
    Vector grad(2);
    grad << 4.0, 3.0;
    const Vector w = exact_npg(F, grad);
    CHECK(w(0) == doctest::Approx(2.0));
    CHECK(std::abs(w(1)) < 1e-15);
    CHECK(exact_npg(Matrix::Zero(3, 3), normal_vector(3, 1)).norm() == 0.0);

    const auto m = seed7();
    const auto sol = solve_exact(m, random_policy(m, 9), 1.0);
    CHECK(min_eigenvalue(sol.fisher) > 0.0);
    CHECK((sol.fisher * sol.npg - sol.grad_l).norm() < 1e-8);

    PseudoinverseOptions ridge;
    ridge.tikhonov = 1e-3;
    const Vector damped = exact_npg(sol.fisher, sol.grad_l, ridge);
    const Matrix reg = sol.fisher + 1e-3 * Matrix::Identity(10, 10);
    CHECK((reg * damped - sol.grad_l).norm() < 1e-8);
}

TEST_CASE("unconstrained optimum") {
    const auto ones = single_state(1.0, 0.0);
    CHECK(solve_unconstrained(ones, Signal::reward).value == doctest::Approx(10.0));

    const auto m = two_state();
    double best = -1e9;
    for (const auto& pi : deterministic_policies(2, 2)) best = std::max(best, value_j(m, pi, m.reward()));
    CHECK(solve_unconstrained(m, Signal::reward).value == doctest::Approx(best).epsilon(1e-12));
    CHECK(solve_unconstrained(m, 1.0, 0.0).value == doctest::Approx(best).epsilon(1e-12));

    const auto big = seed7();
    best = -1e9;
    for (const auto& pi : deterministic_policies(5, 3)) best = std::max(best, value_j(big, pi, big.cost()));
    CHECK(solve_unconstrained(big, Signal::cost).value == doctest::Approx(best).epsilon(1e-10));
}

TEST_CASE("constrained optimum") {
    SUBCASE("inactive constraint") {
        auto m = two_state();
        m = m.with_cost(Matrix::Constant(2, 2, 0.1));
        const auto opt = constrained_optimum(m);
        CHECK(opt.lambda_star == 0.0);
        CHECK(opt.j_star == doctest::Approx(solve_unconstrained(m, Signal::reward).value).epsilon(1e-12));
    }
    SUBCASE("grid mixture on two states") {
        const auto m = two_state();
        const auto opt = constrained_optimum(m);
        CHECK(opt.lambda_star > 0.0);
        CHECK(std::abs(opt.j_star - grid_mixture_optimum(m)) < 1e-4);
        CHECK(opt.lambda_star <= opt.lambda_upper);
        const double jd = evaluate_dual(m, opt.lambda_star).value;
        CHECK(evaluate_dual(m, opt.lambda_star + 0.1).value >= jd - 1e-12);
        CHECK(evaluate_dual(m, std::max(0.0, opt.lambda_star - 0.1)).value >= jd - 1e-12);
    }
    SUBCASE("random five-state instance against brute-force mixtures") {
        const auto m = seed7();
        const auto opt = constrained_optimum(m);
        CHECK(std::abs(opt.j_star - grid_mixture_optimum(m, 1e-2)) < 1e-6);
    }
    SUBCASE("no feasible policy") {
        auto m = two_state().with_cost(Matrix::Constant(2, 2, -1.0));
        try {
            (void)constrained_optimum(m);
            FAIL("expected infeasible");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::infeasible);
            CHECK(std::string(e.what()).find("infeasible") != std::string::npos);
        }
    }
}

TEST_CASE("Slater constant") {
    const auto info = slater_constant(seed7());
    CHECK(info.c_slater == doctest::Approx(0.5 * info.max_jc));
    const auto tight = single_state(0.5, 1.0);
    CHECK(slater_constant(tight).c_slater <= 10.0);
}

TEST_CASE("performance difference") {
    const auto m = seed7();
    const auto p1 = random_policy(m, 21);
    const auto same = performance_difference(m, p1, p1, 0.5);
    CHECK(std::abs(same.lhs) < 1e-15);
    CHECK(std::abs(same.rhs) < 1e-12);
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto a = random_policy(m, 200 + 2 * i, 2.0);
        const auto b = random_policy(m, 201 + 2 * i, 2.0);
        const auto pd = performance_difference(m, a, b, 1.3);
        CHECK(std::abs(pd.lhs - pd.rhs) <= 1e-9);
    }
    const auto a = random_policy(m, 31);
    const auto b = random_policy(m, 32);
    const auto classical = performance_difference(m, a, b, 0.0);
    const double diff = value_j(m, a.probability_table(), m.reward()) - value_j(m, b.probability_table(), m.reward());
    CHECK(classical.lhs == doctest::Approx(diff).epsilon(1e-10));
    CHECK(classical.rhs == doctest::Approx(diff).epsilon(1e-9));
}

} // TEST_SUITE

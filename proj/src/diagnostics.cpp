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

#include "pdanpg/diagnostics.hpp"

#include "pdanpg/error.hpp"
#include "pdanpg/optimizer.hpp"
#include "pdanpg/oracle.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace pdanpg {

std::string check_status_name(CheckStatus status) {
    switch (status) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::inconclusive: return "inconclusive";
    }
    return "unknown";
}

std::size_t worker_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ARTIFACT_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && parsed > 0) return static_cast<std::size_t>(parsed);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

Vector MomentAccumulator::standard_error() const {
    const auto n = static_cast<double>(count);
    if (count < 2) return Vector::Constant(sum.size(), std::numeric_limits<double>::infinity());
    const Vector m = mean();
    const Vector var = ((sum_sq - n * m.cwiseProduct(m)) / (n - 1.0)).cwiseMax(0.0);
    return (var / n).cwiseSqrt();
}

CheckStatus mean_check(double mean, double standard_error, double target, double scale) {
    if (!(standard_error <= kInconclusiveRatio * scale)) return CheckStatus::inconclusive;
    return std::abs(mean - target) <= kStandardErrors * standard_error ? CheckStatus::pass : CheckStatus::fail;
}

bool DiagnoseReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::pass; });
}

const CheckResult* DiagnoseReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

CheckResult tolerance_check(std::string name, double measured, double tolerance, std::string detail = {}) {
    CheckResult c;
    c.name = std::move(name);
    c.measured = measured;
    c.tolerance = tolerance;
    c.status = measured <= tolerance ? CheckStatus::pass : CheckStatus::fail;
    c.detail = std::move(detail);
    return c;
}

Vector random_vector(std::uint64_t seed, std::uint64_t index, std::uint64_t tag, std::size_t dim, double scale) {
    auto rng = RngStream::derive(seed, index, tag, StreamPurpose::diagnostics);
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * rng.normal();
    return v;
}

// Stream tags that keep the deterministic draws apart from the Monte-Carlo samples (tag 0).
constexpr std::uint64_t kPairTag = 1;
constexpr std::uint64_t kBoundTag = 2;
constexpr std::uint64_t kOmegaTag = 3;

std::vector<CheckResult> oracle_checks(const TabularCmdp& cmdp, const FeaturePolicy& policy,
                                       const DiagnoseOptions& options) {
    std::vector<CheckResult> out;
    const std::size_t S = cmdp.num_states();
    const std::size_t A = cmdp.num_actions();
    const double gamma = cmdp.gamma();
    const Matrix pi = policy.probability_table();

    // Score identity: sum_a pi(a|s) score(s, a) = 0.
    double score_residual = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const Vector probs = pi.row(static_cast<Eigen::Index>(s)).transpose();
        Vector acc = Vector::Zero(static_cast<Eigen::Index>(policy.dim()));
        for (std::size_t a = 0; a < A; ++a) acc += probs(static_cast<Eigen::Index>(a)) * policy.score(s, a, probs);
        score_residual = std::max(score_residual, acc.norm());
    }
    out.push_back(tolerance_check("score_identity", score_residual, 1e-10));

    // Bellman consistency and advantage centring, recomputed from the raw tables.
    double bellman = 0.0;
    double centring = 0.0;
    for (const Signal g : {Signal::reward, Signal::cost}) {
        const Matrix& signal = g == Signal::reward ? cmdp.reward() : cmdp.cost();
        const auto values = evaluate_policy(cmdp, policy, g);
        for (std::size_t s = 0; s < S; ++s) {
            double rhs = 0.0;
            double adv_mean = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                const double p = pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
                double next = 0.0;
                for (std::size_t s2 = 0; s2 < S; ++s2) next += cmdp.transition(s, a, s2) * values.v(static_cast<Eigen::Index>(s2));
                rhs += p * (signal(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) + gamma * next);
                adv_mean += p * values.adv(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
            }
            bellman = std::max(bellman, std::abs(values.v(static_cast<Eigen::Index>(s)) - rhs));
            centring = std::max(centring, std::abs(adv_mean));
        }
    }
    out.push_back(tolerance_check("bellman_consistency", std::max(bellman, centring), 1e-9,
                                  "max of Bellman residual and advantage centring"));

    // Occupancy: probability vectors, product form, and the value identity.
    const auto occ = occupancy(cmdp, policy);
    const auto rv = evaluate_policy(cmdp, policy, Signal::reward);
    const auto cv = evaluate_policy(cmdp, policy, Signal::cost);
    double occ_err = std::abs(occ.state.sum() - 1.0);
    occ_err = std::max(occ_err, std::abs(occ.state_action.sum() - 1.0));
    occ_err = std::max(occ_err, (occ.state_action - Matrix(pi.array().colwise() * occ.state.array())).cwiseAbs().maxCoeff());
    occ_err = std::max(occ_err, std::abs(occ.state_action.cwiseProduct(cmdp.reward()).sum() / (1.0 - gamma) - rv.j));
    occ_err = std::max(occ_err, std::abs(occ.state_action.cwiseProduct(cmdp.cost()).sum() / (1.0 - gamma) - cv.j));
    out.push_back(tolerance_check("occupancy_identity", occ_err, 1e-9));

    const auto fh = fisher_and_h(cmdp, policy, options.lambda);
    {
        auto c = tolerance_check("fisher_psd", 0.0, 1e-10, "min eigenvalue, symmetric to 1e-12");
        c.measured = min_eigenvalue(fh.fisher);
        c.reference = -1e-10;
        c.status = c.measured >= -1e-10 && (fh.fisher - fh.fisher.transpose()).cwiseAbs().maxCoeff() <= 1e-12
                       ? CheckStatus::pass
                       : CheckStatus::fail;
        out.push_back(c);
    }

    // Performance-difference identity on random policy pairs.
    double pd_err = 0.0;
    for (std::size_t i = 0; i < options.pd_pairs; ++i) {
        const auto p1 = policy.with_theta(random_vector(options.seed, 2 * i, kPairTag, policy.dim(), 1.0));
        const auto p2 = policy.with_theta(random_vector(options.seed, 2 * i + 1, kPairTag, policy.dim(), 1.0));
        const auto pd = performance_difference(cmdp, p1, p2, options.lambda);
        pd_err = std::max(pd_err, std::abs(pd.lhs - pd.rhs));
    }
    out.push_back(tolerance_check("performance_difference", pd_err, 1e-9,
                                  std::to_string(options.pd_pairs) + " random pairs"));

    // Central differences of log pi against the analytic score.
    constexpr double eps = 1e-5;
    double fd_score = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const Vector sc = policy.score(s, a);
            for (std::size_t i = 0; i < policy.dim(); ++i) {
                Vector plus = policy.theta();
                Vector minus = policy.theta();
                plus(static_cast<Eigen::Index>(i)) += eps;
                minus(static_cast<Eigen::Index>(i)) -= eps;
                const double fd = (policy.with_theta(plus).log_probability(s, a) -
                                   policy.with_theta(minus).log_probability(s, a)) / (2.0 * eps);
                fd_score = std::max(fd_score, std::abs(fd - sc(static_cast<Eigen::Index>(i))));
            }
        }
    }
    out.push_back(tolerance_check("finite_difference_score", fd_score, 1e-6));

    // Central differences of J_L against the policy-gradient expression.
    double fd_grad = 0.0;
    for (std::size_t i = 0; i < policy.dim(); ++i) {
        Vector plus = policy.theta();
        Vector minus = policy.theta();
        plus(static_cast<Eigen::Index>(i)) += eps;
        minus(static_cast<Eigen::Index>(i)) -= eps;
        const double fd = (lagrangian_value(cmdp, policy.with_theta(plus), options.lambda) -
                           lagrangian_value(cmdp, policy.with_theta(minus), options.lambda)) / (2.0 * eps);
        fd_grad = std::max(fd_grad, std::abs(fd - fh.grad_l(static_cast<Eigen::Index>(i))));
    }
    out.push_back(tolerance_check("finite_difference_gradient", fd_grad, 1e-5 * std::max(1.0, fh.grad_l.norm())));

    // Gradient-norm bound G (1 + lambda_max) / (1 - gamma)^2 over random (theta, lambda).
    const auto constants = policy.analytic_constants();
    const double lambda_max = 2.0 / ((1.0 - gamma) * slater_constant(cmdp).c_slater);
    const double bound = constants.G * (1.0 + lambda_max) / ((1.0 - gamma) * (1.0 - gamma));
    double worst = 0.0;
    for (std::size_t i = 0; i < options.bound_draws; ++i) {
        const auto p = policy.with_theta(random_vector(options.seed, i, kBoundTag, policy.dim(), 2.0));
        auto rng = RngStream::derive(options.seed, i, kBoundTag + 100, StreamPurpose::diagnostics);
        const double lam = rng.uniform(0.0, lambda_max);
        worst = std::max(worst, fisher_and_h(cmdp, p, lam).grad_l.norm());
    }
    {
        auto c = tolerance_check("gradient_norm_bound", worst, bound,
                                 std::to_string(options.bound_draws) + " random (theta, lambda) draws");
        c.reference = bound;
        out.push_back(c);
    }
    return out;
}

// Per-sample statistics, laid out in one vector so a single pass feeds every check.
enum Stat : Eigen::Index { jc, jc_sq, qr_sq, qc_sq, vr_sq, vc_sq, steps, g_star_sq, kFixedStats };

std::vector<CheckResult> monte_carlo_checks(const TabularCmdp& cmdp, const FeaturePolicy& policy,
                                            const DiagnoseOptions& options) {
    std::vector<CheckResult> out;
    const double gamma = cmdp.gamma();
    const std::size_t d = policy.dim();
    const auto exact = solve_exact(cmdp, policy, options.lambda);
    const Vector omega = random_vector(options.seed, 0, kOmegaTag, d, 1.0);
    const Vector target_grad = exact.fisher * omega - exact.grad_l;
    const Vector& omega_star = exact.npg;

    const SamplerContext ctx(cmdp, policy, options.sampler);
    const std::function<MomentAccumulator(std::size_t, std::size_t)> work = [&](std::size_t begin, std::size_t end) {
        MomentAccumulator acc(static_cast<std::size_t>(kFixedStats) + d);
        Vector row(static_cast<Eigen::Index>(kFixedStats + static_cast<Eigen::Index>(d)));
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = RngStream::derive(options.seed, i, 0, StreamPurpose::diagnostics);
            const auto sample = ctx.sample(options.lambda, rng);
            row(jc) = sample.j_c_hat;
            row(jc_sq) = sample.j_c_hat * sample.j_c_hat;
            row(qr_sq) = sample.q_r * sample.q_r;
            row(qc_sq) = sample.q_c * sample.q_c;
            row(vr_sq) = sample.v_r * sample.v_r;
            row(vc_sq) = sample.v_c * sample.v_c;
            row(steps) = static_cast<double>(sample.trajectory_steps);
            row(g_star_sq) = sample.gradient_at(omega_star, gamma).squaredNorm();
            row.tail(static_cast<Eigen::Index>(d)) = sample.gradient_at(omega, gamma);
            acc.add(row);
        }
        return acc;
    };
    MomentAccumulator total(static_cast<std::size_t>(kFixedStats) + d);
    for (const auto& part : chunked_parallel<MomentAccumulator>(options.samples, 4096, work)) total.merge(part);
    const Vector mean = total.mean();
    const Vector se = total.standard_error();
    const std::string n_text = "n=" + std::to_string(options.samples);

    {
        CheckResult c;
        c.name = "unbiased_jc";
        c.measured = mean(jc);
        c.reference = exact.cost.j;
        c.tolerance = kStandardErrors * se(jc);
        c.status = mean_check(mean(jc), se(jc), exact.cost.j, std::max(1.0, std::abs(exact.cost.j)));
        c.detail = n_text;
        out.push_back(c);
    }
    {
        const Vector m = mean.tail(static_cast<Eigen::Index>(d));
        const Vector e = se.tail(static_cast<Eigen::Index>(d));
        const double scale = std::max(1.0, target_grad.cwiseAbs().maxCoeff());
        CheckResult c;
        c.name = "unbiased_gradient";
        c.status = CheckStatus::pass;
        double worst_ratio = 0.0;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const auto status = mean_check(m(i), e(i), target_grad(i), scale);
            if (status == CheckStatus::inconclusive) c.status = CheckStatus::inconclusive;
            if (status == CheckStatus::fail && c.status != CheckStatus::inconclusive) c.status = CheckStatus::fail;
            worst_ratio = std::max(worst_ratio, std::abs(m(i) - target_grad(i)) / e(i));
        }
        c.measured = worst_ratio;
        c.tolerance = kStandardErrors;
        c.detail = n_text + ", measured = max |mean - target| / SE over components";
        out.push_back(c);
    }

    const double second_moment_bound = 2.0 / ((1.0 - gamma) * (1.0 - gamma));
    const auto moment_check = [&](std::string name, std::initializer_list<Eigen::Index> stats) {
        CheckResult c;
        c.name = std::move(name);
        c.reference = second_moment_bound;
        c.tolerance = second_moment_bound;
        c.status = CheckStatus::pass;
        for (const auto idx : stats) {
            c.measured = std::max(c.measured, mean(idx));
            if (!(se(idx) <= kInconclusiveRatio * second_moment_bound)) c.status = CheckStatus::inconclusive;
        }
        if (c.status == CheckStatus::pass && c.measured > second_moment_bound) c.status = CheckStatus::fail;
        c.detail = n_text;
        out.push_back(c);
    };
    moment_check("second_moment_jc", {jc_sq});
    moment_check("second_moment_q", {qr_sq, qc_sq});
    moment_check("second_moment_v", {vr_sq, vc_sq});

    {
        const auto constants = policy.analytic_constants();
        const double mu_F = default_mu_f(cmdp, policy);
        const double lambda_max = 2.0 / ((1.0 - gamma) * slater_constant(cmdp).c_slater);
        CheckResult c;
        c.name = "variance_certificate";
        c.measured = mean(g_star_sq);
        c.tolerance = kStandardErrors * se(g_star_sq);
        if (mu_F > 0.0) {
            c.reference = variance_sigma_squared(gamma, constants.G, mu_F, lambda_max) * exact.fisher.trace();
            c.status = !(se(g_star_sq) <= kInconclusiveRatio * c.reference) ? CheckStatus::inconclusive
                       : c.measured <= c.reference                          ? CheckStatus::pass
                                                                            : CheckStatus::fail;
            c.detail = n_text + ", reference = sigma^2 trace(F)";
        } else {
            c.status = CheckStatus::inconclusive;
            c.detail = "Fisher matrix is singular at this theta; mu_F unavailable";
        }
        out.push_back(c);
    }
    {
        const double expected = 3.0 / (1.0 - gamma);
        CheckResult c;
        c.name = "step_accounting";
        c.measured = mean(steps);
        c.reference = expected;
        c.tolerance = kStandardErrors * se(steps);
        c.status = mean_check(mean(steps), se(steps), expected, expected);
        c.detail = n_text;
        out.push_back(c);
    }
    return out;
}

} // namespace

DiagnoseReport run_diagnostics(const TabularCmdp& cmdp, const FeaturePolicy& policy, const DiagnoseOptions& options) {
    require(options.lambda >= 0.0, "lambda must be non-negative");
    require(options.samples >= 2, "need at least two samples");
    DiagnoseReport report;
    report.checks = oracle_checks(cmdp, policy, options);
    auto mc = monte_carlo_checks(cmdp, policy, options);
    report.checks.insert(report.checks.end(), mc.begin(), mc.end());
    return report;
}

} // namespace pdanpg

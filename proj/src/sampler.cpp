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

#include "pdanpg/sampler.hpp"

#include "pdanpg/error.hpp"
#include "pdanpg/oracle.hpp"

#include <cmath>
#include <limits>

namespace pdanpg {

std::uint64_t geometric_horizon(RngStream& rng, double gamma, std::optional<std::uint64_t> cap) {
    require(gamma > 0.0 && gamma < 1.0, "gamma out of range");
    // Inverse CDF: Pr(T >= t) = gamma^t, so T = floor(log U / log gamma), U in (0, 1].
    const double u = 1.0 - rng.uniform();
    const double t = std::floor(std::log(u) / std::log(gamma));
    constexpr double limit = static_cast<double>(std::numeric_limits<std::uint32_t>::max());
    auto horizon = static_cast<std::uint64_t>(std::min(t, limit));
    if (cap && horizon > *cap) horizon = *cap;
    return horizon;
}

Vector GradientSample::gradient_at(const Vector& omega, double gamma) const {
    return (score.dot(omega) - adv_l / (1.0 - gamma)) * score;
}

SamplerContext::SamplerContext(const TabularCmdp& cmdp, const FeaturePolicy& policy, SamplerOptions options)
    : cmdp_(&cmdp), policy_(&policy), options_(options), probs_(policy.probability_table().transpose()) {
    require(policy.num_states() == cmdp.num_states() && policy.num_actions() == cmdp.num_actions(),
            "policy does not match the cmdp");
}

// probs_ holds pi transposed (A x S, column-major) so column s is a contiguous
// distribution over actions.
std::size_t SamplerContext::draw_action(std::size_t s, RngStream& rng) const {
    const double* col = probs_.data() + s * cmdp_->num_actions();
    return rng.categorical({col, cmdp_->num_actions()});
}

std::size_t SamplerContext::draw_next_state(std::size_t s, std::size_t a, RngStream& rng) const {
    const auto row = cmdp_->next_state_distribution(s, a);
    // Strided row of a column-major matrix, so no span: inverse CDF by hand.
    const double u = rng.uniform();
    double acc = 0.0;
    const std::size_t S = cmdp_->num_states();
    std::size_t last_positive = 0;
    for (std::size_t next = 0; next < S; ++next) {
        const double p = row(static_cast<Eigen::Index>(next));
        if (p > 0.0) last_positive = next;
        acc += p;
        if (u < acc) return next;
    }
    return last_positive;
}

SamplerContext::Rollout SamplerContext::rollout(std::size_t s0, std::size_t a0, RngStream& rng) const {
    Rollout out;
    out.horizon = geometric_horizon(rng, cmdp_->gamma(), options_.horizon_cap);
    std::size_t s = s0;
    std::size_t a = a0;
    double last_r = cmdp_->reward(s, a);
    double last_c = cmdp_->cost(s, a);
    out.reward_sum = last_r;
    out.cost_sum = last_c;
    for (std::uint64_t j = 0; j < out.horizon; ++j) {
        s = draw_next_state(s, a, rng);
        a = draw_action(s, rng);
        last_r = cmdp_->reward(s, a);
        last_c = cmdp_->cost(s, a);
        out.reward_sum += last_r;
        out.cost_sum += last_c;
    }
    if (options_.drop_final_term) {
        out.reward_sum -= last_r;
        out.cost_sum -= last_c;
    }
    out.last_state = s;
    out.last_action = a;
    return out;
}

double SamplerContext::sample_cost_value(RngStream& rng, std::uint64_t* steps) const {
    const auto s0 = rng.categorical({cmdp_->rho().data(), cmdp_->num_states()});
    const auto a0 = draw_action(s0, rng);
    const auto r = rollout(s0, a0, rng);
    if (steps) *steps = r.horizon + 1;
    return r.cost_sum;
}

GradientSample SamplerContext::sample(double lambda, RngStream& rng) const {
    GradientSample out;

    // Cost value and an occupancy-distributed pair.
    const auto s0 = rng.categorical({cmdp_->rho().data(), cmdp_->num_states()});
    const auto a0 = draw_action(s0, rng);
    const auto first = rollout(s0, a0, rng);
    out.j_c_hat = first.cost_sum;
    out.s_hat = first.last_state;
    out.a_hat = first.last_action;

    // Q at (s_hat, a_hat).
    const auto q = rollout(out.s_hat, out.a_hat, rng);
    out.q_r = q.reward_sum;
    out.q_c = q.cost_sum;

    // V at s_hat with a fresh first action.
    const auto v_action = draw_action(out.s_hat, rng);
    const auto v = rollout(out.s_hat, v_action, rng);
    out.v_r = v.reward_sum;
    out.v_c = v.cost_sum;

    out.adv_r = out.q_r - out.v_r;
    out.adv_c = out.q_c - out.v_c;
    out.adv_l = out.adv_r + lambda * out.adv_c;
    const Vector probs = probs_.col(static_cast<Eigen::Index>(out.s_hat));
    out.score = policy_->score(out.s_hat, out.a_hat, probs);
    out.trajectory_steps = first.horizon + q.horizon + v.horizon + 3;
    return out;
}

GradientSample sample_algorithm1(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda, RngStream& rng,
                                 const SamplerOptions& options) {
    return SamplerContext(cmdp, policy, options).sample(lambda, rng);
}

double variance_sigma_squared(double gamma, double G, double mu_F, double lambda_max) {
    require(gamma > 0.0 && gamma < 1.0, "gamma out of range");
    require(G > 0.0 && mu_F > 0.0, "G and mu_F must be positive");
    require(lambda_max >= 0.0, "lambda_max must be non-negative");
    const double G2 = G * G;
    const double one_minus = 1.0 - gamma;
    return (2.0 * G2 * G2 / (mu_F * mu_F) + 32.0) * (1.0 + lambda_max) * (1.0 + lambda_max) /
           (one_minus * one_minus * one_minus * one_minus);
}

VarianceCertificate variance_certificate(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda,
                                         const Vector& omega_star, std::size_t n_samples, std::uint64_t seed,
                                         const AssumptionConstants& constants, double lambda_max,
                                         VarianceMode mode) {
    require(constants.mu_F.has_value(), "variance certificate needs mu_F");
    require(n_samples >= 2 || mode == VarianceMode::exact_gradient, "need at least two samples");
    const auto fh = fisher_and_h(cmdp, policy, lambda);
    require(omega_star.size() == fh.fisher.rows(), "omega_star has the wrong length");

    VarianceCertificate out;
    out.sigma_squared = variance_sigma_squared(cmdp.gamma(), constants.G, *constants.mu_F, lambda_max);
    out.trace_fisher = fh.fisher.trace();
    out.bound = out.sigma_squared * out.trace_fisher;

    if (mode == VarianceMode::exact_gradient) {
        out.empirical_sq_norm = (fh.fisher * omega_star - fh.grad_l).squaredNorm();
        return out;
    }

    const SamplerContext ctx(cmdp, policy);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto rng = RngStream::derive(seed, i, 0, StreamPurpose::diagnostics);
        const double v = ctx.sample(lambda, rng).gradient_at(omega_star, cmdp.gamma()).squaredNorm();
        sum += v;
        sum_sq += v * v;
    }
    const auto n = static_cast<double>(n_samples);
    out.empirical_sq_norm = sum / n;
    const double var = std::max(0.0, (sum_sq - n * out.empirical_sq_norm * out.empirical_sq_norm) / (n - 1.0));
    out.standard_error = std::sqrt(var / n);
    return out;
}

} // namespace pdanpg

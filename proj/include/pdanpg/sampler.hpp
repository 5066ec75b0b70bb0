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

// Unbiased geometric-horizon sampling of the cost value, the advantage of a
// single occupancy-distributed (s, a) pair, and the resulting stochastic
// gradient of the compatible-function-approximation loss.

#include "pdanpg/cmdp.hpp"
#include "pdanpg/policy.hpp"
#include "pdanpg/rng.hpp"

#include <cstdint>
#include <optional>

namespace pdanpg {

struct SamplerOptions {
    /// Caps every horizon draw; introduces O(gamma^cap) bias. Off by default.
    std::optional<std::uint64_t> horizon_cap;
    /// Fault injection for the diagnostics self-test: each rollout sums one
    /// term fewer than it should (the last visited pair is dropped).
    bool drop_final_term = false;
};

/// Pr(T = t) = (1 - gamma) gamma^t, t = 0, 1, ...
[[nodiscard]] std::uint64_t geometric_horizon(RngStream& rng, double gamma,
                                              std::optional<std::uint64_t> cap = std::nullopt);

struct GradientSample {
    double j_c_hat = 0.0;
    std::size_t s_hat = 0;
    std::size_t a_hat = 0;
    double q_r = 0.0;
    double q_c = 0.0;
    double v_r = 0.0;
    double v_c = 0.0;
    double adv_r = 0.0;
    double adv_c = 0.0;
    double adv_l = 0.0;    // adv_r + lambda adv_c
    Vector score;          // grad log pi(a_hat | s_hat)
    std::uint64_t trajectory_steps = 0;  // T1 + T2 + T3 + 3

    /// (score . omega) score - adv_l / (1 - gamma) score, i.e. F_hat omega - H_hat / (1 - gamma).
    [[nodiscard]] Vector gradient_at(const Vector& omega, double gamma) const;
    /// H_hat = adv_l * score.
    [[nodiscard]] Vector h_hat() const { return adv_l * score; }
};

/// Per-policy cache of action distributions used by repeated rollouts.
class SamplerContext {
public:
    SamplerContext(const TabularCmdp& cmdp, const FeaturePolicy& policy, SamplerOptions options = {});

    [[nodiscard]] GradientSample sample(double lambda, RngStream& rng) const;
    /// Only the first rollout: an unbiased J_c estimate (used by the dual update).
    [[nodiscard]] double sample_cost_value(RngStream& rng, std::uint64_t* steps = nullptr) const;

    [[nodiscard]] const TabularCmdp& cmdp() const noexcept { return *cmdp_; }
    [[nodiscard]] const FeaturePolicy& policy() const noexcept { return *policy_; }

private:
    struct Rollout {
        double reward_sum = 0.0;
        double cost_sum = 0.0;
        std::size_t last_state = 0;
        std::size_t last_action = 0;
        std::uint64_t horizon = 0;
    };

    std::size_t draw_action(std::size_t s, RngStream& rng) const;
    std::size_t draw_next_state(std::size_t s, std::size_t a, RngStream& rng) const;
    Rollout rollout(std::size_t s0, std::size_t a0, RngStream& rng) const;

    const TabularCmdp* cmdp_;
    const FeaturePolicy* policy_;
    SamplerOptions options_;
    Matrix probs_;  // S x A, row-major access through probs_.row(s)
};

/// Convenience wrapper building a one-shot context.
[[nodiscard]] GradientSample sample_algorithm1(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda,
                                               RngStream& rng, const SamplerOptions& options = {});

/// sigma^2 = [2 G^4 / mu_F^2 + 32] (1 + lambda_max)^2 / (1 - gamma)^4.
[[nodiscard]] double variance_sigma_squared(double gamma, double G, double mu_F, double lambda_max);

enum class VarianceMode { sampled, exact_gradient };

struct VarianceCertificate {
    double empirical_sq_norm = 0.0;  // mean ||g_hat(omega*)||^2
    double standard_error = 0.0;
    double sigma_squared = 0.0;
    double trace_fisher = 0.0;
    double bound = 0.0;  // sigma^2 trace(F)
};

/// Monte-Carlo check of E[g g^T] <= sigma^2 F via its trace consequence.
/// Sample i uses RngStream::derive(seed, i, 0, diagnostics).
[[nodiscard]] VarianceCertificate variance_certificate(const TabularCmdp& cmdp, const FeaturePolicy& policy,
                                                       double lambda, const Vector& omega_star,
                                                       std::size_t n_samples, std::uint64_t seed,
                                                       const AssumptionConstants& constants, double lambda_max,
                                                       VarianceMode mode = VarianceMode::sampled);

} // namespace pdanpg

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

// Exact dynamic programming and duality on a tabular CMDP. Everything here is
// a deterministic function of its inputs and serves as ground truth for the
// sampler and the optimizer.

#include "pdanpg/cmdp.hpp"
#include "pdanpg/policy.hpp"

#include <optional>
#include <vector>

namespace pdanpg {

enum class Signal { reward, cost };

struct PolicyValues {
    Vector v;   // V(s)
    Matrix q;   // Q(s, a)
    Matrix adv; // A(s, a) = Q(s, a) - V(s)
    double j = 0.0;  // E_{s ~ rho} V(s)
};

struct Occupancy {
    Vector state;         // d(s)
    Matrix state_action;  // nu(s, a) = d(s) pi(a|s)
};

struct FisherAndGradient {
    Matrix fisher;  // sum nu(s,a) score score^T
    Vector h;       // sum nu(s,a) A_L(s,a) score
    Vector grad_l;  // h / (1 - gamma)
};

struct ExactSolution {
    PolicyValues reward;
    PolicyValues cost;
    Occupancy occupancy;
    Matrix fisher;
    Vector h;
    Vector grad_l;
    Vector npg;
};

/// Evaluation of an arbitrary S x A stochastic policy table.
[[nodiscard]] PolicyValues evaluate_table(const TabularCmdp& cmdp, const Matrix& policy_table, const Matrix& signal);
[[nodiscard]] Occupancy occupancy_table(const TabularCmdp& cmdp, const Matrix& policy_table);

[[nodiscard]] PolicyValues evaluate_policy(const TabularCmdp& cmdp, const FeaturePolicy& policy, Signal g);
[[nodiscard]] Occupancy occupancy(const TabularCmdp& cmdp, const FeaturePolicy& policy);
[[nodiscard]] FisherAndGradient fisher_and_h(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda);

/// Lagrangian value J_r + lambda J_c.
[[nodiscard]] double lagrangian_value(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda);

struct PseudoinverseOptions {
    double tol = 1e-10;  // relative eigenvalue cutoff
    std::optional<double> tikhonov;  // solve (F + delta I) w = g instead
};

/// F^+ grad via symmetric eigendecomposition. All-zero F gives a zero vector.
[[nodiscard]] Vector exact_npg(const Matrix& fisher, const Vector& grad_l, const PseudoinverseOptions& options = {});

/// Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] double min_eigenvalue(const Matrix& symmetric);

[[nodiscard]] ExactSolution solve_exact(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda,
                                        const PseudoinverseOptions& options = {});

struct UnconstrainedSolution {
    double value = 0.0;           // max_pi E_rho V_g
    std::vector<std::size_t> actions;  // greedy deterministic policy
    Vector v;
};

/// Policy iteration on the signal reward_weight * r + cost_weight * c.
[[nodiscard]] UnconstrainedSolution solve_unconstrained(const TabularCmdp& cmdp, double reward_weight,
                                                        double cost_weight);
[[nodiscard]] UnconstrainedSolution solve_unconstrained(const TabularCmdp& cmdp, Signal g);

/// One-hot S x A table of a deterministic policy.
[[nodiscard]] Matrix deterministic_table(std::size_t num_actions, const std::vector<std::size_t>& actions);

struct SlaterInfo {
    double max_jc = 0.0;
    double c_slater = 0.0;
};

/// c_slater = max_pi J_c / 2 clipped into (0, 1/(1-gamma)]. Throws infeasible
/// when max_pi J_c < 0, and also when it is 0 (no strictly feasible point).
[[nodiscard]] SlaterInfo slater_constant(const TabularCmdp& cmdp);

struct DualEvaluation {
    double value = 0.0;  // J_D(lambda) = max_pi J_r + lambda J_c
    double j_r = 0.0;    // of the maximizing deterministic policy
    double j_c = 0.0;    // subgradient
    std::vector<std::size_t> actions;
};

[[nodiscard]] DualEvaluation evaluate_dual(const TabularCmdp& cmdp, double lambda);

struct ConstrainedOptimum {
    double j_star = 0.0;
    double lambda_star = 0.0;
    double c_slater = 0.0;
    double max_jc = 0.0;
    double lambda_upper = 0.0;  // 1 / ((1-gamma) c_slater)
    std::size_t iterations = 0;
    std::vector<double> subgradients;  // J_c at every bisection midpoint
};

/// Minimizes the dual over [0, 1/((1-gamma) c_slater)] by subgradient bisection.
[[nodiscard]] ConstrainedOptimum constrained_optimum(const TabularCmdp& cmdp, double tol = 1e-9);

struct PerformanceDifference {
    double lhs = 0.0;  // J_L(pi1) - J_L(pi2)
    double rhs = 0.0;  // E_{nu^pi1}[A_L^pi2] / (1-gamma)
};

[[nodiscard]] PerformanceDifference performance_difference(const TabularCmdp& cmdp, const FeaturePolicy& first,
                                                           const FeaturePolicy& second, double lambda);

} // namespace pdanpg

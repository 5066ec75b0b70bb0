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

#include "pdanpg/oracle.hpp"

#include "pdanpg/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdanpg {

namespace {

/// Row-stochastic P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
Matrix policy_transition(const TabularCmdp& cmdp, const Matrix& pi) {
    const auto S = static_cast<Eigen::Index>(cmdp.num_states());
    const std::size_t A = cmdp.num_actions();
    Matrix p = Matrix::Zero(S, S);
    for (Eigen::Index s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            p.row(s) += pi(s, static_cast<Eigen::Index>(a)) * cmdp.next_state_distribution(static_cast<std::size_t>(s), a);
    return p;
}

void check_table(const TabularCmdp& cmdp, const Matrix& pi) {
    require(static_cast<std::size_t>(pi.rows()) == cmdp.num_states() &&
                static_cast<std::size_t>(pi.cols()) == cmdp.num_actions(),
            "policy table must be S x A");
}

} // namespace

PolicyValues evaluate_table(const TabularCmdp& cmdp, const Matrix& pi, const Matrix& signal) {
    check_table(cmdp, pi);
    const auto S = static_cast<Eigen::Index>(cmdp.num_states());
    const auto A = static_cast<Eigen::Index>(cmdp.num_actions());
    const Matrix p_pi = policy_transition(cmdp, pi);
    const Vector r_pi = pi.cwiseProduct(signal).rowwise().sum();

    PolicyValues out;
    out.v = (Matrix::Identity(S, S) - cmdp.gamma() * p_pi).partialPivLu().solve(r_pi);
    out.q.resize(S, A);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a)
            out.q(s, a) = signal(s, a) + cmdp.gamma() * cmdp.transition().row(s * A + a).dot(out.v);
    out.adv = out.q.colwise() - out.v;
    out.j = cmdp.rho().dot(out.v);
    return out;
}

Occupancy occupancy_table(const TabularCmdp& cmdp, const Matrix& pi) {
    check_table(cmdp, pi);
    const auto S = static_cast<Eigen::Index>(cmdp.num_states());
    const Matrix p_pi = policy_transition(cmdp, pi);
    Occupancy out;
    out.state = (1.0 - cmdp.gamma()) *
                (Matrix::Identity(S, S) - cmdp.gamma() * p_pi.transpose()).partialPivLu().solve(cmdp.rho());
    out.state_action = pi.array().colwise() * out.state.array();
    return out;
}

PolicyValues evaluate_policy(const TabularCmdp& cmdp, const FeaturePolicy& policy, Signal g) {
    return evaluate_table(cmdp, policy.probability_table(), g == Signal::reward ? cmdp.reward() : cmdp.cost());
}

Occupancy occupancy(const TabularCmdp& cmdp, const FeaturePolicy& policy) {
    return occupancy_table(cmdp, policy.probability_table());
}

double lagrangian_value(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda) {
    const Matrix pi = policy.probability_table();
    return evaluate_table(cmdp, pi, cmdp.reward()).j + lambda * evaluate_table(cmdp, pi, cmdp.cost()).j;
}

namespace {

FisherAndGradient fisher_from_parts(const TabularCmdp& cmdp, const FeaturePolicy& policy, const Matrix& pi,
                                    const Matrix& nu, const Matrix& adv_l) {
    const auto d = static_cast<Eigen::Index>(policy.dim());
    FisherAndGradient out;
    out.fisher = Matrix::Zero(d, d);
    out.h = Vector::Zero(d);
    for (std::size_t s = 0; s < cmdp.num_states(); ++s) {
        const Vector probs = pi.row(static_cast<Eigen::Index>(s)).transpose();
        for (std::size_t a = 0; a < cmdp.num_actions(); ++a) {
            const double weight = nu(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
            if (weight == 0.0) continue;
            const Vector sc = policy.score(s, a, probs);
            out.fisher.selfadjointView<Eigen::Lower>().rankUpdate(sc, weight);
            out.h += weight * adv_l(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) * sc;
        }
    }
    out.fisher = out.fisher.selfadjointView<Eigen::Lower>();
    out.grad_l = out.h / (1.0 - cmdp.gamma());
    return out;
}

} // namespace

FisherAndGradient fisher_and_h(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda) {
    require(lambda >= 0.0, "lambda must be non-negative");
    require(policy.num_states() == cmdp.num_states() && policy.num_actions() == cmdp.num_actions(),
            "policy does not match the cmdp");
    const Matrix pi = policy.probability_table();
    const auto rv = evaluate_table(cmdp, pi, cmdp.reward());
    const auto cv = evaluate_table(cmdp, pi, cmdp.cost());
    const auto occ = occupancy_table(cmdp, pi);
    return fisher_from_parts(cmdp, policy, pi, occ.state_action, rv.adv + lambda * cv.adv);
}

Vector exact_npg(const Matrix& fisher, const Vector& grad_l, const PseudoinverseOptions& options) {
    require(fisher.rows() == fisher.cols() && fisher.rows() == grad_l.size(), "fisher and gradient sizes differ");
    if (fisher.isZero(0.0)) return Vector::Zero(grad_l.size());
    if (options.tikhonov) {
        require(*options.tikhonov > 0.0, "tikhonov damping must be positive");
        const Matrix damped = fisher + *options.tikhonov * Matrix::Identity(fisher.rows(), fisher.cols());
        return damped.ldlt().solve(grad_l);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(fisher);
    const Vector& values = eig.eigenvalues();
    const double top = values.maxCoeff();
    if (top <= 0.0) return Vector::Zero(grad_l.size());
    const double cutoff = options.tol * top;
    const Vector coords = eig.eigenvectors().transpose() * grad_l;
    Vector scaled = Vector::Zero(coords.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) > cutoff) scaled(i) = coords(i) / values(i);
    return eig.eigenvectors() * scaled;
}

double min_eigenvalue(const Matrix& symmetric) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

ExactSolution solve_exact(const TabularCmdp& cmdp, const FeaturePolicy& policy, double lambda,
                          const PseudoinverseOptions& options) {
    require(lambda >= 0.0, "lambda must be non-negative");
    const Matrix pi = policy.probability_table();
    ExactSolution out;
    out.reward = evaluate_table(cmdp, pi, cmdp.reward());
    out.cost = evaluate_table(cmdp, pi, cmdp.cost());
    out.occupancy = occupancy_table(cmdp, pi);
    auto fh = fisher_from_parts(cmdp, policy, pi, out.occupancy.state_action, out.reward.adv + lambda * out.cost.adv);
    out.fisher = std::move(fh.fisher);
    out.h = std::move(fh.h);
    out.grad_l = std::move(fh.grad_l);
    out.npg = exact_npg(out.fisher, out.grad_l, options);
    return out;
}

Matrix deterministic_table(std::size_t num_actions, const std::vector<std::size_t>& actions) {
    Matrix pi = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), static_cast<Eigen::Index>(num_actions));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        require(actions[s] < num_actions, "action index out of range");
        pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    }
    return pi;
}

UnconstrainedSolution solve_unconstrained(const TabularCmdp& cmdp, double reward_weight, double cost_weight) {
    const std::size_t S = cmdp.num_states();
    const std::size_t A = cmdp.num_actions();
    const Matrix signal = reward_weight * cmdp.reward() + cost_weight * cmdp.cost();
    const double scale = (std::abs(reward_weight) + std::abs(cost_weight)) / (1.0 - cmdp.gamma());
    const double tie = 1e-12 * std::max(1.0, scale);

    UnconstrainedSolution out;
    out.actions.assign(S, 0);
    // Policy iteration terminates in at most A^S improvements; the cap guards
    // against tolerance-induced ping-pong between tied actions.
    const std::size_t max_iterations = 10'000;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        const auto values = evaluate_table(cmdp, deterministic_table(A, out.actions), signal);
        out.v = values.v;
        out.value = values.j;
        bool changed = false;
        for (std::size_t s = 0; s < S; ++s) {
            const auto row = values.q.row(static_cast<Eigen::Index>(s));
            const double best = row.maxCoeff();
            const double current = row(static_cast<Eigen::Index>(out.actions[s]));
            if (current >= best - tie) continue;
            std::size_t pick = 0;
            while (row(static_cast<Eigen::Index>(pick)) < best - tie) ++pick;
            out.actions[s] = pick;
            changed = true;
        }
        if (!changed) break;
    }
    // Lowest-index representative among the tied greedy actions.
    const auto values = evaluate_table(cmdp, deterministic_table(A, out.actions), signal);
    for (std::size_t s = 0; s < S; ++s) {
        const auto row = values.q.row(static_cast<Eigen::Index>(s));
        const double current = row(static_cast<Eigen::Index>(out.actions[s]));
        std::size_t pick = 0;
        while (row(static_cast<Eigen::Index>(pick)) < current - tie) ++pick;
        out.actions[s] = pick;
    }
    const auto final_values = evaluate_table(cmdp, deterministic_table(A, out.actions), signal);
    out.v = final_values.v;
    out.value = final_values.j;
    return out;
}

UnconstrainedSolution solve_unconstrained(const TabularCmdp& cmdp, Signal g) {
    return g == Signal::reward ? solve_unconstrained(cmdp, 1.0, 0.0) : solve_unconstrained(cmdp, 0.0, 1.0);
}

SlaterInfo slater_constant(const TabularCmdp& cmdp) {
    SlaterInfo info;
    info.max_jc = solve_unconstrained(cmdp, Signal::cost).value;
    if (info.max_jc <= 0.0) {
        std::ostringstream msg;
        msg << "infeasible: max_pi J_c = " << info.max_jc << " admits no strictly feasible policy";
        fail(ErrorKind::infeasible, msg.str());
    }
    info.c_slater = std::min(0.5 * info.max_jc, 1.0 / (1.0 - cmdp.gamma()));
    return info;
}

DualEvaluation evaluate_dual(const TabularCmdp& cmdp, double lambda) {
    require(lambda >= 0.0, "lambda must be non-negative");
    const auto sol = solve_unconstrained(cmdp, 1.0, lambda);
    const Matrix pi = deterministic_table(cmdp.num_actions(), sol.actions);
    DualEvaluation out;
    out.j_r = evaluate_table(cmdp, pi, cmdp.reward()).j;
    out.j_c = evaluate_table(cmdp, pi, cmdp.cost()).j;
    out.value = out.j_r + lambda * out.j_c;
    out.actions = sol.actions;
    return out;
}

ConstrainedOptimum constrained_optimum(const TabularCmdp& cmdp, double tol) {
    require(tol > 0.0, "bisection tolerance must be positive");
    const auto slater = slater_constant(cmdp);
    ConstrainedOptimum out;
    out.max_jc = slater.max_jc;
    out.c_slater = slater.c_slater;
    out.lambda_upper = 1.0 / ((1.0 - cmdp.gamma()) * slater.c_slater);

    const auto at_zero = evaluate_dual(cmdp, 0.0);
    if (at_zero.j_c >= 0.0) {
        out.lambda_star = 0.0;
        out.j_star = at_zero.j_r;
        return out;
    }

    double lo = 0.0;
    double hi = out.lambda_upper;
    DualEvaluation below = at_zero;               // subgradient < 0
    DualEvaluation above = evaluate_dual(cmdp, hi);  // subgradient >= 0 when lambda* <= upper
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        auto eval = evaluate_dual(cmdp, mid);
        out.subgradients.push_back(eval.j_c);
        ++out.iterations;
        if (eval.j_c >= 0.0) {
            hi = mid;
            above = std::move(eval);
        } else {
            lo = mid;
            below = std::move(eval);
        }
    }

    // The dual is piecewise linear; its minimizer is where the lines of the
    // two bracketing policies cross.
    double lambda_star = 0.5 * (lo + hi);
    const double slope_gap = below.j_c - above.j_c;
    if (above.j_c >= 0.0 && slope_gap < 0.0) {
        const double crossing = (above.j_r - below.j_r) / slope_gap;
        if (crossing >= lo && crossing <= hi) lambda_star = crossing;
    }
    out.lambda_star = lambda_star;
    out.j_star = evaluate_dual(cmdp, lambda_star).value;
    return out;
}

PerformanceDifference performance_difference(const TabularCmdp& cmdp, const FeaturePolicy& first,
                                             const FeaturePolicy& second, double lambda) {
    const Matrix pi1 = first.probability_table();
    const Matrix pi2 = second.probability_table();
    const auto r1 = evaluate_table(cmdp, pi1, cmdp.reward());
    const auto c1 = evaluate_table(cmdp, pi1, cmdp.cost());
    const auto r2 = evaluate_table(cmdp, pi2, cmdp.reward());
    const auto c2 = evaluate_table(cmdp, pi2, cmdp.cost());
    const auto occ1 = occupancy_table(cmdp, pi1);

    PerformanceDifference out;
    out.lhs = (r1.j + lambda * c1.j) - (r2.j + lambda * c2.j);
    out.rhs = (occ1.state_action.cwiseProduct(r2.adv + lambda * c2.adv)).sum() / (1.0 - cmdp.gamma());
    return out;
}

} // namespace pdanpg

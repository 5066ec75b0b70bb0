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

// Fixtures and reference implementations used by the tests. Everything here
// is written against the raw tables on purpose, without calling the library's
// own solvers, so it can serve as an independent oracle.

#include "pdanpg/cmdp.hpp"
#include "pdanpg/policy.hpp"
#include "pdanpg/rng.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace testing {

using pdanpg::Matrix;
using pdanpg::Vector;

inline pdanpg::EnvConfig seed7_config() {
    pdanpg::EnvConfig c;
    c.kind = pdanpg::EnvKind::random;
    c.seed = 7;
    c.gamma = 0.9;
    c.random = {5, 3};
    return c;
}

inline pdanpg::TabularCmdp seed7() { return pdanpg::make_cmdp(seed7_config()); }

/// One state, one action, reward r0 and cost c0 forever.
inline pdanpg::TabularCmdp single_state(double r0, double c0, double gamma = 0.9) {
    return {Matrix::Constant(1, 1, r0), Matrix::Constant(1, 1, c0), Matrix::Ones(1, 1), gamma, Vector::Ones(1)};
}

/// Handcrafted 2-state, 2-action instance with an active constraint.
inline pdanpg::TabularCmdp two_state(double gamma = 0.8) {
    Matrix r(2, 2);
    r << 1.0, 0.2, 0.0, 0.6;
    Matrix c(2, 2);
    c << -0.8, 0.5, 0.3, -0.2;
    Matrix P(4, 2);
    P << 0.9, 0.1,   // s0 a0
        0.2, 0.8,    // s0 a1
        0.6, 0.4,    // s1 a0
        0.1, 0.9;    // s1 a1
    Vector rho(2);
    rho << 0.7, 0.3;
    return {r, c, P, gamma, rho};
}

/// P_pi as an S x S matrix, built entry by entry.
inline Matrix state_transition(const pdanpg::TabularCmdp& m, const Matrix& pi) {
    const auto S = m.num_states();
    const auto A = m.num_actions();
    Matrix P = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t t = 0; t < S; ++t)
                P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) +=
                    pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) * m.transition(s, a, t);
    return P;
}

/// Iterates V <- r_pi + gamma P_pi V until the sup-norm residual is below tol.
inline Vector value_iteration(const pdanpg::TabularCmdp& m, const Matrix& pi, const Matrix& g, double tol = 1e-13) {
    const Matrix P = state_transition(m, pi);
    const Vector r = (pi.array() * g.array()).rowwise().sum();
    Vector v = Vector::Zero(r.size());
    for (int it = 0; it < 100000; ++it) {
        const Vector next = r + m.gamma() * P * v;
        const double residual = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (residual < tol) break;
    }
    return v;
}

inline double value_j(const pdanpg::TabularCmdp& m, const Matrix& pi, const Matrix& g) {
    return m.rho().dot(value_iteration(m, pi, g));
}

/// sum_{t <= T} (1 - gamma) gamma^t Pr(s_t = s) by forward propagation.
inline Vector truncated_occupancy(const pdanpg::TabularCmdp& m, const Matrix& pi, int T) {
    const Matrix P = state_transition(m, pi);
    Vector dist = m.rho();
    Vector acc = Vector::Zero(dist.size());
    double weight = 1.0 - m.gamma();
    for (int t = 0; t <= T; ++t) {
        acc += weight * dist;
        dist = P.transpose() * dist;
        weight *= m.gamma();
    }
    return acc;
}

/// All A^S deterministic policies as one-hot tables.
inline std::vector<Matrix> deterministic_policies(std::size_t S, std::size_t A) {
    std::vector<Matrix> out;
    std::vector<std::size_t> choice(S, 0);
    while (true) {
        Matrix pi = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
        for (std::size_t s = 0; s < S; ++s) pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(choice[s])) = 1.0;
        out.push_back(pi);
        std::size_t i = 0;
        while (i < S && ++choice[i] == A) choice[i++] = 0;
        if (i == S) break;
    }
    return out;
}

/// Best constrained value over mixtures of two deterministic policies, found
/// on a weight grid plus the exact feasibility boundary of every pair.
inline double grid_mixture_optimum(const pdanpg::TabularCmdp& m, double step = 1e-3) {
    const auto policies = deterministic_policies(m.num_states(), m.num_actions());
    std::vector<double> jr;
    std::vector<double> jc;
    for (const auto& pi : policies) {
        jr.push_back(value_j(m, pi, m.reward()));
        jc.push_back(value_j(m, pi, m.cost()));
    }
    double best = -std::numeric_limits<double>::infinity();
    const auto consider = [&](std::size_t i, std::size_t j, double w) {
        const double c = w * jc[i] + (1.0 - w) * jc[j];
        if (c >= -1e-12) best = std::max(best, w * jr[i] + (1.0 - w) * jr[j]);
    };
    const int n = static_cast<int>(std::round(1.0 / step));
    for (std::size_t i = 0; i < policies.size(); ++i) {
        for (std::size_t j = 0; j < policies.size(); ++j) {
            for (int k = 0; k <= n; ++k) consider(i, j, k * step);
            if (jc[i] != jc[j]) {
                const double w = -jc[j] / (jc[i] - jc[j]);
                if (w >= 0.0 && w <= 1.0) consider(i, j, w);
            }
        }
    }
    return best;
}

inline Vector normal_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    pdanpg::RngStream rng(seed, 991);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * rng.normal();
    return v;
}

/// Fixed-size Monte-Carlo mean and standard error.
struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    [[nodiscard]] double mean() const { return sum / static_cast<double>(n); }
    [[nodiscard]] double se() const {
        const double m = mean();
        const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
};

} // namespace testing

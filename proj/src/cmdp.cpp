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

#include "pdanpg/cmdp.hpp"

#include "pdanpg/error.hpp"
#include "pdanpg/oracle.hpp"
#include "pdanpg/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pdanpg {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

void check_probability_vector(const Eigen::Ref<const Eigen::RowVectorXd>& p, const std::string& what) {
    if ((p.array() < 0.0).any() || !p.allFinite()) fail(ErrorKind::invalid_argument, what + " has a negative entry");
    if (std::abs(p.sum() - 1.0) > kProbabilityTolerance)
        fail(ErrorKind::invalid_argument, what + " does not sum to 1");
}

} // namespace

TabularCmdp::TabularCmdp(Matrix reward, Matrix cost, Matrix transition, double gamma, Vector rho)
    : reward_(std::move(reward)), cost_(std::move(cost)), transition_(std::move(transition)), gamma_(gamma),
      rho_(std::move(rho)) {
    const auto S = reward_.rows();
    const auto A = reward_.cols();
    require(S >= 1 && A >= 1, "cmdp needs at least one state and one action");
    require(cost_.rows() == S && cost_.cols() == A, "cost table must be S x A");
    require(transition_.rows() == S * A && transition_.cols() == S, "transition table must be (S*A) x S");
    require(rho_.size() == S, "rho must have length S");
    require(gamma_ > 0.0 && gamma_ < 1.0, "gamma out of range");
    require(reward_.allFinite() && (reward_.array() >= 0.0).all() && (reward_.array() <= 1.0).all(),
            "reward entries must lie in [0, 1]");
    require(cost_.allFinite() && (cost_.array() >= -1.0).all() && (cost_.array() <= 1.0).all(),
            "cost entries must lie in [-1, 1]");
    for (Eigen::Index r = 0; r < transition_.rows(); ++r)
        check_probability_vector(transition_.row(r),
                                 "transition row (s=" + std::to_string(r / A) + ", a=" + std::to_string(r % A) + ")");
    check_probability_vector(rho_.transpose(), "rho");
}

TabularCmdp TabularCmdp::with_cost(Matrix cost) const {
    return {reward_, std::move(cost), transition_, gamma_, rho_};
}

bool operator==(const TabularCmdp& lhs, const TabularCmdp& rhs) {
    return lhs.gamma_ == rhs.gamma_ && lhs.reward_ == rhs.reward_ && lhs.cost_ == rhs.cost_ &&
           lhs.transition_ == rhs.transition_ && lhs.rho_ == rhs.rho_;
}

TabularCmdp generate_random_cmdp(const EnvConfig& config) {
    require(config.kind == EnvKind::random, "generate_random_cmdp needs kind = random");
    const std::size_t S = config.random.states;
    const std::size_t A = config.random.actions;
    require(S >= 2 && A >= 2, "random cmdp needs at least 2 states and 2 actions");
    require(config.gamma > 0.0 && config.gamma < 1.0, "gamma out of range");

    auto rng = RngStream::derive(config.seed, 0, 0, StreamPurpose::environment);
    Matrix transition(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S));
    for (Eigen::Index r = 0; r < transition.rows(); ++r) {
        for (Eigen::Index c = 0; c < transition.cols(); ++c) transition(r, c) = rng.exponential();
        transition.row(r) /= transition.row(r).sum();
    }
    Matrix reward(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (Eigen::Index s = 0; s < reward.rows(); ++s)
        for (Eigen::Index a = 0; a < reward.cols(); ++a) reward(s, a) = rng.uniform();
    const Vector rho = Vector::Constant(static_cast<Eigen::Index>(S), 1.0 / static_cast<double>(S));

    const double required = kSlaterMargin / (1.0 - config.gamma);
    for (int attempt = 0; attempt < kMaxCostRegenerations; ++attempt) {
        auto cost_rng = RngStream::derive(config.seed, static_cast<std::uint64_t>(attempt), 0,
                                          StreamPurpose::cost_regeneration);
        Matrix cost(reward.rows(), reward.cols());
        for (Eigen::Index s = 0; s < cost.rows(); ++s)
            for (Eigen::Index a = 0; a < cost.cols(); ++a) cost(s, a) = cost_rng.uniform(-1.0, 1.0);
        TabularCmdp candidate(reward, std::move(cost), transition, config.gamma, rho);
        if (solve_unconstrained(candidate, Signal::cost).value >= required) return candidate;
    }
    fail(ErrorKind::config, "could not generate a strictly feasible instance after " +
                                std::to_string(kMaxCostRegenerations) + " cost draws; check the size parameters");
}

TabularCmdp build_gridworld(const EnvConfig& config) {
    require(config.kind == EnvKind::gridworld, "build_gridworld needs kind = gridworld");
    const auto& g = config.gridworld;
    if (g.width == 0 || g.height == 0) fail(ErrorKind::config, "grid dimensions must be positive");
    if (!(g.slip >= 0.0 && g.slip <= 1.0)) fail(ErrorKind::config, "slip must lie in [0, 1]");
    if (!(g.living_cost >= -1.0 && g.living_cost <= 1.0)) fail(ErrorKind::config, "living_cost must lie in [-1, 1]");
    if (!(config.gamma > 0.0 && config.gamma < 1.0)) fail(ErrorKind::config, "gamma out of range");
    const auto inside = [&](const GridCell& c) { return c.x < g.width && c.y < g.height; };
    if (!inside(g.goal)) fail(ErrorKind::config, "goal outside grid");
    if (!inside(g.start)) fail(ErrorKind::config, "start outside grid");
    for (const auto& h : g.hazards) {
        if (!inside(h)) fail(ErrorKind::config, "hazard outside grid");
        if (h == g.goal) fail(ErrorKind::config, "hazard placed on the goal");
    }

    const std::size_t S = g.width * g.height;
    constexpr std::size_t A = 4;  // up, right, down, left
    const auto index = [&](std::size_t x, std::size_t y) { return y * g.width + x; };
    const std::size_t goal = index(g.goal.x, g.goal.y);
    std::vector<bool> hazard(S, false);
    for (const auto& h : g.hazards) hazard[index(h.x, h.y)] = true;

    const auto move = [&](std::size_t x, std::size_t y, std::size_t dir) {
        switch (dir) {
        case 0: return index(x, y > 0 ? y - 1 : y);
        case 1: return index(x + 1 < g.width ? x + 1 : x, y);
        case 2: return index(x, y + 1 < g.height ? y + 1 : y);
        default: return index(x > 0 ? x - 1 : x, y);
        }
    };

    Matrix transition = Matrix::Zero(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S));
    for (std::size_t y = 0; y < g.height; ++y) {
        for (std::size_t x = 0; x < g.width; ++x) {
            const std::size_t s = index(x, y);
            for (std::size_t a = 0; a < A; ++a) {
                auto row = transition.row(static_cast<Eigen::Index>(s * A + a));
                if (s == goal) {
                    row(static_cast<Eigen::Index>(goal)) = 1.0;
                    continue;
                }
                // Slip mass splits evenly between the two perpendicular moves.
                const std::array<std::pair<std::size_t, double>, 3> outcomes{{
                    {a, 1.0 - g.slip},
                    {(a + 1) % 4, 0.5 * g.slip},
                    {(a + 3) % 4, 0.5 * g.slip},
                }};
                for (const auto& [dir, p] : outcomes)
                    if (p > 0.0) row(static_cast<Eigen::Index>(move(x, y, dir))) += p;
            }
        }
    }

    Matrix reward = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    Matrix cost = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = transition.row(static_cast<Eigen::Index>(s * A + a));
            double r = 0.0;
            double c = 0.0;
            for (std::size_t next = 0; next < S; ++next) {
                const double p = row(static_cast<Eigen::Index>(next));
                if (p == 0.0) continue;
                if (next == goal && s != goal) r += p;
                c += p * (hazard[next] ? -1.0 : g.living_cost);
            }
            reward(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = std::clamp(r, 0.0, 1.0);
            cost(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = std::clamp(c, -1.0, 1.0);
        }
    }

    Vector rho = Vector::Zero(static_cast<Eigen::Index>(S));
    rho(static_cast<Eigen::Index>(index(g.start.x, g.start.y))) = 1.0;
    return {std::move(reward), std::move(cost), std::move(transition), config.gamma, std::move(rho)};
}

TabularCmdp make_cmdp(const EnvConfig& config) {
    switch (config.kind) {
    case EnvKind::random: return generate_random_cmdp(config);
    case EnvKind::gridworld: return build_gridworld(config);
    case EnvKind::explicit_tables: {
        if (!config.tables) fail(ErrorKind::config, "explicit config without tables");
        const auto& t = *config.tables;
        try {
            return {t.reward, t.cost, t.transition, config.gamma, t.rho};
        } catch (const Error& e) {
            fail(ErrorKind::config, e.what());
        }
    }
    }
    fail(ErrorKind::config, "unknown environment kind");
}

std::string kind_name(EnvKind kind) {
    switch (kind) {
    case EnvKind::random: return "random";
    case EnvKind::gridworld: return "gridworld";
    case EnvKind::explicit_tables: return "explicit";
    }
    return "unknown";
}

} // namespace pdanpg

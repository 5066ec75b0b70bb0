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

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pdanpg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Finite discounted CMDP: maximize J_r subject to J_c >= 0.
///
/// Transition probabilities are stored as an (S*A) x S matrix whose row
/// s*A + a holds P(. | s, a). Instances are validated on construction and
/// immutable afterwards.
class TabularCmdp {
public:
    TabularCmdp(Matrix reward, Matrix cost, Matrix transition, double gamma, Vector rho);

    [[nodiscard]] std::size_t num_states() const noexcept { return static_cast<std::size_t>(reward_.rows()); }
    [[nodiscard]] std::size_t num_actions() const noexcept { return static_cast<std::size_t>(reward_.cols()); }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }

    [[nodiscard]] const Matrix& reward() const noexcept { return reward_; }
    [[nodiscard]] const Matrix& cost() const noexcept { return cost_; }
    [[nodiscard]] const Matrix& transition() const noexcept { return transition_; }
    [[nodiscard]] const Vector& rho() const noexcept { return rho_; }

    [[nodiscard]] double reward(std::size_t s, std::size_t a) const { return reward_(idx(s), idx(a)); }
    [[nodiscard]] double cost(std::size_t s, std::size_t a) const { return cost_(idx(s), idx(a)); }
    [[nodiscard]] double transition(std::size_t s, std::size_t a, std::size_t next) const {
        return transition_(row(s, a), idx(next));
    }
    /// P(. | s, a) as a row view.
    [[nodiscard]] auto next_state_distribution(std::size_t s, std::size_t a) const {
        return transition_.row(row(s, a));
    }

    [[nodiscard]] Eigen::Index row(std::size_t s, std::size_t a) const noexcept {
        return static_cast<Eigen::Index>(s * num_actions() + a);
    }

    /// Same instance with the cost table replaced (used by the feasibility loop).
    [[nodiscard]] TabularCmdp with_cost(Matrix cost) const;

    friend bool operator==(const TabularCmdp& lhs, const TabularCmdp& rhs);

private:
    static Eigen::Index idx(std::size_t i) noexcept { return static_cast<Eigen::Index>(i); }

    Matrix reward_;
    Matrix cost_;
    Matrix transition_;
    double gamma_;
    Vector rho_;
};

enum class EnvKind { random, gridworld, explicit_tables };

struct GridCell {
    std::size_t x = 0;
    std::size_t y = 0;
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct RandomEnvParams {
    std::size_t states = 5;
    std::size_t actions = 3;
    friend bool operator==(const RandomEnvParams&, const RandomEnvParams&) = default;
};

struct GridworldParams {
    std::size_t width = 3;
    std::size_t height = 3;
    GridCell goal{2, 2};
    std::vector<GridCell> hazards;
    GridCell start{0, 0};
    double slip = 0.1;
    double living_cost = 0.05;
    friend bool operator==(const GridworldParams&, const GridworldParams&) = default;
};

struct ExplicitTables {
    Matrix reward;
    Matrix cost;
    Matrix transition;  // (S*A) x S, same layout as TabularCmdp
    Vector rho;
    friend bool operator==(const ExplicitTables& lhs, const ExplicitTables& rhs) {
        return lhs.reward == rhs.reward && lhs.cost == rhs.cost && lhs.transition == rhs.transition &&
               lhs.rho == rhs.rho;
    }
};

struct EnvConfig {
    EnvKind kind = EnvKind::random;
    std::uint64_t seed = 0;
    double gamma = 0.9;
    RandomEnvParams random;
    GridworldParams gridworld;
    std::optional<ExplicitTables> tables;

    friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

/// Minimum max_pi J_c demanded of random instances, in units of 1/(1-gamma).
inline constexpr double kSlaterMargin = 0.1;
inline constexpr int kMaxCostRegenerations = 100;

[[nodiscard]] TabularCmdp generate_random_cmdp(const EnvConfig& config);
[[nodiscard]] TabularCmdp build_gridworld(const EnvConfig& config);
/// Dispatches on config.kind.
[[nodiscard]] TabularCmdp make_cmdp(const EnvConfig& config);

[[nodiscard]] std::string kind_name(EnvKind kind);

// Configuration documents are JSON. Parse errors name the offending key.
[[nodiscard]] EnvConfig parse_config(const std::string& text);
[[nodiscard]] std::string dump_config(const EnvConfig& config);
[[nodiscard]] EnvConfig load_config(const std::filesystem::path& path);
void save_config(const EnvConfig& config, const std::filesystem::path& path);

/// Canonical text form of an instance (explicit tables, round-trip exact).
[[nodiscard]] std::string canonical_serialization(const TabularCmdp& cmdp);

} // namespace pdanpg

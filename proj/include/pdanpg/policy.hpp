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

#include "pdanpg/cmdp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace pdanpg {

enum class FeatureKind {
    random,   // d seeded unit vectors per (s, a); Fisher non-degenerate for d <= S(A-1)
    tabular,  // one-hot per (s, a), d = S*A; complete but Fisher-singular
    explicit_features,
};

struct PolicyConfig {
    FeatureKind kind = FeatureKind::random;
    std::size_t dim = 0;  // 0 selects S*(A-1) for random features
    std::uint64_t seed = 0;
    double scale = 1.0;  // norm of every random feature vector
    std::optional<Matrix> features;  // explicit only, (S*A) x d
    std::optional<Vector> theta;     // initial parameter; zero when absent

    friend bool operator==(const PolicyConfig& lhs, const PolicyConfig& rhs);
};

/// Constants of the policy class and instance. G and B come from the feature
/// norms; mu_F and c_slater are measured by the oracle; L is user supplied.
struct AssumptionConstants {
    double G = 0.0;
    double B = 0.0;
    std::optional<double> mu_F;
    std::optional<double> c_slater;
    std::optional<double> eps_bias;
    std::optional<double> L;

    /// Throws unless G, B, mu_F > 0 and 0 < c_slater <= 1/(1-gamma) for the set fields.
    void validate(double gamma) const;
};

/// Softmax over linear features: pi(a|s) proportional to exp(theta . phi(s, a)).
class FeaturePolicy {
public:
    FeaturePolicy(std::size_t num_states, std::size_t num_actions, Matrix features, Vector theta,
                  FeatureKind kind = FeatureKind::explicit_features, std::uint64_t seed = 0, double scale = 1.0);

    [[nodiscard]] static FeaturePolicy from_config(const TabularCmdp& cmdp, const PolicyConfig& config);

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }
    [[nodiscard]] std::size_t num_states() const noexcept { return num_states_; }
    [[nodiscard]] std::size_t num_actions() const noexcept { return num_actions_; }
    [[nodiscard]] FeatureKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    [[nodiscard]] const Vector& theta() const noexcept { return theta_; }
    void set_theta(Vector theta);
    [[nodiscard]] FeaturePolicy with_theta(Vector theta) const;

    [[nodiscard]] const Matrix& features() const noexcept { return features_; }
    [[nodiscard]] auto feature(std::size_t s, std::size_t a) const {
        return features_.row(static_cast<Eigen::Index>(s * num_actions_ + a));
    }

    /// pi(. | s), computed with max-subtraction.
    [[nodiscard]] Vector action_probabilities(std::size_t s) const;
    /// S x A table of pi(a | s).
    [[nodiscard]] Matrix probability_table() const;
    [[nodiscard]] double log_probability(std::size_t s, std::size_t a) const;
    /// grad_theta log pi(a|s) = phi(s, a) - sum_b pi(b|s) phi(s, b).
    [[nodiscard]] Vector score(std::size_t s, std::size_t a) const;
    /// Same, reusing an already computed pi(. | s).
    [[nodiscard]] Vector score(std::size_t s, std::size_t a, const Vector& probs) const;

    [[nodiscard]] double max_feature_norm() const;
    /// G = 2 max ||phi||, B = 2 max ||phi||^2. Other fields left unset.
    [[nodiscard]] AssumptionConstants analytic_constants() const;

    [[nodiscard]] PolicyConfig snapshot() const;

private:
    void check_state(std::size_t s) const;

    std::size_t num_states_;
    std::size_t num_actions_;
    Matrix features_;  // (S*A) x d
    Vector theta_;
    FeatureKind kind_;
    std::uint64_t seed_;
    double scale_;
};

[[nodiscard]] Matrix make_random_features(std::size_t num_states, std::size_t num_actions, std::size_t dim,
                                          std::uint64_t seed, double scale = 1.0);
[[nodiscard]] Matrix make_tabular_features(std::size_t num_states, std::size_t num_actions);

[[nodiscard]] std::string feature_kind_name(FeatureKind kind);
[[nodiscard]] PolicyConfig parse_policy_config(const std::string& text);
[[nodiscard]] std::string dump_policy_config(const PolicyConfig& config);
[[nodiscard]] PolicyConfig load_policy_config(const std::filesystem::path& path);
void save_policy_config(const PolicyConfig& config, const std::filesystem::path& path);

} // namespace pdanpg

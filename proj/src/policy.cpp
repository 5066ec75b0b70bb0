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

#include "pdanpg/policy.hpp"

#include "json_util.hpp"
#include "pdanpg/error.hpp"
#include "pdanpg/rng.hpp"

#include <cmath>

namespace pdanpg {

bool operator==(const PolicyConfig& lhs, const PolicyConfig& rhs) {
    const auto same = [](const auto& x, const auto& y) {
        if (x.has_value() != y.has_value()) return false;
        return !x.has_value() || (x->rows() == y->rows() && x->cols() == y->cols() && *x == *y);
    };
    return lhs.kind == rhs.kind && lhs.dim == rhs.dim && lhs.seed == rhs.seed && lhs.scale == rhs.scale &&
           same(lhs.features, rhs.features) && same(lhs.theta, rhs.theta);
}

void AssumptionConstants::validate(double gamma) const {
    require(G > 0.0, "G must be positive");
    require(B > 0.0, "B must be positive");
    if (mu_F) require(*mu_F > 0.0, "mu_F must be positive");
    if (c_slater) require(*c_slater > 0.0 && *c_slater <= 1.0 / (1.0 - gamma), "c_slater must lie in (0, 1/(1-gamma)]");
    if (eps_bias) require(*eps_bias >= 0.0, "eps_bias must be non-negative");
    if (L) require(*L > 0.0, "L must be positive");
}

FeaturePolicy::FeaturePolicy(std::size_t num_states, std::size_t num_actions, Matrix features, Vector theta,
                             FeatureKind kind, std::uint64_t seed, double scale)
    : num_states_(num_states), num_actions_(num_actions), features_(std::move(features)), theta_(std::move(theta)),
      kind_(kind), seed_(seed), scale_(scale) {
    require(num_states_ >= 1 && num_actions_ >= 1, "policy needs at least one state and one action");
    require(static_cast<std::size_t>(features_.rows()) == num_states_ * num_actions_, "features must have S*A rows");
    require(features_.cols() >= 1, "feature dimension must be positive");
    require(features_.allFinite(), "features must be finite");
    if (theta_.size() == 0) theta_ = Vector::Zero(features_.cols());
    require(theta_.size() == features_.cols(), "theta length must equal the feature dimension");
}

FeaturePolicy FeaturePolicy::from_config(const TabularCmdp& cmdp, const PolicyConfig& config) {
    const std::size_t S = cmdp.num_states();
    const std::size_t A = cmdp.num_actions();
    Matrix features;
    switch (config.kind) {
    case FeatureKind::random: {
        const std::size_t max_dim = S * (A - 1);
        const std::size_t dim = config.dim == 0 ? max_dim : config.dim;
        if (dim == 0) fail(ErrorKind::config, "random features need at least 2 actions");
        if (dim > max_dim) fail(ErrorKind::config, "random feature dimension exceeds S*(A-1)");
        if (!(config.scale > 0.0 && config.scale <= 1.0)) fail(ErrorKind::config, "feature scale must lie in (0, 1]");
        features = make_random_features(S, A, dim, config.seed, config.scale);
        break;
    }
    case FeatureKind::tabular: features = make_tabular_features(S, A); break;
    case FeatureKind::explicit_features:
        if (!config.features) fail(ErrorKind::config, "explicit policy config without features");
        features = *config.features;
        break;
    }
    Vector theta = config.theta ? *config.theta : Vector::Zero(features.cols());
    if (theta.size() != features.cols()) fail(ErrorKind::config, "theta length does not match the feature dimension");
    return {S, A, std::move(features), std::move(theta), config.kind, config.seed, config.scale};
}

void FeaturePolicy::set_theta(Vector theta) {
    require(theta.size() == theta_.size(), "theta length must equal the feature dimension");
    theta_ = std::move(theta);
}

FeaturePolicy FeaturePolicy::with_theta(Vector theta) const {
    FeaturePolicy copy = *this;
    copy.set_theta(std::move(theta));
    return copy;
}

void FeaturePolicy::check_state(std::size_t s) const { require(s < num_states_, "state index out of range"); }

Vector FeaturePolicy::action_probabilities(std::size_t s) const {
    check_state(s);
    const auto block = features_.middleRows(static_cast<Eigen::Index>(s * num_actions_),
                                            static_cast<Eigen::Index>(num_actions_));
    Vector logits = block * theta_;
    logits.array() -= logits.maxCoeff();
    Vector p = logits.array().exp();
    p /= p.sum();
    return p;
}

Matrix FeaturePolicy::probability_table() const {
    Matrix table(static_cast<Eigen::Index>(num_states_), static_cast<Eigen::Index>(num_actions_));
    for (std::size_t s = 0; s < num_states_; ++s) table.row(static_cast<Eigen::Index>(s)) = action_probabilities(s);
    return table;
}

double FeaturePolicy::log_probability(std::size_t s, std::size_t a) const {
    check_state(s);
    require(a < num_actions_, "action index out of range");
    const auto block = features_.middleRows(static_cast<Eigen::Index>(s * num_actions_),
                                            static_cast<Eigen::Index>(num_actions_));
    const Vector logits = block * theta_;
    const double m = logits.maxCoeff();
    return logits(static_cast<Eigen::Index>(a)) - m - std::log((logits.array() - m).exp().sum());
}

Vector FeaturePolicy::score(std::size_t s, std::size_t a) const { return score(s, a, action_probabilities(s)); }

Vector FeaturePolicy::score(std::size_t s, std::size_t a, const Vector& probs) const {
    check_state(s);
    require(a < num_actions_, "action index out of range");
    const auto block = features_.middleRows(static_cast<Eigen::Index>(s * num_actions_),
                                            static_cast<Eigen::Index>(num_actions_));
    return feature(s, a).transpose() - block.transpose() * probs;
}

double FeaturePolicy::max_feature_norm() const { return features_.rowwise().norm().maxCoeff(); }

AssumptionConstants FeaturePolicy::analytic_constants() const {
    const double phi_max = max_feature_norm();
    AssumptionConstants c;
    c.G = 2.0 * phi_max;
    c.B = 2.0 * phi_max * phi_max;
    return c;
}

PolicyConfig FeaturePolicy::snapshot() const {
    PolicyConfig config;
    config.kind = kind_;
    config.dim = dim();
    config.seed = seed_;
    config.scale = scale_;
    if (kind_ == FeatureKind::explicit_features) config.features = features_;
    config.theta = theta_;
    return config;
}

Matrix make_random_features(std::size_t num_states, std::size_t num_actions, std::size_t dim, std::uint64_t seed,
                            double scale) {
    auto rng = RngStream::derive(seed, 0, 0, StreamPurpose::features);
    Matrix features(static_cast<Eigen::Index>(num_states * num_actions), static_cast<Eigen::Index>(dim));
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        double norm = 0.0;
        do {
            for (Eigen::Index c = 0; c < features.cols(); ++c) features(r, c) = rng.normal();
            norm = features.row(r).norm();
        } while (norm == 0.0);
        features.row(r) *= scale / norm;
    }
    return features;
}

Matrix make_tabular_features(std::size_t num_states, std::size_t num_actions) {
    const auto n = static_cast<Eigen::Index>(num_states * num_actions);
    return Matrix::Identity(n, n);
}

std::string feature_kind_name(FeatureKind kind) {
    switch (kind) {
    case FeatureKind::random: return "random";
    case FeatureKind::tabular: return "tabular";
    case FeatureKind::explicit_features: return "explicit";
    }
    return "unknown";
}

namespace detail {

Json policy_to_json(const PolicyConfig& config) {
    detail::Json doc;
    doc["features"] = feature_kind_name(config.kind);
    doc["dim"] = config.dim;
    doc["seed"] = config.seed;
    if (config.kind == FeatureKind::random) doc["scale"] = config.scale;
    if (config.features) doc["phi"] = detail::to_json(*config.features);
    if (config.theta) doc["theta"] = detail::to_json(*config.theta);
    return doc;
}

PolicyConfig policy_from_json(const Json& doc) {
    if (!doc.is_object()) config_error("<root>", "expected a table");
    PolicyConfig config;
    const auto kind = get_or<std::string>(doc, "features", "", "random");
    if (kind == "random") {
        config.kind = FeatureKind::random;
    } else if (kind == "tabular") {
        config.kind = FeatureKind::tabular;
    } else if (kind == "explicit") {
        config.kind = FeatureKind::explicit_features;
        config.features = matrix_from_json(required(doc, "phi", ""), "phi");
    } else {
        config_error("features", "unknown feature kind '" + kind + "'");
    }
    config.dim = get_or<std::size_t>(doc, "dim", "", 0);
    config.seed = get_or<std::uint64_t>(doc, "seed", "", 0);
    config.scale = get_or<double>(doc, "scale", "", 1.0);
    if (doc.contains("theta")) config.theta = vector_from_json(doc.at("theta"), "theta");
    return config;
}

} // namespace detail

PolicyConfig parse_policy_config(const std::string& text) {
    return detail::policy_from_json(detail::parse_json_text(text));
}

std::string dump_policy_config(const PolicyConfig& config) { return detail::policy_to_json(config).dump(2) + "\n"; }

PolicyConfig load_policy_config(const std::filesystem::path& path) {
    return detail::policy_from_json(detail::read_json_file(path));
}

void save_policy_config(const PolicyConfig& config, const std::filesystem::path& path) {
    detail::write_text_file(path, dump_policy_config(config));
}

} // namespace pdanpg

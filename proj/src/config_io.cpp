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

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace pdanpg {

namespace detail {

Json parse_json_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::config, std::string("malformed document: ") + e.what());
    }
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_json_text(buffer.str());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

namespace {

Json cell_to_json(const GridCell& c) { return Json::array({c.x, c.y}); }

GridCell cell_from_json(const Json& node, const std::string& key) {
    if (!node.is_array() || node.size() != 2) config_error(key, "expected [x, y]");
    return {as<std::size_t>(node[0], key), as<std::size_t>(node[1], key)};
}

Json transition_to_json(const Matrix& transition, std::size_t S, std::size_t A) {
    Json out = Json::array();
    for (std::size_t s = 0; s < S; ++s) {
        Json per_action = Json::array();
        for (std::size_t a = 0; a < A; ++a)
            per_action.push_back(to_json(Vector(transition.row(static_cast<Eigen::Index>(s * A + a)).transpose())));
        out.push_back(std::move(per_action));
    }
    return out;
}

Matrix transition_from_json(const Json& node, std::size_t S, std::size_t A, const std::string& key) {
    if (!node.is_array() || node.size() != S) config_error(key, "expected S nested tables");
    Matrix transition(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
        if (!node[s].is_array() || node[s].size() != A) config_error(key, "expected A rows per state");
        for (std::size_t a = 0; a < A; ++a) {
            const Vector row = vector_from_json(node[s][a], key);
            if (static_cast<std::size_t>(row.size()) != S) config_error(key, "each row needs S probabilities");
            transition.row(static_cast<Eigen::Index>(s * A + a)) = row.transpose();
        }
    }
    return transition;
}

EnvKind kind_from_string(const std::string& name) {
    if (name == "random") return EnvKind::random;
    if (name == "gridworld") return EnvKind::gridworld;
    if (name == "explicit") return EnvKind::explicit_tables;
    config_error("kind", "unknown kind '" + name + "' (expected random, gridworld or explicit)");
}

} // namespace

Json env_config_to_json(const EnvConfig& config) {
    Json doc;
    doc["kind"] = kind_name(config.kind);
    doc["seed"] = config.seed;
    doc["gamma"] = config.gamma;
    switch (config.kind) {
    case EnvKind::random:
        doc["random"] = {{"states", config.random.states}, {"actions", config.random.actions}};
        break;
    case EnvKind::gridworld: {
        const auto& g = config.gridworld;
        Json hazards = Json::array();
        for (const auto& h : g.hazards) hazards.push_back(cell_to_json(h));
        doc["gridworld"] = {{"width", g.width},          {"height", g.height},       {"goal", cell_to_json(g.goal)},
                            {"hazards", hazards},        {"start", cell_to_json(g.start)}, {"slip", g.slip},
                            {"living_cost", g.living_cost}};
        break;
    }
    case EnvKind::explicit_tables: {
        if (!config.tables) fail(ErrorKind::config, "explicit config without tables");
        const auto& t = *config.tables;
        const auto S = static_cast<std::size_t>(t.reward.rows());
        const auto A = static_cast<std::size_t>(t.reward.cols());
        doc["explicit"] = {{"states", S},
                           {"actions", A},
                           {"reward", to_json(t.reward)},
                           {"cost", to_json(t.cost)},
                           {"transition", transition_to_json(t.transition, S, A)},
                           {"rho", to_json(t.rho)}};
        break;
    }
    }
    return doc;
}

EnvConfig env_config_from_json(const Json& doc) {
    if (!doc.is_object()) config_error("<root>", "expected a table");
    EnvConfig config;
    config.kind = kind_from_string(get<std::string>(doc, "kind", ""));
    config.seed = get<std::uint64_t>(doc, "seed", "");
    config.gamma = get<double>(doc, "gamma", "");
    if (!(config.gamma > 0.0 && config.gamma < 1.0)) config_error("gamma", "gamma out of range (0, 1)");

    switch (config.kind) {
    case EnvKind::random: {
        const auto& node = required(doc, "random", "");
        config.random.states = get<std::size_t>(node, "states", "random");
        config.random.actions = get<std::size_t>(node, "actions", "random");
        if (config.random.states < 2) config_error("random.states", "need at least 2 states");
        if (config.random.actions < 2) config_error("random.actions", "need at least 2 actions");
        break;
    }
    case EnvKind::gridworld: {
        const auto& node = required(doc, "gridworld", "");
        auto& g = config.gridworld;
        g.width = get<std::size_t>(node, "width", "gridworld");
        g.height = get<std::size_t>(node, "height", "gridworld");
        g.goal = cell_from_json(required(node, "goal", "gridworld"), "gridworld.goal");
        g.hazards.clear();
        if (node.contains("hazards")) {
            const auto& hz = node.at("hazards");
            if (!hz.is_array()) config_error("gridworld.hazards", "expected an array of [x, y]");
            for (const auto& h : hz) g.hazards.push_back(cell_from_json(h, "gridworld.hazards"));
        }
        if (node.contains("start")) g.start = cell_from_json(node.at("start"), "gridworld.start");
        g.slip = get_or<double>(node, "slip", "gridworld", g.slip);
        g.living_cost = get_or<double>(node, "living_cost", "gridworld", g.living_cost);
        break;
    }
    case EnvKind::explicit_tables: {
        const auto& node = required(doc, "explicit", "");
        const auto S = get<std::size_t>(node, "states", "explicit");
        const auto A = get<std::size_t>(node, "actions", "explicit");
        ExplicitTables t;
        t.reward = matrix_from_json(required(node, "reward", "explicit"), "explicit.reward");
        t.cost = matrix_from_json(required(node, "cost", "explicit"), "explicit.cost");
        if (static_cast<std::size_t>(t.reward.rows()) != S || static_cast<std::size_t>(t.reward.cols()) != A)
            config_error("explicit.reward", "shape must be states x actions");
        if (static_cast<std::size_t>(t.cost.rows()) != S || static_cast<std::size_t>(t.cost.cols()) != A)
            config_error("explicit.cost", "shape must be states x actions");
        t.transition = transition_from_json(required(node, "transition", "explicit"), S, A, "explicit.transition");
        t.rho = vector_from_json(required(node, "rho", "explicit"), "explicit.rho");
        if (static_cast<std::size_t>(t.rho.size()) != S) config_error("explicit.rho", "length must equal states");
        config.tables = std::move(t);
        break;
    }
    }
    return config;
}

} // namespace detail

EnvConfig parse_config(const std::string& text) { return detail::env_config_from_json(detail::parse_json_text(text)); }

std::string dump_config(const EnvConfig& config) { return detail::env_config_to_json(config).dump(2) + "\n"; }

EnvConfig load_config(const std::filesystem::path& path) {
    return detail::env_config_from_json(detail::read_json_file(path));
}

void save_config(const EnvConfig& config, const std::filesystem::path& path) {
    detail::write_text_file(path, dump_config(config));
}

std::string canonical_serialization(const TabularCmdp& cmdp) {
    EnvConfig config;
    config.kind = EnvKind::explicit_tables;
    config.gamma = cmdp.gamma();
    config.tables = ExplicitTables{cmdp.reward(), cmdp.cost(), cmdp.transition(), cmdp.rho()};
    return dump_config(config);
}

} // namespace pdanpg

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

// Internal helpers for reading and writing the JSON documents used by the
// configuration, policy snapshot and manifest formats.

#include "pdanpg/cmdp.hpp"
#include "pdanpg/error.hpp"
#include "pdanpg/policy.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace pdanpg::detail {

using Json = nlohmann::ordered_json;

[[noreturn]] inline void config_error(const std::string& key, const std::string& what) {
    fail(ErrorKind::config, "key '" + key + "': " + what);
}

inline const Json& required(const Json& node, const std::string& key, const std::string& path) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!node.is_object()) config_error(path.empty() ? "<root>" : path, "expected a table");
    const auto it = node.find(key);
    if (it == node.end()) config_error(full, "missing required key '" + key + "'");
    return *it;
}

template <class T>
T as(const Json& value, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!value.is_number()) config_error(key, "expected a number");
        } else if constexpr (std::is_integral_v<T>) {
            if (!value.is_number_integer()) config_error(key, "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (value.is_number_integer() && !value.is_number_unsigned() && value.get<long long>() < 0)
                    config_error(key, "expected a non-negative integer");
            }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!value.is_string()) config_error(key, "expected a string");
        }
        return value.get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_error(key, e.what());
    }
}

template <class T>
T get(const Json& node, const std::string& key, const std::string& path) {
    return as<T>(required(node, key, path), path.empty() ? key : path + "." + key);
}

template <class T>
T get_or(const Json& node, const std::string& key, const std::string& path, T fallback) {
    if (!node.contains(key)) return fallback;
    return as<T>(node.at(key), path.empty() ? key : path + "." + key);
}

inline Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Json to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

inline Vector vector_from_json(const Json& node, const std::string& key) {
    if (!node.is_array()) config_error(key, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Eigen::Index>(i)) = as<double>(node[i], key);
    return v;
}

inline Matrix matrix_from_json(const Json& node, const std::string& key) {
    if (!node.is_array() || node.empty()) config_error(key, "expected a non-empty array of rows");
    const std::size_t cols = node[0].is_array() ? node[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(node.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < node.size(); ++r) {
        if (!node[r].is_array() || node[r].size() != cols) config_error(key, "rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as<double>(node[r][c], key);
    }
    return m;
}

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
Json parse_json_text(const std::string& text);

Json env_config_to_json(const EnvConfig& config);
EnvConfig env_config_from_json(const Json& doc);

Json policy_to_json(const PolicyConfig& config);
PolicyConfig policy_from_json(const Json& doc);

} // namespace pdanpg::detail

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

#include "support.hpp"

#include "pdanpg/error.hpp"
#include "pdanpg/oracle.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <fstream>

using namespace pdanpg;
using namespace testing;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("pdanpg_test_" + name);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::numeric;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("cmdp") {

TEST_CASE("random instance is stochastic and strictly feasible") {
    const auto m = seed7();
    CHECK(m.num_states() == 5);
    CHECK(m.num_actions() == 3);
    for (Eigen::Index r = 0; r < m.transition().rows(); ++r) CHECK(std::abs(m.transition().row(r).sum() - 1.0) < 1e-12);
    CHECK(std::abs(m.rho().sum() - 1.0) < 1e-12);
    // max_pi J_c by brute force over deterministic policies
    double best = -1e9;
    for (const auto& pi : deterministic_policies(5, 3)) best = std::max(best, value_j(m, pi, m.cost()));
    CHECK(best >= 1.0);
}

TEST_CASE("generation is deterministic and seed sensitive") {
    CHECK(seed7() == seed7());
    auto other = seed7_config();
    other.seed = 8;
    const auto m8 = make_cmdp(other);
    CHECK_FALSE(m8 == seed7());
    CHECK(canonical_serialization(seed7()) == canonical_serialization(seed7()));
}

TEST_CASE("construction rejects malformed tables") {
    CHECK(kind_of([] { (void)single_state(0.5, 0.0, 1.0); }) == ErrorKind::invalid_argument);
    CHECK(message_of([] { (void)single_state(0.5, 0.0, 1.5); }).find("gamma out of range") != std::string::npos);
    CHECK(kind_of([] { (void)single_state(1.5, 0.0); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { (void)single_state(0.5, -2.0); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] {
              TabularCmdp bad(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Constant(1, 1, 0.9), 0.9, Vector::Ones(1));
          }) == ErrorKind::invalid_argument);
}

TEST_CASE("gridworld construction") {
    EnvConfig c;
    c.kind = EnvKind::gridworld;
    c.gridworld.width = 3;
    c.gridworld.height = 3;
    c.gridworld.goal = {2, 2};
    c.gridworld.hazards = {{1, 1}};
    const auto m = make_cmdp(c);
    CHECK(m.num_states() == 9);
    CHECK(m.num_actions() == 4);
    for (Eigen::Index r = 0; r < m.transition().rows(); ++r) CHECK(std::abs(m.transition().row(r).sum() - 1.0) < 1e-12);

    SUBCASE("no slip gives one-hot rows") {
        c.gridworld.slip = 0.0;
        const auto det = make_cmdp(c);
        for (Eigen::Index r = 0; r < det.transition().rows(); ++r) {
            CHECK(det.transition().row(r).maxCoeff() == 1.0);
            CHECK((det.transition().row(r).array() == 0.0).count() == 8);
        }
    }
    SUBCASE("invalid layouts") {
        auto bad = c;
        bad.gridworld.goal = {3, 0};
        CHECK(kind_of([&] { (void)make_cmdp(bad); }) == ErrorKind::config);
        bad = c;
        bad.gridworld.hazards = {{2, 2}};
        CHECK(kind_of([&] { (void)make_cmdp(bad); }) == ErrorKind::config);
    }
}

TEST_CASE("1x2 grid without hazards: every policy has positive J_c") {
    EnvConfig c;
    c.kind = EnvKind::gridworld;
    c.gridworld.width = 2;
    c.gridworld.height = 1;
    c.gridworld.goal = {1, 0};
    c.gridworld.start = {0, 0};
    const auto m = make_cmdp(c);
    CHECK(m.num_states() == 2);
    for (const auto& pi : deterministic_policies(2, 4)) CHECK(value_j(m, pi, m.cost()) > 0.0);
}

TEST_CASE("config round trip and validation") {
    const auto path = temp_path("env.json");
    save_config(seed7_config(), path);
    CHECK(load_config(path) == seed7_config());

    const std::string gridded = dump_config([] {
        EnvConfig c;
        c.kind = EnvKind::gridworld;
        c.gridworld.hazards = {{1, 1}, {0, 2}};
        return c;
    }());
    CHECK(parse_config(gridded).gridworld.hazards.size() == 2);

    // explicit tables survive a round trip exactly
    const std::string canon = canonical_serialization(two_state());
    CHECK(make_cmdp(parse_config(canon)) == two_state());

    const std::string bad_gamma = R"({"kind":"random","seed":1,"gamma":1.5,"random":{"states":5,"actions":3}})";
    CHECK(message_of([&] { (void)parse_config(bad_gamma); }).find("gamma out of range") != std::string::npos);
    const std::string no_seed = R"({"kind":"random","gamma":0.9,"random":{"states":5,"actions":3}})";
    CHECK(message_of([&] { (void)parse_config(no_seed); }).find("seed") != std::string::npos);
    CHECK(kind_of([&] { (void)parse_config(no_seed); }) == ErrorKind::config);
    CHECK(kind_of([] { (void)parse_config("{not json"); }) == ErrorKind::config);
    CHECK(kind_of([] { (void)load_config("/nonexistent/env.json"); }) == ErrorKind::io);
    std::filesystem::remove(path);
}

} // TEST_SUITE

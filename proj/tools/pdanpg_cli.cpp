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

// Command-line driver. Talks to the library only through the C interface.

#include "pdanpg/pdanpg.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using Json = nlohmann::ordered_json;

enum Exit : int { ok = 0, check_failed = 1, usage = 2, infeasible = 3, runtime = 4 };

struct Failure {
    int code;
    std::string message;
};

int exit_code(pdanpg_status status) {
    switch (status) {
    case PDANPG_OK: return ok;
    case PDANPG_ERR_INVALID_ARGUMENT:
    case PDANPG_ERR_CONFIG: return usage;
    case PDANPG_ERR_INFEASIBLE: return infeasible;
    case PDANPG_ERR_IO:
    case PDANPG_ERR_NUMERIC:
    case PDANPG_ERR_INTERNAL: return runtime;
    }
    return runtime;
}

void check(pdanpg_status status) {
    if (status == PDANPG_OK) return;
    std::string message = pdanpg_last_error();
    if (status == PDANPG_ERR_INFEASIBLE && message.rfind("infeasible", 0) != 0) message = "infeasible: " + message;
    throw Failure{exit_code(status), message};
}

struct EnvDeleter {
    void operator()(pdanpg_env* e) const { pdanpg_env_free(e); }
};
struct PolicyDeleter {
    void operator()(pdanpg_policy* p) const { pdanpg_policy_free(p); }
};
struct StringDeleter {
    void operator()(char* s) const { pdanpg_string_free(s); }
};
using EnvPtr = std::unique_ptr<pdanpg_env, EnvDeleter>;
using PolicyPtr = std::unique_ptr<pdanpg_policy, PolicyDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{usage, "cannot read " + path};
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Json read_json(const std::string& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Failure{usage, path + ": malformed document: " + e.what()};
    }
}

EnvPtr load_env(const std::string& path) {
    pdanpg_env* env = nullptr;
    check(pdanpg_env_load(path.c_str(), &env));
    return EnvPtr(env);
}

std::string take(char* s) { return StringPtr(s).get(); }

Json cell(const std::vector<std::size_t>& xy) { return Json::array({xy.at(0), xy.at(1)}); }

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
    std::string kind = "random";
    std::uint64_t seed = 0;
    std::size_t states = 5;
    std::size_t actions = 3;
    double gamma = 0.9;
    std::string out;
    std::size_t width = 3;
    std::size_t height = 3;
    std::vector<std::size_t> goal{2, 2};
    std::vector<std::size_t> start{0, 0};
    std::vector<std::vector<std::size_t>> hazards;
    double slip = 0.1;
    double living_cost = 0.05;
};

int run_generate(const GenerateArgs& a) {
    Json config;
    config["kind"] = a.kind;
    config["seed"] = a.seed;
    config["gamma"] = a.gamma;
    if (a.kind == "random") {
        config["random"] = {{"states", a.states}, {"actions", a.actions}};
    } else {
        Json hazards = Json::array();
        for (const auto& h : a.hazards) hazards.push_back(cell(h));
        config["gridworld"] = {{"width", a.width}, {"height", a.height}, {"goal", cell(a.goal)},
                               {"hazards", hazards}, {"start", cell(a.start)}, {"slip", a.slip},
                               {"living_cost", a.living_cost}};
    }
    pdanpg_env* raw = nullptr;
    check(pdanpg_env_from_json(config.dump().c_str(), &raw));
    const EnvPtr env(raw);
    check(pdanpg_env_save(env.get(), a.out.c_str()));
    char* summary = nullptr;
    check(pdanpg_env_summary_json(env.get(), &summary));
    std::cout << take(summary) << "\n";
    return ok;
}

// ---- oracle ----------------------------------------------------------------

int run_oracle(const std::string& env_path) {
    const auto env = load_env(env_path);
    char* record = nullptr;
    check(pdanpg_oracle_json(env.get(), &record));
    std::cout << take(record) << "\n";
    return ok;
}

// ---- diagnose --------------------------------------------------------------

struct DiagnoseArgs {
    std::string env;
    std::string policy;
    std::size_t samples = 100'000;
    std::uint64_t seed = 0;
    double lambda = 1.0;
    bool random_theta = false;
    std::string fault;
};

int run_diagnose(const DiagnoseArgs& a) {
    const auto env = load_env(a.env);
    pdanpg_policy* raw = nullptr;
    const std::string policy_text = a.policy.empty() ? std::string() : read_file(a.policy);
    check(pdanpg_policy_create(env.get(), a.policy.empty() ? nullptr : policy_text.c_str(), &raw));
    const PolicyPtr policy(raw);

    Json options{{"samples", a.samples}, {"seed", a.seed}, {"lambda", a.lambda}, {"random_theta", a.random_theta}};
    if (a.fault == "drop-final-term") options["drop_final_term"] = true;
    int all_pass = 0;
    char* report = nullptr;
    check(pdanpg_diagnose_json(env.get(), policy.get(), options.dump().c_str(), &all_pass, &report));
    const Json doc = Json::parse(take(report));

    std::vector<std::string> failing;
    for (const auto& c : doc.at("checks")) {
        const auto status = c.at("status").get<std::string>();
        std::cout << std::left << std::setw(14) << status << std::setw(28) << c.at("name").get<std::string>()
                  << " measured=" << c.at("measured").dump() << " reference=" << c.at("reference").dump()
                  << " tolerance=" << c.at("tolerance").dump();
        if (!c.at("detail").get<std::string>().empty()) std::cout << "  (" << c.at("detail").get<std::string>() << ")";
        std::cout << "\n";
        if (status != "pass") failing.push_back(c.at("name").get<std::string>() + " [" + status + "]");
    }
    if (all_pass) return ok;
    std::cerr << "checks not passing:";
    for (const auto& f : failing) std::cerr << " " << f;
    std::cerr << "\n";
    return check_failed;
}

// ---- solve / bench -----------------------------------------------------------

struct RunArgs {
    std::string env;
    std::string policy;
    std::string manifest;
    std::string out_dir;
    std::optional<std::size_t> K;
    std::optional<std::size_t> H;
    std::optional<std::string> schedule;
    std::optional<std::string> inner;
    std::optional<std::uint64_t> seed;
    std::optional<double> L;
    std::optional<double> eta;
    std::optional<double> zeta;
    std::optional<double> lambda_max;
    std::optional<double> mu_F;
    std::optional<double> sgd_step;
    std::optional<double> c_bar;
    std::optional<std::size_t> cadence;
    bool timing = false;
};

template <class T>
void put(Json& node, const char* key, const std::optional<T>& value) {
    if (value) node[key] = *value;
}

bool has_run_flags(const RunArgs& a) {
    return a.K || a.H || a.schedule || a.inner || a.seed || a.L || a.eta || a.zeta || a.lambda_max || a.mu_F ||
           a.sgd_step || a.c_bar || a.cadence || a.timing || !a.env.empty() || !a.policy.empty();
}

Json build_request(const RunArgs& a) {
    if (a.env.empty()) throw Failure{usage, "--env is required unless --manifest is given"};
    Json request;
    request["env"] = read_json(a.env);
    if (!a.policy.empty()) request["policy"] = read_json(a.policy);
    Json run = Json::object();
    put(run, "K", a.K);
    put(run, "H", a.H);
    put(run, "schedule", a.schedule);
    put(run, "inner", a.inner);
    put(run, "seed", a.seed);
    put(run, "L", a.L);
    put(run, "eta", a.eta);
    put(run, "zeta", a.zeta);
    put(run, "lambda_max", a.lambda_max);
    put(run, "mu_F", a.mu_F);
    put(run, "sgd_step", a.sgd_step);
    put(run, "c_bar", a.c_bar);
    put(run, "cadence", a.cadence);
    run["timing"] = a.timing;
    request["run"] = run;
    return request;
}

std::string request_text(const RunArgs& a) {
    if (a.manifest.empty()) return build_request(a).dump();
    if (has_run_flags(a)) throw Failure{usage, "--manifest replays a run and cannot be combined with run flags"};
    return read_file(a.manifest);
}

int run_solve(const RunArgs& a) {
    const std::string request = request_text(a);
    char* summary = nullptr;
    check(pdanpg_solve(request.c_str(), a.out_dir.c_str(), &summary));
    const Json s = Json::parse(take(summary));
    std::cout << "wrote " << a.out_dir << "/trace.csv (" << s.at("rows").dump() << " rows) and " << a.out_dir
              << "/manifest.json\n";
    std::cout << "j_star " << s.at("j_star").dump() << "\n"
              << "average gap " << s.at("avg_gap").dump() << " (" << s.at("avg_gap_scaled").dump()
              << " x 1/(1-gamma))\n"
              << "average violation " << s.at("avg_violation").dump() << " ("
              << s.at("avg_violation_scaled").dump() << " x 1/(1-gamma))\n"
              << "final inner_err " << s.at("final_inner_err").dump() << "\n"
              << "env steps " << s.at("env_steps").dump() << "\n";
    return ok;
}

struct BenchArgs {
    RunArgs run;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> modes{"asgd", "sgd"};
    std::optional<std::size_t> asgd_H;
    std::optional<std::size_t> sgd_H;
};

int run_bench(const BenchArgs& b) {
    std::string request;
    if (!b.run.manifest.empty()) {
        if (!b.seeds.empty() || b.asgd_H || b.sgd_H)
            throw Failure{usage, "--manifest replays a run and cannot be combined with run flags"};
        request = request_text(b.run);
    } else {
        if (b.seeds.empty()) throw Failure{usage, "--seeds is required"};
        Json doc = build_request(b.run);
        doc["seeds"] = b.seeds;
        Json arms = Json::array();
        for (const auto& m : b.modes) {
            Json arm{{"mode", m}};
            if (m == "asgd" && b.asgd_H) arm["H"] = *b.asgd_H;
            if (m == "sgd" && b.sgd_H) arm["H"] = *b.sgd_H;
            arms.push_back(arm);
        }
        doc["arms"] = arms;
        request = doc.dump();
    }
    char* table = nullptr;
    check(pdanpg_bench(request.c_str(), b.run.out_dir.c_str(), &table));
    std::cout << take(table);
    return ok;
}

void add_run_flags(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("--env", a.env, "environment config file")->check(CLI::ExistingFile);
    cmd->add_option("--policy", a.policy, "policy config file (default: random features seeded by the env seed)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--manifest", a.manifest, "replay the run recorded in a manifest")->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", a.out_dir, "output directory")->required();
    cmd->add_option("--K", a.K, "outer iterations");
    cmd->add_option("--H", a.H, "inner loop length (even)");
    cmd->add_option("--schedule", a.schedule, "theorem1 | alternate | manual")
        ->check(CLI::IsMember({"theorem1", "alternate", "manual"}));
    cmd->add_option("--inner", a.inner, "asgd | sgd | exact")->check(CLI::IsMember({"asgd", "sgd", "exact"}));
    cmd->add_option("--seed", a.seed, "run seed");
    cmd->add_option("--L", a.L, "smoothness constant (alternate schedule)");
    cmd->add_option("--eta", a.eta, "primal step (manual schedule)");
    cmd->add_option("--zeta", a.zeta, "dual step (manual or alternate schedule)");
    cmd->add_option("--lambda-max", a.lambda_max, "dual bound (manual or alternate schedule)");
    cmd->add_option("--mu-f", a.mu_F, "Fisher lower bound (default 0.9 x min eigenvalue at theta_0)");
    cmd->add_option("--sgd-step", a.sgd_step, "SGD inner step (default 1/G^2)");
    cmd->add_option("--c-bar", a.c_bar, "constant in the default inner length");
    cmd->add_option("--cadence", a.cadence, "instrument every n-th iteration (default ceil(K/1e4))");
    cmd->add_flag("--timing", a.timing, "record wall_ms (traces are then no longer reproducible byte-for-byte)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Primal-dual accelerated natural policy gradient on tabular constrained MDPs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pdanpg_version());

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "write an environment config and print its summary");
    generate->add_option("--kind", gen.kind, "random | gridworld")->check(CLI::IsMember({"random", "gridworld"}));
    generate->add_option("--seed", gen.seed, "environment seed");
    generate->add_option("--states", gen.states, "number of states (random)");
    generate->add_option("--actions", gen.actions, "number of actions (random)");
    generate->add_option("--gamma", gen.gamma, "discount factor in (0, 1)");
    generate->add_option("--out", gen.out, "config file to write")->required();
    generate->add_option("--width", gen.width, "grid width");
    generate->add_option("--height", gen.height, "grid height");
    generate->add_option("--goal", gen.goal, "goal cell x,y")->delimiter(',')->expected(2);
    generate->add_option("--start", gen.start, "start cell x,y")->delimiter(',')->expected(2);
    generate->add_option("--hazard", gen.hazards, "hazard cell x,y (repeatable)")->delimiter(',')->expected(2);
    generate->add_option("--slip", gen.slip, "slip probability");
    generate->add_option("--living-cost", gen.living_cost, "cost of a non-hazard step");

    std::string oracle_env;
    auto* oracle = app.add_subcommand("oracle", "print the constrained optimum of an environment");
    oracle->add_option("--env", oracle_env, "environment config file")->required()->check(CLI::ExistingFile);

    DiagnoseArgs diag;
    auto* diagnose = app.add_subcommand("diagnose", "estimator and oracle checks; exit 0 iff all pass");
    diagnose->add_option("--env", diag.env, "environment config file")->required()->check(CLI::ExistingFile);
    diagnose->add_option("--policy", diag.policy, "policy config file")->check(CLI::ExistingFile);
    diagnose->add_option("--samples", diag.samples, "Monte-Carlo samples");
    diagnose->add_option("--seed", diag.seed, "diagnostics seed");
    diagnose->add_option("--lambda", diag.lambda, "multiplier used by the gradient checks");
    diagnose->add_flag("--random-theta", diag.random_theta, "evaluate at theta ~ N(0, I) drawn from --seed");
    diagnose->add_option("--fault", diag.fault, "sampler fault injection for self-tests")
        ->check(CLI::IsMember({"drop-final-term"}))
        ->group("");

    RunArgs solve_args;
    auto* solve = app.add_subcommand("solve", "run PD-ANPG and write trace.csv and manifest.json");
    add_run_flags(solve, solve_args);

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "paired inner-loop comparison across seeds");
    add_run_flags(bench, bench_args.run);
    bench->add_option("--seeds", bench_args.seeds, "run seeds, comma separated")->delimiter(',');
    bench->add_option("--modes", bench_args.modes, "inner-loop modes, comma separated")
        ->delimiter(',')
        ->check(CLI::IsMember({"asgd", "sgd", "exact"}));
    bench->add_option("--asgd-H", bench_args.asgd_H, "inner length for the asgd arm (default --H)");
    bench->add_option("--sgd-H", bench_args.sgd_H, "inner length for the sgd arm (default --H)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        if (generate->parsed()) return run_generate(gen);
        if (oracle->parsed()) return run_oracle(oracle_env);
        if (diagnose->parsed()) return run_diagnose(diag);
        if (solve->parsed()) return run_solve(solve_args);
        if (bench->parsed()) return run_bench(bench_args);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runtime;
    }
    return usage;
}

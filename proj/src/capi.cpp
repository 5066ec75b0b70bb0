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

#include "pdanpg/pdanpg.h"

#include "pdanpg/app.hpp"
#include "pdanpg/cmdp.hpp"
#include "pdanpg/error.hpp"
#include "pdanpg/oracle.hpp"
#include "pdanpg/policy.hpp"

#include <cstring>
#include <new>
#include <string>

struct pdanpg_env {
    pdanpg::EnvConfig config;
    pdanpg::TabularCmdp cmdp;
};

struct pdanpg_policy {
    pdanpg::FeaturePolicy policy;
};

namespace {

thread_local std::string last_error;

pdanpg_status status_of(pdanpg::ErrorKind kind) {
    switch (kind) {
    case pdanpg::ErrorKind::invalid_argument: return PDANPG_ERR_INVALID_ARGUMENT;
    case pdanpg::ErrorKind::config: return PDANPG_ERR_CONFIG;
    case pdanpg::ErrorKind::io: return PDANPG_ERR_IO;
    case pdanpg::ErrorKind::infeasible: return PDANPG_ERR_INFEASIBLE;
    case pdanpg::ErrorKind::numeric: return PDANPG_ERR_NUMERIC;
    }
    return PDANPG_ERR_INTERNAL;
}

template <class F>
pdanpg_status guarded(F&& body) {
    last_error.clear();
    try {
        body();
        return PDANPG_OK;
    } catch (const pdanpg::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& e) {
        last_error = e.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return PDANPG_ERR_INTERNAL;
}

void need(const void* p, const char* name) {
    if (p == nullptr) pdanpg::fail(pdanpg::ErrorKind::invalid_argument, std::string(name) + " is null");
}

char* copy_string(const std::string& s) {
    auto* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void check_len(std::size_t got, std::size_t want) {
    if (got != want)
        pdanpg::fail(pdanpg::ErrorKind::invalid_argument,
                     "buffer length " + std::to_string(got) + " does not match " + std::to_string(want));
}

} // namespace

extern "C" {

const char* pdanpg_version(void) { return pdanpg::kArtifactVersion; }

const char* pdanpg_last_error(void) { return last_error.c_str(); }

void pdanpg_string_free(char* s) { delete[] s; }

pdanpg_status pdanpg_env_from_json(const char* config_json, pdanpg_env** out) {
    return guarded([&] {
        need(config_json, "config_json");
        need(out, "out");
        auto config = pdanpg::parse_config(config_json);
        auto cmdp = pdanpg::make_cmdp(config);
        *out = new pdanpg_env{std::move(config), std::move(cmdp)};
    });
}

pdanpg_status pdanpg_env_load(const char* path, pdanpg_env** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto config = pdanpg::load_config(path);
        auto cmdp = pdanpg::make_cmdp(config);
        *out = new pdanpg_env{std::move(config), std::move(cmdp)};
    });
}

pdanpg_status pdanpg_env_save(const pdanpg_env* env, const char* path) {
    return guarded([&] {
        need(env, "env");
        need(path, "path");
        pdanpg::save_config(env->config, path);
    });
}

pdanpg_status pdanpg_env_config_json(const pdanpg_env* env, char** out) {
    return guarded([&] {
        need(env, "env");
        need(out, "out");
        *out = copy_string(pdanpg::dump_config(env->config));
    });
}

pdanpg_status pdanpg_env_dims(const pdanpg_env* env, size_t* states, size_t* actions, double* gamma) {
    return guarded([&] {
        need(env, "env");
        if (states) *states = env->cmdp.num_states();
        if (actions) *actions = env->cmdp.num_actions();
        if (gamma) *gamma = env->cmdp.gamma();
    });
}

pdanpg_status pdanpg_env_summary_json(const pdanpg_env* env, char** out) {
    return guarded([&] {
        need(env, "env");
        need(out, "out");
        *out = copy_string(pdanpg::instance_summary_json(env->cmdp));
    });
}

void pdanpg_env_free(pdanpg_env* env) { delete env; }

pdanpg_status pdanpg_oracle_json(const pdanpg_env* env, char** out) {
    return guarded([&] {
        need(env, "env");
        need(out, "out");
        *out = copy_string(pdanpg::oracle_record_json(env->cmdp));
    });
}

pdanpg_status pdanpg_policy_create(const pdanpg_env* env, const char* policy_json, pdanpg_policy** out) {
    return guarded([&] {
        need(env, "env");
        need(out, "out");
        const auto config = policy_json ? pdanpg::parse_policy_for_env(policy_json, env->config)
                                        : pdanpg::default_policy_config(env->config);
        *out = new pdanpg_policy{pdanpg::FeaturePolicy::from_config(env->cmdp, config)};
    });
}

pdanpg_status pdanpg_policy_dim(const pdanpg_policy* policy, size_t* dim) {
    return guarded([&] {
        need(policy, "policy");
        need(dim, "dim");
        *dim = policy->policy.dim();
    });
}

pdanpg_status pdanpg_policy_probabilities(const pdanpg_policy* policy, double* out, size_t len) {
    return guarded([&] {
        need(policy, "policy");
        need(out, "out");
        const auto& p = policy->policy;
        check_len(len, p.num_states() * p.num_actions());
        const pdanpg::Matrix table = p.probability_table();
        for (std::size_t s = 0; s < p.num_states(); ++s)
            for (std::size_t a = 0; a < p.num_actions(); ++a)
                out[s * p.num_actions() + a] = table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    });
}

pdanpg_status pdanpg_policy_get_theta(const pdanpg_policy* policy, double* out, size_t len) {
    return guarded([&] {
        need(policy, "policy");
        need(out, "out");
        const auto& theta = policy->policy.theta();
        check_len(len, static_cast<std::size_t>(theta.size()));
        for (Eigen::Index i = 0; i < theta.size(); ++i) out[i] = theta(i);
    });
}

pdanpg_status pdanpg_policy_set_theta(pdanpg_policy* policy, const double* theta, size_t len) {
    return guarded([&] {
        need(policy, "policy");
        need(theta, "theta");
        check_len(len, policy->policy.dim());
        policy->policy.set_theta(Eigen::Map<const pdanpg::Vector>(theta, static_cast<Eigen::Index>(len)));
    });
}

void pdanpg_policy_free(pdanpg_policy* policy) { delete policy; }

pdanpg_status pdanpg_diagnose_json(const pdanpg_env* env, const pdanpg_policy* policy, const char* options_json,
                                   int* all_pass, char** report) {
    return guarded([&] {
        need(env, "env");
        need(policy, "policy");
        need(report, "report");
        const auto request = pdanpg::parse_diagnose_request(options_json ? options_json : "");
        pdanpg::FeaturePolicy p = policy->policy;
        if (request.random_theta) p.set_theta(pdanpg::random_theta(p.dim(), request.options.seed));
        const auto result = pdanpg::run_diagnostics(env->cmdp, p, request.options);
        if (all_pass) *all_pass = result.all_pass() ? 1 : 0;
        *report = copy_string(pdanpg::diagnose_report_json(result));
    });
}

pdanpg_status pdanpg_solve(const char* request_json, const char* out_dir, char** summary) {
    return guarded([&] {
        need(request_json, "request_json");
        const auto outcome = pdanpg::execute_solve(pdanpg::parse_solve_request(request_json));
        if (out_dir) pdanpg::write_solve_outputs(outcome, out_dir);
        if (summary) *summary = copy_string(pdanpg::solve_summary_json(outcome));
    });
}

pdanpg_status pdanpg_bench(const char* request_json, const char* out_dir, char** table_csv) {
    return guarded([&] {
        need(request_json, "request_json");
        const auto outcome = pdanpg::execute_bench(pdanpg::parse_bench_request(request_json));
        if (out_dir) pdanpg::write_bench_outputs(outcome, out_dir);
        if (table_csv) *table_csv = copy_string(outcome.csv);
    });
}

} // extern "C"

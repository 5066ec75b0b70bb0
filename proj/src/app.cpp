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

#include "pdanpg/app.hpp"

#include "json_util.hpp"
#include "pdanpg/error.hpp"
#include "pdanpg/oracle.hpp"
#include "pdanpg/rng.hpp"
#include "pdanpg/sampler.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <set>

namespace pdanpg {

using detail::Json;

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

Json optional_number(const std::optional<double>& value) { return value ? Json(*value) : Json(nullptr); }

std::optional<double> read_optional(const Json& node, const std::string& key, const std::string& path) {
    if (!node.contains(key) || node.at(key).is_null()) return std::nullopt;
    return detail::as<double>(node.at(key), path + "." + key);
}

Json run_to_json(const RunSpec& run) {
    Json doc;
    doc["K"] = run.K;
    doc["H"] = run.H ? Json(*run.H) : Json(nullptr);
    doc["schedule"] = schedule_mode_name(run.schedule);
    doc["inner"] = inner_mode_name(run.inner);
    doc["seed"] = run.seed;
    doc["eta"] = optional_number(run.eta);
    doc["zeta"] = optional_number(run.zeta);
    doc["lambda_max"] = optional_number(run.lambda_max);
    doc["L"] = optional_number(run.L);
    doc["mu_F"] = optional_number(run.mu_F);
    doc["sgd_step"] = optional_number(run.sgd_step);
    doc["c_bar"] = run.c_bar;
    doc["cadence"] = run.cadence;
    doc["timing"] = run.timing;
    return doc;
}

RunSpec run_from_json(const Json& node) {
    using detail::get_or;
    if (!node.is_object()) detail::config_error("run", "expected a table");
    RunSpec run;
    run.K = get_or<std::size_t>(node, "K", "run", run.K);
    if (node.contains("H") && !node.at("H").is_null()) run.H = detail::as<std::size_t>(node.at("H"), "run.H");
    run.schedule = parse_schedule_mode(get_or<std::string>(node, "schedule", "run", "theorem1"));
    run.inner = parse_inner_mode(get_or<std::string>(node, "inner", "run", "asgd"));
    run.seed = get_or<std::uint64_t>(node, "seed", "run", 0);
    run.eta = read_optional(node, "eta", "run");
    run.zeta = read_optional(node, "zeta", "run");
    run.lambda_max = read_optional(node, "lambda_max", "run");
    run.L = read_optional(node, "L", "run");
    run.mu_F = read_optional(node, "mu_F", "run");
    run.sgd_step = read_optional(node, "sgd_step", "run");
    run.c_bar = get_or<double>(node, "c_bar", "run", run.c_bar);
    run.cadence = get_or<std::size_t>(node, "cadence", "run", 0);
    if (node.contains("timing")) {
        if (!node.at("timing").is_boolean()) detail::config_error("run.timing", "expected true or false");
        run.timing = node.at("timing").get<bool>();
    }
    if (run.H && *run.H % 2 != 0) detail::config_error("run.H", "inner loop length must be even");
    return run;
}

EnvConfig env_from_request(const Json& doc) {
    return detail::env_config_from_json(detail::required(doc, "env", ""));
}

PolicyConfig policy_from_request(const Json& doc, const EnvConfig& env) {
    if (!doc.contains("policy") || doc.at("policy").is_null()) return default_policy_config(env);
    const auto& node = doc.at("policy");
    auto config = detail::policy_from_json(node);
    if (!node.contains("seed")) config.seed = env.seed;
    return config;
}

Json derived_to_json(const DerivedConstants& d) {
    Json doc;
    doc["G"] = d.G;
    doc["B"] = d.B;
    doc["mu_F"] = optional_number(d.mu_F);
    doc["max_jc"] = d.max_jc;
    doc["c_slater"] = d.c_slater;
    doc["lambda_max"] = d.lambda_max;
    doc["sigma_squared"] = optional_number(d.sigma_squared);
    doc["j_star"] = d.j_star;
    doc["lambda_star"] = d.lambda_star;
    doc["min_inner_len"] = d.min_inner_len ? Json(*d.min_inner_len) : Json(nullptr);
    return doc;
}

void reject_override(const std::optional<double>& value, const char* flag, const char* schedule) {
    if (value) fail(ErrorKind::config, std::string(flag) + " is not used by the " + schedule + " schedule");
}

std::size_t resolve_inner_len(const RunSpec& run, const DerivedConstants& derived) {
    if (run.H) return *run.H;
    if (derived.min_inner_len) return *derived.min_inner_len;
    fail(ErrorKind::config, "H is required when mu_F is unavailable (singular Fisher matrix at theta_0)");
}

Json bench_stat_json(const BenchStat& s) { return {{"mean", s.mean}, {"se", optional_number(s.se)}}; }

std::string csv_stat(const BenchStat& s) {
    return format_number(s.mean) + "," + (s.se ? format_number(*s.se) : std::string());
}

} // namespace

PolicyConfig default_policy_config(const EnvConfig& env) {
    PolicyConfig config;
    config.seed = env.seed;
    return config;
}

PolicyConfig parse_policy_for_env(const std::string& text, const EnvConfig& env) {
    const Json doc = detail::parse_json_text(text);
    return policy_from_request(Json{{"policy", doc}}, env);
}

SolveRequest parse_solve_request(const std::string& text) {
    const Json doc = detail::parse_json_text(text);
    if (!doc.is_object()) detail::config_error("<root>", "expected a table");
    if (doc.contains("type") && doc.at("type") != "solve")
        detail::config_error("type", "expected a solve manifest");
    SolveRequest request;
    request.env = env_from_request(doc);
    request.policy = policy_from_request(doc, request.env);
    if (doc.contains("run")) request.run = run_from_json(doc.at("run"));
    return request;
}

SolvePlan plan_solve(const SolveRequest& request) {
    const auto& run = request.run;
    TabularCmdp cmdp = make_cmdp(request.env);
    FeaturePolicy policy = FeaturePolicy::from_config(cmdp, request.policy);
    const double gamma = cmdp.gamma();

    DerivedConstants d;
    const auto constants = policy.analytic_constants();
    d.G = constants.G;
    d.B = constants.B;
    const auto optimum = constrained_optimum(cmdp);
    d.max_jc = optimum.max_jc;
    d.c_slater = optimum.c_slater;
    d.j_star = optimum.j_star;
    d.lambda_star = optimum.lambda_star;
    if (run.mu_F) {
        if (!(*run.mu_F > 0.0)) detail::config_error("run.mu_F", "must be positive");
        d.mu_F = run.mu_F;
    } else if (const double mu = default_mu_f(cmdp, policy); mu > 0.0) {
        d.mu_F = mu;
    }
    if (d.mu_F) d.min_inner_len = lemma6_params(d.G, *d.mu_F, policy.dim(), run.c_bar).inner_len;

    const std::size_t K = run.K;
    const double rate_k = std::sqrt(static_cast<double>(std::max<std::size_t>(K, 1)));
    const double formula_lambda_max = 2.0 / ((1.0 - gamma) * d.c_slater);
    Schedule schedule;
    switch (run.schedule) {
    case ScheduleMode::theorem1:
        reject_override(run.eta, "eta", "theorem1");
        reject_override(run.zeta, "zeta", "theorem1");
        reject_override(run.lambda_max, "lambda_max", "theorem1");
        schedule = theorem1_schedule(gamma, std::max<std::size_t>(K, 1), d.c_slater);
        schedule.K = K;
        break;
    case ScheduleMode::alternate_constant: {
        reject_override(run.eta, "eta", "alternate");
        if (!run.L) fail(ErrorKind::config, "the alternate schedule needs L (smoothness constant)");
        if (!d.mu_F) fail(ErrorKind::config, "the alternate schedule needs mu_F > 0");
        AssumptionConstants c = constants;
        c.mu_F = d.mu_F;
        c.L = run.L;
        const double lambda_max = run.lambda_max.value_or(formula_lambda_max);
        const double zeta = run.zeta.value_or(lambda_max * (1.0 - gamma) / rate_k);
        schedule = alternate_schedule(c, lambda_max, K, zeta);
        break;
    }
    case ScheduleMode::manual:
        if (!run.eta || !run.zeta) fail(ErrorKind::config, "the manual schedule needs eta and zeta");
        schedule = manual_schedule(*run.eta, *run.zeta, run.lambda_max.value_or(formula_lambda_max), K);
        break;
    }
    d.lambda_max = schedule.lambda_max;
    if (d.mu_F) d.sigma_squared = variance_sigma_squared(gamma, d.G, *d.mu_F, d.lambda_max);

    RunOptions options;
    options.inner = run.inner;
    options.seed = run.seed;
    options.cadence = run.cadence;
    options.record_wall_clock = run.timing;
    options.j_star = d.j_star;
    if (run.inner == InnerMode::asgd) {
        if (!d.mu_F)
            fail(ErrorKind::config, "asgd needs mu_F > 0 but the Fisher matrix at theta_0 is singular; "
                                    "check it with the Fisher diagnostic or pass mu_F");
        options.asgd = lemma6_params(d.G, *d.mu_F, policy.dim(), run.c_bar);
        options.asgd.inner_len = resolve_inner_len(run, d);
    } else if (run.inner == InnerMode::sgd) {
        options.sgd_inner_len = resolve_inner_len(run, d);
        options.sgd_step = run.sgd_step.value_or(1.0 / (d.G * d.G));
    }
    return SolvePlan{std::move(cmdp), std::move(policy), schedule, std::move(options), d};
}

namespace {

std::string solve_manifest(const SolveRequest& request, const SolvePlan& plan, const RunResult& result) {
    Json doc;
    doc["type"] = "solve";
    doc["artifact_version"] = kArtifactVersion;
    doc["created_at"] = utc_timestamp();
    doc["env"] = detail::env_config_to_json(request.env);
    doc["policy"] = detail::policy_to_json(request.policy);
    doc["run"] = run_to_json(request.run);
    const auto& s = plan.schedule;
    doc["schedule"] = {{"mode", schedule_mode_name(s.mode)},
                       {"eta", s.eta},
                       {"zeta", s.zeta},
                       {"lambda_max", s.lambda_max},
                       {"K", s.K}};
    const auto& o = plan.options;
    if (o.inner == InnerMode::asgd) {
        doc["asgd"] = {{"alpha", o.asgd.alpha},
                       {"beta", o.asgd.beta},
                       {"xi", o.asgd.xi},
                       {"delta", o.asgd.delta},
                       {"inner_len", o.asgd.inner_len}};
    } else if (o.inner == InnerMode::sgd) {
        doc["sgd"] = {{"step", o.sgd_step}, {"inner_len", o.sgd_inner_len}};
    }
    doc["seeds"] = {{"env", request.env.seed}, {"features", request.policy.seed}, {"run", request.run.seed}};
    doc["derived"] = derived_to_json(plan.derived);
    doc["outputs"] = {{"trace", "trace.csv"}, {"rows", result.trace.size()}};
    return doc.dump(2) + "\n";
}

} // namespace

SolveOutcome execute_solve(const SolveRequest& request) {
    SolvePlan plan = plan_solve(request);
    RunResult result = pd_anpg_run(plan.cmdp, plan.policy, plan.schedule, plan.options);
    std::string trace = trace_csv(result.trace);
    std::string manifest = solve_manifest(request, plan, result);
    return SolveOutcome{std::move(plan), std::move(result), std::move(trace), std::move(manifest)};
}

void write_solve_outputs(const SolveOutcome& outcome, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    detail::write_text_file(dir / "trace.csv", outcome.trace);
    detail::write_text_file(dir / "manifest.json", outcome.manifest);
}

std::string solve_summary_json(const SolveOutcome& outcome) {
    const auto& r = outcome.result;
    const double scale = 1.0 - outcome.plan.cmdp.gamma();
    Json doc;
    doc["j_star"] = r.j_star;
    doc["avg_gap"] = r.avg_gap;
    doc["avg_violation"] = r.avg_violation;
    doc["avg_gap_scaled"] = r.avg_gap * scale;  // in units of 1/(1-gamma)
    doc["avg_violation_scaled"] = r.avg_violation * scale;
    doc["final_inner_err"] = r.final_inner_err;
    doc["env_steps"] = r.env_steps;
    doc["rows"] = r.trace.size();
    doc["best_feasible_k"] = r.best_feasible_k ? Json(*r.best_feasible_k) : Json(nullptr);
    doc["lambda_final"] = r.lambdas.back();
    doc["lambda_max"] = outcome.plan.schedule.lambda_max;
    return doc.dump();
}

BenchRequest parse_bench_request(const std::string& text) {
    const Json doc = detail::parse_json_text(text);
    if (!doc.is_object()) detail::config_error("<root>", "expected a table");
    if (doc.contains("type") && doc.at("type") != "bench")
        detail::config_error("type", "expected a bench manifest");
    BenchRequest request;
    request.env = env_from_request(doc);
    request.policy = policy_from_request(doc, request.env);
    if (doc.contains("run")) request.run = run_from_json(doc.at("run"));
    const auto& seeds = detail::required(doc, "seeds", "");
    if (!seeds.is_array() || seeds.empty()) detail::config_error("seeds", "expected a non-empty array of integers");
    for (const auto& s : seeds) request.seeds.push_back(detail::as<std::uint64_t>(s, "seeds"));
    if (doc.contains("arms")) {
        for (const auto& node : doc.at("arms")) {
            BenchArm arm;
            if (node.is_string()) {
                arm.mode = parse_inner_mode(node.get<std::string>());
            } else {
                arm.mode = parse_inner_mode(detail::get<std::string>(node, "mode", "arms"));
                if (node.contains("H") && !node.at("H").is_null())
                    arm.H = detail::as<std::size_t>(node.at("H"), "arms.H");
            }
            request.arms.push_back(arm);
        }
    } else {
        request.arms = {BenchArm{InnerMode::asgd, std::nullopt}, BenchArm{InnerMode::sgd, std::nullopt}};
    }
    if (request.arms.empty()) detail::config_error("arms", "need at least one inner-loop mode");
    return request;
}

BenchStat summarize(const std::vector<double>& values) {
    BenchStat s;
    if (values.empty()) return s;
    const auto n = static_cast<double>(values.size());
    for (const double v : values) s.mean += v;
    s.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) ss += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}

BenchOutcome execute_bench(const BenchRequest& request) {
    require(!request.seeds.empty(), "bench needs at least one seed");
    require(!request.arms.empty(), "bench needs at least one inner-loop mode");
    {
        std::set<std::uint64_t> unique(request.seeds.begin(), request.seeds.end());
        if (unique.size() != request.seeds.size()) fail(ErrorKind::config, "bench seeds must be distinct");
    }

    // Resolve every arm's inner length once, then insist the sampled arms agree.
    SolveRequest base{request.env, request.policy, request.run};
    base.run.K = 0;
    base.run.inner = InnerMode::exact;
    const SolvePlan probe = plan_solve(base);
    std::vector<std::size_t> lens;
    std::optional<std::size_t> budget;
    std::string budget_owner;
    for (const auto& arm : request.arms) {
        RunSpec spec = request.run;
        if (arm.H) spec.H = arm.H;
        const std::size_t H = arm.mode == InnerMode::exact ? 0 : resolve_inner_len(spec, probe.derived);
        if (arm.mode != InnerMode::exact) {
            if (budget && *budget != H)
                fail(ErrorKind::config, "unmatched budget: " + budget_owner + " uses H=" + std::to_string(*budget) +
                                            " but " + inner_mode_name(arm.mode) + " uses H=" + std::to_string(H));
            budget = H;
            budget_owner = inner_mode_name(arm.mode);
        }
        lens.push_back(H);
    }

    struct JobResult {
        double gap = 0.0;
        double violation = 0.0;
        double env_steps = 0.0;
        double inner_err = 0.0;
    };
    const std::size_t n_arms = request.arms.size();
    const std::size_t jobs = n_arms * request.seeds.size();
    const std::function<JobResult(std::size_t, std::size_t)> work = [&](std::size_t begin, std::size_t) {
        const std::size_t arm = begin % n_arms;
        SolveRequest job{request.env, request.policy, request.run};
        job.run.seed = request.seeds[begin / n_arms];
        job.run.inner = request.arms[arm].mode;
        if (request.arms[arm].mode != InnerMode::exact) job.run.H = lens[arm];
        const SolvePlan plan = plan_solve(job);
        const RunResult r = pd_anpg_run(plan.cmdp, plan.policy, plan.schedule, plan.options);
        return JobResult{r.avg_gap, r.avg_violation, static_cast<double>(r.env_steps), r.final_inner_err};
    };
    const auto results = chunked_parallel<JobResult>(jobs, 1, work);

    BenchOutcome out;
    out.csv = std::string(kBenchHeader) + "\n";
    for (std::size_t a = 0; a < n_arms; ++a) {
        std::vector<double> gap;
        std::vector<double> violation;
        std::vector<double> steps;
        std::vector<double> err;
        for (std::size_t j = a; j < jobs; j += n_arms) {
            gap.push_back(results[j].gap);
            violation.push_back(results[j].violation);
            steps.push_back(results[j].env_steps);
            err.push_back(results[j].inner_err);
        }
        BenchRow row;
        row.mode = inner_mode_name(request.arms[a].mode);
        row.inner_len = lens[a];
        row.seeds = request.seeds.size();
        row.gap = summarize(gap);
        row.violation = summarize(violation);
        row.env_steps = summarize(steps);
        row.inner_err = summarize(err);
        out.csv += row.mode + "," + std::to_string(row.inner_len) + "," + std::to_string(row.seeds) + "," +
                   csv_stat(row.gap) + "," + csv_stat(row.violation) + "," + csv_stat(row.env_steps) + "," +
                   csv_stat(row.inner_err) + "\n";
        out.rows.push_back(std::move(row));
    }

    Json doc;
    doc["type"] = "bench";
    doc["artifact_version"] = kArtifactVersion;
    doc["created_at"] = utc_timestamp();
    doc["env"] = detail::env_config_to_json(request.env);
    doc["policy"] = detail::policy_to_json(request.policy);
    doc["run"] = run_to_json(request.run);
    doc["seeds"] = request.seeds;
    Json arms = Json::array();
    for (std::size_t a = 0; a < n_arms; ++a) arms.push_back({{"mode", inner_mode_name(request.arms[a].mode)}, {"H", lens[a]}});
    doc["arms"] = arms;
    doc["derived"] = derived_to_json(probe.derived);
    Json rows = Json::array();
    for (const auto& r : out.rows) {
        rows.push_back({{"mode", r.mode},
                        {"H", r.inner_len},
                        {"seeds", r.seeds},
                        {"gap", bench_stat_json(r.gap)},
                        {"violation", bench_stat_json(r.violation)},
                        {"env_steps", bench_stat_json(r.env_steps)},
                        {"inner_err", bench_stat_json(r.inner_err)}});
    }
    doc["outputs"] = {{"table", "bench.csv"}, {"rows", rows}};
    out.manifest = doc.dump(2) + "\n";
    return out;
}

void write_bench_outputs(const BenchOutcome& outcome, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    detail::write_text_file(dir / "bench.csv", outcome.csv);
    detail::write_text_file(dir / "manifest.json", outcome.manifest);
}

std::string instance_summary_json(const TabularCmdp& cmdp) {
    const auto best = solve_unconstrained(cmdp, Signal::cost);
    Json doc;
    doc["states"] = cmdp.num_states();
    doc["actions"] = cmdp.num_actions();
    doc["gamma"] = cmdp.gamma();
    doc["max_jc"] = best.value;
    doc["c_slater"] = best.value > 0.0 ? Json(slater_constant(cmdp).c_slater) : Json(nullptr);
    return doc.dump();
}

std::string oracle_record_json(const TabularCmdp& cmdp) {
    const auto opt = constrained_optimum(cmdp);
    Json doc;
    doc["j_star"] = opt.j_star;
    doc["lambda_star"] = opt.lambda_star;
    doc["c_slater"] = opt.c_slater;
    doc["max_jc"] = opt.max_jc;
    doc["lambda_upper"] = opt.lambda_upper;
    doc["iterations"] = opt.iterations;
    return doc.dump();
}

DiagnoseRequest parse_diagnose_request(const std::string& text) {
    using detail::get_or;
    DiagnoseRequest request;
    if (text.empty()) return request;
    const Json doc = detail::parse_json_text(text);
    if (!doc.is_object()) detail::config_error("<root>", "expected a table");
    auto& o = request.options;
    o.samples = get_or<std::size_t>(doc, "samples", "", o.samples);
    o.seed = get_or<std::uint64_t>(doc, "seed", "", o.seed);
    o.lambda = get_or<double>(doc, "lambda", "", o.lambda);
    o.bound_draws = get_or<std::size_t>(doc, "bound_draws", "", o.bound_draws);
    o.pd_pairs = get_or<std::size_t>(doc, "pd_pairs", "", o.pd_pairs);
    if (doc.contains("horizon_cap") && !doc.at("horizon_cap").is_null())
        o.sampler.horizon_cap = detail::as<std::uint64_t>(doc.at("horizon_cap"), "horizon_cap");
    if (doc.contains("drop_final_term")) o.sampler.drop_final_term = doc.at("drop_final_term").get<bool>();
    if (doc.contains("random_theta")) request.random_theta = doc.at("random_theta").get<bool>();
    if (o.samples < 2) detail::config_error("samples", "need at least 2 samples");
    if (!(o.lambda >= 0.0)) detail::config_error("lambda", "must be non-negative");
    return request;
}

Vector random_theta(std::size_t dim, std::uint64_t seed) {
    auto rng = RngStream::derive(seed, 0, 4, StreamPurpose::diagnostics);
    Vector theta(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = rng.normal();
    return theta;
}

std::string diagnose_report_json(const DiagnoseReport& report) {
    Json doc;
    doc["all_pass"] = report.all_pass();
    Json checks = Json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"status", check_status_name(c.status)},
                          {"measured", c.measured},
                          {"reference", c.reference},
                          {"tolerance", c.tolerance},
                          {"detail", c.detail}});
    }
    doc["checks"] = checks;
    return doc.dump();
}

} // namespace pdanpg

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

#include "pdanpg/optimizer.hpp"

#include "pdanpg/error.hpp"
#include "pdanpg/rng.hpp"
#include "pdanpg/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pdanpg {

namespace {

const double kSqrt5 = std::sqrt(5.0);

void check_finite(const Vector& iterate, std::size_t h, const char* what) {
    if (iterate.allFinite()) return;
    std::ostringstream msg;
    msg << what << ": non-finite iterate at inner step h=" << h << " (norm " << iterate.norm() << ")";
    fail(ErrorKind::numeric, msg.str());
}

} // namespace

void AsgdParams::validate() const {
    require(alpha > 0.0 && alpha < 1.0, "asgd alpha must lie in (0, 1)");
    require(beta > 0.0 && beta < 1.0, "asgd beta must lie in (0, 1)");
    require(xi > 0.0, "asgd xi must be positive");
    require(delta > 0.0, "asgd delta must be positive");
    require(inner_len % 2 == 0, "inner loop length H must be even");
}

AsgdParams lemma6_params(double G, double mu_F, std::size_t dim, double c_bar) {
    if (!(mu_F > 0.0))
        fail(ErrorKind::invalid_argument,
             "mu_F must be positive; measure it with the Fisher diagnostic (min eigenvalue of F_rho(theta))");
    require(G > 0.0, "G must be positive");
    require(dim >= 1, "dimension must be positive");
    require(c_bar > 0.0, "inner-length constant must be positive");
    const double G2 = G * G;
    AsgdParams p;
    p.alpha = 3.0 * kSqrt5 * G2 / (mu_F + 3.0 * kSqrt5 * G2);
    p.beta = mu_F / (9.0 * G2);
    p.xi = 1.0 / (3.0 * kSqrt5 * G2);
    p.delta = 1.0 / (5.0 * G2);
    const double kappa = G2 / mu_F;
    const double threshold = c_bar * kappa * std::log(std::sqrt(static_cast<double>(dim)) * kappa);
    auto H = static_cast<std::size_t>(std::ceil(std::max(threshold, 2.0)));
    if (H % 2 != 0) ++H;
    p.inner_len = H;
    return p;
}

double default_mu_f(const TabularCmdp& cmdp, const FeaturePolicy& policy) {
    return 0.9 * min_eigenvalue(fisher_and_h(cmdp, policy, 0.0).fisher);
}

void asgd_step(AsgdState& state, const AsgdParams& params, const GradientSource& source) {
    const Vector y = params.alpha * state.x + (1.0 - params.alpha) * state.v;
    const Vector g = source(y, state.h);
    const Vector z = params.beta * y + (1.0 - params.beta) * state.v;
    state.x = y - params.delta * g;
    state.v = z - params.xi * g;
    ++state.h;
    check_finite(state.x, state.h, "asgd");
    check_finite(state.v, state.h, "asgd");
    if (2 * state.h > params.inner_len && state.h <= params.inner_len) state.tail_sum += state.x;
}

Vector asgd_inner(const GradientSource& source, const AsgdParams& params, std::size_t dim) {
    params.validate();
    AsgdState state(dim);
    if (params.inner_len == 0) return state.tail_sum;
    for (std::size_t h = 0; h < params.inner_len; ++h) asgd_step(state, params, source);
    return (2.0 / static_cast<double>(params.inner_len)) * state.tail_sum;
}

Vector sgd_baseline_inner(const GradientSource& source, std::size_t inner_len, double step, std::size_t dim) {
    require(step > 0.0, "sgd step must be positive");
    require(inner_len % 2 == 0, "inner loop length H must be even");
    Vector w = Vector::Zero(static_cast<Eigen::Index>(dim));
    Vector tail = Vector::Zero(static_cast<Eigen::Index>(dim));
    if (inner_len == 0) return tail;
    for (std::size_t h = 0; h < inner_len; ++h) {
        w -= step * source(w, h);
        check_finite(w, h + 1, "sgd");
        if (2 * (h + 1) > inner_len) tail += w;
    }
    return (2.0 / static_cast<double>(inner_len)) * tail;
}

void Schedule::validate() const {
    require(std::isfinite(eta) && eta > 0.0, "schedule eta must be positive");
    require(std::isfinite(zeta) && zeta >= 0.0, "schedule zeta must be non-negative");
    require(std::isfinite(lambda_max) && lambda_max >= 0.0, "schedule lambda_max must be non-negative");
}

Schedule theorem1_schedule(double gamma, std::size_t K, double c_slater) {
    require(gamma > 0.0 && gamma < 1.0, "gamma out of range");
    require(K >= 1, "K must be at least 1");
    if (!(c_slater > 0.0 && c_slater <= 1.0 / (1.0 - gamma)))
        fail(ErrorKind::invalid_argument, "c_slater must lie in (0, 1/(1-gamma)]");
    const double root_k = std::sqrt(static_cast<double>(K));
    Schedule s;
    s.mode = ScheduleMode::theorem1;
    s.K = K;
    s.lambda_max = 2.0 / ((1.0 - gamma) * c_slater);
    s.zeta = s.lambda_max * (1.0 - gamma) / root_k;
    s.eta = (1.0 - gamma) * (1.0 - gamma) / ((1.0 + s.lambda_max) * root_k);
    return s;
}

Schedule alternate_schedule(const AssumptionConstants& constants, double lambda_max, std::size_t K, double zeta) {
    if (!constants.L || !(*constants.L > 0.0)) fail(ErrorKind::invalid_argument, "alternate schedule needs L > 0");
    if (!constants.mu_F || !(*constants.mu_F > 0.0))
        fail(ErrorKind::invalid_argument, "alternate schedule needs mu_F > 0");
    require(constants.G > 0.0, "G must be positive");
    require(lambda_max >= 0.0, "lambda_max must be non-negative");
    require(zeta >= 0.0, "zeta must be non-negative");
    const double mu = *constants.mu_F;
    Schedule s;
    s.mode = ScheduleMode::alternate_constant;
    s.K = K;
    s.lambda_max = lambda_max;
    s.zeta = zeta;
    s.eta = mu * mu / (4.0 * constants.G * constants.G * *constants.L * (1.0 + lambda_max));
    return s;
}

Schedule manual_schedule(double eta, double zeta, double lambda_max, std::size_t K) {
    Schedule s;
    s.mode = ScheduleMode::manual;
    s.eta = eta;
    s.zeta = zeta;
    s.lambda_max = lambda_max;
    s.K = K;
    s.validate();
    return s;
}

std::string schedule_mode_name(ScheduleMode mode) {
    switch (mode) {
    case ScheduleMode::theorem1: return "theorem1";
    case ScheduleMode::alternate_constant: return "alternate";
    case ScheduleMode::manual: return "manual";
    }
    return "unknown";
}

std::string inner_mode_name(InnerMode mode) {
    switch (mode) {
    case InnerMode::asgd: return "asgd";
    case InnerMode::sgd: return "sgd";
    case InnerMode::exact: return "exact";
    }
    return "unknown";
}

ScheduleMode parse_schedule_mode(const std::string& name) {
    if (name == "theorem1") return ScheduleMode::theorem1;
    if (name == "alternate") return ScheduleMode::alternate_constant;
    if (name == "manual") return ScheduleMode::manual;
    fail(ErrorKind::config, "unknown schedule '" + name + "' (expected theorem1, alternate or manual)");
}

InnerMode parse_inner_mode(const std::string& name) {
    if (name == "asgd") return InnerMode::asgd;
    if (name == "sgd") return InnerMode::sgd;
    if (name == "exact") return InnerMode::exact;
    fail(ErrorKind::config, "unknown inner mode '" + name + "' (expected asgd, sgd or exact)");
}

RunResult pd_anpg_run(const TabularCmdp& cmdp, const FeaturePolicy& policy0, const Schedule& schedule,
                      const RunOptions& options) {
    schedule.validate();
    require(policy0.num_states() == cmdp.num_states() && policy0.num_actions() == cmdp.num_actions(),
            "policy does not match the cmdp");
    if (options.inner == InnerMode::asgd) options.asgd.validate();
    if (options.inner == InnerMode::sgd) {
        require(options.sgd_step > 0.0, "sgd step must be positive");
        require(options.sgd_inner_len % 2 == 0, "inner loop length H must be even");
    }

    const std::size_t K = schedule.K;
    const double gamma = cmdp.gamma();
    const std::size_t dim = policy0.dim();

    RunResult out;
    if (options.instrument)
        out.j_star = options.j_star ? *options.j_star : constrained_optimum(cmdp).j_star;
    const std::size_t cadence =
        options.cadence > 0 ? options.cadence : std::max<std::size_t>(1, (K + 9'999) / 10'000);

    FeaturePolicy policy = policy0;
    Vector theta = policy0.theta();
    double lambda = 0.0;
    out.lambdas.push_back(lambda);
    out.thetas.reserve(K);

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < K; ++k) {
        out.thetas.push_back(theta);
        policy.set_theta(theta);

        const bool instrumented = options.instrument && k % cadence == 0;
        std::optional<ExactSolution> exact;
        if (instrumented || options.inner == InnerMode::exact) exact = solve_exact(cmdp, policy, lambda, options.pinv);

        Vector omega;
        std::optional<SamplerContext> ctx;
        if (options.inner != InnerMode::exact) ctx.emplace(cmdp, policy);
        switch (options.inner) {
        case InnerMode::exact: omega = exact->npg; break;
        case InnerMode::asgd:
        case InnerMode::sgd: {
            const GradientSource source = [&](const Vector& w, std::size_t h) {
                auto rng = RngStream::derive(options.seed, k, h, StreamPurpose::inner_gradient);
                const auto sample = ctx->sample(lambda, rng);
                out.env_steps += sample.trajectory_steps;
                return sample.gradient_at(w, gamma);
            };
            omega = options.inner == InnerMode::asgd
                        ? asgd_inner(source, options.asgd, dim)
                        : sgd_baseline_inner(source, options.sgd_inner_len, options.sgd_step, dim);
            break;
        }
        }

        double jc_estimate = 0.0;
        if (options.dual_feed) {
            jc_estimate = options.dual_feed(k);
        } else if (options.inner == InnerMode::exact) {
            jc_estimate = exact->cost.j;
        } else {
            auto rng = RngStream::derive(options.seed, k, 0, StreamPurpose::dual_estimate);
            std::uint64_t steps = 0;
            jc_estimate = ctx->sample_cost_value(rng, &steps);
            out.env_steps += steps;
        }

        if (instrumented) {
            TraceRow row;
            row.k = k;
            row.lambda = lambda;
            row.j_r = exact->reward.j;
            row.j_c = exact->cost.j;
            row.gap = out.j_star - row.j_r;
            row.violation = std::max(0.0, -row.j_c);
            row.inner_err = (omega - exact->npg).norm();
            row.env_steps = out.env_steps;
            if (options.record_wall_clock)
                row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            out.trace.push_back(row);
        }

        theta += schedule.eta * omega;
        check_finite(theta, 0, "primal update");
        lambda = std::clamp(lambda - schedule.zeta * jc_estimate, 0.0, schedule.lambda_max);
        out.lambdas.push_back(lambda);
    }
    out.final_theta = theta;

    if (!out.trace.empty()) {
        double gap = 0.0;
        double violation = 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& row : out.trace) {
            gap += row.gap;
            violation += row.violation;
            if (row.j_c >= 0.0 && row.j_r > best) {
                best = row.j_r;
                out.best_feasible_k = row.k;
            }
        }
        const auto n = static_cast<double>(out.trace.size());
        out.avg_gap = gap / n;
        out.avg_violation = violation / n;
        const std::size_t tail = std::max<std::size_t>(1, out.trace.size() / 10);
        double err = 0.0;
        for (std::size_t i = out.trace.size() - tail; i < out.trace.size(); ++i) err += out.trace[i].inner_err;
        out.final_inner_err = err / static_cast<double>(tail);
    }
    return out;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return {buffer, result.ptr};
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = kTraceHeader;
    out += '\n';
    for (const auto& r : trace) {
        out += std::to_string(r.k);
        for (const double v : {r.lambda, r.j_r, r.j_c, r.gap, r.violation, r.inner_err}) {
            out += ',';
            out += format_number(v);
        }
        out += ',';
        out += std::to_string(r.env_steps);
        out += ',';
        out += format_number(r.wall_ms);
        out += '\n';
    }
    return out;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) fail(ErrorKind::io, "cannot write " + path.string());
    file << trace_csv(trace);
    if (!file) fail(ErrorKind::io, "write failed for " + path.string());
}

} // namespace pdanpg

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

#include <cstdint>
#include <random>
#include <span>

namespace pdanpg {

/// Purpose tags folded into stream ids so that different consumers of the
/// same (k, h) coordinates never share a stream.
enum class StreamPurpose : std::uint64_t {
    inner_gradient = 1,
    dual_estimate = 2,
    diagnostics = 3,
    environment = 4,
    features = 5,
    cost_regeneration = 6,
};

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministic random stream identified by (seed, stream_id).
///
/// Backed by std::mt19937_64 seeded through std::seed_seq, both of which are
/// fully specified by the standard. Uniforms are built from raw engine output
/// rather than std::uniform_real_distribution so draws are identical across
/// standard library implementations.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    /// Stream for one keyed consumer, e.g. a single gradient sample.
    [[nodiscard]] static RngStream derive(std::uint64_t seed, std::uint64_t outer, std::uint64_t inner,
                                          StreamPurpose purpose);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller on two uniforms.
    double normal();
    /// Exponential(1), strictly positive.
    double exponential();
    /// Index drawn from a probability vector by inverse CDF.
    std::size_t categorical(std::span<const double> probabilities);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

} // namespace pdanpg

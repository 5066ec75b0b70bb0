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

#include "pdanpg/rng.hpp"

#include <cmath>
#include <numbers>

namespace pdanpg {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32U)};
    return std::mt19937_64(seq);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

RngStream RngStream::derive(std::uint64_t seed, std::uint64_t outer, std::uint64_t inner,
                            StreamPurpose purpose) {
    std::uint64_t id = splitmix64(static_cast<std::uint64_t>(purpose));
    id = splitmix64(id ^ outer);
    id = splitmix64(id ^ inner);
    return {seed, id};
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11U) * 0x1.0p-53;
}

double RngStream::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::exponential() {
    double e = -std::log(1.0 - uniform());
    while (e <= 0.0) e = -std::log(1.0 - uniform());
    return e;
}

std::size_t RngStream::categorical(std::span<const double> probabilities) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        acc += probabilities[i];
        if (u < acc) return i;
    }
    // Rounding left the cumulative sum just below 1: take the last positive entry.
    for (std::size_t i = probabilities.size(); i-- > 0;)
        if (probabilities[i] > 0.0) return i;
    return probabilities.size() - 1;
}

} // namespace pdanpg

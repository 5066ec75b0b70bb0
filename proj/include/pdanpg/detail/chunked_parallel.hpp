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

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pdanpg {

template <class Result>
std::vector<Result> chunked_parallel(std::size_t n, std::size_t chunk,
                                     const std::function<Result(std::size_t begin, std::size_t end)>& work,
                                     std::size_t threads) {
    chunk = std::max<std::size_t>(chunk, 1);
    const std::size_t chunks = (n + chunk - 1) / chunk;
    std::vector<Result> results(chunks);
    if (chunks == 0) return results;

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            try {
                results[c] = work(c * chunk, std::min(n, (c + 1) * chunk));
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    const std::size_t pool = std::min(worker_threads(threads), chunks);
    if (pool <= 1) {
        worker();
    } else {
        std::vector<std::thread> workers;
        workers.reserve(pool);
        for (std::size_t t = 0; t < pool; ++t) workers.emplace_back(worker);
        for (auto& w : workers) w.join();
    }
    if (error) std::rethrow_exception(error);
    return results;
}

} // namespace pdanpg

/*
 * Copyright 2026 The splitarch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
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

namespace splitarch {

/// Seeded generator with a portable bounded-integer draw; the standard
/// distributions are implementation-defined and would break cross-platform
/// trace reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) { }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [lo, hi], inclusive.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi)
    {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0)
            return engine_();
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return lo + v % span;
    }

    bool chance(std::uint64_t numerator, std::uint64_t denominator)
    {
        return uniform(0, denominator - 1) < numerator;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace splitarch

// Copyright 2026 The MDITE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mdite {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// (master seed, stream index) pair: seed_k = splitmix64(master + k * golden).
constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr uint64_t stream_seed(uint64_t master, uint64_t stream) {
    return splitmix64(master + stream * 0x9E3779B97F4A7C15ULL);
}

/// mt19937_64 with distribution code that does not depend on the standard
/// library implementation, so identical seeds give identical streams on every
/// platform.
class Rng {
   public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    /// Uniform in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection keeps it exactly unbiased.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    /// One bit from a cached 64-bit draw.
    bool coin() {
        if (bits_left_ == 0) {
            bits_ = engine_();
            bits_left_ = 64;
        }
        const bool b = (bits_ & 1U) != 0;
        bits_ >>= 1;
        --bits_left_;
        return b;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one value per call, second discarded).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    bool operator==(const Rng &other) const {
        return engine_ == other.engine_ && bits_ == other.bits_ && bits_left_ == other.bits_left_;
    }

   private:
    std::mt19937_64 engine_;
    uint64_t bits_ = 0;
    int bits_left_ = 0;
};

}  // namespace mdite

// Copyright 2026-present the mhc-workbench project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

#include "mhc/matrix.hpp"

namespace mhc {

/// Seeded generator with platform-independent sequences. Only raw mt19937_64
/// output is consumed; uniform and normal draws are computed locally.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {
    }

    /// Independent stream derived from (seed, stream) with splitmix64.
    static Rng
    derived(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t
    next_u64() {
        return engine_();
    }
    /// Uniform in [0, 1).
    double
    uniform();
    double
    uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }
    double
    normal(double mean = 0.0, double stddev = 1.0);
    std::size_t
    index(std::size_t bound);

    Matrix
    uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);
    Matrix
    normal_matrix(std::size_t rows, std::size_t cols, double stddev);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t
splitmix64(std::uint64_t x);

}  // namespace mhc

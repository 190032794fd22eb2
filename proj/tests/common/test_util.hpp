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

#include <cmath>
#include <vector>

#include "mhc/matrix.hpp"
#include "mhc/random.hpp"

namespace mhc::test {

/// Naive triple loop, no SIMD.
inline Matrix
naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += a(i, k) * b(k, j);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

inline double
frobenius(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.values()) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

/// ||a - b|| / max(||a||, ||b||), absolute below a tiny scale.
inline double
rel_error(const Matrix& a, const Matrix& b) {
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
    }
    diff = std::sqrt(diff);
    const double scale = std::max(frobenius(a), frobenius(b));
    return scale < 1e-12 ? diff : diff / scale;
}

/// Average of 2^log_terms random permutation matrices. The weights are
/// dyadic, so every row and column sum is exactly 1.
inline Matrix
random_birkhoff(std::size_t n, Rng& rng, unsigned log_terms = 2) {
    Matrix out(n, n);
    const std::size_t terms = std::size_t{1} << log_terms;
    const double w = 1.0 / static_cast<double>(terms);
    std::vector<std::size_t> perm(n);
    for (std::size_t t = 0; t < terms; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            perm[i] = i;
        }
        for (std::size_t i = n; i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.index(i)]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            out(i, perm[i]) += w;
        }
    }
    return out;
}

/// Central differences of a scalar function of one matrix.
template <typename F>
Matrix
numeric_gradient(F&& f, const Matrix& x, double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    Matrix probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace mhc::test

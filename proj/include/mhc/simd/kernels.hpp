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

#include <cstddef>
#include <string_view>

namespace mhc::simd {

// Contiguous double-precision kernels used by the dense matrix layer and the
// Sinkhorn iterations. Every level implements the same table; generic is the
// scalar reference the others are tested against.

using DotFn = double (*)(const double* a, const double* b, std::size_t n);
using SumFn = double (*)(const double* x, std::size_t n);
using SumSqFn = double (*)(const double* x, std::size_t n);
// y += alpha * x
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);
// x *= alpha
using ScaleFn = void (*)(double alpha, double* x, std::size_t n);
// y *= x
using MulFn = void (*)(const double* x, double* y, std::size_t n);

struct KernelTable {
    std::string_view name;
    DotFn dot;
    SumFn sum;
    SumSqFn sum_sq;
    AxpyFn axpy;
    ScaleFn scale;
    MulFn mul;
};

enum class Level { Generic, Avx2, Neon };

namespace generic {
double
Dot(const double* a, const double* b, std::size_t n);
double
Sum(const double* x, std::size_t n);
double
SumSq(const double* x, std::size_t n);
void
Axpy(double alpha, const double* x, double* y, std::size_t n);
void
Scale(double alpha, double* x, std::size_t n);
void
Mul(const double* x, double* y, std::size_t n);
}  // namespace generic

#if defined(MHC_ENABLE_AVX2)
namespace avx2 {
double
Dot(const double* a, const double* b, std::size_t n);
double
Sum(const double* x, std::size_t n);
double
SumSq(const double* x, std::size_t n);
void
Axpy(double alpha, const double* x, double* y, std::size_t n);
void
Scale(double alpha, double* x, std::size_t n);
void
Mul(const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(MHC_ENABLE_NEON)
namespace neon {
double
Dot(const double* a, const double* b, std::size_t n);
double
Sum(const double* x, std::size_t n);
double
SumSq(const double* x, std::size_t n);
void
Axpy(double alpha, const double* x, double* y, std::size_t n);
void
Scale(double alpha, double* x, std::size_t n);
void
Mul(const double* x, double* y, std::size_t n);
}  // namespace neon
#endif

bool
SupportsLevel(Level level);

/// Table for a specific level; falls back to generic when unsupported.
const KernelTable&
TableFor(Level level);

/// The active table. Chosen at first use from CPU features; the MHC_SIMD
/// environment variable ("generic", "avx2", "neon") overrides detection.
const KernelTable&
Active();

/// Switch the active table. Not synchronized; call before concurrent work.
void
SetLevel(Level level);

Level
ActiveLevel();

std::string_view
LevelName(Level level);

}  // namespace mhc::simd

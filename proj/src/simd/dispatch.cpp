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

#include <cstdlib>
#include <string>

#include "mhc/simd/kernels.hpp"

namespace mhc::simd {

namespace {

constexpr KernelTable kGeneric{"generic",        generic::Dot,   generic::Sum, generic::SumSq,
                               generic::Axpy,    generic::Scale, generic::Mul};

#if defined(MHC_ENABLE_AVX2)
constexpr KernelTable kAvx2{"avx2", avx2::Dot, avx2::Sum, avx2::SumSq, avx2::Axpy, avx2::Scale, avx2::Mul};
#endif

#if defined(MHC_ENABLE_NEON)
constexpr KernelTable kNeon{"neon", neon::Dot, neon::Sum, neon::SumSq, neon::Axpy, neon::Scale, neon::Mul};
#endif

Level
DetectLevel() {
    if (const char* forced = std::getenv("MHC_SIMD")) {
        const std::string name(forced);
        if (name == "generic") {
            return Level::Generic;
        }
        if (name == "avx2" && SupportsLevel(Level::Avx2)) {
            return Level::Avx2;
        }
        if (name == "neon" && SupportsLevel(Level::Neon)) {
            return Level::Neon;
        }
    }
    if (SupportsLevel(Level::Avx2)) {
        return Level::Avx2;
    }
    if (SupportsLevel(Level::Neon)) {
        return Level::Neon;
    }
    return Level::Generic;
}

Level&
CurrentLevel() {
    static Level level = DetectLevel();
    return level;
}

const KernelTable*&
CurrentTable() {
    static const KernelTable* table = &TableFor(CurrentLevel());
    return table;
}

}  // namespace

bool
SupportsLevel(Level level) {
    switch (level) {
        case Level::Generic:
            return true;
        case Level::Avx2:
#if defined(MHC_ENABLE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Level::Neon:
#if defined(MHC_ENABLE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable&
TableFor(Level level) {
    if (!SupportsLevel(level)) {
        return kGeneric;
    }
    switch (level) {
#if defined(MHC_ENABLE_AVX2)
        case Level::Avx2:
            return kAvx2;
#endif
#if defined(MHC_ENABLE_NEON)
        case Level::Neon:
            return kNeon;
#endif
        default:
            return kGeneric;
    }
}

const KernelTable&
Active() {
    return *CurrentTable();
}

void
SetLevel(Level level) {
    CurrentLevel() = SupportsLevel(level) ? level : Level::Generic;
    CurrentTable() = &TableFor(CurrentLevel());
}

Level
ActiveLevel() {
    return CurrentLevel();
}

std::string_view
LevelName(Level level) {
    switch (level) {
        case Level::Generic:
            return "generic";
        case Level::Avx2:
            return "avx2";
        case Level::Neon:
            return "neon";
    }
    return "unknown";
}

}  // namespace mhc::simd

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
#include <string>

#include "mhc/autodiff/model.hpp"

namespace mhc::harness {

struct GradCheckOptions {
    Variant variant = Variant::Mhc;
    std::size_t n = 4;
    std::size_t width = 16;
    std::size_t depth = 3;
    LayerKind layer_kind = LayerKind::MlpPrenorm;
    std::size_t tokens = 3;
    std::uint64_t seed = 0;
    /// Spread of the random projections, gates and biases.
    double spread = 0.5;
    double tolerance = 1e-5;
    double fd_step = 3e-3;
    ad::SinkhornBackward sinkhorn_mode = ad::SinkhornBackward::Recompute;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;
    std::size_t compared = 0;
    bool passed = false;
};

/// Tape gradients of the regression loss against central differences of the
/// plain forward pass, for every stack parameter and the input states.
GradCheckResult
grad_check(const GradCheckOptions& opts);

/// A stack with every mapping parameter randomized, so no gradient is
/// trivially zero.
StackConfig
random_stack(Variant variant, std::size_t n, std::size_t width, std::size_t depth, LayerKind kind,
             std::uint64_t seed, double spread);

}  // namespace mhc::harness

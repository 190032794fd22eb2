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
#include <string_view>

#include "mhc/matrix.hpp"
#include "mhc/sinkhorn.hpp"
#include "mhc/stream_state.hpp"

namespace mhc {

enum class Variant { Baseline, Hc, Mhc };

enum class InitPolicy {
    /// h_res close to I with stream 0 acting as the classic residual lane.
    ResidualEmulation,
    /// All biases zero.
    Uniform,
};

std::string_view
to_string(Variant v);
Variant
parse_variant(std::string_view s);
std::string_view
to_string(InitPolicy p);
InitPolicy
parse_init_policy(std::string_view s);

inline constexpr double kGateInit = 0.01;

/// Learnable quantities of one layer's residual mappings.
///
/// Projection shapes depend on the variant:
///   hc:  proj_pre, proj_post are 1 x C; proj_res is n x C
///   mhc: proj_pre, proj_post are nC x n; proj_res is nC x n^2
/// Biases are 1 x n (pre, post) and n x n (res) for both. Baseline carries no
/// learnable mapping state; its mappings are the fixed 1/n, ones, identity.
struct MappingParams {
    Variant variant = Variant::Mhc;
    std::size_t n = 1;
    std::size_t width = 1;
    double alpha_pre = kGateInit;
    double alpha_post = kGateInit;
    double alpha_res = kGateInit;
    Matrix proj_pre;
    Matrix proj_post;
    Matrix proj_res;
    Matrix bias_pre;
    Matrix bias_post;
    Matrix bias_res;
    SinkhornConfig sinkhorn;

    /// Throws ShapeError when dimensions disagree with variant, n and width.
    void
    validate() const;

    friend bool
    operator==(const MappingParams& a, const MappingParams& b);
};

struct MappingSet {
    Matrix h_pre;   ///< 1 x n
    Matrix h_post;  ///< 1 x n
    Matrix h_res;   ///< n x n
};

struct AblationMask {
    bool use_res = true;
    bool use_pre = true;
    bool use_post = true;

    bool
    all() const noexcept {
        return use_res && use_pre && use_post;
    }
};

MappingParams
init_params(Variant variant, std::size_t n, std::size_t width, InitPolicy policy, std::uint64_t seed,
            double proj_stddev = 0.0);

MappingSet
fixed_mappings(std::size_t n);

/// Unconstrained mappings: tanh of projections of the per-stream RMS-normalized
/// state, gated and added to static biases.
MappingSet
compute_mappings_hc(const StreamState& x, const MappingParams& p, double rms_epsilon = 1e-20);

/// Constrained mappings: projections of the whole flattened state followed by
/// sigmoid, 2 * sigmoid and Sinkhorn projection.
MappingSet
compute_mappings_mhc(const StreamState& x, const MappingParams& p, double rms_epsilon = 1e-20);

/// Same result as compute_mappings_mhc, but projects the raw flattened state
/// first and divides by its RMS afterwards, with the projections and biases
/// consolidated into one [nC, n^2 + 2n] matrix.
MappingSet
compute_mappings_mhc_fused(const StreamState& x, const MappingParams& p, double rms_epsilon = 1e-20);

/// Dispatch on p.variant.
MappingSet
compute_mappings(const StreamState& x, const MappingParams& p, double rms_epsilon = 1e-20);

MappingSet
apply_ablation(const MappingSet& ms, const AblationMask& mask, std::size_t n);

}  // namespace mhc

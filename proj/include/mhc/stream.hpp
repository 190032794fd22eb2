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

#include <span>
#include <stdexcept>
#include <vector>

#include "mhc/layer_function.hpp"
#include "mhc/mappings.hpp"
#include "mhc/stream_state.hpp"

namespace mhc {

class PropagationError : public std::runtime_error {
public:
    PropagationError(std::size_t layer, const std::string& what)
        : std::runtime_error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {
    }
    std::size_t
    layer() const noexcept {
        return layer_;
    }

private:
    std::size_t layer_;
};

struct StackConfig {
    Variant variant = Variant::Mhc;
    std::size_t n = 1;
    std::size_t width = 1;
    std::vector<MappingParams> mappings;  ///< one per layer
    std::vector<LayerFunction> layers;    ///< one per layer
    AblationMask mask;
    double rms_epsilon = 1e-20;

    std::size_t
    depth() const noexcept {
        return layers.size();
    }
    void
    validate() const;
};

/// n stacked copies of a 1 x C row.
StreamState
expand(const Matrix& input, std::size_t n);
/// Mean over the n streams.
Matrix
reduce(const StreamState& x);

/// H_res x + H_post^T F(H_pre x) for one token.
StreamState
layer_forward(const StreamState& x, const MappingSet& ms, const LayerFunction& f, std::size_t layer_index = 0);

/// One layer over a whole sequence; F sees all tokens' layer inputs at once.
std::vector<StreamState>
layer_forward(std::span<const StreamState> xs, std::span<const MappingSet> ms, const LayerFunction& f,
              std::size_t layer_index = 0);

struct StackResult {
    StreamState output;
    std::vector<MappingSet> trace;  ///< per layer
};

struct SequenceResult {
    std::vector<StreamState> outputs;
    std::vector<std::vector<MappingSet>> traces;  ///< [token][layer]
};

/// Mappings for every layer are computed from that layer's live input.
StackResult
stack_forward(const StreamState& x0, const StackConfig& cfg);
SequenceResult
stack_forward(std::span<const StreamState> tokens, const StackConfig& cfg);

/// H_res[last-1] * ... * H_res[first], later layers multiplied on the left.
Matrix
composite_residual(std::span<const MappingSet> trace, std::size_t first, std::size_t last);

/// Build a full stack with init_params for every layer and layer functions
/// drawn from the given seed.
StackConfig
make_stack(Variant variant, std::size_t n, std::size_t width, std::size_t depth, LayerKind kind, InitPolicy policy,
           std::uint64_t seed, double proj_stddev = 0.0, double layer_scale = 0.5);

}  // namespace mhc

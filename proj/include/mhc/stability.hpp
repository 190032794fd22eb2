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
#include <string>
#include <vector>

#include <json.hpp>

#include "mhc/mappings.hpp"
#include "mhc/matrix.hpp"
#include "mhc/stream_state.hpp"

namespace mhc {

/// Amax Gain Magnitude of a residual mapping: the largest |row sum| (forward
/// signal) and the largest |column sum| (backward gradient).
struct AmaxGain {
    double forward = 0.0;
    double backward = 0.0;
};

AmaxGain
amax_gain(const Matrix& m);

/// Gains per layer and for every composite mapping anchored at the final
/// layer. composite_*[l] belongs to H_res[L-1] * ... * H_res[l]. All values
/// are averaged over tokens.
struct GainReport {
    std::vector<double> layer_forward;
    std::vector<double> layer_backward;
    std::vector<double> composite_forward;
    std::vector<double> composite_backward;
    std::size_t tokens = 0;

    std::size_t
    depth() const noexcept {
        return layer_forward.size();
    }
    double
    max_composite_forward() const;
    double
    max_composite_backward() const;
};

/// traces[token][layer]; every token must have the same depth.
GainReport
gain_profile(std::span<const std::vector<MappingSet>> traces);
/// Same, checking that there is exactly one trace per token state.
GainReport
gain_profile(std::span<const std::vector<MappingSet>> traces, std::span<const StreamState> token_states);
GainReport
gain_profile(std::span<const MappingSet> trace);

/// h_res of one layer averaged over tokens.
Matrix
mean_residual(std::span<const std::vector<MappingSet>> traces, std::size_t layer);
/// Composite mapping for layers [first, last) averaged over tokens.
Matrix
mean_composite(std::span<const std::vector<MappingSet>> traces, std::size_t first, std::size_t last);

struct HeatmapExport {
    Matrix values;
    std::vector<double> row_sums;  ///< forward signal gain labels
    std::vector<double> col_sums;  ///< backward gradient gain labels
    std::string annotation;
};

HeatmapExport
export_heatmap(const Matrix& m, std::string annotation);

nlohmann::json
heatmap_to_json(const HeatmapExport& h);

/// "layer,forward_gain,backward_gain" rows for the single-layer gains.
std::string
layer_gain_csv(const GainReport& r);
/// "start_layer,forward_gain,backward_gain" rows for composite gains.
std::string
composite_gain_csv(const GainReport& r);

}  // namespace mhc

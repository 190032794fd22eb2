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

#include "mhc/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mhc/params_io.hpp"

namespace mhc {

namespace {

double
max_abs_of(const std::vector<double>& values) {
    double best = 0.0;
    for (double v : values) {
        best = std::max(best, std::abs(v));
    }
    return best;
}

std::string
format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t
common_depth(std::span<const std::vector<MappingSet>> traces) {
    if (traces.empty()) {
        throw std::invalid_argument("gain_profile: no traces");
    }
    const std::size_t depth = traces.front().size();
    for (const auto& t : traces) {
        if (t.size() != depth) {
            throw std::invalid_argument("gain_profile: traces of different depth");
        }
    }
    if (depth == 0) {
        throw std::invalid_argument("gain_profile: empty trace");
    }
    return depth;
}

}  // namespace

AmaxGain
amax_gain(const Matrix& m) {
    if (!m.is_square()) {
        throw ShapeError("amax_gain expects a square matrix, got " + m.shape_string());
    }
    return {max_abs_of(row_sums(m)), max_abs_of(col_sums(m))};
}

double
GainReport::max_composite_forward() const {
    return composite_forward.empty() ? 0.0 : *std::max_element(composite_forward.begin(), composite_forward.end());
}

double
GainReport::max_composite_backward() const {
    return composite_backward.empty() ? 0.0
                                      : *std::max_element(composite_backward.begin(), composite_backward.end());
}

GainReport
gain_profile(std::span<const std::vector<MappingSet>> traces) {
    const std::size_t depth = common_depth(traces);
    GainReport report;
    report.tokens = traces.size();
    report.layer_forward.assign(depth, 0.0);
    report.layer_backward.assign(depth, 0.0);
    report.composite_forward.assign(depth, 0.0);
    report.composite_backward.assign(depth, 0.0);

    for (const auto& trace : traces) {
        Matrix suffix;
        for (std::size_t l = depth; l-- > 0;) {
            const AmaxGain single = amax_gain(trace[l].h_res);
            report.layer_forward[l] += single.forward;
            report.layer_backward[l] += single.backward;
            suffix = l + 1 == depth ? trace[l].h_res : matmul(suffix, trace[l].h_res);
            const AmaxGain composite = amax_gain(suffix);
            report.composite_forward[l] += composite.forward;
            report.composite_backward[l] += composite.backward;
        }
    }
    if (traces.size() > 1) {
        const double inv = 1.0 / static_cast<double>(traces.size());
        for (auto* series : {&report.layer_forward, &report.layer_backward, &report.composite_forward,
                             &report.composite_backward}) {
            for (double& v : *series) {
                v *= inv;
            }
        }
    }
    return report;
}

GainReport
gain_profile(std::span<const std::vector<MappingSet>> traces, std::span<const StreamState> token_states) {
    if (traces.size() != token_states.size()) {
        throw std::invalid_argument("gain_profile: " + std::to_string(traces.size()) + " traces for " +
                                    std::to_string(token_states.size()) + " tokens");
    }
    return gain_profile(traces);
}

GainReport
gain_profile(std::span<const MappingSet> trace) {
    const std::vector<MappingSet> one(trace.begin(), trace.end());
    return gain_profile(std::span<const std::vector<MappingSet>>(&one, 1));
}

Matrix
mean_residual(std::span<const std::vector<MappingSet>> traces, std::size_t layer) {
    common_depth(traces);
    Matrix acc = traces.front().at(layer).h_res;
    for (std::size_t t = 1; t < traces.size(); ++t) {
        acc = acc + traces[t].at(layer).h_res;
    }
    return (1.0 / static_cast<double>(traces.size())) * acc;
}

Matrix
mean_composite(std::span<const std::vector<MappingSet>> traces, std::size_t first, std::size_t last) {
    common_depth(traces);
    Matrix acc;
    for (const auto& trace : traces) {
        if (first >= last || last > trace.size()) {
            throw std::out_of_range("mean_composite: invalid layer range");
        }
        Matrix product = trace[last - 1].h_res;
        for (std::size_t i = last - 1; i-- > first;) {
            product = matmul(product, trace[i].h_res);
        }
        acc = acc.empty() ? product : acc + product;
    }
    return (1.0 / static_cast<double>(traces.size())) * acc;
}

HeatmapExport
export_heatmap(const Matrix& m, std::string annotation) {
    if (!m.all_finite()) {
        throw std::invalid_argument("export_heatmap: non-finite matrix");
    }
    return {m, row_sums(m), col_sums(m), std::move(annotation)};
}

nlohmann::json
heatmap_to_json(const HeatmapExport& h) {
    nlohmann::json grid = nlohmann::json::array();
    for (std::size_t r = 0; r < h.values.rows(); ++r) {
        grid.push_back(std::vector<double>(h.values.row_span(r).begin(), h.values.row_span(r).end()));
    }
    return {{"annotation", h.annotation},
            {"rows", h.values.rows()},
            {"cols", h.values.cols()},
            {"values", grid},
            {"row_sums", h.row_sums},
            {"col_sums", h.col_sums}};
}

std::string
layer_gain_csv(const GainReport& r) {
    std::string out = "layer,forward_gain,backward_gain\n";
    for (std::size_t l = 0; l < r.depth(); ++l) {
        out += std::to_string(l) + "," + format_double(r.layer_forward[l]) + "," + format_double(r.layer_backward[l]) +
               "\n";
    }
    return out;
}

std::string
composite_gain_csv(const GainReport& r) {
    std::string out = "start_layer,forward_gain,backward_gain\n";
    for (std::size_t l = 0; l < r.depth(); ++l) {
        out += std::to_string(l) + "," + format_double(r.composite_forward[l]) + "," +
               format_double(r.composite_backward[l]) + "\n";
    }
    return out;
}

}  // namespace mhc

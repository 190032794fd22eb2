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

#include "mhc/harness/analyze.hpp"

#include <filesystem>

#include "mhc/harness/tasks.hpp"
#include "mhc/random.hpp"
#include "mhc/sinkhorn.hpp"

namespace mhc::harness {

AnalyzeResult
analyze_model(const ExperimentConfig& cfg, const ModelState& model) {
    model.stack.validate();
    const std::unique_ptr<Task> task = Task::create(cfg);
    const Batch batch = task->held_out();
    const std::vector<StreamState> tokens = task->input_states(model.stack, model.head, batch);
    const SequenceResult forward = stack_forward(tokens, model.stack);

    AnalyzeResult result;
    result.report = gain_profile(forward.traces, tokens);
    const std::size_t depth = model.stack.depth();
    result.heatmaps.push_back(export_heatmap(mean_residual(forward.traces, 0), "h_res layer 0"));
    if (depth > 1) {
        result.heatmaps.push_back(
            export_heatmap(mean_residual(forward.traces, depth - 1), "h_res layer " + std::to_string(depth - 1)));
    }
    result.heatmaps.push_back(export_heatmap(mean_composite(forward.traces, 0, depth),
                                             "composite layers 0.." + std::to_string(depth - 1)));
    return result;
}

void
write_analysis(const std::string& dir, const AnalyzeResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "gains.csv").string(), layer_gain_csv(result.report));
    write_text_file((fs::path(dir) / "composite_gains.csv").string(), composite_gain_csv(result.report));
    nlohmann::json maps = nlohmann::json::array();
    for (const HeatmapExport& h : result.heatmaps) {
        maps.push_back(heatmap_to_json(h));
    }
    write_text_file((fs::path(dir) / "heatmaps.json").string(), maps.dump(2) + "\n");
}

DivergenceDemo
divergence_demo(std::size_t n, std::size_t depth, std::uint64_t seed, double noise, int t_max) {
    if (n == 0 || depth == 0) {
        throw ValidationError("divergence demo needs n >= 1 and L >= 1");
    }
    SinkhornConfig sk;
    sk.t_max = t_max;
    sk.validate();
    Rng rng(seed);
    std::vector<MappingSet> raw(depth);
    std::vector<MappingSet> projected(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const Matrix h = Matrix::identity(n) + rng.normal_matrix(n, n, noise);
        raw[l].h_res = h;
        projected[l].h_res = sinkhorn_project(h, sk);
    }
    return {gain_profile(raw), gain_profile(projected)};
}

void
write_divergence_demo(const std::string& dir, const DivergenceDemo& demo) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "unconstrained_gains.csv").string(), composite_gain_csv(demo.unconstrained));
    write_text_file((fs::path(dir) / "projected_gains.csv").string(), composite_gain_csv(demo.projected));
    const nlohmann::json summary = {
        {"unconstrained_max_composite_forward", demo.unconstrained.max_composite_forward()},
        {"unconstrained_max_composite_backward", demo.unconstrained.max_composite_backward()},
        {"projected_max_composite_forward", demo.projected.max_composite_forward()},
        {"projected_max_composite_backward", demo.projected.max_composite_backward()},
    };
    write_text_file((fs::path(dir) / "divergence_summary.json").string(), summary.dump(2) + "\n");
}

}  // namespace mhc::harness

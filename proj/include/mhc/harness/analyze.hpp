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

#include <string>
#include <vector>

#include "mhc/harness/train.hpp"
#include "mhc/stability.hpp"

namespace mhc::harness {

struct AnalyzeResult {
    GainReport report;
    /// Mean h_res of the first and last layer, then the full composite.
    std::vector<HeatmapExport> heatmaps;
};

/// Forward pass over the task's held-out sequence.
AnalyzeResult
analyze_model(const ExperimentConfig& cfg, const ModelState& model);

/// Writes gains.csv, composite_gains.csv and heatmaps.json into dir.
void
write_analysis(const std::string& dir, const AnalyzeResult& result);

/// Scripted stacks of depth L: h_res = I + N(0, noise^2) against the same
/// draws passed through Sinkhorn.
struct DivergenceDemo {
    GainReport unconstrained;
    GainReport projected;
};

DivergenceDemo
divergence_demo(std::size_t n, std::size_t depth, std::uint64_t seed, double noise = 0.2, int t_max = 20);

void
write_divergence_demo(const std::string& dir, const DivergenceDemo& demo);

}  // namespace mhc::harness

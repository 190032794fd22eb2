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

#include "mhc/autodiff/model.hpp"
#include "mhc/harness/config.hpp"

namespace mhc::harness {

struct MetricsRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double max_row_dev = 0.0;
    double max_col_dev = 0.0;
    double min_entry = 0.0;
    std::vector<double> forward_gain;   ///< per layer, averaged over tokens
    std::vector<double> backward_gain;  ///< per layer, averaged over tokens
};

struct MetricsTrace {
    double initial_loss = 0.0;
    std::vector<MetricsRecord> records;
    /// Training loss of every executed step.
    std::vector<double> step_losses;
    bool diverged = false;
    std::size_t invariant_violations = 0;
    std::vector<std::string> violations;
};

struct ModelState {
    StackConfig stack;
    ad::ParameterSet head;
};

struct TrainResult {
    ExperimentConfig config;
    MetricsTrace trace;
    ModelState model;
};

/// Fresh model for a config; layer functions depend only on the seed, so
/// variants sharing a seed share F.
ModelState
init_model(const ExperimentConfig& cfg);

TrainResult
train(const ExperimentConfig& cfg);

/// Same-length windows of step_losses, averaged. Trailing partial windows
/// are dropped.
std::vector<double>
smoothed_losses(const MetricsTrace& trace, std::size_t window);

std::string
metrics_csv(const MetricsTrace& trace);
/// step,loss for every executed step.
std::string
losses_csv(const MetricsTrace& trace);
/// step,loss_gap with gap = loss - baseline_loss over the common prefix.
std::string
loss_gap_csv(const MetricsTrace& trace, const MetricsTrace& baseline);

nlohmann::json
checkpoint_to_json(const ExperimentConfig& cfg, const ModelState& model);
/// Throws ValidationError on malformed documents.
std::pair<ExperimentConfig, ModelState>
checkpoint_from_json(const nlohmann::json& j);

/// Write config.json, metrics.csv, losses.csv, checkpoint.json and
/// summary.json into <out_root>/run-<config hash>. Returns the directory.
std::string
write_run(const std::string& out_root, const TrainResult& result);

/// Also writes loss_gap.csv against a baseline trace.
std::string
write_run(const std::string& out_root, const TrainResult& result, const MetricsTrace& baseline);

}  // namespace mhc::harness

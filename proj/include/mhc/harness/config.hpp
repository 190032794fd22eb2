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
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mhc/layer_function.hpp"
#include "mhc/mappings.hpp"

namespace mhc::harness {

/// Bad user input: malformed config, out-of-range flag. Maps to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class TaskKind { SyntheticRegression, CharSequence };

std::string_view
to_string(TaskKind t);
TaskKind
parse_task(std::string_view s);

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitDivergence = 2,
    kExitInvariant = 3,
};

struct ExperimentConfig {
    Variant variant = Variant::Mhc;
    std::size_t n = 4;
    std::size_t width = 32;
    std::size_t depth = 8;
    LayerKind layer_kind = LayerKind::MlpPrenorm;
    int t_max = 20;
    InitPolicy init_policy = InitPolicy::ResidualEmulation;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t steps = 2000;
    std::size_t batch_size = 16;
    TaskKind task = TaskKind::SyntheticRegression;
    std::uint64_t seed = 0;
    std::size_t log_every = 50;
    AblationMask mask;
    double layer_scale = 0.5;
    /// Column-sum tolerance for the per-step doubly-stochastic check.
    double ds_col_tolerance = 1e-2;

    /// Throws ValidationError.
    void
    validate() const;
};

/// Flat JSON document; every field is written.
nlohmann::json
config_to_json(const ExperimentConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected.
ExperimentConfig
config_from_json(const nlohmann::json& j);
/// Apply a partial document on top of an existing config.
void
merge_config(ExperimentConfig& cfg, const nlohmann::json& overrides);

/// 16 hex digits of FNV-1a over the canonical config document.
std::string
config_hash(const ExperimentConfig& cfg);

nlohmann::json
read_json_file(const std::string& path);
void
write_text_file(const std::string& path, const std::string& contents);

}  // namespace mhc::harness

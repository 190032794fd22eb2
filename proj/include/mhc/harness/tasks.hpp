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

#include <memory>
#include <string>
#include <vector>

#include "mhc/autodiff/model.hpp"
#include "mhc/harness/config.hpp"

namespace mhc::harness {

/// One training or evaluation sequence. Regression fills inputs/targets;
/// the character task fills the id vectors.
struct Batch {
    Matrix inputs;
    Matrix targets;
    std::vector<std::size_t> input_ids;
    std::vector<std::size_t> target_ids;
};

/// A synthetic task: data, task-owned parameters (embeddings, read-out) and
/// the loss on top of the residual stack.
class Task {
public:
    virtual ~Task() = default;

    static std::unique_ptr<Task>
    create(const ExperimentConfig& cfg);

    /// Training batch for a step. Batches cycle through a fixed pool.
    virtual Batch
    batch(std::size_t step) const = 0;
    /// A sequence never used for training.
    virtual Batch
    held_out() const = 0;

    /// Initial task parameters, keyed at layer -1.
    virtual ad::ParameterSet
    init_head() const = 0;

    /// Stream states fed to the first layer.
    virtual std::vector<StreamState>
    input_states(const StackConfig& stack, const ad::ParameterSet& head, const Batch& b) const = 0;

    virtual ad::Var
    record_loss(ad::Tape& tape, const StackConfig& stack, const ad::ParameterVars& vars, const Batch& b) const = 0;
};

/// Training pool size; loss windows that are multiples of it see every batch
/// equally often.
inline constexpr std::size_t kBatchPool = 4;

/// Built-in corpus of the character task.
const std::string&
char_corpus();

}  // namespace mhc::harness

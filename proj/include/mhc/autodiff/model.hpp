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

#include <functional>
#include <map>
#include <vector>

#include "mhc/autodiff/ops.hpp"
#include "mhc/autodiff/tape.hpp"
#include "mhc/stream.hpp"

namespace mhc::ad {

using ParameterSet = std::map<ParamKey, Matrix>;
using ParameterVars = std::map<ParamKey, Var>;

/// Every learnable quantity of a stack, keyed by (layer, name). Gates are
/// 1 x 1 matrices; layer-function weights are named "F.<weight>".
ParameterSet
collect_parameters(const StackConfig& cfg);
/// Write values back into the stack. Keys absent from the stack are ignored.
void
assign_parameters(StackConfig& cfg, const ParameterSet& params);

ParameterVars
register_parameters(Tape& tape, const ParameterSet& params);

struct RecordOptions {
    SinkhornBackward sinkhorn_mode = SinkhornBackward::Recompute;
};

/// Flatten a sequence of stream states into T x nC.
Matrix
pack_states(std::span<const StreamState> tokens);
std::vector<StreamState>
unpack_states(const Matrix& packed, std::size_t n);

/// F applied to a T x C block on the tape.
Var
record_layer_function(Tape& tape, const LayerFunction& f, int layer, const ParameterVars& vars, Var inputs,
                      double rms_epsilon);

/// The whole stack on the tape: states is T x nC, the result is T x nC.
Var
record_stack(Tape& tape, const StackConfig& cfg, const ParameterVars& vars, Var states,
             const RecordOptions& opts = {});

/// mean((reduce(stack(states)) - target)^2) on the tape.
Var
record_regression_loss(Tape& tape, const StackConfig& cfg, const ParameterVars& vars, Var states,
                       const Matrix& target, const RecordOptions& opts = {});

/// The same loss evaluated on the plain forward path.
double
regression_loss(const StackConfig& cfg, std::span<const StreamState> tokens, const Matrix& target);

/// Gradient of regression_loss with respect to every stack parameter and
/// the packed input states (under kInputKey), via the tape.
GradientBundle
regression_gradient(const StackConfig& cfg, std::span<const StreamState> tokens, const Matrix& target,
                    const RecordOptions& opts = {});

/// Fourth-order central differences for every coordinate:
///   (8 (f(p + h) - f(p - h)) - (f(p + 2h) - f(p - 2h))) / 12h

GradientBundle
finite_difference_gradient(const std::function<double(const ParameterSet&)>& forward_fn, const ParameterSet& params,
                           double fd_step = 3e-3);

/// Worst per-parameter relative error ||a - b|| / max(||a||, ||b||, s), with
/// s = scale_floor times the norm of the whole bundle. Pairs where both norms
/// are below abs_floor count as agreeing.
struct GradientComparison {
    double max_rel_error = 0.0;
    ParamKey worst;
    std::size_t compared = 0;
};

GradientComparison
compare_gradients(const GradientBundle& a, const GradientBundle& b, double abs_floor = 1e-10,
                   double scale_floor = 1e-6);

}  // namespace mhc::ad

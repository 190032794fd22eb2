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

#include <any>
#include <compare>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mhc/matrix.hpp"

namespace mhc::ad {

/// Identifies a trainable quantity: layer index (-1 for stack-global
/// entries such as the input or embeddings) and parameter name.
struct ParamKey {
    int layer = -1;
    std::string name;

    auto
    operator<=>(const ParamKey&) const = default;
    std::string
    str() const;
};

inline const ParamKey kInputKey{-1, "input"};

/// Gradients keyed by parameter. The input gradient lives under kInputKey.
struct GradientBundle {
    std::map<ParamKey, Matrix> entries;

    const Matrix&
    at(const ParamKey& key) const;
    const Matrix&
    input() const {
        return at(kInputKey);
    }
    bool
    contains(const ParamKey& key) const {
        return entries.count(key) != 0;
    }

    friend bool
    operator==(const GradientBundle&, const GradientBundle&) = default;
};

class MissingBackwardRule : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
};

class Tape;

struct OpRecord {
    std::string primitive;
    std::vector<std::size_t> inputs;
    std::size_t output = 0;
    std::vector<Matrix> saved;
    std::vector<double> scalars;
    std::any aux;
};

/// Accumulates input gradients for one recorded op given the output gradient.
using BackwardRule = std::function<void(const OpRecord& op, const Matrix& out_grad, Tape& tape)>;

/// Register (or replace) the backward rule of a primitive.
void
register_backward_rule(std::string primitive, BackwardRule rule);
bool
has_backward_rule(std::string_view primitive);

/// Append-only record of a forward computation. Values are computed eagerly;
/// backward() replays the recorded ops in exact reverse order.
class Tape {
public:
    /// Differentiable leaf. A key makes its gradient part of the bundle.
    Var
    leaf(Matrix value, const ParamKey& key);
    Var
    leaf(Matrix value);
    /// Non-differentiable value.
    Var
    constant(Matrix value);

    /// Record an op whose value has already been computed.
    Var
    record(std::string primitive, std::vector<Var> inputs, Matrix value, std::vector<Matrix> saved = {},
           std::vector<double> scalars = {}, std::any aux = {});

    const Matrix&
    value(Var v) const {
        return nodes_.at(v.id).value;
    }
    /// Gradient after backward(); zero-shaped when nothing flowed into v.
    Matrix
    grad(Var v) const;

    bool
    requires_grad(Var v) const {
        return nodes_.at(v.id).requires_grad;
    }
    const Matrix&
    input_value(const OpRecord& op, std::size_t i) const {
        return nodes_[op.inputs[i]].value;
    }
    const Matrix&
    output_value(const OpRecord& op) const {
        return nodes_[op.output].value;
    }
    /// Add g into the gradient of op input i (no-op for constants).
    void
    accumulate(const OpRecord& op, std::size_t i, const Matrix& g);

    /// Reverse pass from a 1 x 1 loss.
    GradientBundle
    backward(Var loss);

    std::size_t
    op_count() const noexcept {
        return ops_.size();
    }
    const std::vector<OpRecord>&
    ops() const noexcept {
        return ops_;
    }
    /// Primitive names in the order backward() visited them.
    const std::vector<std::string>&
    replay_log() const noexcept {
        return replay_log_;
    }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        bool has_key = false;
        ParamKey key;
    };

    std::vector<Node> nodes_;
    std::vector<OpRecord> ops_;
    std::vector<std::string> replay_log_;
};

/// Free-function form of Tape::backward.
GradientBundle
backward(Var loss, Tape& tape);

/// Global Euclidean norm over every entry of the bundle.
double
gradient_norm(const GradientBundle& g);

}  // namespace mhc::ad

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

#include "mhc/autodiff/tape.hpp"

#include <cmath>
#include <mutex>
#include <unordered_map>

namespace mhc::ad {

namespace detail {
// Defined next to the primitives in ops.cpp.
void
install_builtin_rules(std::unordered_map<std::string, BackwardRule>& rules);
}  // namespace detail

namespace {

struct Registry {
    std::mutex mutex;
    std::unordered_map<std::string, BackwardRule> rules;

    Registry() {
        detail::install_builtin_rules(rules);
    }
};

Registry&
registry() {
    static Registry r;
    return r;
}

}  // namespace

std::string
ParamKey::str() const {
    return layer < 0 ? name : "layer" + std::to_string(layer) + "." + name;
}

const Matrix&
GradientBundle::at(const ParamKey& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) {
        throw std::out_of_range("no gradient for " + key.str());
    }
    return it->second;
}

void
register_backward_rule(std::string primitive, BackwardRule rule) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.rules[std::move(primitive)] = std::move(rule);
}

bool
has_backward_rule(std::string_view primitive) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    return r.rules.count(std::string(primitive)) != 0;
}

Var
Tape::leaf(Matrix value, const ParamKey& key) {
    nodes_.push_back({std::move(value), {}, true, true, key});
    return {nodes_.size() - 1};
}

Var
Tape::leaf(Matrix value) {
    nodes_.push_back({std::move(value), {}, true, false, {}});
    return {nodes_.size() - 1};
}

Var
Tape::constant(Matrix value) {
    nodes_.push_back({std::move(value), {}, false, false, {}});
    return {nodes_.size() - 1};
}

Var
Tape::record(std::string primitive, std::vector<Var> inputs, Matrix value, std::vector<Matrix> saved,
             std::vector<double> scalars, std::any aux) {
    bool needs_grad = false;
    OpRecord op;
    op.primitive = std::move(primitive);
    op.inputs.reserve(inputs.size());
    for (Var v : inputs) {
        if (v.id >= nodes_.size()) {
            throw std::out_of_range("op '" + op.primitive + "' references an unknown variable");
        }
        needs_grad = needs_grad || nodes_[v.id].requires_grad;
        op.inputs.push_back(v.id);
    }
    nodes_.push_back({std::move(value), {}, needs_grad, false, {}});
    op.output = nodes_.size() - 1;
    op.saved = std::move(saved);
    op.scalars = std::move(scalars);
    op.aux = std::move(aux);
    if (needs_grad) {
        ops_.push_back(std::move(op));
    }
    return {nodes_.size() - 1};
}

Matrix
Tape::grad(Var v) const {
    const Node& node = nodes_.at(v.id);
    if (node.grad.empty() && !node.value.empty()) {
        return Matrix(node.value.rows(), node.value.cols());
    }
    return node.grad;
}

void
Tape::accumulate(const OpRecord& op, std::size_t i, const Matrix& g) {
    Node& node = nodes_[op.inputs[i]];
    if (!node.requires_grad) {
        return;
    }
    require_same_shape(node.value, g, ("gradient of " + op.primitive).c_str());
    if (node.grad.empty()) {
        node.grad = g;
    } else {
        node.grad = node.grad + g;
    }
}

GradientBundle
Tape::backward(Var loss) {
    const Node& loss_node = nodes_.at(loss.id);
    if (loss_node.value.rows() != 1 || loss_node.value.cols() != 1) {
        throw ShapeError("backward needs a scalar loss, got " + loss_node.value.shape_string());
    }
    for (Node& n : nodes_) {
        n.grad = Matrix();
    }
    replay_log_.clear();
    nodes_[loss.id].grad = Matrix(1, 1, 1.0);

    // Resolve every rule up front so a missing one fails before any replay.
    std::vector<const BackwardRule*> rules(ops_.size());
    {
        auto& r = registry();
        std::lock_guard lock(r.mutex);
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            auto it = r.rules.find(ops_[i].primitive);
            if (it == r.rules.end()) {
                throw MissingBackwardRule("no backward rule registered for primitive '" + ops_[i].primitive + "'");
            }
            rules[i] = &it->second;
        }
    }

    for (std::size_t i = ops_.size(); i-- > 0;) {
        const OpRecord& op = ops_[i];
        if (op.output > loss.id) {
            continue;
        }
        Node& out = nodes_[op.output];
        if (out.grad.empty()) {
            continue;
        }
        replay_log_.push_back(op.primitive);
        const Matrix out_grad = out.grad;
        (*rules[i])(op, out_grad, *this);
    }

    GradientBundle bundle;
    for (const Node& n : nodes_) {
        if (n.has_key) {
            bundle.entries[n.key] = n.grad.empty() ? Matrix(n.value.rows(), n.value.cols()) : n.grad;
        }
    }
    return bundle;
}

GradientBundle
backward(Var loss, Tape& tape) {
    return tape.backward(loss);
}

double
gradient_norm(const GradientBundle& g) {
    double total = 0.0;
    for (const auto& [key, m] : g.entries) {
        for (double v : m.values()) {
            total += v * v;
        }
    }
    return std::sqrt(total);
}

}  // namespace mhc::ad

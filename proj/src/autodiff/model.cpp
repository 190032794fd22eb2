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

#include "mhc/autodiff/model.hpp"

#include <algorithm>
#include <cmath>

namespace mhc::ad {

namespace {

constexpr const char* kMappingNames[] = {"alpha_pre", "alpha_post", "alpha_res", "proj_pre",
                                         "proj_post", "proj_res",   "bias_pre",  "bias_post", "bias_res"};

std::string
weight_key(std::string_view name) {
    return "F." + std::string(name);
}

Var
var_for(const ParameterVars& vars, int layer, const std::string& name) {
    auto it = vars.find({layer, name});
    if (it == vars.end()) {
        throw std::out_of_range("no tape variable for " + ParamKey{layer, name}.str());
    }
    return it->second;
}

Matrix*
mapping_field(MappingParams& p, std::string_view name) {
    if (name == "proj_pre") return &p.proj_pre;
    if (name == "proj_post") return &p.proj_post;
    if (name == "proj_res") return &p.proj_res;
    if (name == "bias_pre") return &p.bias_pre;
    if (name == "bias_post") return &p.bias_post;
    if (name == "bias_res") return &p.bias_res;
    return nullptr;
}

double*
gate_field(MappingParams& p, std::string_view name) {
    if (name == "alpha_pre") return &p.alpha_pre;
    if (name == "alpha_post") return &p.alpha_post;
    if (name == "alpha_res") return &p.alpha_res;
    return nullptr;
}

Matrix
repeated_row(std::size_t rows, const Matrix& row) {
    Matrix out(rows, row.cols());
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy(row.values().begin(), row.values().end(), out.row_span(r).begin());
    }
    return out;
}

struct LayerMappings {
    Var h_pre;
    Var h_post;
    Var h_res;
};

LayerMappings
record_mappings(Tape& tape, const StackConfig& cfg, int layer, const ParameterVars& vars, Var x, std::size_t tokens,
                const RecordOptions& opts) {
    const std::size_t n = cfg.n;
    const std::size_t width = cfg.width;
    const MappingSet fixed = fixed_mappings(n);
    LayerMappings out{};
    const AblationMask& mask = cfg.mask;
    auto p = [&](const char* name) { return var_for(vars, layer, name); };

    if (cfg.variant == Variant::Baseline) {
        out.h_pre = tape.constant(repeated_row(tokens, fixed.h_pre));
        out.h_post = tape.constant(repeated_row(tokens, fixed.h_post));
        out.h_res = tape.constant(repeated_row(tokens, fixed.h_res.reshaped(1, n * n)));
        return out;
    }

    if (cfg.variant == Variant::Hc) {
        const Var per_stream = reshape(tape, x, tokens * n, width);
        const Var normed = rmsnorm_rows(tape, per_stream, cfg.rms_epsilon);
        auto vector_map = [&](const char* alpha, const char* proj, const char* bias) {
            const Var projected = matmul(tape, normed, transpose(tape, p(proj)));
            const Var dynamic = tanh(tape, reshape(tape, projected, tokens, n));
            return add_row(tape, gate(tape, p(alpha), dynamic), p(bias));
        };
        if (mask.use_pre) out.h_pre = vector_map("alpha_pre", "proj_pre", "bias_pre");
        if (mask.use_post) out.h_post = vector_map("alpha_post", "proj_post", "bias_post");
        if (mask.use_res) {
            const Var projected = matmul(tape, normed, transpose(tape, p("proj_res")));
            const Var arranged = block_transpose(tape, reshape(tape, projected, tokens, n * n), n);
            out.h_res = add_row(tape, gate(tape, p("alpha_res"), tanh(tape, arranged)),
                                reshape(tape, p("bias_res"), 1, n * n));
        }
    } else {
        const Var normed = rmsnorm_rows(tape, x, cfg.rms_epsilon);
        auto pre_activation = [&](const char* alpha, const char* proj, Var bias_row) {
            return add_row(tape, gate(tape, p(alpha), matmul(tape, normed, p(proj))), bias_row);
        };
        if (mask.use_pre) out.h_pre = sigmoid(tape, pre_activation("alpha_pre", "proj_pre", p("bias_pre")));
        if (mask.use_post) {
            out.h_post = scale(tape, sigmoid(tape, pre_activation("alpha_post", "proj_post", p("bias_post"))), 2.0);
        }
        if (mask.use_res) {
            const Var tilde = pre_activation("alpha_res", "proj_res", reshape(tape, p("bias_res"), 1, n * n));
            out.h_res = sinkhorn_rows(tape, tilde, n, cfg.mappings[layer].sinkhorn, opts.sinkhorn_mode);
        }
    }
    if (!mask.use_pre) out.h_pre = tape.constant(repeated_row(tokens, fixed.h_pre));
    if (!mask.use_post) out.h_post = tape.constant(repeated_row(tokens, fixed.h_post));
    if (!mask.use_res) out.h_res = tape.constant(repeated_row(tokens, fixed.h_res.reshaped(1, n * n)));
    return out;
}

}  // namespace

ParameterSet
collect_parameters(const StackConfig& cfg) {
    ParameterSet params;
    for (std::size_t l = 0; l < cfg.depth(); ++l) {
        const int layer = static_cast<int>(l);
        MappingParams p = cfg.mappings[l];
        if (p.variant != Variant::Baseline) {
            for (const char* name : kMappingNames) {
                if (double* g = gate_field(p, name)) {
                    params[{layer, name}] = Matrix(1, 1, *g);
                } else {
                    params[{layer, name}] = *mapping_field(p, name);
                }
            }
        }
        const LayerFunction& f = cfg.layers[l];
        const auto names = LayerFunction::weight_names(f.kind);
        for (std::size_t w = 0; w < names.size(); ++w) {
            params[{layer, weight_key(names[w])}] = f.weights.at(w);
        }
    }
    return params;
}

void
assign_parameters(StackConfig& cfg, const ParameterSet& params) {
    for (const auto& [key, value] : params) {
        if (key.layer < 0 || static_cast<std::size_t>(key.layer) >= cfg.depth()) {
            continue;
        }
        MappingParams& p = cfg.mappings[key.layer];
        if (double* g = gate_field(p, key.name)) {
            *g = value[0];
        } else if (Matrix* m = mapping_field(p, key.name)) {
            *m = value;
        } else {
            LayerFunction& f = cfg.layers[key.layer];
            const auto names = LayerFunction::weight_names(f.kind);
            for (std::size_t w = 0; w < names.size(); ++w) {
                if (key.name == weight_key(names[w])) {
                    f.weights.at(w) = value;
                }
            }
        }
    }
}

ParameterVars
register_parameters(Tape& tape, const ParameterSet& params) {
    ParameterVars vars;
    for (const auto& [key, value] : params) {
        vars[key] = tape.leaf(value, key);
    }
    return vars;
}

Matrix
pack_states(std::span<const StreamState> tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("pack_states: empty sequence");
    }
    const std::size_t flat = tokens.front().values().size();
    Matrix packed(tokens.size(), flat);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t].values().size() != flat) {
            throw ShapeError("pack_states: tokens disagree in shape");
        }
        std::copy(tokens[t].values().values().begin(), tokens[t].values().values().end(),
                  packed.row_span(t).begin());
    }
    return packed;
}

std::vector<StreamState>
unpack_states(const Matrix& packed, std::size_t n) {
    std::vector<StreamState> out;
    out.reserve(packed.rows());
    for (std::size_t t = 0; t < packed.rows(); ++t) {
        out.emplace_back(Matrix::row(packed.row_span(t)).reshaped(n, packed.cols() / n));
    }
    return out;
}

Var
record_layer_function(Tape& tape, const LayerFunction& f, int layer, const ParameterVars& vars, Var inputs,
                      double rms_epsilon) {
    const Matrix& u = tape.value(inputs);
    auto w = [&](const char* name) { return var_for(vars, layer, weight_key(name)); };
    switch (f.kind) {
        case LayerKind::Zero:
            return tape.constant(Matrix(u.rows(), u.cols()));
        case LayerKind::Linear:
            return matmul(tape, inputs, w("W"));
        case LayerKind::MlpPrenorm: {
            const Var hidden = gelu(tape, matmul(tape, rmsnorm_rows(tape, inputs, rms_epsilon), w("W1")));
            return matmul(tape, hidden, w("W2"));
        }
        case LayerKind::ToyAttention: {
            const Var normed = rmsnorm_rows(tape, inputs, rms_epsilon);
            const Var q = matmul(tape, normed, w("Wq"));
            const Var k = matmul(tape, normed, w("Wk"));
            const Var v = matmul(tape, normed, w("Wv"));
            const Var scores =
                scale(tape, matmul(tape, q, transpose(tape, k)), 1.0 / std::sqrt(static_cast<double>(f.width)));
            return matmul(tape, matmul(tape, causal_softmax(tape, scores), v), w("Wo"));
        }
    }
    throw std::logic_error("unreachable layer kind");
}

Var
record_stack(Tape& tape, const StackConfig& cfg, const ParameterVars& vars, Var states, const RecordOptions& opts) {
    cfg.validate();
    const std::size_t tokens = tape.value(states).rows();
    if (tape.value(states).cols() != cfg.n * cfg.width) {
        throw ShapeError("record_stack: states " + tape.value(states).shape_string() + " do not match n*C = " +
                         std::to_string(cfg.n * cfg.width));
    }
    Var x = states;
    for (std::size_t l = 0; l < cfg.depth(); ++l) {
        const int layer = static_cast<int>(l);
        const LayerMappings maps = record_mappings(tape, cfg, layer, vars, x, tokens, opts);
        const Var u = stream_pre(tape, maps.h_pre, x, cfg.n);
        const Var f = record_layer_function(tape, cfg.layers[l], layer, vars, u, cfg.layers[l].rms_epsilon);
        if (!tape.value(f).all_finite()) {
            throw PropagationError(l, "layer function produced non-finite output");
        }
        x = stream_merge(tape, maps.h_res, x, maps.h_post, f, cfg.n);
    }
    return x;
}

Var
record_regression_loss(Tape& tape, const StackConfig& cfg, const ParameterVars& vars, Var states,
                       const Matrix& target, const RecordOptions& opts) {
    const Var out = record_stack(tape, cfg, vars, states, opts);
    const std::size_t tokens = tape.value(out).rows();
    const Var mean_weights = tape.constant(Matrix(tokens, cfg.n, 1.0 / static_cast<double>(cfg.n)));
    const Var reduced = stream_pre(tape, mean_weights, out, cfg.n);
    return mean_square(tape, sub(tape, reduced, tape.constant(target)));
}

double
regression_loss(const StackConfig& cfg, std::span<const StreamState> tokens, const Matrix& target) {
    const SequenceResult result = stack_forward(tokens, cfg);
    Matrix reduced(tokens.size(), cfg.width);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const Matrix r = reduce(result.outputs[t]);
        std::copy(r.values().begin(), r.values().end(), reduced.row_span(t).begin());
    }
    const Matrix diff = reduced - target;
    double total = 0.0;
    for (double v : diff.values()) {
        total += v * v;
    }
    return total / static_cast<double>(diff.size());
}

GradientBundle
regression_gradient(const StackConfig& cfg, std::span<const StreamState> tokens, const Matrix& target,
                    const RecordOptions& opts) {
    Tape tape;
    const ParameterVars vars = register_parameters(tape, collect_parameters(cfg));
    const Var states = tape.leaf(pack_states(tokens), kInputKey);
    return tape.backward(record_regression_loss(tape, cfg, vars, states, target, opts));
}

GradientBundle
finite_difference_gradient(const std::function<double(const ParameterSet&)>& forward_fn, const ParameterSet& params,
                           double fd_step) {
    if (!(fd_step > 0.0)) {
        throw std::invalid_argument("fd_step must be positive");
    }
    GradientBundle bundle;
    ParameterSet probe = params;
    for (const auto& [key, value] : params) {
        Matrix grad(value.rows(), value.cols());
        Matrix& slot = probe.at(key);
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double original = value[i];
            slot[i] = original + 2.0 * fd_step;
            const double up2 = forward_fn(probe);
            slot[i] = original + fd_step;
            const double up = forward_fn(probe);
            slot[i] = original - fd_step;
            const double down = forward_fn(probe);
            slot[i] = original - 2.0 * fd_step;
            const double down2 = forward_fn(probe);
            slot[i] = original;
            grad[i] = (8.0 * (up - down) - (up2 - down2)) / (12.0 * fd_step);
        }
        bundle.entries[key] = std::move(grad);
    }
    return bundle;
}

GradientComparison
compare_gradients(const GradientBundle& a, const GradientBundle& b, double abs_floor, double scale_floor) {
    GradientComparison result;
    double total_a = 0.0;
    double total_b = 0.0;
    for (const auto& [key, ga] : a.entries) {
        total_a += l2_norm(ga) * l2_norm(ga);
        total_b += l2_norm(b.at(key)) * l2_norm(b.at(key));
    }
    const double floor = scale_floor * std::sqrt(std::max(total_a, total_b));
    for (const auto& [key, ga] : a.entries) {
        const Matrix& gb = b.at(key);
        const double na = l2_norm(ga);
        const double nb = l2_norm(gb);
        ++result.compared;
        if (std::max(na, nb) < abs_floor) {
            continue;
        }
        const double rel = l2_norm(ga - gb) / std::max({na, nb, floor});
        if (rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst = key;
        }
    }
    return result;
}

}  // namespace mhc::ad

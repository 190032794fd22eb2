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

#include "mhc/stream.hpp"

#include "mhc/random.hpp"

namespace mhc {

void
StackConfig::validate() const {
    if (layers.empty()) {
        throw std::invalid_argument("stack needs at least one layer");
    }
    if (mappings.size() != layers.size()) {
        throw ShapeError("stack has " + std::to_string(layers.size()) + " layer functions but " +
                         std::to_string(mappings.size()) + " mapping parameter sets");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const MappingParams& p = mappings[l];
        if (p.variant != variant || p.n != n || p.width != width) {
            throw ShapeError("layer " + std::to_string(l) + " mapping params disagree with stack shape");
        }
        p.validate();
        if (layers[l].width != width) {
            throw ShapeError("layer " + std::to_string(l) + " function width disagrees with stack width");
        }
    }
}

StreamState
expand(const Matrix& input, std::size_t n) {
    if (input.rows() != 1) {
        throw ShapeError("expand expects a row vector, got " + input.shape_string());
    }
    Matrix values(n, input.cols());
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(input.values().begin(), input.values().end(), values.row_span(i).begin());
    }
    return StreamState(std::move(values));
}

Matrix
reduce(const StreamState& x) {
    const double inv_n = 1.0 / static_cast<double>(x.n());
    return matmul(Matrix(1, x.n(), inv_n), x.values());
}

namespace {

void
check_mapping_shapes(const StreamState& x, const MappingSet& ms, std::size_t layer_index) {
    const std::size_t n = x.n();
    if (ms.h_pre.rows() != 1 || ms.h_pre.cols() != n || ms.h_post.rows() != 1 || ms.h_post.cols() != n ||
        ms.h_res.rows() != n || ms.h_res.cols() != n) {
        throw PropagationError(layer_index, "mapping shapes do not match a " + std::to_string(n) + "-stream state");
    }
}

StreamState
merge(const StreamState& x, const MappingSet& ms, const Matrix& layer_output) {
    return StreamState(matmul(ms.h_res, x.values()) + matmul(transpose(ms.h_post), layer_output));
}

}  // namespace

StreamState
layer_forward(const StreamState& x, const MappingSet& ms, const LayerFunction& f, std::size_t layer_index) {
    const StreamState xs[] = {x};
    const MappingSet mss[] = {ms};
    return layer_forward(std::span<const StreamState>(xs), std::span<const MappingSet>(mss), f, layer_index).front();
}

std::vector<StreamState>
layer_forward(std::span<const StreamState> xs, std::span<const MappingSet> ms, const LayerFunction& f,
              std::size_t layer_index) {
    if (xs.size() != ms.size() || xs.empty()) {
        throw PropagationError(layer_index, "token and mapping counts differ");
    }
    const std::size_t width = xs.front().width();
    Matrix inputs(xs.size(), width);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        check_mapping_shapes(xs[t], ms[t], layer_index);
        const Matrix u = matmul(ms[t].h_pre, xs[t].values());
        std::copy(u.values().begin(), u.values().end(), inputs.row_span(t).begin());
    }
    Matrix outputs;
    try {
        outputs = f.apply(inputs);
    } catch (const ShapeError& e) {
        throw PropagationError(layer_index, e.what());
    }
    if (!outputs.all_finite()) {
        throw PropagationError(layer_index, "layer function produced non-finite output");
    }
    std::vector<StreamState> result;
    result.reserve(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
        result.push_back(merge(xs[t], ms[t], Matrix::row(outputs.row_span(t))));
    }
    return result;
}

StackResult
stack_forward(const StreamState& x0, const StackConfig& cfg) {
    const StreamState tokens[] = {x0};
    SequenceResult seq = stack_forward(std::span<const StreamState>(tokens), cfg);
    return {std::move(seq.outputs.front()), std::move(seq.traces.front())};
}

SequenceResult
stack_forward(std::span<const StreamState> tokens, const StackConfig& cfg) {
    cfg.validate();
    SequenceResult result;
    result.outputs.assign(tokens.begin(), tokens.end());
    result.traces.assign(tokens.size(), {});
    for (auto& t : result.traces) {
        t.reserve(cfg.depth());
    }
    std::vector<MappingSet> layer_maps(tokens.size());
    for (std::size_t l = 0; l < cfg.depth(); ++l) {
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            try {
                layer_maps[t] = apply_ablation(compute_mappings(result.outputs[t], cfg.mappings[l], cfg.rms_epsilon),
                                               cfg.mask, cfg.n);
            } catch (const ShapeError& e) {
                throw PropagationError(l, e.what());
            }
            result.traces[t].push_back(layer_maps[t]);
        }
        result.outputs = layer_forward(result.outputs, layer_maps, cfg.layers[l], l);
    }
    return result;
}

Matrix
composite_residual(std::span<const MappingSet> trace, std::size_t first, std::size_t last) {
    if (first >= last || last > trace.size()) {
        throw std::out_of_range("composite_residual: need 0 <= l < L <= " + std::to_string(trace.size()) +
                                ", got l=" + std::to_string(first) + " L=" + std::to_string(last));
    }
    Matrix product = trace[last - 1].h_res;
    for (std::size_t i = last - 1; i-- > first;) {
        product = matmul(product, trace[i].h_res);
    }
    return product;
}

StackConfig
make_stack(Variant variant, std::size_t n, std::size_t width, std::size_t depth, LayerKind kind, InitPolicy policy,
           std::uint64_t seed, double proj_stddev, double layer_scale) {
    StackConfig cfg;
    cfg.variant = variant;
    cfg.n = n;
    cfg.width = width;
    for (std::size_t l = 0; l < depth; ++l) {
        // Layer-function weights come from a stream that ignores the variant,
        // so stacks of different variants share the same F.
        Rng layer_rng = Rng::derived(seed, 1000 + l);
        cfg.layers.push_back(make_layer_function(kind, width, layer_rng, layer_scale));
        cfg.mappings.push_back(init_params(variant, n, width, policy, splitmix64(seed + 7919 * (l + 1)), proj_stddev));
    }
    return cfg;
}

}  // namespace mhc

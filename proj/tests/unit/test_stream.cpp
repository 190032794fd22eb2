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

#include <doctest.h>

#include <cmath>

#include "mhc/random.hpp"
#include "mhc/sinkhorn.hpp"
#include "mhc/stream.hpp"
#include "test_util.hpp"

using namespace mhc;

namespace {

LayerFunction
zero_function(std::size_t c) {
    return LayerFunction{LayerKind::Zero, c, {}, 1e-20};
}

LayerFunction
linear_function(std::size_t c, Rng& rng) {
    return make_layer_function(LayerKind::Linear, c, rng, 0.8);
}

/// A stack whose every layer uses the given fixed mapping values.
StackConfig
fixed_stack(std::size_t n, std::size_t c, std::vector<LayerFunction> layers) {
    StackConfig cfg;
    cfg.variant = Variant::Baseline;
    cfg.n = n;
    cfg.width = c;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        cfg.mappings.push_back(init_params(Variant::Baseline, n, c, InitPolicy::Uniform, 0));
    }
    cfg.layers = std::move(layers);
    return cfg;
}

Matrix
column_totals(const StreamState& x) {
    return Matrix(1, x.width(), col_sums(x.values()));
}

}  // namespace

TEST_CASE("expand and reduce") {
    const Matrix r = Matrix::row({1.5, -2, 3});
    CHECK(expand(r, 1).values() == r);
    const StreamState four = expand(r, 4);
    CHECK(four.n() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(four.values()(i, k) == r[k]);
        }
    }
    CHECK(reduce(four) == r);
    CHECK(reduce(StreamState(Matrix{{1, 2}, {-1, -2}})) == Matrix::row({0, 0}));
    CHECK(reduce(StreamState(Matrix{{1, 2}})) == Matrix::row({1, 2}));
    CHECK(four.flattened().cols() == 12);
}

TEST_CASE("single layer examples") {
    Rng rng(1);
    const StreamState x(rng.normal_matrix(3, 4, 1.0));
    const MappingSet ident = fixed_mappings(3);
    CHECK(layer_forward(x, ident, zero_function(4)).values() == x.values());

    const LayerFunction f = linear_function(4, rng);
    const StreamState one(rng.normal_matrix(1, 4, 1.0));
    const MappingSet unit{Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{1.0}}};
    const Matrix expected = one.values() + f.apply(one.values());
    CHECK(max_abs_diff(layer_forward(one, unit, f).values(), expected) <= 1e-15);

    const StreamState two(Matrix{{1, 2}, {3, 4}});
    const MappingSet swap{Matrix(1, 2, 0.5), Matrix(1, 2, 1.0), Matrix{{0, 1}, {1, 0}}};
    CHECK(layer_forward(two, swap, zero_function(2)).values() == Matrix{{3, 4}, {1, 2}});
}

TEST_CASE("layer merge writes F back through h_post") {
    const StreamState x(Matrix{{1, 0}, {0, 1}});
    LayerFunction f{LayerKind::Linear, 2, {Matrix::identity(2)}, 1e-20};
    const MappingSet ms{Matrix::row({0.25, 0.75}), Matrix::row({2, -1}), Matrix::identity(2)};
    // h_pre x = [0.25, 0.75]; F is the identity.
    CHECK(layer_forward(x, ms, f).values() == Matrix{{1.5, 1.5}, {-0.25, 0.25}});
}

TEST_CASE("non-finite layer output names the layer") {
    Rng rng(2);
    std::vector<LayerFunction> layers;
    for (int l = 0; l < 4; ++l) {
        layers.push_back(linear_function(3, rng));
    }
    layers[2].weights[0](0, 0) = std::nan("");
    const StackConfig cfg = fixed_stack(2, 3, layers);
    try {
        stack_forward(expand(Matrix::row({1, 1, 1}), 2), cfg);
        FAIL("expected a propagation error");
    } catch (const PropagationError& e) {
        CHECK(e.layer() == 2);
        CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }
}

TEST_CASE("zero-function identity stack returns its input") {
    Rng rng(3);
    const StackConfig cfg = fixed_stack(4, 5, {zero_function(5), zero_function(5), zero_function(5)});
    const StreamState x0(rng.normal_matrix(4, 5, 1.0));
    const StackResult r = stack_forward(x0, cfg);
    CHECK(r.output.values() == x0.values());
    CHECK(r.trace.size() == 3);
}

TEST_CASE("baseline equals mhc with one stream") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (LayerKind kind : {LayerKind::Linear, LayerKind::MlpPrenorm, LayerKind::ToyAttention}) {
            const StackConfig base = make_stack(Variant::Baseline, 1, 6, 4, kind, InitPolicy::ResidualEmulation, seed);
            StackConfig mhc = make_stack(Variant::Mhc, 1, 6, 4, kind, InitPolicy::ResidualEmulation, seed, 0.5);
            mhc.mask = {true, false, false};
            Rng rng(seed);
            std::vector<StreamState> tokens;
            for (int t = 0; t < 3; ++t) {
                tokens.emplace_back(rng.normal_matrix(1, 6, 1.0));
            }
            const SequenceResult a = stack_forward(tokens, base);
            const SequenceResult b = stack_forward(tokens, mhc);
            for (std::size_t t = 0; t < tokens.size(); ++t) {
                CHECK(max_abs_diff(a.outputs[t].values(), b.outputs[t].values()) <= 1e-12);
            }
        }
    }
}

TEST_CASE("stack output equals the expanded multi-layer form") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3;
        const std::size_t c = 4;
        StackConfig cfg = make_stack(Variant::Hc, n, c, 3, LayerKind::Linear, InitPolicy::ResidualEmulation,
                                     100 + trial, 0.7);
        for (MappingParams& p : cfg.mappings) {
            p.alpha_pre = p.alpha_post = p.alpha_res = 0.8;
        }
        const StreamState x0(rng.normal_matrix(n, c, 1.0));
        const StackResult r = stack_forward(x0, cfg);

        // x_{l+1} = H_res x_l + H_post^T F(H_pre x_l), unrolled as
        // x_L = (prod H_res) x_0 + sum_i (prod_{j > i} H_res_j) H_post_i^T F(H_pre_i x_i).
        std::vector<Matrix> xs{x0.values()};
        for (std::size_t l = 0; l < 3; ++l) {
            const MappingSet& ms = r.trace[l];
            const Matrix injected = matmul(transpose(ms.h_post), cfg.layers[l].apply(matmul(ms.h_pre, xs.back())));
            xs.push_back(test::naive_matmul(ms.h_res, xs.back()) + injected);
        }
        Matrix expanded = test::naive_matmul(composite_residual(r.trace, 0, 3), x0.values());
        for (std::size_t i = 0; i < 3; ++i) {
            const MappingSet& ms = r.trace[i];
            Matrix term = matmul(transpose(ms.h_post), cfg.layers[i].apply(matmul(ms.h_pre, xs[i])));
            if (i + 1 < 3) {
                term = test::naive_matmul(composite_residual(r.trace, i + 1, 3), term);
            }
            expanded = expanded + term;
        }
        CHECK(test::rel_error(r.output.values(), expanded) <= 1e-10);
        CHECK(test::rel_error(r.output.values(), xs.back()) <= 1e-12);
    }
}

TEST_CASE("composite residual ordering") {
    const Matrix a{{1, 2}, {0, 1}};
    const Matrix b{{0, 1}, {1, 0}};
    const Matrix c{{2, 0}, {1, 3}};
    const std::vector<MappingSet> trace{{{}, {}, a}, {{}, {}, b}, {{}, {}, c}};
    CHECK(composite_residual(trace, 0, 3) == test::naive_matmul(c, test::naive_matmul(b, a)));
    // C B A worked by hand: B A = [[0,1],[1,2]], C (B A) = [[0,2],[3,7]].
    CHECK(composite_residual(trace, 0, 3) == Matrix{{0, 2}, {3, 7}});
    CHECK(composite_residual(trace, 2, 3) == c);
    CHECK(composite_residual(trace, 1, 3) == test::naive_matmul(c, b));
    const std::vector<MappingSet> eye(5, fixed_mappings(3));
    CHECK(composite_residual(eye, 0, 5) == Matrix::identity(3));
    CHECK_THROWS_AS(composite_residual(trace, 2, 2), std::out_of_range);
    CHECK_THROWS_AS(composite_residual(trace, 0, 4), std::out_of_range);
}

TEST_CASE("doubly stochastic mixing conserves the stream total") {
    Rng rng(5);
    double contrast = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(6);
        const StreamState x(rng.normal_matrix(n, 5, 1.0));
        const MappingSet ds{Matrix(1, n, 1.0 / n), Matrix(1, n, 1.0), test::random_birkhoff(n, rng)};
        const StreamState y = layer_forward(x, ds, zero_function(5));
        CHECK(max_abs_diff(column_totals(y), column_totals(x)) <= 1e-12);

        const MappingSet free{ds.h_pre, ds.h_post, Matrix::identity(n) + rng.normal_matrix(n, n, 0.2)};
        contrast = std::max(contrast, max_abs_diff(column_totals(layer_forward(x, free, zero_function(5))),
                                                   column_totals(x)));
    }
    CHECK(contrast > 1e-3);
}

TEST_CASE("doubly stochastic mixing does not expand the state") {
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(6);
        const Matrix h = test::random_birkhoff(n, rng);
        const Matrix x = rng.normal_matrix(n, 7, 1.0);
        CHECK(l2_norm(matmul(h, x)) <= (1.0 + 1e-9) * l2_norm(x));
    }
}

TEST_CASE("composite of an mhc trace stays near the Birkhoff polytope") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        StackConfig cfg = make_stack(Variant::Mhc, 4, 8, 12, LayerKind::MlpPrenorm, InitPolicy::Uniform, trial);
        for (MappingParams& p : cfg.mappings) {
            p.alpha_res = 1.0;
            p.proj_res = rng.uniform_matrix(32, 16, -0.3, 0.3);
            p.bias_res = rng.uniform_matrix(4, 4, -1.5, 1.5);
        }
        const StackResult r = stack_forward(StreamState(rng.normal_matrix(4, 8, 1.0)), cfg);
        const DsDiagnostics d = ds_diagnostics(composite_residual(r.trace, 0, 12));
        CHECK(d.max_row_dev <= 12 * 1e-12);
        CHECK(d.max_col_dev <= 12 * 1e-3);
    }
}

TEST_CASE("baseline accumulates layer outputs") {
    Rng rng(8);
    const StackConfig cfg = make_stack(Variant::Baseline, 1, 6, 8, LayerKind::MlpPrenorm,
                                       InitPolicy::ResidualEmulation, 3);
    const StreamState x0(rng.normal_matrix(1, 6, 1.0));
    std::vector<Matrix> xs{x0.values()};
    Matrix accumulated(1, 6);
    for (std::size_t l = 0; l < cfg.depth(); ++l) {
        const Matrix f = cfg.layers[l].apply(xs.back());
        accumulated = accumulated + f;
        xs.push_back(xs.back() + f);
    }
    const StackResult r = stack_forward(x0, cfg);
    CHECK(max_abs_diff(r.output.values() - x0.values(), accumulated) <= 1e-12);
}

TEST_CASE("sequence forward") {
    Rng rng(9);
    const StackConfig mlp = make_stack(Variant::Mhc, 2, 4, 3, LayerKind::MlpPrenorm, InitPolicy::ResidualEmulation,
                                       4, 0.3);
    std::vector<StreamState> tokens;
    for (int t = 0; t < 5; ++t) {
        tokens.emplace_back(rng.normal_matrix(2, 4, 1.0));
    }
    const SequenceResult seq = stack_forward(tokens, mlp);
    CHECK(seq.traces.size() == 5);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        CHECK(max_abs_diff(seq.outputs[t].values(), stack_forward(tokens[t], mlp).output.values()) <= 1e-14);
    }

    const StackConfig attn = make_stack(Variant::Mhc, 2, 4, 3, LayerKind::ToyAttention,
                                        InitPolicy::ResidualEmulation, 4, 0.3);
    const SequenceResult a = stack_forward(tokens, attn);
    CHECK(max_abs_diff(a.outputs[0].values(), stack_forward(tokens[0], attn).output.values()) <= 1e-14);
    std::vector<StreamState> changed = tokens;
    changed[4] = StreamState(rng.normal_matrix(2, 4, 1.0));
    const SequenceResult b = stack_forward(changed, attn);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(b.outputs[t].values() == a.outputs[t].values());
    }
}

TEST_CASE("stacks built from one seed share their layer functions") {
    const StackConfig a = make_stack(Variant::Hc, 4, 8, 3, LayerKind::ToyAttention, InitPolicy::Uniform, 12);
    const StackConfig b = make_stack(Variant::Mhc, 2, 8, 3, LayerKind::ToyAttention, InitPolicy::Uniform, 12);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(a.layers[l].weights == b.layers[l].weights);
    }
    CHECK_FALSE(a.layers[0].weights == a.layers[1].weights);
}

TEST_CASE("stack config validation") {
    StackConfig cfg = make_stack(Variant::Mhc, 2, 4, 2, LayerKind::Linear, InitPolicy::Uniform, 0);
    CHECK_NOTHROW(cfg.validate());
    cfg.layers.pop_back();
    CHECK_THROWS(cfg.validate());
    StackConfig empty;
    CHECK_THROWS(empty.validate());
    CHECK_THROWS(stack_forward(StreamState(3, 4), make_stack(Variant::Mhc, 2, 4, 2, LayerKind::Linear,
                                                             InitPolicy::Uniform, 0)));
}

TEST_CASE("layer functions") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(gelu(3.0) == doctest::Approx(2.99636).epsilon(1e-4));
    CHECK(gelu(-3.0) < 0.0);
    CHECK(gelu(-3.0) > -0.01);
    CHECK(gelu(3.0) - gelu(-3.0) == doctest::Approx(3.0).epsilon(1e-14));
    for (double x : {-2.0, -0.3, 0.0, 0.7, 2.5}) {
        const double h = 1e-6;
        CHECK(gelu_derivative(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-8));
    }
    const Matrix p = causal_softmax(Matrix{{1, 5, 5}, {0, 0, 9}, {1, 2, 3}});
    CHECK(p(0, 0) == 1.0);
    CHECK(p(0, 1) == 0.0);
    CHECK(p(1, 0) == 0.5);
    CHECK(p(1, 2) == 0.0);
    for (double s : row_sums(p)) {
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
    for (LayerKind k : {LayerKind::Zero, LayerKind::Linear, LayerKind::MlpPrenorm, LayerKind::ToyAttention}) {
        CHECK(parse_layer_kind(to_string(k)) == k);
        Rng rng(1);
        const LayerFunction f = make_layer_function(k, 6, rng);
        CHECK(f.weights.size() == LayerFunction::weight_names(k).size());
        const Matrix out = f.apply(rng.normal_matrix(3, 6, 1.0));
        CHECK(out.rows() == 3);
        CHECK(out.cols() == 6);
        CHECK_THROWS_AS(f.apply(Matrix(3, 5)), ShapeError);
    }
    CHECK_THROWS(parse_layer_kind("moe"));
    Rng rng(2);
    const LayerFunction lin = linear_function(3, rng);
    const Matrix x = rng.normal_matrix(2, 3, 1.0);
    CHECK(lin.apply(x) == matmul(x, lin.weights[0]));
}

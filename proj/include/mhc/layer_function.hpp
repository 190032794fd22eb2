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
#include <string_view>
#include <vector>

#include "mhc/matrix.hpp"
#include "mhc/random.hpp"

namespace mhc {

enum class LayerKind { Zero, Linear, MlpPrenorm, ToyAttention };

std::string_view
to_string(LayerKind k);
LayerKind
parse_layer_kind(std::string_view s);

/// The residual function F. Maps a T x C block of layer inputs (one row per
/// token of a sequence) to T x C outputs. Zero, linear and MLP act row-wise;
/// the toy attention is causal over the rows.
///
/// Weight layout:
///   linear:        {W (C x C)}
///   mlp-prenorm:   {W1 (C x H), W2 (H x C)}, GELU between, RMSNorm first
///   toy-attention: {Wq, Wk, Wv, Wo} all C x C, RMSNorm first, one head
struct LayerFunction {
    LayerKind kind = LayerKind::Zero;
    std::size_t width = 0;
    std::vector<Matrix> weights;
    double rms_epsilon = 1e-20;

    Matrix
    apply(const Matrix& tokens) const;

    static std::vector<std::string_view>
    weight_names(LayerKind kind);
};

/// Weights drawn N(0, scale^2 / fan_in).
LayerFunction
make_layer_function(LayerKind kind, std::size_t width, Rng& rng, double scale = 0.5, std::size_t hidden = 0);

double
gelu(double x);
double
gelu_derivative(double x);
Matrix
gelu(const Matrix& m);

/// Row-wise softmax restricted to columns j <= i; masked entries are 0.
Matrix
causal_softmax(const Matrix& scores);

}  // namespace mhc

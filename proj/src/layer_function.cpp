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

#include "mhc/layer_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mhc {

std::string_view
to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Zero:
            return "zero";
        case LayerKind::Linear:
            return "linear";
        case LayerKind::MlpPrenorm:
            return "mlp-prenorm";
        case LayerKind::ToyAttention:
            return "toy-attention";
    }
    return "unknown";
}

LayerKind
parse_layer_kind(std::string_view s) {
    for (LayerKind k : {LayerKind::Zero, LayerKind::Linear, LayerKind::MlpPrenorm, LayerKind::ToyAttention}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown layer function kind '" + std::string(s) + "'");
}

namespace {

constexpr double kGeluC = 0.044715;
const double kGeluK = std::sqrt(2.0 / std::numbers::pi);

}  // namespace

double
gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluK * (x + kGeluC * x * x * x)));
}

double
gelu_derivative(double x) {
    const double t = std::tanh(kGeluK * (x + kGeluC * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluK * (1.0 + 3.0 * kGeluC * x * x);
}

Matrix
gelu(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.values()) {
        v = gelu(v);
    }
    return out;
}

Matrix
causal_softmax(const Matrix& scores) {
    if (!scores.is_square()) {
        throw ShapeError("causal_softmax expects square scores, got " + scores.shape_string());
    }
    Matrix out(scores.rows(), scores.cols());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        double peak = scores(i, 0);
        for (std::size_t j = 1; j <= i; ++j) {
            peak = std::max(peak, scores(i, j));
        }
        double total = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
            out(i, j) = std::exp(scores(i, j) - peak);
            total += out(i, j);
        }
        for (std::size_t j = 0; j <= i; ++j) {
            out(i, j) /= total;
        }
    }
    return out;
}

std::vector<std::string_view>
LayerFunction::weight_names(LayerKind kind) {
    switch (kind) {
        case LayerKind::Zero:
            return {};
        case LayerKind::Linear:
            return {"W"};
        case LayerKind::MlpPrenorm:
            return {"W1", "W2"};
        case LayerKind::ToyAttention:
            return {"Wq", "Wk", "Wv", "Wo"};
    }
    return {};
}

Matrix
LayerFunction::apply(const Matrix& tokens) const {
    if (tokens.cols() != width) {
        throw ShapeError("layer function expects width " + std::to_string(width) + ", got " +
                         tokens.shape_string());
    }
    switch (kind) {
        case LayerKind::Zero:
            return Matrix(tokens.rows(), tokens.cols());
        case LayerKind::Linear:
            return matmul(tokens, weights.at(0));
        case LayerKind::MlpPrenorm:
            return matmul(gelu(matmul(rmsnorm_rows(tokens, rms_epsilon), weights.at(0))), weights.at(1));
        case LayerKind::ToyAttention: {
            const Matrix normed = rmsnorm_rows(tokens, rms_epsilon);
            const Matrix q = matmul(normed, weights.at(0));
            const Matrix k = matmul(normed, weights.at(1));
            const Matrix v = matmul(normed, weights.at(2));
            const Matrix scores = (1.0 / std::sqrt(static_cast<double>(width))) * matmul(q, transpose(k));
            return matmul(matmul(causal_softmax(scores), v), weights.at(3));
        }
    }
    throw std::logic_error("unreachable layer kind");
}

LayerFunction
make_layer_function(LayerKind kind, std::size_t width, Rng& rng, double scale, std::size_t hidden) {
    if (width == 0) {
        throw std::invalid_argument("layer function width must be positive");
    }
    LayerFunction f;
    f.kind = kind;
    f.width = width;
    auto draw = [&](std::size_t rows, std::size_t cols) {
        return rng.normal_matrix(rows, cols, scale / std::sqrt(static_cast<double>(rows)));
    };
    switch (kind) {
        case LayerKind::Zero:
            break;
        case LayerKind::Linear:
            f.weights.push_back(draw(width, width));
            break;
        case LayerKind::MlpPrenorm: {
            const std::size_t h = hidden == 0 ? 2 * width : hidden;
            f.weights.push_back(draw(width, h));
            f.weights.push_back(draw(h, width));
            break;
        }
        case LayerKind::ToyAttention:
            for (int i = 0; i < 4; ++i) {
                f.weights.push_back(draw(width, width));
            }
            break;
    }
    return f;
}

}  // namespace mhc

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

#include "mhc/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mhc/simd/kernels.hpp"

namespace mhc {

void
SinkhornConfig::validate() const {
    if (t_max < 1) {
        throw std::invalid_argument("sinkhorn t_max must be at least 1");
    }
}

namespace {

void
require_square(const Matrix& m, const char* what) {
    if (!m.is_square() || m.empty()) {
        throw ShapeError(std::string(what) + ": expected a non-empty square matrix, got " + m.shape_string());
    }
}

Matrix
shifted_exp(const Matrix& m_tilde, const SinkhornConfig& cfg) {
    double shift = 0.0;
    if (cfg.overflow_guard) {
        shift = *std::max_element(m_tilde.values().begin(), m_tilde.values().end());
    }
    Matrix out = m_tilde;
    for (double& v : out.values()) {
        v = std::exp(v - shift);
    }
    return out;
}

}  // namespace

Matrix
column_normalize(const Matrix& m) {
    const std::vector<double> sums = col_sums(m);
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) /= sums[j];
        }
    }
    return out;
}

Matrix
row_normalize(const Matrix& m) {
    const std::vector<double> sums = row_sums(m);
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) /= sums[i];
        }
    }
    return out;
}

// For C = M / s with s_j = sum_i M_ij:
//   dM_ij = (dC_ij - sum_k dC_kj C_kj) / s_j
Matrix
column_normalize_vjp(const Matrix& input, const Matrix& upstream) {
    require_same_shape(input, upstream, "column_normalize_vjp");
    const std::vector<double> sums = col_sums(input);
    const Matrix normalized = column_normalize(input);
    std::vector<double> inner = col_sums(hadamard(upstream, normalized));
    Matrix grad(input.rows(), input.cols());
    for (std::size_t i = 0; i < input.rows(); ++i) {
        for (std::size_t j = 0; j < input.cols(); ++j) {
            grad(i, j) = (upstream(i, j) - inner[j]) / sums[j];
        }
    }
    return grad;
}

Matrix
row_normalize_vjp(const Matrix& input, const Matrix& upstream) {
    require_same_shape(input, upstream, "row_normalize_vjp");
    const std::vector<double> sums = row_sums(input);
    const Matrix normalized = row_normalize(input);
    std::vector<double> inner = row_sums(hadamard(upstream, normalized));
    Matrix grad(input.rows(), input.cols());
    for (std::size_t i = 0; i < input.rows(); ++i) {
        for (std::size_t j = 0; j < input.cols(); ++j) {
            grad(i, j) = (upstream(i, j) - inner[i]) / sums[i];
        }
    }
    return grad;
}

Matrix
sinkhorn_project(const Matrix& m_tilde, const SinkhornConfig& cfg) {
    require_square(m_tilde, "sinkhorn_project");
    cfg.validate();
    Matrix m = shifted_exp(m_tilde, cfg);
    for (int t = 0; t < cfg.t_max; ++t) {
        m = row_normalize(column_normalize(m));
    }
    return m;
}

SinkhornTrace
sinkhorn_forward_trace(const Matrix& m_tilde, const SinkhornConfig& cfg) {
    require_square(m_tilde, "sinkhorn_forward_trace");
    cfg.validate();
    SinkhornTrace trace;
    trace.start = shifted_exp(m_tilde, cfg);
    trace.before_col.reserve(cfg.t_max);
    trace.before_row.reserve(cfg.t_max);
    Matrix m = trace.start;
    for (int t = 0; t < cfg.t_max; ++t) {
        trace.before_col.push_back(m);
        Matrix c = column_normalize(m);
        trace.before_row.push_back(c);
        m = row_normalize(c);
    }
    trace.output = std::move(m);
    return trace;
}

Matrix
sinkhorn_vjp(const SinkhornTrace& trace, const Matrix& upstream) {
    require_same_shape(trace.output, upstream, "sinkhorn_vjp");
    Matrix grad = upstream;
    for (std::size_t t = trace.before_col.size(); t-- > 0;) {
        grad = row_normalize_vjp(trace.before_row[t], grad);
        grad = column_normalize_vjp(trace.before_col[t], grad);
    }
    // The max shift is treated as a constant; the output does not depend on it.
    return hadamard(grad, trace.start);
}

Matrix
sinkhorn_vjp(const Matrix& m_tilde, const Matrix& upstream, const SinkhornConfig& cfg) {
    require_square(m_tilde, "sinkhorn_vjp");
    require_same_shape(m_tilde, upstream, "sinkhorn_vjp");
    return sinkhorn_vjp(sinkhorn_forward_trace(m_tilde, cfg), upstream);
}

DsDiagnostics
ds_diagnostics(const Matrix& m) {
    require_square(m, "ds_diagnostics");
    DsDiagnostics d;
    for (double s : row_sums(m)) {
        d.max_row_dev = std::max(d.max_row_dev, std::abs(s - 1.0));
    }
    for (double s : col_sums(m)) {
        d.max_col_dev = std::max(d.max_col_dev, std::abs(s - 1.0));
    }
    d.min_entry = *std::min_element(m.values().begin(), m.values().end());
    return d;
}

}  // namespace mhc

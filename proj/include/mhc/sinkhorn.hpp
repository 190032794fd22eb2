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

#include <vector>

#include "mhc/matrix.hpp"

namespace mhc {

struct SinkhornConfig {
    int t_max = 20;
    /// Subtract the global max of the input before exponentiation.
    bool overflow_guard = true;

    void
    validate() const;
};

/// Distance of a square matrix from the doubly stochastic set.
struct DsDiagnostics {
    double max_row_dev = 0.0;  ///< max |row sum - 1|
    double max_col_dev = 0.0;  ///< max |col sum - 1|
    double min_entry = 0.0;
};

/// Divide every column by its sum.
Matrix
column_normalize(const Matrix& m);
/// Divide every row by its sum.
Matrix
row_normalize(const Matrix& m);

Matrix
column_normalize_vjp(const Matrix& input, const Matrix& upstream);
Matrix
row_normalize_vjp(const Matrix& input, const Matrix& upstream);

/// exp(m_tilde) followed by t_max rounds of column then row normalization.
/// Rows of the result sum to 1 up to rounding; columns only approximately.
Matrix
sinkhorn_project(const Matrix& m_tilde, const SinkhornConfig& cfg = {});

/// Every intermediate of the unrolled iteration, kept for a stored-activation
/// backward pass.
struct SinkhornTrace {
    Matrix start;                  ///< exp(m_tilde - shift)
    std::vector<Matrix> before_col;  ///< M^(t-1), t = 1..t_max
    std::vector<Matrix> before_row;  ///< T_c(M^(t-1))
    Matrix output;
};

SinkhornTrace
sinkhorn_forward_trace(const Matrix& m_tilde, const SinkhornConfig& cfg = {});

/// Vector-Jacobian product of sinkhorn_project, differentiating through
/// exactly cfg.t_max unrolled iterations. Intermediates are recomputed from
/// m_tilde.
Matrix
sinkhorn_vjp(const Matrix& m_tilde, const Matrix& upstream, const SinkhornConfig& cfg = {});

/// Same product using intermediates stored by sinkhorn_forward_trace.
Matrix
sinkhorn_vjp(const SinkhornTrace& trace, const Matrix& upstream);

DsDiagnostics
ds_diagnostics(const Matrix& m);

}  // namespace mhc

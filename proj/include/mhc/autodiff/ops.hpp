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

#include "mhc/autodiff/tape.hpp"
#include "mhc/sinkhorn.hpp"

namespace mhc::ad {

// Differentiable primitives. Each records one op on the tape and has a
// registered backward rule of the same name.

Var
matmul(Tape& t, Var a, Var b);
Var
add(Tape& t, Var a, Var b);
Var
sub(Tape& t, Var a, Var b);
Var
hadamard(Tape& t, Var a, Var b);
/// Multiply by a constant.
Var
scale(Tape& t, Var a, double s);
/// Multiply by a learnable 1 x 1 gate.
Var
gate(Tape& t, Var alpha, Var a);
/// a (T x k) + row (1 x k) broadcast over rows.
Var
add_row(Tape& t, Var a, Var row);
Var
reshape(Tape& t, Var a, std::size_t rows, std::size_t cols);
Var
transpose(Tape& t, Var a);
/// Transpose each consecutive n x n block stored as a row of length n^2.
Var
block_transpose(Tape& t, Var a, std::size_t n);

Var
rmsnorm_rows(Tape& t, Var a, double epsilon);
Var
sigmoid(Tape& t, Var a);
Var
tanh(Tape& t, Var a);
Var
exp(Tape& t, Var a);
Var
gelu(Tape& t, Var a);

Var
row_normalize(Tape& t, Var a);
Var
col_normalize(Tape& t, Var a);

enum class SinkhornBackward {
    /// Keep every iteration's intermediates from the forward pass.
    Store,
    /// Keep only the input and recompute the iteration during backward.
    Recompute,
};

/// Sinkhorn projection of every row of a (T x n^2), each read as an n x n
/// matrix in row-major order.
Var
sinkhorn_rows(Tape& t, Var a, std::size_t n, const SinkhornConfig& cfg,
              SinkhornBackward mode = SinkhornBackward::Recompute);

/// Layer read-out: out[t] = sum_i h_pre[t, i] * x[t, stream i], giving T x C
/// from h_pre (T x n) and x (T x nC).
Var
stream_pre(Tape& t, Var h_pre, Var x, std::size_t n);
/// Layer merge: out[t, stream i] = sum_j h_res[t, i n + j] x[t, stream j]
///                                 + h_post[t, i] * f[t].
Var
stream_merge(Tape& t, Var h_res, Var x, Var h_post, Var f, std::size_t n);
/// Broadcast T x C rows into n identical streams (T x nC).
Var
stream_expand(Tape& t, Var a, std::size_t n);

/// Causal row softmax of a square score block.
Var
causal_softmax(Tape& t, Var scores);
/// Rows of table selected by ids.
Var
embed(Tape& t, Var table, std::vector<std::size_t> ids);

/// 1 x 1 mean of squared entries.
Var
mean_square(Tape& t, Var a);
/// 1 x 1 sum of entries.
Var
sum(Tape& t, Var a);
/// 1 x 1 mean over rows of softmax cross-entropy against target ids.
Var
cross_entropy(Tape& t, Var logits, std::vector<std::size_t> targets);

}  // namespace mhc::ad

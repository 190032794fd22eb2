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

#include "mhc/autodiff/ops.hpp"

#include <cmath>
#include <unordered_map>

#include "mhc/layer_function.hpp"
#include "mhc/simd/kernels.hpp"

namespace mhc::ad {

namespace {

const Matrix&
in(const Tape& t, const OpRecord& op, std::size_t i) {
    return t.input_value(op, i);
}

Matrix
map_values(const Matrix& m, double (*f)(double)) {
    Matrix out = m;
    for (double& v : out.values()) {
        v = f(v);
    }
    return out;
}

void
require_stream_width(const Matrix& x, std::size_t n, const char* what) {
    if (n == 0 || x.cols() % n != 0) {
        throw ShapeError(std::string(what) + ": width " + std::to_string(x.cols()) + " is not a multiple of n=" +
                         std::to_string(n));
    }
}

Matrix
block_transpose_values(const Matrix& a, std::size_t n) {
    if (a.cols() != n * n) {
        throw ShapeError("block_transpose: expected rows of length n^2, got " + a.shape_string());
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t t = 0; t < a.rows(); ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                out(t, j * n + i) = a(t, i * n + j);
            }
        }
    }
    return out;
}

struct SinkhornAux {
    std::size_t n = 0;
    SinkhornConfig cfg;
    SinkhornBackward mode = SinkhornBackward::Recompute;
    std::vector<SinkhornTrace> traces;  // Store mode only
};

struct IdsAux {
    std::vector<std::size_t> ids;
};

Matrix
softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double peak = logits(r, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            peak = std::max(peak, logits(r, c));
        }
        double total = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            out(r, c) = std::exp(logits(r, c) - peak);
            total += out(r, c);
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            out(r, c) /= total;
        }
    }
    return out;
}

}  // namespace

Var
matmul(Tape& t, Var a, Var b) {
    return t.record("matmul", {a, b}, mhc::matmul(t.value(a), t.value(b)));
}

Var
add(Tape& t, Var a, Var b) {
    return t.record("add", {a, b}, t.value(a) + t.value(b));
}

Var
sub(Tape& t, Var a, Var b) {
    return t.record("sub", {a, b}, t.value(a) - t.value(b));
}

Var
hadamard(Tape& t, Var a, Var b) {
    return t.record("hadamard", {a, b}, mhc::hadamard(t.value(a), t.value(b)));
}

Var
scale(Tape& t, Var a, double s) {
    return t.record("scale", {a}, s * t.value(a), {}, {s});
}

Var
gate(Tape& t, Var alpha, Var a) {
    const Matrix& g = t.value(alpha);
    if (g.rows() != 1 || g.cols() != 1) {
        throw ShapeError("gate expects a 1x1 factor, got " + g.shape_string());
    }
    return t.record("gate", {alpha, a}, g[0] * t.value(a));
}

Var
add_row(Tape& t, Var a, Var row) {
    const Matrix& av = t.value(a);
    const Matrix& rv = t.value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw ShapeError("add_row: cannot broadcast " + rv.shape_string() + " over " + av.shape_string());
    }
    Matrix out = av;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        simd::Active().axpy(1.0, rv.values().data(), out.row_span(r).data(), out.cols());
    }
    return t.record("add_row", {a, row}, std::move(out));
}

Var
reshape(Tape& t, Var a, std::size_t rows, std::size_t cols) {
    return t.record("reshape", {a}, t.value(a).reshaped(rows, cols));
}

Var
transpose(Tape& t, Var a) {
    return t.record("transpose", {a}, mhc::transpose(t.value(a)));
}

Var
block_transpose(Tape& t, Var a, std::size_t n) {
    return t.record("block_transpose", {a}, block_transpose_values(t.value(a), n), {}, {static_cast<double>(n)});
}

Var
rmsnorm_rows(Tape& t, Var a, double epsilon) {
    return t.record("rmsnorm_rows", {a}, mhc::rmsnorm_rows(t.value(a), epsilon), {}, {epsilon});
}

Var
sigmoid(Tape& t, Var a) {
    return t.record("sigmoid", {a}, mhc::sigmoid(t.value(a)));
}

Var
tanh(Tape& t, Var a) {
    return t.record("tanh", {a}, mhc::tanh(t.value(a)));
}

Var
exp(Tape& t, Var a) {
    return t.record("exp", {a}, mhc::exp(t.value(a)));
}

Var
gelu(Tape& t, Var a) {
    return t.record("gelu", {a}, mhc::gelu(t.value(a)));
}

Var
row_normalize(Tape& t, Var a) {
    return t.record("row_normalize", {a}, mhc::row_normalize(t.value(a)));
}

Var
col_normalize(Tape& t, Var a) {
    return t.record("col_normalize", {a}, mhc::column_normalize(t.value(a)));
}

Var
sinkhorn_rows(Tape& t, Var a, std::size_t n, const SinkhornConfig& cfg, SinkhornBackward mode) {
    const Matrix& av = t.value(a);
    if (av.cols() != n * n) {
        throw ShapeError("sinkhorn_rows: expected rows of length n^2, got " + av.shape_string());
    }
    SinkhornAux aux{n, cfg, mode, {}};
    Matrix out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        const Matrix block = Matrix::row(av.row_span(r)).reshaped(n, n);
        Matrix projected;
        if (mode == SinkhornBackward::Store) {
            aux.traces.push_back(sinkhorn_forward_trace(block, cfg));
            projected = aux.traces.back().output;
        } else {
            projected = sinkhorn_project(block, cfg);
        }
        std::copy(projected.values().begin(), projected.values().end(), out.row_span(r).begin());
    }
    return t.record("sinkhorn", {a}, std::move(out), {}, {}, std::move(aux));
}

Var
stream_pre(Tape& t, Var h_pre, Var x, std::size_t n) {
    const Matrix& h = t.value(h_pre);
    const Matrix& xv = t.value(x);
    require_stream_width(xv, n, "stream_pre");
    if (h.rows() != xv.rows() || h.cols() != n) {
        throw ShapeError("stream_pre: h_pre " + h.shape_string() + " does not match state " + xv.shape_string());
    }
    const std::size_t width = xv.cols() / n;
    const auto& k = simd::Active();
    Matrix out(xv.rows(), width);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            k.axpy(h(r, i), xv.row_span(r).data() + i * width, out.row_span(r).data(), width);
        }
    }
    return t.record("stream_pre", {h_pre, x}, std::move(out), {}, {static_cast<double>(n)});
}

Var
stream_merge(Tape& t, Var h_res, Var x, Var h_post, Var f, std::size_t n) {
    const Matrix& hr = t.value(h_res);
    const Matrix& xv = t.value(x);
    const Matrix& hp = t.value(h_post);
    const Matrix& fv = t.value(f);
    require_stream_width(xv, n, "stream_merge");
    const std::size_t width = xv.cols() / n;
    if (hr.rows() != xv.rows() || hr.cols() != n * n || hp.rows() != xv.rows() || hp.cols() != n ||
        fv.rows() != xv.rows() || fv.cols() != width) {
        throw ShapeError("stream_merge: inconsistent shapes h_res " + hr.shape_string() + ", x " + xv.shape_string() +
                         ", h_post " + hp.shape_string() + ", f " + fv.shape_string());
    }
    const auto& k = simd::Active();
    Matrix out(xv.rows(), xv.cols());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        const double* xr = xv.row_span(r).data();
        double* o = out.row_span(r).data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                k.axpy(hr(r, i * n + j), xr + j * width, o + i * width, width);
            }
            k.axpy(hp(r, i), fv.row_span(r).data(), o + i * width, width);
        }
    }
    return t.record("stream_merge", {h_res, x, h_post, f}, std::move(out), {}, {static_cast<double>(n)});
}

Var
stream_expand(Tape& t, Var a, std::size_t n) {
    const Matrix& av = t.value(a);
    Matrix out(av.rows(), av.cols() * n);
    for (std::size_t r = 0; r < av.rows(); ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(av.row_span(r).begin(), av.row_span(r).end(), out.row_span(r).begin() + i * av.cols());
        }
    }
    return t.record("stream_expand", {a}, std::move(out), {}, {static_cast<double>(n)});
}

Var
causal_softmax(Tape& t, Var scores) {
    return t.record("causal_softmax", {scores}, mhc::causal_softmax(t.value(scores)));
}

Var
embed(Tape& t, Var table, std::vector<std::size_t> ids) {
    const Matrix& tv = t.value(table);
    Matrix out(ids.size(), tv.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] >= tv.rows()) {
            throw std::out_of_range("embed: id " + std::to_string(ids[r]) + " outside table of " +
                                    std::to_string(tv.rows()) + " rows");
        }
        std::copy(tv.row_span(ids[r]).begin(), tv.row_span(ids[r]).end(), out.row_span(r).begin());
    }
    return t.record("embed", {table}, std::move(out), {}, {}, IdsAux{std::move(ids)});
}

Var
mean_square(Tape& t, Var a) {
    const Matrix& av = t.value(a);
    const double total = simd::Active().sum_sq(av.values().data(), av.size());
    return t.record("mean_square", {a}, Matrix(1, 1, total / static_cast<double>(av.size())));
}

Var
sum(Tape& t, Var a) {
    return t.record("sum", {a}, Matrix(1, 1, mhc::sum(t.value(a))));
}

Var
cross_entropy(Tape& t, Var logits, std::vector<std::size_t> targets) {
    const Matrix& z = t.value(logits);
    if (targets.size() != z.rows()) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + z.shape_string() +
                         " logits");
    }
    const Matrix probs = softmax_rows(z);
    double total = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) {
        if (targets[r] >= z.cols()) {
            throw std::out_of_range("cross_entropy: target outside vocabulary");
        }
        total -= std::log(probs(r, targets[r]));
    }
    return t.record("cross_entropy", {logits}, Matrix(1, 1, total / static_cast<double>(z.rows())), {probs}, {},
                    IdsAux{std::move(targets)});
}

namespace detail {

void
install_builtin_rules(std::unordered_map<std::string, BackwardRule>& rules) {
    rules["matmul"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, mhc::matmul(g, mhc::transpose(in(t, op, 1))));
        t.accumulate(op, 1, mhc::matmul(mhc::transpose(in(t, op, 0)), g));
    };
    rules["add"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, g);
        t.accumulate(op, 1, g);
    };
    rules["sub"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, g);
        t.accumulate(op, 1, -1.0 * g);
    };
    rules["hadamard"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, mhc::hadamard(g, in(t, op, 1)));
        t.accumulate(op, 1, mhc::hadamard(g, in(t, op, 0)));
    };
    rules["scale"] = [](const OpRecord& op, const Matrix& g, Tape& t) { t.accumulate(op, 0, op.scalars[0] * g); };
    rules["gate"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& a = in(t, op, 1);
        t.accumulate(op, 0, Matrix(1, 1, simd::Active().dot(g.values().data(), a.values().data(), a.size())));
        t.accumulate(op, 1, in(t, op, 0)[0] * g);
    };
    rules["add_row"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, g);
        t.accumulate(op, 1, Matrix(1, g.cols(), col_sums(g)));
    };
    rules["reshape"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& a = in(t, op, 0);
        t.accumulate(op, 0, g.reshaped(a.rows(), a.cols()));
    };
    rules["transpose"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, mhc::transpose(g));
    };
    rules["block_transpose"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, block_transpose_values(g, static_cast<std::size_t>(op.scalars[0])));
    };
    rules["rmsnorm_rows"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        // y = x / r, r = sqrt(mean(x^2) + eps): dx = (g - y * <g, y> / d) / r
        const Matrix& x = in(t, op, 0);
        const Matrix& y = t.output_value(op);
        const double eps = op.scalars[0];
        const auto& k = simd::Active();
        const std::size_t d = x.cols();
        Matrix dx(x.rows(), d);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double rms = std::sqrt(k.sum_sq(x.row_span(r).data(), d) / static_cast<double>(d) + eps);
            const double proj = k.dot(g.row_span(r).data(), y.row_span(r).data(), d) / static_cast<double>(d);
            for (std::size_t c = 0; c < d; ++c) {
                dx(r, c) = (g(r, c) - y(r, c) * proj) / rms;
            }
        }
        t.accumulate(op, 0, dx);
    };
    rules["sigmoid"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        Matrix d = t.output_value(op);
        for (double& v : d.values()) {
            v = v * (1.0 - v);
        }
        t.accumulate(op, 0, mhc::hadamard(g, d));
    };
    rules["tanh"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        Matrix d = t.output_value(op);
        for (double& v : d.values()) {
            v = 1.0 - v * v;
        }
        t.accumulate(op, 0, mhc::hadamard(g, d));
    };
    rules["exp"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, mhc::hadamard(g, t.output_value(op)));
    };
    rules["gelu"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, mhc::hadamard(g, map_values(in(t, op, 0), gelu_derivative)));
    };
    rules["row_normalize"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, row_normalize_vjp(in(t, op, 0), g));
    };
    rules["col_normalize"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        t.accumulate(op, 0, column_normalize_vjp(in(t, op, 0), g));
    };
    rules["sinkhorn"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const auto& aux = std::any_cast<const SinkhornAux&>(op.aux);
        const Matrix& a = in(t, op, 0);
        const std::size_t n = aux.n;
        Matrix da(a.rows(), a.cols());
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const Matrix upstream = Matrix::row(g.row_span(r)).reshaped(n, n);
            const Matrix block_grad =
                aux.mode == SinkhornBackward::Store
                    ? sinkhorn_vjp(aux.traces[r], upstream)
                    : sinkhorn_vjp(Matrix::row(a.row_span(r)).reshaped(n, n), upstream, aux.cfg);
            std::copy(block_grad.values().begin(), block_grad.values().end(), da.row_span(r).begin());
        }
        t.accumulate(op, 0, da);
    };
    rules["stream_pre"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& h = in(t, op, 0);
        const Matrix& x = in(t, op, 1);
        const std::size_t n = static_cast<std::size_t>(op.scalars[0]);
        const std::size_t width = x.cols() / n;
        const auto& k = simd::Active();
        Matrix dh(h.rows(), h.cols());
        Matrix dx(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t i = 0; i < n; ++i) {
                dh(r, i) = k.dot(g.row_span(r).data(), x.row_span(r).data() + i * width, width);
                k.axpy(h(r, i), g.row_span(r).data(), dx.row_span(r).data() + i * width, width);
            }
        }
        t.accumulate(op, 0, dh);
        t.accumulate(op, 1, dx);
    };
    rules["stream_merge"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& hr = in(t, op, 0);
        const Matrix& x = in(t, op, 1);
        const Matrix& hp = in(t, op, 2);
        const Matrix& f = in(t, op, 3);
        const std::size_t n = static_cast<std::size_t>(op.scalars[0]);
        const std::size_t width = x.cols() / n;
        const auto& k = simd::Active();
        Matrix dhr(hr.rows(), hr.cols());
        Matrix dx(x.rows(), x.cols());
        Matrix dhp(hp.rows(), hp.cols());
        Matrix df(f.rows(), f.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double* gr = g.row_span(r).data();
            const double* xr = x.row_span(r).data();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    dhr(r, i * n + j) = k.dot(gr + i * width, xr + j * width, width);
                    k.axpy(hr(r, i * n + j), gr + i * width, dx.row_span(r).data() + j * width, width);
                }
                dhp(r, i) = k.dot(gr + i * width, f.row_span(r).data(), width);
                k.axpy(hp(r, i), gr + i * width, df.row_span(r).data(), width);
            }
        }
        t.accumulate(op, 0, dhr);
        t.accumulate(op, 1, dx);
        t.accumulate(op, 2, dhp);
        t.accumulate(op, 3, df);
    };
    rules["stream_expand"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& a = in(t, op, 0);
        const std::size_t n = static_cast<std::size_t>(op.scalars[0]);
        Matrix da(a.rows(), a.cols());
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t i = 0; i < n; ++i) {
                simd::Active().axpy(1.0, g.row_span(r).data() + i * a.cols(), da.row_span(r).data(), a.cols());
            }
        }
        t.accumulate(op, 0, da);
    };
    rules["causal_softmax"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& p = t.output_value(op);
        Matrix ds(p.rows(), p.cols());
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double inner = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                inner += g(i, j) * p(i, j);
            }
            for (std::size_t j = 0; j <= i; ++j) {
                ds(i, j) = p(i, j) * (g(i, j) - inner);
            }
        }
        t.accumulate(op, 0, ds);
    };
    rules["embed"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const auto& aux = std::any_cast<const IdsAux&>(op.aux);
        const Matrix& table = in(t, op, 0);
        Matrix dt(table.rows(), table.cols());
        for (std::size_t r = 0; r < aux.ids.size(); ++r) {
            simd::Active().axpy(1.0, g.row_span(r).data(), dt.row_span(aux.ids[r]).data(), table.cols());
        }
        t.accumulate(op, 0, dt);
    };
    rules["mean_square"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& a = in(t, op, 0);
        t.accumulate(op, 0, (2.0 * g[0] / static_cast<double>(a.size())) * a);
    };
    rules["sum"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const Matrix& a = in(t, op, 0);
        t.accumulate(op, 0, Matrix(a.rows(), a.cols(), g[0]));
    };
    rules["cross_entropy"] = [](const OpRecord& op, const Matrix& g, Tape& t) {
        const auto& aux = std::any_cast<const IdsAux&>(op.aux);
        Matrix d = op.saved[0];
        for (std::size_t r = 0; r < d.rows(); ++r) {
            d(r, aux.ids[r]) -= 1.0;
        }
        t.accumulate(op, 0, (g[0] / static_cast<double>(d.rows())) * d);
    };
}

}  // namespace detail

}  // namespace mhc::ad

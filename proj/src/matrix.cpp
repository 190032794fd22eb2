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

#include "mhc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mhc/simd/kernels.hpp"

namespace mhc {

void
NumericConfig::validate() const {
    if (!(rms_epsilon > 0.0)) {
        throw std::invalid_argument("rms_epsilon must be positive");
    }
    if (!(fd_step > 0.0)) {
        throw std::invalid_argument("fd_step must be positive");
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw ShapeError("ragged matrix literal");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix
Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix
Matrix::row(std::initializer_list<double> values) {
    return Matrix(1, values.size(), std::vector<double>(values));
}

Matrix
Matrix::row(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix
Matrix::reshaped(std::size_t rows, std::size_t cols) const {
    if (rows * cols != data_.size()) {
        throw ShapeError("cannot reshape " + shape_string() + " to " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
    return Matrix(rows, cols, data_);
}

bool
Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string
Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void
require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

Matrix
matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ (" + a.shape_string() + " x " + b.shape_string() + ")");
    }
    const auto& k = simd::Active();
    Matrix out(a.rows(), b.cols());
    const std::size_t inner = a.cols();
    const std::size_t width = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.row_span(i).data();
        for (std::size_t p = 0; p < inner; ++p) {
            const double aip = a(i, p);
            if (aip != 0.0) {
                k.axpy(aip, b.row_span(p).data(), dst, width);
            }
        }
    }
    return out;
}

Matrix
transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(j, i) = m(i, j);
        }
    }
    return out;
}

Matrix
operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    simd::Active().axpy(1.0, b.values().data(), out.values().data(), out.size());
    return out;
}

Matrix
operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "subtract");
    Matrix out = a;
    simd::Active().axpy(-1.0, b.values().data(), out.values().data(), out.size());
    return out;
}

Matrix
operator*(double s, const Matrix& m) {
    Matrix out = m;
    simd::Active().scale(s, out.values().data(), out.size());
    return out;
}

Matrix
hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = b;
    simd::Active().mul(a.values().data(), out.values().data(), out.size());
    return out;
}

double
sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

template <typename F>
Matrix
map(const Matrix& m, F f) {
    Matrix out = m;
    for (double& v : out.values()) {
        v = f(v);
    }
    return out;
}

}  // namespace

Matrix
sigmoid(const Matrix& m) {
    return map(m, [](double v) { return sigmoid(v); });
}

Matrix
tanh(const Matrix& m) {
    return map(m, [](double v) { return std::tanh(v); });
}

Matrix
exp(const Matrix& m) {
    return map(m, [](double v) { return std::exp(v); });
}

Matrix
rmsnorm(const Matrix& v, double epsilon) {
    if (v.rows() != 1 || v.cols() == 0) {
        throw ShapeError("rmsnorm expects a non-empty row vector, got " + v.shape_string());
    }
    return rmsnorm_rows(v, epsilon);
}

Matrix
rmsnorm_rows(const Matrix& m, double epsilon) {
    const auto& k = simd::Active();
    Matrix out = m;
    const std::size_t d = m.cols();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double* row = out.row_span(r).data();
        const double ms = k.sum_sq(row, d) / static_cast<double>(d);
        k.scale(1.0 / std::sqrt(ms + epsilon), row, d);
    }
    return out;
}

double
l2_norm(const Matrix& m) {
    return std::sqrt(simd::Active().sum_sq(m.values().data(), m.size()));
}

double
sum(const Matrix& m) {
    return simd::Active().sum(m.values().data(), m.size());
}

std::vector<double>
row_sums(const Matrix& m) {
    const auto& k = simd::Active();
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out[r] = k.sum(m.row_span(r).data(), m.cols());
    }
    return out;
}

std::vector<double>
col_sums(const Matrix& m) {
    const auto& k = simd::Active();
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        k.axpy(1.0, m.row_span(r).data(), out.data(), m.cols());
    }
    return out;
}

double
max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.values()) {
        best = std::max(best, std::abs(v));
    }
    return best;
}

double
max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        best = std::max(best, std::abs(a[i] - b[i]));
    }
    return best;
}

double
max_rel_diff(const Matrix& a, const Matrix& b, double floor) {
    return max_abs_diff(a, b) / std::max(max_abs(b), floor);
}

double
spectral_norm(const Matrix& m, int iterations) {
    if (m.empty()) {
        return 0.0;
    }
    const Matrix gram = matmul(transpose(m), m);
    Matrix v(gram.rows(), 1);
    for (std::size_t i = 0; i < v.rows(); ++i) {
        v[i] = 1.0 + 0.1 * static_cast<double>(i);
    }
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Matrix w = matmul(gram, v);
        const double norm = l2_norm(w);
        if (norm == 0.0) {
            return 0.0;
        }
        lambda = norm / l2_norm(v);
        v = (1.0 / norm) * w;
    }
    return std::sqrt(lambda);
}

}  // namespace mhc

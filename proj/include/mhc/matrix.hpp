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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhc {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct NumericConfig {
    double rms_epsilon = 1e-20;
    double fd_step = 1e-5;
    std::uint64_t seed = 0;

    void
    validate() const;
};

/// Dense row-major matrix of doubles. Row vectors are 1 x d matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix
    identity(std::size_t n);
    static Matrix
    row(std::initializer_list<double> values);
    static Matrix
    row(std::span<const double> values);

    std::size_t
    rows() const noexcept {
        return rows_;
    }
    std::size_t
    cols() const noexcept {
        return cols_;
    }
    std::size_t
    size() const noexcept {
        return data_.size();
    }
    bool
    empty() const noexcept {
        return data_.empty();
    }
    bool
    is_square() const noexcept {
        return rows_ == cols_;
    }

    double&
    operator()(std::size_t r, std::size_t c) noexcept {
        return data_[r * cols_ + c];
    }
    double
    operator()(std::size_t r, std::size_t c) const noexcept {
        return data_[r * cols_ + c];
    }
    double&
    operator[](std::size_t i) noexcept {
        return data_[i];
    }
    double
    operator[](std::size_t i) const noexcept {
        return data_[i];
    }

    std::span<double>
    values() noexcept {
        return data_;
    }
    std::span<const double>
    values() const noexcept {
        return data_;
    }
    std::span<double>
    row_span(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<const double>
    row_span(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    /// Same data, new shape. rows * cols must equal size().
    Matrix
    reshaped(std::size_t rows, std::size_t cols) const;

    bool
    all_finite() const noexcept;

    std::string
    shape_string() const;

    friend bool
    operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

void
require_same_shape(const Matrix& a, const Matrix& b, const char* what);

Matrix
matmul(const Matrix& a, const Matrix& b);
Matrix
transpose(const Matrix& m);

Matrix
operator+(const Matrix& a, const Matrix& b);
Matrix
operator-(const Matrix& a, const Matrix& b);
Matrix
operator*(double s, const Matrix& m);
Matrix
hadamard(const Matrix& a, const Matrix& b);

// Elementwise maps.
Matrix
sigmoid(const Matrix& m);
Matrix
tanh(const Matrix& m);
Matrix
exp(const Matrix& m);

double
sigmoid(double x);

/// v / sqrt(mean(v^2) + epsilon), applied to a 1 x d row. No learnable gain.
Matrix
rmsnorm(const Matrix& v, double epsilon);
/// rmsnorm applied to every row independently.
Matrix
rmsnorm_rows(const Matrix& m, double epsilon);

double
l2_norm(const Matrix& m);
double
sum(const Matrix& m);
std::vector<double>
row_sums(const Matrix& m);
std::vector<double>
col_sums(const Matrix& m);

double
max_abs(const Matrix& m);
double
max_abs_diff(const Matrix& a, const Matrix& b);
/// max |a - b| / max(max |b|, floor).
double
max_rel_diff(const Matrix& a, const Matrix& b, double floor = 1e-300);

/// Largest singular value via power iteration on m^T m.
double
spectral_norm(const Matrix& m, int iterations = 500);

}  // namespace mhc

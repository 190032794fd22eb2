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

#include "mhc/matrix.hpp"
#include "mhc/random.hpp"
#include "test_util.hpp"

using namespace mhc;

TEST_CASE("matmul by identity and projector") {
    const Matrix b{{3, 4}, {5, 6}};
    CHECK(matmul(Matrix::identity(2), b) == b);
    CHECK(matmul(Matrix{{1, 0}, {0, 0}}, b) == Matrix{{3, 4}, {0, 0}});
}

TEST_CASE("matmul agrees with a naive triple loop") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = rng.uniform_matrix(3, 4, -1, 1);
        const Matrix b = rng.uniform_matrix(4, 2, -1, 1);
        CHECK(max_rel_diff(matmul(a, b), test::naive_matmul(a, b), 1e-300) <= 1e-12);
    }
    const Matrix a = rng.uniform_matrix(17, 33, -1, 1);
    const Matrix b = rng.uniform_matrix(33, 9, -1, 1);
    CHECK(test::rel_error(matmul(a, b), test::naive_matmul(a, b)) <= 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
    CHECK_THROWS_AS(Matrix(2, 2) + Matrix(2, 3), ShapeError);
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("matmul is associative") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix a = rng.uniform_matrix(4, 5, -1, 1);
        const Matrix b = rng.uniform_matrix(5, 3, -1, 1);
        const Matrix c = rng.uniform_matrix(3, 6, -1, 1);
        CHECK(test::rel_error(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-10);
    }
}

TEST_CASE("rmsnorm examples") {
    CHECK(rmsnorm(Matrix::row({2, -2}), 1e-20) == Matrix::row({1, -1}));
    CHECK(rmsnorm(Matrix::row({0, 0}), 1e-20) == Matrix::row({0, 0}));
    const Matrix r = rmsnorm(Matrix::row({3, 4}), 1e-20);
    CHECK(r[0] == doctest::Approx(0.848528137423857).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(1.131370849898476).epsilon(1e-14));
    CHECK(r[0] == doctest::Approx(3.0 / std::sqrt(12.5)).epsilon(1e-15));
}

TEST_CASE("rmsnorm output has unit mean square") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix v = rng.normal_matrix(1, 1 + rng.index(40), 1.0 + 10 * rng.uniform());
        const Matrix out = rmsnorm(v, 1e-20);
        double ms = 0.0;
        for (double x : out.values()) {
            ms += x * x;
        }
        ms /= static_cast<double>(out.size());
        CHECK(ms <= 1.0 + 1e-12);
        CHECK(ms == doctest::Approx(1.0).epsilon(1e-9));
    }
    const Matrix tiny = rmsnorm(Matrix::row({1e-12, -1e-12}), 1.0);
    CHECK(tiny[0] < 1e-11);
}

TEST_CASE("rmsnorm_rows normalizes each row on its own") {
    const Matrix m{{2, -2}, {3, 4}};
    const Matrix r = rmsnorm_rows(m, 1e-20);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(1, 1) == doctest::Approx(4.0 / std::sqrt(12.5)));
}

TEST_CASE("elementwise maps") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(tanh(Matrix::row({0.0}))[0] == 0.0);
    CHECK(exp(Matrix::row({0.0, 1.0})) == Matrix::row({1.0, std::exp(1.0)}));
    const Matrix s = sigmoid(Matrix::row({-30, -1, 0, 1, 30}));
    for (double v : s.values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("norms and sums") {
    CHECK(l2_norm(Matrix::row({3, 4})) == 5.0);
    CHECK(row_sums(Matrix::identity(3)) == std::vector<double>{1, 1, 1});
    CHECK(col_sums(Matrix{{1, 2}, {3, 4}}) == std::vector<double>{4, 6});
    CHECK(row_sums(Matrix{{1, 2}, {3, 4}}) == std::vector<double>{3, 7});
    CHECK(sum(Matrix{{1, 2}, {3, 4}}) == 10.0);
    CHECK(max_abs(Matrix::row({-7, 3})) == 7.0);
}

TEST_CASE("transpose, reshape and arithmetic") {
    const Matrix m{{1, 2, 3}, {4, 5, 6}};
    CHECK(transpose(m) == Matrix{{1, 4}, {2, 5}, {3, 6}});
    CHECK(m.reshaped(3, 2) == Matrix{{1, 2}, {3, 4}, {5, 6}});
    CHECK_THROWS_AS(m.reshaped(4, 2), ShapeError);
    CHECK(m - m == Matrix(2, 3));
    CHECK(2.0 * m == m + m);
    CHECK(hadamard(m, m) == Matrix{{1, 4, 9}, {16, 25, 36}});
    CHECK(m.shape_string() == "2x3");
}

TEST_CASE("spectral norm of a doubly stochastic matrix is at most 1") {
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix ds = test::random_birkhoff(2 + rng.index(6), rng);
        CHECK(spectral_norm(ds) <= 1.0 + 1e-9);
    }
    CHECK(spectral_norm(Matrix{{2, 0}, {0, 0.5}}) == doctest::Approx(2.0));
}

TEST_CASE("non-finite detection") {
    Matrix m(2, 2, 1.0);
    CHECK(m.all_finite());
    m(1, 1) = std::nan("");
    CHECK_FALSE(m.all_finite());
}

TEST_CASE("numeric config validation") {
    NumericConfig cfg;
    CHECK(cfg.rms_epsilon == 1e-20);
    CHECK(cfg.fd_step == 1e-5);
    CHECK_NOTHROW(cfg.validate());
    cfg.rms_epsilon = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg.rms_epsilon = 1e-20;
    cfg.fd_step = -1.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("seeded generator reproduces its sequence") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(Rng(1).normal_matrix(3, 3, 1.0) == Rng(1).normal_matrix(3, 3, 1.0));
    CHECK_FALSE(Rng(1).normal_matrix(3, 3, 1.0) == Rng(2).normal_matrix(3, 3, 1.0));
    CHECK_FALSE(Rng::derived(7, 0).next_u64() == Rng::derived(7, 1).next_u64());
    Rng u(3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform(-3, 3);
        CHECK(x >= -3.0);
        CHECK(x < 3.0);
    }
}

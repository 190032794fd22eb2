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
#include "test_util.hpp"

using namespace mhc;

namespace {

SinkhornConfig
iters(int t) {
    SinkhornConfig cfg;
    cfg.t_max = t;
    return cfg;
}

/// Unguarded reference iteration written out with explicit loops.
Matrix
reference_sinkhorn(const Matrix& m_tilde, int t_max) {
    const std::size_t n = m_tilde.rows();
    Matrix m(n, n);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = std::exp(m_tilde[i]);
    }
    for (int t = 0; t < t_max; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += m(i, j);
            for (std::size_t i = 0; i < n; ++i) m(i, j) /= s;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += m(i, j);
            for (std::size_t j = 0; j < n; ++j) m(i, j) /= s;
        }
    }
    return m;
}

}  // namespace

TEST_CASE("scalar input projects to exactly one") {
    for (double v : {-50.0, 0.0, 3.7, 600.0}) {
        CHECK(sinkhorn_project(Matrix{{v}}) == Matrix{{1.0}});
    }
}

TEST_CASE("zeros project to the uniform matrix") {
    CHECK(sinkhorn_project(Matrix(2, 2)) == Matrix(2, 2, 0.5));
    CHECK(sinkhorn_project(Matrix(4, 4)) == Matrix(4, 4, 0.25));
}

TEST_CASE("diagonal-scaling fixed point") {
    // exp gives A = [[2,1],[1,2]]; D A D with D = d I and 3 d^2 = 1 is doubly
    // stochastic, so the limit is A / 3.
    const double l2 = std::log(2.0);
    const Matrix out = sinkhorn_project(Matrix{{l2, 0}, {0, l2}}, iters(500));
    const Matrix expected{{2.0 / 3.0, 1.0 / 3.0}, {1.0 / 3.0, 2.0 / 3.0}};
    CHECK(max_abs_diff(out, expected) <= 1e-9);
}

TEST_CASE("diagonal-heavy input: frozen projection") {
    const Matrix out = sinkhorn_project(6.0 * Matrix::identity(4));
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double expected = i == j ? 0.9926186332070156 : 0.0024604555976614757;
            CHECK(out(i, j) == doctest::Approx(expected).epsilon(1e-14));
        }
        CHECK(out(i, i) > 0.9);
    }
    // e^6 / (e^6 + 3) closes the symmetric case in one step.
    CHECK(out(0, 0) == doctest::Approx(std::exp(6.0) / (std::exp(6.0) + 3.0)).epsilon(1e-14));
}

TEST_CASE("projection matches an explicit loop") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.index(8);
        const Matrix m = rng.uniform_matrix(n, n, -3, 3);
        CHECK(max_rel_diff(sinkhorn_project(m), reference_sinkhorn(m, 20), 1e-300) <= 1e-12);
    }
}

TEST_CASE("ds diagnostics examples") {
    const DsDiagnostics eye = ds_diagnostics(Matrix::identity(4));
    CHECK(eye.max_row_dev == 0.0);
    CHECK(eye.max_col_dev == 0.0);
    CHECK(eye.min_entry == 0.0);
    const DsDiagnostics uni = ds_diagnostics(Matrix(4, 4, 0.25));
    CHECK(uni.max_row_dev == 0.0);
    CHECK(uni.max_col_dev == 0.0);
    CHECK(uni.min_entry == 0.25);
    const DsDiagnostics d = ds_diagnostics(Matrix{{0.9, 0.2}, {0.1, 0.8}});
    CHECK(d.max_row_dev == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(d.max_col_dev == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d.min_entry == 0.1);
}

TEST_CASE("shape and config errors") {
    CHECK_THROWS_AS(sinkhorn_project(Matrix(2, 3)), ShapeError);
    CHECK_THROWS_AS(ds_diagnostics(Matrix(3, 2)), ShapeError);
    CHECK_THROWS_AS(sinkhorn_vjp(Matrix(2, 2), Matrix(3, 3)), ShapeError);
    CHECK_THROWS(sinkhorn_project(Matrix(2, 2), iters(0)));
    CHECK(SinkhornConfig{}.t_max == 20);
    CHECK(SinkhornConfig{}.overflow_guard);
}

TEST_CASE("row sums are exact") {
    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.index(8);
        const double spread = 1.0 + 40.0 * rng.uniform();
        const int t = 1 + static_cast<int>(rng.index(30));
        const DsDiagnostics d = ds_diagnostics(sinkhorn_project(rng.uniform_matrix(n, n, -spread, spread), iters(t)));
        CHECK(d.max_row_dev <= 1e-12);
    }
}

TEST_CASE("column sums converge for moderate inputs") {
    Rng rng(6);
    SinkhornConfig long_run;
    long_run.t_max = 100;
    for (std::size_t n : {2, 4, 8}) {
        double worst_short = 0.0;
        double worst_long = 0.0;
        for (int trial = 0; trial < 300; ++trial) {
            const Matrix narrow = sinkhorn_project(rng.uniform_matrix(n, n, -1.5, 1.5));
            worst_short = std::max(worst_short, ds_diagnostics(narrow).max_col_dev);
            const DsDiagnostics wide = ds_diagnostics(sinkhorn_project(rng.uniform_matrix(n, n, -3, 3), long_run));
            worst_long = std::max(worst_long, wide.max_col_dev);
            CHECK(wide.min_entry > 0.0);
        }
        CAPTURE(n);
        CHECK(worst_short <= 1e-3);
        CHECK(worst_long <= 1e-3);
    }
}

TEST_CASE("twenty iterations leave slow inputs short of the column tolerance") {
    const Matrix slow{{-3, -1}, {3, -3}};
    CHECK(ds_diagnostics(sinkhorn_project(slow)).max_col_dev > 1e-3);
    SinkhornConfig long_run;
    long_run.t_max = 400;
    CHECK(ds_diagnostics(sinkhorn_project(slow, long_run)).max_col_dev <= 1e-9);
}

TEST_CASE("more iterations do not increase column deviation") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix m = rng.uniform_matrix(4, 4, -3, 3);
        double prev = ds_diagnostics(sinkhorn_project(m, iters(1))).max_col_dev;
        for (int t : {2, 5, 10, 20, 40}) {
            const double dev = ds_diagnostics(sinkhorn_project(m, iters(t))).max_col_dev;
            CHECK(dev <= prev + 1e-15);
            prev = dev;
        }
    }
}

TEST_CASE("global shift invariance") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix grid = rng.uniform_matrix(4, 4, -3, 3);
        for (double& v : grid.values()) {
            v = std::round(v * 64.0) / 64.0;
        }
        const Matrix base = sinkhorn_project(grid);
        for (double c : {-5.0, 0.0, 7.0}) {
            CHECK(sinkhorn_project(grid + Matrix(4, 4, c)) == base);
        }
        const Matrix m = rng.uniform_matrix(4, 4, -3, 3);
        for (double c : {-5.0, 0.0, 7.0}) {
            CHECK(max_abs_diff(sinkhorn_project(m + Matrix(4, 4, c)), sinkhorn_project(m)) <= 1e-14);
        }
    }
}

TEST_CASE("single row or column shift leaves the limit unchanged") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = rng.uniform_matrix(4, 4, -3, 3);
        const Matrix limit = sinkhorn_project(m, iters(500));
        Matrix row_shift = m;
        Matrix col_shift = m;
        const std::size_t k = rng.index(4);
        const double c = rng.uniform(-2, 2);
        for (std::size_t j = 0; j < 4; ++j) {
            row_shift(k, j) += c;
            col_shift(j, k) += c;
        }
        CHECK(max_abs_diff(sinkhorn_project(row_shift, iters(500)), limit) <= 1e-9);
        CHECK(max_abs_diff(sinkhorn_project(col_shift, iters(500)), limit) <= 1e-9);
    }
}

TEST_CASE("overflow guard keeps large inputs finite") {
    const Matrix out = sinkhorn_project(Matrix{{800, 799}, {798, 800}});
    CHECK(out.all_finite());
    CHECK(ds_diagnostics(out).max_row_dev <= 1e-12);
}

TEST_CASE("products of exactly doubly stochastic matrices stay doubly stochastic") {
    Rng rng(10);
    for (std::size_t k = 1; k <= 60; ++k) {
        Matrix product = Matrix::identity(4);
        for (std::size_t i = 0; i < k; ++i) {
            product = matmul(test::random_birkhoff(4, rng), product);
        }
        const DsDiagnostics d = ds_diagnostics(product);
        CHECK(d.max_row_dev <= static_cast<double>(k) * 1e-12);
        CHECK(d.max_col_dev <= static_cast<double>(k) * 1e-12);
    }
}

TEST_CASE("vjp trivial cases") {
    CHECK(sinkhorn_vjp(Matrix{{2.5}}, Matrix{{3.0}}) == Matrix{{0.0}});
    Rng rng(11);
    const Matrix m = rng.uniform_matrix(3, 3, -3, 3);
    CHECK(max_abs(sinkhorn_vjp(m, Matrix(3, 3))) == 0.0);
}

TEST_CASE("vjp matches finite differences of the unrolled iteration") {
    Rng rng(12);
    for (int t : {1, 3, 20}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 2 + rng.index(4);
            const Matrix m = rng.uniform_matrix(n, n, -3, 3);
            const Matrix up = rng.normal_matrix(n, n, 1.0);
            auto f = [&](const Matrix& x) { return sum(hadamard(reference_sinkhorn(x, t), up)); };
            CHECK(test::rel_error(sinkhorn_vjp(m, up, iters(t)), test::numeric_gradient(f, m)) <= 1e-5);
        }
    }
}

TEST_CASE("stored and recomputed backward agree bitwise") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = rng.uniform_matrix(4, 4, -3, 3);
        const Matrix up = rng.normal_matrix(4, 4, 1.0);
        const SinkhornTrace trace = sinkhorn_forward_trace(m);
        CHECK(trace.output == sinkhorn_project(m));
        CHECK(sinkhorn_vjp(trace, up) == sinkhorn_vjp(m, up));
    }
}

TEST_CASE("normalization steps and their vjps") {
    const Matrix m{{1, 3}, {1, 1}};
    CHECK(column_normalize(m) == Matrix{{0.5, 0.75}, {0.5, 0.25}});
    CHECK(row_normalize(m) == Matrix{{0.25, 0.75}, {0.5, 0.5}});
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix x = rng.uniform_matrix(3, 4, 0.1, 2.0);
        const Matrix up = rng.normal_matrix(3, 4, 1.0);
        auto fc = [&](const Matrix& v) { return sum(hadamard(column_normalize(v), up)); };
        auto fr = [&](const Matrix& v) { return sum(hadamard(row_normalize(v), up)); };
        CHECK(test::rel_error(column_normalize_vjp(x, up), test::numeric_gradient(fc, x)) <= 1e-6);
        CHECK(test::rel_error(row_normalize_vjp(x, up), test::numeric_gradient(fr, x)) <= 1e-6);
    }
}

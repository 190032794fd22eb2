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

#include "mhc/mappings.hpp"

#include <cmath>

#include "mhc/random.hpp"
#include "mhc/simd/kernels.hpp"

namespace mhc {

std::string_view
to_string(Variant v) {
    switch (v) {
        case Variant::Baseline:
            return "baseline";
        case Variant::Hc:
            return "hc";
        case Variant::Mhc:
            return "mhc";
    }
    return "unknown";
}

Variant
parse_variant(std::string_view s) {
    if (s == "baseline" || s == "residual") {
        return Variant::Baseline;
    }
    if (s == "hc") {
        return Variant::Hc;
    }
    if (s == "mhc") {
        return Variant::Mhc;
    }
    throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

std::string_view
to_string(InitPolicy p) {
    return p == InitPolicy::Uniform ? "uniform" : "residual-emulation";
}

InitPolicy
parse_init_policy(std::string_view s) {
    if (s == "residual-emulation") {
        return InitPolicy::ResidualEmulation;
    }
    if (s == "uniform") {
        return InitPolicy::Uniform;
    }
    throw std::invalid_argument("unknown init policy '" + std::string(s) + "'");
}

namespace {

void
expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(std::string(name) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", got " + m.shape_string());
    }
}

void
expect_state(const StreamState& x, const MappingParams& p) {
    if (x.n() != p.n || x.width() != p.width) {
        throw ShapeError("stream state " + x.values().shape_string() + " does not match mapping params " +
                         std::to_string(p.n) + "x" + std::to_string(p.width));
    }
}

// Static offset of each consolidated block inside [pre | post | res].
struct FusedLayout {
    std::size_t n;
    std::size_t pre() const {
        return 0;
    }
    std::size_t post() const {
        return n;
    }
    std::size_t res() const {
        return 2 * n;
    }
    std::size_t total() const {
        return n * n + 2 * n;
    }
};

MappingSet
constrain(const Matrix& tilde_pre, const Matrix& tilde_post, const Matrix& tilde_res,
          const SinkhornConfig& cfg) {
    MappingSet ms;
    ms.h_pre = sigmoid(tilde_pre);
    ms.h_post = 2.0 * sigmoid(tilde_post);
    ms.h_res = sinkhorn_project(tilde_res, cfg);
    return ms;
}

}  // namespace

void
MappingParams::validate() const {
    if (n == 0 || width == 0) {
        throw ShapeError("mapping params need n >= 1 and C >= 1");
    }
    if (variant == Variant::Baseline) {
        return;
    }
    if (!std::isfinite(alpha_pre) || !std::isfinite(alpha_post) || !std::isfinite(alpha_res)) {
        throw std::invalid_argument("gating factors must be finite");
    }
    if (variant == Variant::Hc) {
        expect_shape(proj_pre, 1, width, "proj_pre");
        expect_shape(proj_post, 1, width, "proj_post");
        expect_shape(proj_res, n, width, "proj_res");
    } else {
        expect_shape(proj_pre, n * width, n, "proj_pre");
        expect_shape(proj_post, n * width, n, "proj_post");
        expect_shape(proj_res, n * width, n * n, "proj_res");
    }
    expect_shape(bias_pre, 1, n, "bias_pre");
    expect_shape(bias_post, 1, n, "bias_post");
    expect_shape(bias_res, n, n, "bias_res");
    sinkhorn.validate();
}

bool
operator==(const MappingParams& a, const MappingParams& b) {
    return a.variant == b.variant && a.n == b.n && a.width == b.width && a.alpha_pre == b.alpha_pre &&
           a.alpha_post == b.alpha_post && a.alpha_res == b.alpha_res && a.proj_pre == b.proj_pre &&
           a.proj_post == b.proj_post && a.proj_res == b.proj_res && a.bias_pre == b.bias_pre &&
           a.bias_post == b.bias_post && a.bias_res == b.bias_res && a.sinkhorn.t_max == b.sinkhorn.t_max &&
           a.sinkhorn.overflow_guard == b.sinkhorn.overflow_guard;
}

MappingParams
init_params(Variant variant, std::size_t n, std::size_t width, InitPolicy policy, std::uint64_t seed,
            double proj_stddev) {
    if (n == 0 || width == 0) {
        throw std::invalid_argument("init_params: n and C must be at least 1");
    }
    MappingParams p;
    p.variant = variant;
    p.n = n;
    p.width = width;
    if (variant == Variant::Baseline) {
        return p;
    }

    Rng rng(seed);
    auto projection = [&](std::size_t rows, std::size_t cols) {
        return proj_stddev > 0.0 ? rng.normal_matrix(rows, cols, proj_stddev) : Matrix(rows, cols);
    };
    if (variant == Variant::Hc) {
        p.proj_pre = projection(1, width);
        p.proj_post = projection(1, width);
        p.proj_res = projection(n, width);
    } else {
        p.proj_pre = projection(n * width, n);
        p.proj_post = projection(n * width, n);
        p.proj_res = projection(n * width, n * n);
    }

    p.bias_pre = Matrix(1, n);
    p.bias_post = Matrix(1, n);
    p.bias_res = Matrix(n, n);
    if (policy == InitPolicy::ResidualEmulation) {
        if (variant == Variant::Hc) {
            p.bias_res = Matrix::identity(n);
            p.bias_pre(0, 0) = 1.0;
            p.bias_post(0, 0) = 1.0;
        } else {
            // sigmoid(6) ~ 0.9975, 2 * sigmoid(-6) ~ 0.005 and Sinkhorn(6 I)
            // puts ~0.993 on the diagonal at n = 4.
            constexpr double kLogit = 6.0;
            p.bias_res = kLogit * Matrix::identity(n);
            for (std::size_t i = 0; i < n; ++i) {
                p.bias_pre(0, i) = i == 0 ? kLogit : -kLogit;
                p.bias_post(0, i) = i == 0 ? 0.0 : -kLogit;
            }
        }
    }
    return p;
}

MappingSet
fixed_mappings(std::size_t n) {
    return {Matrix(1, n, 1.0 / static_cast<double>(n)), Matrix(1, n, 1.0), Matrix::identity(n)};
}

MappingSet
compute_mappings_hc(const StreamState& x, const MappingParams& p, double rms_epsilon) {
    if (p.variant != Variant::Hc) {
        throw std::invalid_argument("compute_mappings_hc called with variant " + std::string(to_string(p.variant)));
    }
    p.validate();
    expect_state(x, p);
    const Matrix normed_t = transpose(rmsnorm_rows(x.values(), rms_epsilon));  // C x n
    MappingSet ms;
    ms.h_pre = p.alpha_pre * tanh(matmul(p.proj_pre, normed_t)) + p.bias_pre;
    ms.h_post = p.alpha_post * tanh(matmul(p.proj_post, normed_t)) + p.bias_post;
    ms.h_res = p.alpha_res * tanh(matmul(p.proj_res, normed_t)) + p.bias_res;
    return ms;
}

MappingSet
compute_mappings_mhc(const StreamState& x, const MappingParams& p, double rms_epsilon) {
    if (p.variant != Variant::Mhc) {
        throw std::invalid_argument("compute_mappings_mhc called with variant " + std::string(to_string(p.variant)));
    }
    p.validate();
    expect_state(x, p);
    const Matrix normed = rmsnorm(x.flattened(), rms_epsilon);
    const Matrix tilde_pre = p.alpha_pre * matmul(normed, p.proj_pre) + p.bias_pre;
    const Matrix tilde_post = p.alpha_post * matmul(normed, p.proj_post) + p.bias_post;
    const Matrix tilde_res = p.alpha_res * matmul(normed, p.proj_res).reshaped(p.n, p.n) + p.bias_res;
    return constrain(tilde_pre, tilde_post, tilde_res, p.sinkhorn);
}

MappingSet
compute_mappings_mhc_fused(const StreamState& x, const MappingParams& p, double rms_epsilon) {
    if (p.variant != Variant::Mhc) {
        throw std::invalid_argument("compute_mappings_mhc_fused called with variant " +
                                    std::string(to_string(p.variant)));
    }
    p.validate();
    expect_state(x, p);
    const std::size_t n = p.n;
    const std::size_t nc = n * p.width;
    const FusedLayout layout{n};

    Matrix phi(nc, layout.total());
    Matrix bias(1, layout.total());
    for (std::size_t r = 0; r < nc; ++r) {
        for (std::size_t j = 0; j < n; ++j) {
            phi(r, layout.pre() + j) = p.proj_pre(r, j);
            phi(r, layout.post() + j) = p.proj_post(r, j);
        }
        for (std::size_t j = 0; j < n * n; ++j) {
            phi(r, layout.res() + j) = p.proj_res(r, j);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        bias(0, layout.pre() + j) = p.bias_pre(0, j);
        bias(0, layout.post() + j) = p.bias_post(0, j);
    }
    for (std::size_t j = 0; j < n * n; ++j) {
        bias(0, layout.res() + j) = p.bias_res[j];
    }

    const Matrix flat = x.flattened();
    const Matrix projected = matmul(flat, phi);
    const double mean_sq = simd::Active().sum_sq(flat.values().data(), nc) / static_cast<double>(nc);
    const double inv_r = 1.0 / std::sqrt(mean_sq + rms_epsilon);

    Matrix tilde_pre(1, n);
    Matrix tilde_post(1, n);
    Matrix tilde_res(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        tilde_pre[j] = inv_r * (p.alpha_pre * projected[layout.pre() + j]) + bias[layout.pre() + j];
        tilde_post[j] = inv_r * (p.alpha_post * projected[layout.post() + j]) + bias[layout.post() + j];
    }
    for (std::size_t j = 0; j < n * n; ++j) {
        tilde_res[j] = inv_r * (p.alpha_res * projected[layout.res() + j]) + bias[layout.res() + j];
    }
    return constrain(tilde_pre, tilde_post, tilde_res, p.sinkhorn);
}

MappingSet
compute_mappings(const StreamState& x, const MappingParams& p, double rms_epsilon) {
    switch (p.variant) {
        case Variant::Baseline:
            expect_state(x, p);
            return fixed_mappings(p.n);
        case Variant::Hc:
            return compute_mappings_hc(x, p, rms_epsilon);
        case Variant::Mhc:
            return compute_mappings_mhc(x, p, rms_epsilon);
    }
    throw std::logic_error("unreachable variant");
}

MappingSet
apply_ablation(const MappingSet& ms, const AblationMask& mask, std::size_t n) {
    const MappingSet fixed = fixed_mappings(n);
    return {mask.use_pre ? ms.h_pre : fixed.h_pre, mask.use_post ? ms.h_post : fixed.h_post,
            mask.use_res ? ms.h_res : fixed.h_res};
}

}  // namespace mhc

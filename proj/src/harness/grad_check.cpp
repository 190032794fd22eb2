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

#include "mhc/harness/grad_check.hpp"

#include "mhc/harness/config.hpp"
#include "mhc/random.hpp"

namespace mhc::harness {

StackConfig
random_stack(Variant variant, std::size_t n, std::size_t width, std::size_t depth, LayerKind kind,
             std::uint64_t seed, double spread) {
    StackConfig stack =
        make_stack(variant, n, width, depth, kind, InitPolicy::ResidualEmulation, seed, spread, 0.5);
    Rng rng = Rng::derived(seed, 77);
    for (MappingParams& p : stack.mappings) {
        if (variant == Variant::Baseline) {
            continue;
        }
        p.alpha_pre = rng.uniform(0.5, 1.5);
        p.alpha_post = rng.uniform(0.5, 1.5);
        p.alpha_res = rng.uniform(0.5, 1.5);
        p.bias_pre = p.bias_pre + rng.normal_matrix(p.bias_pre.rows(), p.bias_pre.cols(), spread);
        p.bias_post = p.bias_post + rng.normal_matrix(p.bias_post.rows(), p.bias_post.cols(), spread);
        p.bias_res = rng.normal_matrix(p.bias_res.rows(), p.bias_res.cols(), spread);
    }
    return stack;
}

GradCheckResult
grad_check(const GradCheckOptions& o) {
    if (o.n == 0 || o.width == 0 || o.depth == 0 || o.tokens == 0) {
        throw ValidationError("grad-check needs positive n, C, L and token count");
    }
    const StackConfig stack = random_stack(o.variant, o.n, o.width, o.depth, o.layer_kind, o.seed, o.spread);
    Rng rng = Rng::derived(o.seed, 78);
    std::vector<StreamState> tokens;
    for (std::size_t t = 0; t < o.tokens; ++t) {
        tokens.emplace_back(rng.normal_matrix(o.n, o.width, 1.0));
    }
    const Matrix target = rng.normal_matrix(o.tokens, o.width, 1.0);

    ad::RecordOptions opts;
    opts.sinkhorn_mode = o.sinkhorn_mode;
    const ad::GradientBundle analytic = ad::regression_gradient(stack, tokens, target, opts);

    ad::ParameterSet params = ad::collect_parameters(stack);
    params[ad::kInputKey] = ad::pack_states(tokens);
    auto forward = [&](const ad::ParameterSet& p) {
        StackConfig probe = stack;
        ad::assign_parameters(probe, p);
        const std::vector<StreamState> xs = ad::unpack_states(p.at(ad::kInputKey), o.n);
        return ad::regression_loss(probe, xs, target);
    };
    const ad::GradientBundle numeric = ad::finite_difference_gradient(forward, params, o.fd_step);
    const ad::GradientComparison cmp = ad::compare_gradients(analytic, numeric);

    GradCheckResult result;
    result.max_rel_error = cmp.max_rel_error;
    result.worst = cmp.worst.str();
    result.compared = cmp.compared;
    result.passed = cmp.max_rel_error <= o.tolerance && cmp.compared == numeric.entries.size();
    return result;
}

}  // namespace mhc::harness

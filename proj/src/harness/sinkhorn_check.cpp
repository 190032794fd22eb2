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

#include "mhc/harness/sinkhorn_check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mhc/harness/config.hpp"
#include "mhc/random.hpp"
#include "mhc/sinkhorn.hpp"

namespace mhc::harness {

void
SinkhornCheckOptions::validate() const {
    if (n == 0 || trials == 0) {
        throw ValidationError("sinkhorn-check needs n >= 1 and trials >= 1");
    }
    if (t_max < 1) {
        throw ValidationError("sinkhorn-check needs t_max >= 1");
    }
    if (!(lo < hi)) {
        throw ValidationError("sinkhorn-check needs lo < hi");
    }
    if (!(fd_step > 0.0) || !(grad_tolerance > 0.0)) {
        throw ValidationError("sinkhorn-check needs positive fd_step and grad_tolerance");
    }
}

SinkhornCheckSummary
sinkhorn_check(const SinkhornCheckOptions& opts) {
    opts.validate();
    const auto start = std::chrono::steady_clock::now();
    SinkhornConfig cfg;
    cfg.t_max = opts.t_max;
    Rng rng(opts.seed);
    SinkhornCheckSummary s;
    s.trials = opts.trials;
    s.min_entry = std::numeric_limits<double>::infinity();
    for (std::size_t trial = 0; trial < opts.trials; ++trial) {
        const Matrix input = rng.uniform_matrix(opts.n, opts.n, opts.lo, opts.hi);
        const DsDiagnostics d = ds_diagnostics(sinkhorn_project(input, cfg));
        s.max_row_dev = std::max(s.max_row_dev, d.max_row_dev);
        s.max_col_dev = std::max(s.max_col_dev, d.max_col_dev);
        s.min_entry = std::min(s.min_entry, d.min_entry);
        if (trial >= opts.grad_trials) {
            continue;
        }
        const Matrix upstream = rng.normal_matrix(opts.n, opts.n, 1.0);
        const Matrix analytic = sinkhorn_vjp(input, upstream, cfg);
        Matrix numeric(opts.n, opts.n);
        Matrix probe = input;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            const double x = probe[i];
            probe[i] = x + opts.fd_step;
            const double up = sum(hadamard(sinkhorn_project(probe, cfg), upstream));
            probe[i] = x - opts.fd_step;
            const double down = sum(hadamard(sinkhorn_project(probe, cfg), upstream));
            probe[i] = x;
            numeric[i] = (up - down) / (2.0 * opts.fd_step);
        }
        const double scale = std::max(l2_norm(analytic), l2_norm(numeric));
        const double err = scale < 1e-12 ? l2_norm(analytic - numeric) : l2_norm(analytic - numeric) / scale;
        s.max_grad_rel_error = std::max(s.max_grad_rel_error, err);
        ++s.grad_checked;
        if (err <= opts.grad_tolerance) {
            ++s.grad_passed;
        }
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

nlohmann::json
summary_to_json(const SinkhornCheckOptions& o, const SinkhornCheckSummary& s) {
    return {{"n", o.n},
            {"t_max", o.t_max},
            {"trials", s.trials},
            {"seed", o.seed},
            {"range", {o.lo, o.hi}},
            {"max_row_dev", s.max_row_dev},
            {"max_col_dev", s.max_col_dev},
            {"min_entry", s.min_entry},
            {"grad_checked", s.grad_checked},
            {"grad_passed", s.grad_passed},
            {"grad_pass_rate", s.grad_pass_rate()},
            {"max_grad_rel_error", s.max_grad_rel_error}};
}

}  // namespace mhc::harness

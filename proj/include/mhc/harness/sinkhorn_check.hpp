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

#include <cstdint>

#include <json.hpp>

namespace mhc::harness {

struct SinkhornCheckOptions {
    std::size_t n = 4;
    int t_max = 20;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    double lo = -3.0;
    double hi = 3.0;
    /// Trials that also run a VJP-vs-finite-difference check.
    std::size_t grad_trials = 50;
    double grad_tolerance = 1e-5;
    double fd_step = 1e-5;

    void
    validate() const;
};

struct SinkhornCheckSummary {
    std::size_t trials = 0;
    double max_row_dev = 0.0;
    double max_col_dev = 0.0;
    double min_entry = 0.0;
    std::size_t grad_checked = 0;
    std::size_t grad_passed = 0;
    double max_grad_rel_error = 0.0;
    double seconds = 0.0;

    double
    grad_pass_rate() const {
        return grad_checked == 0 ? 1.0 : static_cast<double>(grad_passed) / static_cast<double>(grad_checked);
    }
};

SinkhornCheckSummary
sinkhorn_check(const SinkhornCheckOptions& opts);

/// Wall-clock time is left out so the document is reproducible.
nlohmann::json
summary_to_json(const SinkhornCheckOptions& opts, const SinkhornCheckSummary& s);

}  // namespace mhc::harness

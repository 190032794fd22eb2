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

#include "mhc/systems_model.hpp"

#include <cmath>
#include <stdexcept>

namespace mhc {

std::string_view
to_string(IoVariant v) {
    switch (v) {
        case IoVariant::Residual:
            return "residual";
        case IoVariant::Hc:
            return "hc";
        case IoVariant::HcFused:
            return "hc_fused";
    }
    return "unknown";
}

IoVariant
parse_io_variant(std::string_view s) {
    if (s == "residual" || s == "baseline") return IoVariant::Residual;
    if (s == "hc") return IoVariant::Hc;
    if (s == "hc_fused" || s == "hc-fused") return IoVariant::HcFused;
    throw std::invalid_argument("unknown cost-model variant '" + std::string(s) + "'");
}

std::string_view
to_string(StoragePolicy p) {
    switch (p) {
        case StoragePolicy::EveryBlock:
            return "every-L_r-layers";
        case StoragePolicy::EveryLayer:
            return "every-layer";
        case StoragePolicy::Transient:
            return "transient";
    }
    return "unknown";
}

IoCostBreakdown
io_cost(IoVariant variant, std::uint64_t n, std::uint64_t width) {
    if (n == 0 || width == 0) {
        throw std::invalid_argument("io_cost: n and C must be at least 1");
    }
    const std::uint64_t c = width;
    IoCostBreakdown out;
    switch (variant) {
        case IoVariant::Residual:
            out.rows = {{"residual_merge", 2 * c, c, true}};
            break;
        case IoVariant::Hc:
            out.rows = {
                {"compute_mappings", n * c, n * n + 2 * n, false},
                {"apply_h_pre", n * c + n, c, false},
                {"apply_h_post", c + n, n * c, true},
                {"apply_h_res", n * c + n * n, n * c, true},
                {"residual_merge", 2 * n * c, n * c, true},
            };
            break;
        case IoVariant::HcFused:
            out.rows = {
                {"compute_mappings", n * c, n * n + 2 * n, false},
                {"apply_h_pre", n * c + n, c, false},
                {"fused_post_res_merge", (n + 1) * c, n * c, true},
            };
            break;
    }
    for (const IoRow& r : out.rows) {
        out.total_read += r.read;
        out.total_write += r.write;
    }
    return out;
}

ActivationLedger
activation_ledger(std::uint64_t n, std::uint64_t width, std::uint64_t depth, std::uint64_t block) {
    if (n == 0 || width == 0 || depth == 0) {
        throw std::invalid_argument("activation_ledger: n, C and L must be at least 1");
    }
    if (block == 0 || block > depth) {
        throw std::invalid_argument("activation_ledger: need 1 <= L_r <= L");
    }
    ActivationLedger ledger;
    ledger.entries = {
        {"x_l0", n * width, StoragePolicy::EveryBlock},
        {"F(h_pre x_l)", width, StoragePolicy::EveryLayer},
        {"x_l", n * width, StoragePolicy::Transient},
        {"h_pre x_l", width, StoragePolicy::Transient},
        {"RMSNorm(h_pre x_l)", width, StoragePolicy::Transient},
    };
    const std::uint64_t blocks = (depth + block - 1) / block;
    for (const ActivationEntry& e : ledger.entries) {
        switch (e.policy) {
            case StoragePolicy::EveryBlock:
                ledger.resident_elements += e.elements * blocks;
                break;
            case StoragePolicy::EveryLayer:
                ledger.resident_elements += e.elements * depth;
                break;
            case StoragePolicy::Transient:
                ledger.transient_elements += e.elements * block;
                break;
        }
    }
    return ledger;
}

std::uint64_t
recompute_footprint(std::uint64_t n, std::uint64_t width, std::uint64_t depth, std::uint64_t block) {
    const std::uint64_t blocks = (depth + block - 1) / block;
    return n * width * blocks + (n + 2) * width * block;
}

RecomputePlan
plan_recompute(std::uint64_t n, std::uint64_t width, std::uint64_t depth, std::optional<std::uint64_t> stage_layers) {
    if (n == 0 || width == 0 || depth == 0) {
        throw std::invalid_argument("plan_recompute: n, C and L must be at least 1");
    }
    if (stage_layers && *stage_layers == 0) {
        throw std::invalid_argument("plan_recompute: stage layer count must be positive");
    }
    RecomputePlan plan;
    plan.continuous_optimum = std::sqrt(static_cast<double>(n * depth) / static_cast<double>(n + 2));
    bool found = false;
    for (std::uint64_t block = 1; block <= depth; ++block) {
        if (stage_layers && *stage_layers % block != 0) {
            continue;
        }
        const std::uint64_t total = recompute_footprint(n, width, depth, block);
        if (!found || total < plan.total_elements) {
            found = true;
            plan.block = block;
            plan.total_elements = total;
        }
    }
    const std::uint64_t blocks = (depth + plan.block - 1) / plan.block;
    plan.resident_elements = n * width * blocks;
    plan.transient_elements = (n + 2) * width * plan.block;
    return plan;
}

}  // namespace mhc

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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mhc {

// Element counts per token for maintaining the n-stream residual in the
// forward pass. The internal I/O of the layer function is excluded.

enum class IoVariant { Residual, Hc, HcFused };

std::string_view
to_string(IoVariant v);
IoVariant
parse_io_variant(std::string_view s);

struct IoRow {
    std::string operation;
    std::uint64_t read = 0;
    std::uint64_t write = 0;
    /// Row applies h_post / h_res or merges the residual.
    bool merge_path = false;
};

struct IoCostBreakdown {
    std::vector<IoRow> rows;
    std::uint64_t total_read = 0;
    std::uint64_t total_write = 0;
};

IoCostBreakdown
io_cost(IoVariant variant, std::uint64_t n, std::uint64_t width);

enum class StoragePolicy { EveryBlock, EveryLayer, Transient };

std::string_view
to_string(StoragePolicy p);

struct ActivationEntry {
    std::string name;
    std::uint64_t elements = 0;  ///< per token, per occurrence
    StoragePolicy policy = StoragePolicy::Transient;
};

struct ActivationLedger {
    std::vector<ActivationEntry> entries;
    /// Block inputs for every block plus the layer output of every layer.
    std::uint64_t resident_elements = 0;
    /// Recomputed activations of the one block being back-propagated.
    std::uint64_t transient_elements = 0;
};

ActivationLedger
activation_ledger(std::uint64_t n, std::uint64_t width, std::uint64_t depth, std::uint64_t block);

/// Memory that depends on the block size L_r:
///   nC * ceil(L / L_r) + (n + 2) C * L_r
/// resident_elements counts the stored block inputs, transient_elements the
/// active block's recomputed activations.
struct RecomputePlan {
    std::uint64_t block = 1;
    double continuous_optimum = 0.0;
    std::uint64_t resident_elements = 0;
    std::uint64_t transient_elements = 0;
    std::uint64_t total_elements = 0;
};

std::uint64_t
recompute_footprint(std::uint64_t n, std::uint64_t width, std::uint64_t depth, std::uint64_t block);

/// Exact integer argmin over 1..L, ties toward the smaller block. With
/// stage_layers set, only divisors of the per-stage layer count are eligible
/// so blocks never cross a pipeline-stage boundary.
RecomputePlan
plan_recompute(std::uint64_t n, std::uint64_t width, std::uint64_t depth,
               std::optional<std::uint64_t> stage_layers = std::nullopt);

}  // namespace mhc

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
#include <stdexcept>

#include "mhc/systems_model.hpp"

using namespace mhc;

namespace {

std::uint64_t
brute_force_block(std::uint64_t n, std::uint64_t c, std::uint64_t depth) {
    std::uint64_t best = 1;
    std::uint64_t best_f = ~std::uint64_t{0};
    for (std::uint64_t b = 1; b <= depth; ++b) {
        const std::uint64_t f = n * c * ((depth + b - 1) / b) + (n + 2) * c * b;
        if (f < best_f) {
            best_f = f;
            best = b;
        }
    }
    return best;
}

const IoRow&
row_named(const IoCostBreakdown& b, const std::string& name) {
    for (const IoRow& r : b.rows) {
        if (r.operation == name) {
            return r;
        }
    }
    throw std::out_of_range(name);
}

}  // namespace

TEST_CASE("io cost examples") {
    const IoCostBreakdown res = io_cost(IoVariant::Residual, 4, 4096);
    CHECK(res.total_read == 8192);
    CHECK(res.total_write == 4096);
    const IoCostBreakdown hc = io_cost(IoVariant::Hc, 4, 8);
    CHECK(hc.total_read == 192);
    CHECK(hc.total_write == 128);
    CHECK(hc.rows.size() == 5);
    CHECK(row_named(hc, "compute_mappings").read == 32);
    CHECK(row_named(hc, "compute_mappings").write == 24);
    CHECK(row_named(hc, "apply_h_pre").read == 36);
    CHECK(row_named(hc, "apply_h_pre").write == 8);
    CHECK(row_named(hc, "apply_h_post").read == 12);
    CHECK(row_named(hc, "apply_h_res").read == 48);
    CHECK(row_named(hc, "residual_merge").read == 64);
}

TEST_CASE("io totals match the closed forms") {
    for (std::uint64_t n = 1; n <= 8; ++n) {
        for (std::uint64_t c : {1, 8, 64}) {
            const IoCostBreakdown hc = io_cost(IoVariant::Hc, n, c);
            CHECK(hc.total_read == (5 * n + 1) * c + n * n + 2 * n);
            CHECK(hc.total_write == (3 * n + 1) * c + n * n + 2 * n);
            const IoCostBreakdown res = io_cost(IoVariant::Residual, n, c);
            CHECK(res.total_read == 2 * c);
            CHECK(res.total_write == c);

            std::uint64_t merge_read = 0;
            std::uint64_t merge_write = 0;
            for (const IoRow& r : hc.rows) {
                if (r.merge_path) {
                    merge_read += r.read;
                    merge_write += r.write;
                }
            }
            // the merge path carries n + n^2 coefficient reads on top of the
            // (3n+1)C stream reads
            CHECK(merge_read == (3 * n + 1) * c + n + n * n);
            CHECK(merge_write == 3 * n * c);

            const IoCostBreakdown fused = io_cost(IoVariant::HcFused, n, c);
            const IoRow& kernel = row_named(fused, "fused_post_res_merge");
            CHECK(kernel.read == (n + 1) * c);
            CHECK(kernel.write == n * c);
            CHECK(fused.total_read == hc.total_read - merge_read + kernel.read);
            CHECK(fused.total_write == hc.total_write - merge_write + kernel.write);
        }
    }
}

TEST_CASE("fused merge deltas at n = 4") {
    const std::uint64_t c = 16;
    const IoCostBreakdown hc = io_cost(IoVariant::Hc, 4, c);
    const IoCostBreakdown fused = io_cost(IoVariant::HcFused, 4, c);
    const std::uint64_t stream_reads = row_named(hc, "apply_h_post").read - 4 + row_named(hc, "apply_h_res").read -
                                       16 + row_named(hc, "residual_merge").read;
    CHECK(stream_reads == 13 * c);
    CHECK(row_named(fused, "fused_post_res_merge").read == 5 * c);
    CHECK(row_named(hc, "apply_h_post").write + row_named(hc, "apply_h_res").write +
              row_named(hc, "residual_merge").write ==
          12 * c);
    CHECK(row_named(fused, "fused_post_res_merge").write == 4 * c);
}

TEST_CASE("io cost validation and names") {
    CHECK_THROWS(io_cost(IoVariant::Hc, 0, 8));
    CHECK_THROWS(io_cost(IoVariant::Hc, 4, 0));
    CHECK(parse_io_variant("hc_fused") == IoVariant::HcFused);
    CHECK(parse_io_variant(to_string(IoVariant::Residual)) == IoVariant::Residual);
    CHECK_THROWS(parse_io_variant("mhc"));
}

TEST_CASE("activation ledger") {
    const ActivationLedger l = activation_ledger(4, 2, 30, 5);
    CHECK(l.resident_elements == 108);
    CHECK(l.transient_elements == (8 + 2 + 2) * 5);
    REQUIRE(l.entries.size() == 5);
    CHECK(l.entries[0].policy == StoragePolicy::EveryBlock);
    CHECK(l.entries[0].elements == 8);
    CHECK(l.entries[1].policy == StoragePolicy::EveryLayer);
    CHECK(l.entries[1].elements == 2);

    const ActivationLedger whole = activation_ledger(3, 1, 7, 7);
    CHECK(whole.resident_elements == 3 + 7);
    CHECK_THROWS(activation_ledger(4, 2, 30, 0));
    CHECK_THROWS(activation_ledger(4, 2, 30, 31));
}

TEST_CASE("recompute plan examples") {
    const RecomputePlan p = plan_recompute(4, 1, 30);
    CHECK(p.block == 5);
    CHECK(p.total_elements == 54);
    CHECK(recompute_footprint(4, 1, 30, 4) == 56);
    CHECK(recompute_footprint(4, 1, 30, 6) == 56);
    CHECK(p.continuous_optimum == doctest::Approx(std::sqrt(20.0)).epsilon(1e-15));

    const RecomputePlan q = plan_recompute(1, 1, 12);
    CHECK(q.block == 2);
    CHECK(q.total_elements == 12);
    CHECK(q.continuous_optimum == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("recompute plan matches brute force over a sweep") {
    for (std::uint64_t n = 1; n <= 8; ++n) {
        for (std::uint64_t depth = 1; depth <= 64; ++depth) {
            for (std::uint64_t c : {1, 16}) {
                const RecomputePlan p = plan_recompute(n, c, depth);
                CHECK(p.block == brute_force_block(n, c, depth));
                CHECK(p.block >= 1);
                CHECK(p.block <= depth);
                CHECK(p.total_elements == p.resident_elements + p.transient_elements);
                CHECK(p.total_elements == recompute_footprint(n, c, depth, p.block));

                const double opt = p.continuous_optimum;
                const auto lo = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(opt)));
                const auto hi = std::min<std::uint64_t>(depth, static_cast<std::uint64_t>(std::ceil(opt)));
                const double best = static_cast<double>(p.total_elements);
                const double bracket = static_cast<double>(
                    std::min(recompute_footprint(n, c, depth, lo), recompute_footprint(n, c, depth, hi)));
                CHECK(bracket <= 1.1 * best);
            }
        }
    }
}

TEST_CASE("stage alignment restricts blocks to divisors") {
    const RecomputePlan p = plan_recompute(4, 1, 30, 6);
    CHECK(6 % p.block == 0);
    CHECK(p.block == 6);
    const RecomputePlan q = plan_recompute(4, 1, 30, 7);
    CHECK(7 % q.block == 0);
    for (std::uint64_t stage = 1; stage <= 16; ++stage) {
        CHECK(stage % plan_recompute(2, 4, 48, stage).block == 0);
    }
    CHECK_THROWS(plan_recompute(4, 1, 30, 0));
    CHECK_THROWS(plan_recompute(0, 1, 30));
}

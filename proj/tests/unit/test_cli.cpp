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

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "mhc/harness/cli.hpp"

using mhc::harness::run_cli;

namespace {

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation
invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string
last_line(const std::string& text) {
    const auto end = text.find_last_not_of('\n');
    const auto start = text.rfind('\n', end);
    return text.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST_CASE("cost model totals") {
    const Invocation res = invoke({"cost-model", "--variant", "residual", "--c", "4096"});
    CHECK(res.code == 0);
    CHECK(last_line(res.out) == "total,8192,4096,");
    const Invocation hc = invoke({"cost-model", "--variant", "hc", "--n", "4", "--c", "8"});
    CHECK(last_line(hc.out) == "total,192,128,");
    const Invocation bytes = invoke({"cost-model", "--n", "4", "--c", "8", "--bytes-per-element", "2"});
    CHECK(last_line(bytes.out) == "total,384,256,");
    const Invocation json = invoke({"cost-model", "--variant", "hc_fused", "--n", "4", "--c", "8", "--format", "json"});
    REQUIRE(json.code == 0);
    const nlohmann::json j = nlohmann::json::parse(json.out);
    CHECK(j.at("rows").size() == 3);
    CHECK(j.at("unit") == "elements");
}

TEST_CASE("recompute plan") {
    const Invocation r = invoke({"plan-recompute", "--n", "4", "--l", "30"});
    REQUIRE(r.code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("L_r") == 5);
    CHECK(j.at("total_elements") == 54);
    const Invocation staged = invoke({"plan-recompute", "--n", "4", "--l", "30", "--stage-layers", "6"});
    CHECK(nlohmann::json::parse(staged.out).at("L_r") == 6);
}

TEST_CASE("exit codes") {
    CHECK(invoke({"cost-model", "--c", "8", "--bogus"}).code == 1);
    CHECK(invoke({"cost-model"}).code == 1);
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"cost-model", "--c", "0"}).code == 1);
    const Invocation missing = invoke({"analyze", "--checkpoint", "/nonexistent/checkpoint.json"});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("not found") != std::string::npos);
    CHECK(invoke({"train", "--n", "0"}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("grad check command") {
    const Invocation r = invoke({"grad-check", "--c", "6", "--l", "2", "--tokens", "2"});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).at("passed") == true);
}

TEST_CASE("train and analyze round trip") {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "mhc_cli_train";
    fs::remove_all(root);
    const Invocation t = invoke({"train", "--c", "8", "--l", "2", "--n", "2", "--steps", "5", "--batch-size", "4",
                                 "--out", root.string(), "--compare-baseline"});
    REQUIRE(t.code == 0);
    REQUIRE(t.out.rfind("run ", 0) == 0);
    const std::string dir = t.out.substr(4, t.out.find('\n') - 4);
    CHECK(fs::exists(fs::path(dir) / "loss_gap.csv"));

    const Invocation a = invoke({"analyze", "--checkpoint", (fs::path(dir) / "checkpoint.json").string(), "--out",
                                 (root / "analysis").string()});
    CHECK(a.code == 0);
    CHECK(fs::exists(root / "analysis" / "heatmaps.json"));

    const Invocation demo = invoke({"analyze", "--demo", "divergence", "--out", (root / "demo").string()});
    CHECK(demo.code == 0);
    CHECK(fs::exists(root / "demo" / "projected_gains.csv"));
    fs::remove_all(root);
}

TEST_CASE("sinkhorn check command") {
    const Invocation r = invoke({"sinkhorn-check", "--trials", "50", "--grad-trials", "5", "--lo", "-1.5", "--hi", "1.5"});
    REQUIRE(r.code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("max_col_dev").get<double>() <= 1e-3);
}

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

#include "mhc/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mhc::harness {

std::string_view
to_string(TaskKind t) {
    return t == TaskKind::CharSequence ? "char-sequence" : "synthetic-regression";
}

TaskKind
parse_task(std::string_view s) {
    if (s == "synthetic-regression") return TaskKind::SyntheticRegression;
    if (s == "char-sequence") return TaskKind::CharSequence;
    throw ValidationError("unknown task '" + std::string(s) + "'");
}

void
ExperimentConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) {
            throw ValidationError(std::string(name) + " must be positive");
        }
    };
    positive(n, "n");
    positive(width, "C");
    positive(depth, "L");
    positive(batch_size, "batch_size");
    positive(log_every, "log_every");
    if (t_max < 1) {
        throw ValidationError("sinkhorn t_max must be at least 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError("learning_rate must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw ValidationError("momentum must lie in [0, 1)");
    }
    if (!(layer_scale >= 0.0) || !std::isfinite(layer_scale)) {
        throw ValidationError("layer_scale must be non-negative");
    }
    if (!(ds_col_tolerance > 0.0)) {
        throw ValidationError("ds_col_tolerance must be positive");
    }
}

nlohmann::json
config_to_json(const ExperimentConfig& c) {
    return {
        {"variant", std::string(to_string(c.variant))},
        {"n", c.n},
        {"C", c.width},
        {"L", c.depth},
        {"layer_function", std::string(to_string(c.layer_kind))},
        {"sinkhorn_t_max", c.t_max},
        {"init_policy", std::string(to_string(c.init_policy))},
        {"learning_rate", c.learning_rate},
        {"momentum", c.momentum},
        {"steps", c.steps},
        {"batch_size", c.batch_size},
        {"task", std::string(to_string(c.task))},
        {"seed", c.seed},
        {"log_every", c.log_every},
        {"use_res", c.mask.use_res},
        {"use_pre", c.mask.use_pre},
        {"use_post", c.mask.use_post},
        {"layer_scale", c.layer_scale},
        {"ds_col_tolerance", c.ds_col_tolerance},
    };
}

void
merge_config(ExperimentConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "variant") {
                c.variant = parse_variant(value.get<std::string>());
            } else if (key == "n") {
                c.n = value.get<std::size_t>();
            } else if (key == "C") {
                c.width = value.get<std::size_t>();
            } else if (key == "L") {
                c.depth = value.get<std::size_t>();
            } else if (key == "layer_function") {
                c.layer_kind = parse_layer_kind(value.get<std::string>());
            } else if (key == "sinkhorn_t_max") {
                c.t_max = value.get<int>();
            } else if (key == "init_policy") {
                c.init_policy = parse_init_policy(value.get<std::string>());
            } else if (key == "learning_rate") {
                c.learning_rate = value.get<double>();
            } else if (key == "momentum") {
                c.momentum = value.get<double>();
            } else if (key == "steps") {
                c.steps = value.get<std::size_t>();
            } else if (key == "batch_size") {
                c.batch_size = value.get<std::size_t>();
            } else if (key == "task") {
                c.task = parse_task(value.get<std::string>());
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "log_every") {
                c.log_every = value.get<std::size_t>();
            } else if (key == "use_res") {
                c.mask.use_res = value.get<bool>();
            } else if (key == "use_pre") {
                c.mask.use_pre = value.get<bool>();
            } else if (key == "use_post") {
                c.mask.use_post = value.get<bool>();
            } else if (key == "layer_scale") {
                c.layer_scale = value.get<double>();
            } else if (key == "ds_col_tolerance") {
                c.ds_col_tolerance = value.get<double>();
            } else {
                throw ValidationError("unknown config field '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad config value: ") + e.what());
    } catch (const ValidationError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

ExperimentConfig
config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    merge_config(c, j);
    c.validate();
    return c;
}

std::string
config_hash(const ExperimentConfig& cfg) {
    const std::string canonical = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json
read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void
write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out << contents;
}

}  // namespace mhc::harness

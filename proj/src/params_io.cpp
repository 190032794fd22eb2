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

#include "mhc/params_io.hpp"

namespace mhc {

nlohmann::json
matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()},
            {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix
matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
        throw std::invalid_argument("matrix document needs rows, cols and data");
    }
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

nlohmann::json
mapping_params_to_json(const MappingParams& p) {
    nlohmann::json j;
    j["variant"] = std::string(to_string(p.variant));
    j["n"] = p.n;
    j["C"] = p.width;
    j["alpha_pre"] = p.alpha_pre;
    j["alpha_post"] = p.alpha_post;
    j["alpha_res"] = p.alpha_res;
    j["proj_pre"] = matrix_to_json(p.proj_pre);
    j["proj_post"] = matrix_to_json(p.proj_post);
    j["proj_res"] = matrix_to_json(p.proj_res);
    j["bias_pre"] = matrix_to_json(p.bias_pre);
    j["bias_post"] = matrix_to_json(p.bias_post);
    j["bias_res"] = matrix_to_json(p.bias_res);
    j["sinkhorn_t_max"] = p.sinkhorn.t_max;
    j["sinkhorn_overflow_guard"] = p.sinkhorn.overflow_guard;
    return j;
}

MappingParams
mapping_params_from_json(const nlohmann::json& j) {
    try {
        MappingParams p;
        p.variant = parse_variant(j.at("variant").get<std::string>());
        p.n = j.at("n").get<std::size_t>();
        p.width = j.at("C").get<std::size_t>();
        p.alpha_pre = j.at("alpha_pre").get<double>();
        p.alpha_post = j.at("alpha_post").get<double>();
        p.alpha_res = j.at("alpha_res").get<double>();
        p.proj_pre = matrix_from_json(j.at("proj_pre"));
        p.proj_post = matrix_from_json(j.at("proj_post"));
        p.proj_res = matrix_from_json(j.at("proj_res"));
        p.bias_pre = matrix_from_json(j.at("bias_pre"));
        p.bias_post = matrix_from_json(j.at("bias_post"));
        p.bias_res = matrix_from_json(j.at("bias_res"));
        p.sinkhorn.t_max = j.value("sinkhorn_t_max", 20);
        p.sinkhorn.overflow_guard = j.value("sinkhorn_overflow_guard", true);
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed mapping params: ") + e.what());
    }
}

}  // namespace mhc

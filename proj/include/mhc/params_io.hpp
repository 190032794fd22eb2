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

#include <json.hpp>

#include "mhc/mappings.hpp"
#include "mhc/matrix.hpp"

namespace mhc {

// Matrices serialize as {"rows": r, "cols": c, "data": [row-major values]}.
nlohmann::json
matrix_to_json(const Matrix& m);
Matrix
matrix_from_json(const nlohmann::json& j);

/// Flat document whose field names mirror MappingParams.
nlohmann::json
mapping_params_to_json(const MappingParams& p);
/// Throws std::invalid_argument or ShapeError on malformed documents.
MappingParams
mapping_params_from_json(const nlohmann::json& j);

}  // namespace mhc

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

#include "mhc/matrix.hpp"

namespace mhc {

/// The n x C hidden matrix carried along the residual stream for one token.
class StreamState {
public:
    StreamState() = default;
    explicit StreamState(Matrix values) : values_(std::move(values)) {
    }
    StreamState(std::size_t n, std::size_t width) : values_(n, width) {
    }

    std::size_t
    n() const noexcept {
        return values_.rows();
    }
    std::size_t
    width() const noexcept {
        return values_.cols();
    }
    const Matrix&
    values() const noexcept {
        return values_;
    }
    Matrix&
    values() noexcept {
        return values_;
    }
    /// Row-major flattening to 1 x nC.
    Matrix
    flattened() const {
        return values_.reshaped(1, values_.size());
    }

    friend bool
    operator==(const StreamState&, const StreamState&) = default;

private:
    Matrix values_;
};

}  // namespace mhc

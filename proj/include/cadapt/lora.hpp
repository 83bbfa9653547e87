// Copyright 2026 The cadapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <utility>

#include "cadapt/matrix.hpp"
#include "cadapt/rng.hpp"

namespace cadapt {

/// Additive low-rank baseline: ΔW = α · W_up · W_down.
struct LoraParams {
    Matrix w_up;    ///< d_O × rank
    Matrix w_down;  ///< rank × d_I
    double alpha = 1.0;

    std::size_t rank() const { return w_up.cols(); }
};

/// W_down Gaussian (std 0.02), W_up zero, so ΔW starts at zero and the
/// adapted model starts at the frozen baseline.
inline LoraParams lora_init(std::size_t d_out, std::size_t d_in, std::size_t rank,
                            double alpha, Rng &rng) {
    LoraParams p;
    p.w_up = Matrix(d_out, rank, 0.0);
    p.w_down = rng.gaussian_matrix(rank, d_in, 0.02);
    p.alpha = alpha;
    return p;
}

inline Matrix lora_delta(const LoraParams &p) {
    if (p.w_up.cols() != p.w_down.rows())
        throw std::invalid_argument("lora_delta: inner dimensions disagree");
    return p.alpha * (p.w_up * p.w_down);
}

/// Cotangent on ΔW pulled back to (W_up, W_down).
inline std::pair<Matrix, Matrix> lora_pullback(const LoraParams &p, const Matrix &gbar) {
    Matrix up_bar = p.alpha * (gbar * p.w_down.transposed());
    Matrix down_bar = p.alpha * (p.w_up.transposed() * gbar);
    return {std::move(up_bar), std::move(down_bar)};
}

}  // namespace cadapt

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

#include <cmath>

#include "cadapt/linalg.hpp"
#include "cadapt/matrix.hpp"

namespace cadapt {

/// Skew-symmetric part ½(P − Pᵀ). The diagonal is written as exact zero and
/// the triangles as exact negations of each other.
inline Matrix skew(const Matrix &p) {
    if (!p.square()) throw std::invalid_argument("skew: non-square");
    const std::size_t n = p.rows();
    Matrix q(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (p(i, j) - p(j, i));
            q(i, j) = v;
            q(j, i) = -v;
        }
    }
    return q;
}

/// Cayley transform (I + Q)(I − Q)⁻¹ of Q = ½(P − Pᵀ), an element of SO(n).
/// (I + Q) and (I − Q) commute, so a single solve suffices.
inline Matrix cayley(const Matrix &p) {
    const Matrix q = skew(p);
    const std::size_t n = q.rows();
    Matrix plus = Matrix::identity(n);
    Matrix minus = Matrix::identity(n);
    plus += q;
    minus -= q;
    return Lu(std::move(minus)).solve(plus);
}

/// Vector-Jacobian product of the Cayley transform at P.
///
/// With M = I − Q and A = M⁻¹(I + Q):  dA = M⁻¹ dQ (A + I), hence
/// Q̄ = M⁻ᵀ Ḡ (A + I)ᵀ and P̄ is its skew projection.
inline Matrix cayley_vjp(const Matrix &p, const Matrix &gbar) {
    if (!p.square() || gbar.rows() != p.rows() || gbar.cols() != p.cols())
        throw std::invalid_argument("cayley_vjp: shape mismatch");
    const Matrix q = skew(p);
    const std::size_t n = q.rows();
    Matrix minus_t = Matrix::identity(n);
    minus_t += q;  // (I − Q)ᵀ = I + Q for skew Q
    const Matrix a = cayley(p);
    Matrix a_plus_i = a;
    a_plus_i += Matrix::identity(n);
    const Matrix qbar = Lu(std::move(minus_t)).solve(gbar) * a_plus_i.transposed();
    Matrix pbar(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (qbar(i, j) - qbar(j, i));
            pbar(i, j) = v;
            pbar(j, i) = -v;
        }
    return pbar;
}

/// True iff ‖MᵀM − I‖_max <= tol.
inline bool is_orthogonal(const Matrix &m, double tol) {
    if (!m.square()) throw std::invalid_argument("is_orthogonal: non-square");
    if (tol <= 0.0) throw std::invalid_argument("is_orthogonal: tol must be positive");
    return orthogonality_defect(m) <= tol;
}

}  // namespace cadapt

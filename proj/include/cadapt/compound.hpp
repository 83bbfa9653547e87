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

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "cadapt/linalg.hpp"
#include "cadapt/matrix.hpp"
#include "cadapt/subsets.hpp"

namespace cadapt {

/// Operation applied to each (I, J) minor when expanding a base matrix into
/// its order-k image: determinant (the true compound) or the element-wise
/// max / average ablation variants.
enum class MinorOp { comp, max, avg };

inline const char *to_string(MinorOp op) {
    switch (op) {
        case MinorOp::comp: return "comp";
        case MinorOp::max: return "max";
        default: return "avg";
    }
}

inline MinorOp minor_op_from_string(const std::string &s) {
    if (s == "comp") return MinorOp::comp;
    if (s == "max") return MinorOp::max;
    if (s == "avg") return MinorOp::avg;
    throw std::invalid_argument("unknown minor op: " + s);
}

/// Submatrix of rows I, columns J, order preserved.
inline Matrix minor_of(const Matrix &a, std::span<const unsigned> rows,
                       std::span<const unsigned> cols) {
    if (rows.size() != cols.size())
        throw std::invalid_argument("minor_of: |I| != |J|");
    for (unsigned r : rows)
        if (r >= a.rows()) throw std::invalid_argument("minor_of: row index out of range");
    for (unsigned c : cols)
        if (c >= a.cols()) throw std::invalid_argument("minor_of: column index out of range");
    Matrix m(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = a(rows[i], cols[j]);
    return m;
}

namespace detail {

// Determinants of the small minors are expanded explicitly; anything larger
// falls back to pivoted LU.
inline double det_small(const Matrix &m) {
    switch (m.rows()) {
        case 0: return 1.0;
        case 1: return m(0, 0);
        case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        case 3:
            return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                   m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                   m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        case 4: {
            // Expansion along the first row with 3x3 cofactors.
            double d = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                Matrix sub(3, 3);
                for (std::size_t r = 1; r < 4; ++r) {
                    std::size_t cc = 0;
                    for (std::size_t c2 = 0; c2 < 4; ++c2) {
                        if (c2 == c) continue;
                        sub(r - 1, cc++) = m(r, c2);
                    }
                }
                const double cof = det_small(sub);
                d += ((c % 2) ? -1.0 : 1.0) * m(0, c) * cof;
            }
            return d;
        }
        default: return Lu(m).det();
    }
}

// Cofactor matrix: cof(i,j) = (-1)^{i+j} det(M with row i, column j removed).
// d det(M) / dM = cof(M); valid at singular M, unlike det(M)·M^{-T}.
inline Matrix cofactor_matrix(const Matrix &m) {
    const std::size_t k = m.rows();
    Matrix cof(k, k);
    if (k == 1) {
        cof(0, 0) = 1.0;
        return cof;
    }
    Matrix sub(k - 1, k - 1);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t rr = 0;
            for (std::size_t r = 0; r < k; ++r) {
                if (r == i) continue;
                std::size_t cc = 0;
                for (std::size_t c = 0; c < k; ++c) {
                    if (c == j) continue;
                    sub(rr, cc++) = m(r, c);
                }
                ++rr;
            }
            cof(i, j) = (((i + j) % 2) ? -1.0 : 1.0) * det_small(sub);
        }
    }
    return cof;
}

}  // namespace detail

/// Order-k image of a base matrix over the lexicographic subset basis.
struct CompoundMatrix {
    unsigned order = 1;
    unsigned base_dim = 0;
    MinorOp op = MinorOp::comp;
    Matrix entries;
};

/// Entry (rank(I), rank(J)) is det / max / mean of the (I, J) minor of A.
/// Order 1 reproduces A exactly for every op.
inline CompoundMatrix compound(const Matrix &a, unsigned k, MinorOp op = MinorOp::comp) {
    if (!a.square()) throw std::invalid_argument("compound: non-square base");
    const unsigned n = static_cast<unsigned>(a.rows());
    if (k == 0 || k > n) throw std::invalid_argument("compound: require 1 <= k <= n");
    const SubsetBasis basis = SubsetBasis::make(n, k);
    const std::size_t dim = basis.size();
    CompoundMatrix out{k, n, op, Matrix(dim, dim)};
    Matrix m(k, k);
    for (std::size_t ri = 0; ri < dim; ++ri) {
        const auto &rows = basis.unrank(ri);
        for (std::size_t rj = 0; rj < dim; ++rj) {
            const auto &cols = basis.unrank(rj);
            for (unsigned i = 0; i < k; ++i)
                for (unsigned j = 0; j < k; ++j) m(i, j) = a(rows[i], cols[j]);
            double v;
            switch (op) {
                case MinorOp::comp: v = detail::det_small(m); break;
                case MinorOp::max: {
                    v = m.data()[0];
                    for (std::size_t t = 1; t < m.size(); ++t) v = std::max(v, m.data()[t]);
                    break;
                }
                default: {
                    double s = 0.0;
                    for (std::size_t t = 0; t < m.size(); ++t) s += m.data()[t];
                    v = s / static_cast<double>(m.size());
                    break;
                }
            }
            out.entries(ri, rj) = v;
        }
    }
    return out;
}

/// Pullback of <gbar, compound(A, k, op)> to the base matrix.
///
/// For the determinant op this uses the cofactor (adjugate) form of Jacobi's
/// rule, which stays exact at singular minors. max routes the cotangent to
/// the winning entry, first row-major position on ties; avg spreads it
/// uniformly.
inline Matrix compound_pullback(const Matrix &a, unsigned k, MinorOp op, const Matrix &gbar) {
    if (!a.square()) throw std::invalid_argument("compound_pullback: non-square base");
    const unsigned n = static_cast<unsigned>(a.rows());
    if (k == 0 || k > n) throw std::invalid_argument("compound_pullback: require 1 <= k <= n");
    const SubsetBasis basis = SubsetBasis::make(n, k);
    const std::size_t dim = basis.size();
    if (gbar.rows() != dim || gbar.cols() != dim)
        throw std::invalid_argument("compound_pullback: cotangent shape mismatch");
    Matrix abar(n, n, 0.0);
    Matrix m(k, k);
    for (std::size_t ri = 0; ri < dim; ++ri) {
        const auto &rows = basis.unrank(ri);
        for (std::size_t rj = 0; rj < dim; ++rj) {
            const double g = gbar(ri, rj);
            if (g == 0.0) continue;
            const auto &cols = basis.unrank(rj);
            for (unsigned i = 0; i < k; ++i)
                for (unsigned j = 0; j < k; ++j) m(i, j) = a(rows[i], cols[j]);
            switch (op) {
                case MinorOp::comp: {
                    const Matrix cof = detail::cofactor_matrix(m);
                    for (unsigned i = 0; i < k; ++i)
                        for (unsigned j = 0; j < k; ++j) abar(rows[i], cols[j]) += g * cof(i, j);
                    break;
                }
                case MinorOp::max: {
                    unsigned bi = 0, bj = 0;
                    double best = m(0, 0);
                    for (unsigned i = 0; i < k; ++i)
                        for (unsigned j = 0; j < k; ++j)
                            if (m(i, j) > best) { best = m(i, j); bi = i; bj = j; }
                    abar(rows[bi], cols[bj]) += g;
                    break;
                }
                default: {
                    const double w = g / static_cast<double>(k * k);
                    for (unsigned i = 0; i < k; ++i)
                        for (unsigned j = 0; j < k; ++j) abar(rows[i], cols[j]) += w;
                    break;
                }
            }
        }
    }
    return abar;
}

/// Determinant-op pullback; the op lives in the forward map, so this is the
/// vector-Jacobian product of the true compound.
inline Matrix compound_vjp(const Matrix &a, unsigned k, const Matrix &gbar) {
    return compound_pullback(a, k, MinorOp::comp, gbar);
}

}  // namespace cadapt

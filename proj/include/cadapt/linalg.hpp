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
#include <cstddef>
#include <vector>

#include "cadapt/errors.hpp"
#include "cadapt/matrix.hpp"

namespace cadapt {

/// LU factorization with partial pivoting. Kept around for repeated solves
/// against the same left-hand side.
class Lu {
  public:
    explicit Lu(Matrix a) : lu_(std::move(a)), piv_(lu_.rows()), sign_(1.0) {
        if (!lu_.square()) throw std::invalid_argument("Lu: non-square matrix");
        const std::size_t n = lu_.rows();
        for (std::size_t i = 0; i < n; ++i) piv_[i] = i;
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t p = col;
            double best = std::fabs(lu_(col, col));
            for (std::size_t r = col + 1; r < n; ++r) {
                const double v = std::fabs(lu_(r, col));
                if (v > best) { best = v; p = r; }
            }
            if (p != col) {
                for (std::size_t c = 0; c < n; ++c) std::swap(lu_(p, c), lu_(col, c));
                std::swap(piv_[p], piv_[col]);
                sign_ = -sign_;
            }
            const double d = lu_(col, col);
            if (d == 0.0) { singular_ = true; continue; }
            for (std::size_t r = col + 1; r < n; ++r) {
                const double f = lu_(r, col) / d;
                lu_(r, col) = f;
                for (std::size_t c = col + 1; c < n; ++c) lu_(r, c) -= f * lu_(col, c);
            }
        }
    }

    bool singular() const { return singular_; }

    double det() const {
        double d = sign_;
        for (std::size_t i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
        return d;
    }

    /// Solves A·X = B column by column.
    Matrix solve(const Matrix &b) const {
        const std::size_t n = lu_.rows();
        if (b.rows() != n) throw std::invalid_argument("Lu::solve: shape mismatch");
        if (singular_) throw NumericalError("Lu::solve: singular matrix");
        Matrix x(n, b.cols());
        std::vector<double> y(n);
        for (std::size_t col = 0; col < b.cols(); ++col) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = b(piv_[i], col);
                for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * y[j];
                y[i] = s;
            }
            for (std::size_t ii = n; ii-- > 0;) {
                double s = y[ii];
                for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * y[j];
                y[ii] = s / lu_(ii, ii);
            }
            for (std::size_t i = 0; i < n; ++i) x(i, col) = y[i];
        }
        return x;
    }

  private:
    Matrix lu_;
    std::vector<std::size_t> piv_;
    double sign_;
    bool singular_ = false;
};

inline Matrix solve(const Matrix &a, const Matrix &b) { return Lu(a).solve(b); }

inline Matrix inverse(const Matrix &a) { return Lu(a).solve(Matrix::identity(a.rows())); }

/// Eigenvalues of a real symmetric matrix, ascending. Householder
/// tridiagonalization followed by implicit-shift QL.
inline std::vector<double> symmetric_eigenvalues(Matrix a) {
    if (!a.square()) throw std::invalid_argument("symmetric_eigenvalues: non-square");
    const std::size_t n = a.rows();
    std::vector<double> d(n, 0.0), e(n, 0.0);
    if (n == 0) return d;

    // Householder reduction (eigenvalues-only variant).
    for (std::size_t i = n - 1; i >= 1; --i) {
        const std::size_t l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = a(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k) a(j, k) -= f * e[k] + g * a(i, k);
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);

    // Implicit QL with shifts on the tridiagonal (d, e).
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= 1e-300 + dd * 1e-16) break;
            }
            if (m != l) {
                if (iter++ == 60)
                    throw NumericalError("symmetric_eigenvalues: QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (std::size_t i = m; i-- > l;) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    std::sort(d.begin(), d.end());
    return d;
}

/// Singular values, descending, via the eigenvalues of MᵀM.
inline std::vector<double> singular_values(const Matrix &m) {
    Matrix gram(m.cols(), m.cols());
    for (std::size_t i = 0; i < m.cols(); ++i)
        for (std::size_t j = i; j < m.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.rows(); ++k) s += m(k, i) * m(k, j);
            gram(i, j) = gram(j, i) = s;
        }
    auto eig = symmetric_eigenvalues(std::move(gram));
    std::vector<double> sv(eig.size());
    for (std::size_t i = 0; i < eig.size(); ++i)
        sv[i] = std::sqrt(std::max(0.0, eig[eig.size() - 1 - i]));
    return sv;
}

}  // namespace cadapt

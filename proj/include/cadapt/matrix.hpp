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
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace cadapt {

/// Dense row-major matrix. Everything at desk scale stays dense.
template <class T>
class MatrixT {
  public:
    MatrixT() = default;
    MatrixT(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    MatrixT(std::initializer_list<std::initializer_list<T>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto &row : init) {
            if (row.size() != cols_)
                throw std::invalid_argument("MatrixT: ragged initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static MatrixT identity(std::size_t n) {
        MatrixT m(n, n, T{});
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool square() const { return rows_ == cols_; }

    T &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T &operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T *data() { return data_.data(); }
    const T *data() const { return data_.data(); }

    MatrixT transposed() const {
        MatrixT t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    MatrixT block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_)
            throw std::invalid_argument("MatrixT::block: out of range");
        MatrixT b(nr, nc);
        for (std::size_t r = 0; r < nr; ++r)
            for (std::size_t c = 0; c < nc; ++c) b(r, c) = (*this)(r0 + r, c0 + c);
        return b;
    }

    void set_block(std::size_t r0, std::size_t c0, const MatrixT &b) {
        if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
            throw std::invalid_argument("MatrixT::set_block: out of range");
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t c = 0; c < b.cols(); ++c) (*this)(r0 + r, c0 + c) = b(r, c);
    }

    MatrixT &operator+=(const MatrixT &o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    MatrixT &operator-=(const MatrixT &o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    MatrixT &operator*=(T s) {
        for (auto &v : data_) v *= s;
        return *this;
    }

    friend MatrixT operator+(MatrixT a, const MatrixT &b) { return a += b; }
    friend MatrixT operator-(MatrixT a, const MatrixT &b) { return a -= b; }
    friend MatrixT operator*(MatrixT a, T s) { return a *= s; }
    friend MatrixT operator*(T s, MatrixT a) { return a *= s; }

    friend MatrixT operator*(const MatrixT &a, const MatrixT &b) {
        if (a.cols_ != b.rows_)
            throw std::invalid_argument("MatrixT: inner dimensions disagree");
        MatrixT c(a.rows_, b.cols_, T{});
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T aik = a(i, k);
                if (aik == T{}) continue;
                const T *brow = b.data_.data() + k * b.cols_;
                T *crow = c.data_.data() + i * b.cols_;
                for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
            }
        }
        return c;
    }

    bool operator==(const MatrixT &o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

  private:
    void check_same_shape(const MatrixT &o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw std::invalid_argument("MatrixT: shape mismatch");
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

using Matrix = MatrixT<double>;

inline double max_abs(const Matrix &m) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) v = std::max(v, std::fabs(m.data()[i]));
    return v;
}

inline double max_abs_diff(const Matrix &a, const Matrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        v = std::max(v, std::fabs(a.data()[i] - b.data()[i]));
    return v;
}

inline double frobenius_norm(const Matrix &m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m.data()[i] * m.data()[i];
    return std::sqrt(s);
}

/// <A, B> in the Frobenius inner product.
inline double dot(const Matrix &a, const Matrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

/// ‖MᵀM − I‖_max, the working measure of orthogonality defect.
inline double orthogonality_defect(const Matrix &m) {
    if (!m.square()) throw std::invalid_argument("orthogonality_defect: non-square");
    const std::size_t n = m.rows();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double g = 0.0;
            for (std::size_t k = 0; k < n; ++k) g += m(k, i) * m(k, j);
            worst = std::max(worst, std::fabs(g - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

}  // namespace cadapt

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

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace cadapt {

/// Exact binomial coefficient; 0 when k > n.
inline std::uint64_t binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t r = 1;
    for (unsigned i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;  // exact: r*(n-k+i) is divisible by i here
    }
    return r;
}

/// All size-k subsets of {0..n-1} as strictly increasing index tuples in
/// lexicographic order. This ordering is the single source of truth for how
/// compound-matrix rows/columns and fixed-weight basis states are indexed.
class SubsetBasis {
  public:
    /// Internal factory; accepts k == 0 (one empty subset) for the
    /// weight-0 sector of the circuit simulator.
    static SubsetBasis make(unsigned n, unsigned k) {
        if (k > n) throw std::invalid_argument("SubsetBasis: k > n");
        SubsetBasis b;
        b.n_ = n;
        b.k_ = k;
        std::vector<unsigned> cur(k);
        for (unsigned i = 0; i < k; ++i) cur[i] = i;
        const std::uint64_t total = binomial(n, k);
        b.subsets_.reserve(total);
        for (std::uint64_t c = 0; c < total; ++c) {
            b.subsets_.push_back(cur);
            // Advance to the lexicographic successor.
            for (unsigned i = k; i-- > 0;) {
                if (cur[i] < n - k + i) {
                    ++cur[i];
                    for (unsigned j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
                    break;
                }
            }
        }
        return b;
    }

    unsigned n() const { return n_; }
    unsigned k() const { return k_; }
    std::size_t size() const { return subsets_.size(); }
    const std::vector<std::vector<unsigned>> &subsets() const { return subsets_; }

    const std::vector<unsigned> &unrank(std::size_t r) const {
        if (r >= subsets_.size()) throw std::out_of_range("SubsetBasis::unrank");
        return subsets_[r];
    }

    /// Lexicographic rank of a strictly increasing tuple, computed
    /// combinatorially (no table lookup).
    std::size_t rank(std::span<const unsigned> subset) const {
        if (subset.size() != k_) throw std::invalid_argument("SubsetBasis::rank: wrong size");
        std::size_t r = 0;
        unsigned lo = 0;
        for (unsigned i = 0; i < k_; ++i) {
            const unsigned s = subset[i];
            if (s >= n_ || (i > 0 && s <= subset[i - 1]))
                throw std::invalid_argument("SubsetBasis::rank: not strictly increasing in range");
            for (unsigned j = lo; j < s; ++j) r += binomial(n_ - 1 - j, k_ - 1 - i);
            lo = s + 1;
        }
        return r;
    }

  private:
    unsigned n_ = 0, k_ = 0;
    std::vector<std::vector<unsigned>> subsets_;
};

/// Public enumeration as used by compound construction; rejects k == 0.
inline SubsetBasis enumerate_subsets(unsigned n, unsigned k) {
    if (k == 0 || k > n)
        throw std::invalid_argument("enumerate_subsets: require 0 < k <= n");
    return SubsetBasis::make(n, k);
}

}  // namespace cadapt

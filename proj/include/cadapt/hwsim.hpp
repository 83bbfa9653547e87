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
#include <string>
#include <vector>

#include "cadapt/matrix.hpp"
#include "cadapt/subsets.hpp"

namespace cadapt {

/// Real amplitude vector over a union of fixed Hamming-weight sectors of n
/// qubits. Only the populated sectors are stored; weight conservation of the
/// beam-splitter gates is then exact by construction.
///
/// Basis convention: within weight k, states are ordered by the lexicographic
/// order of their one-position tuples (SubsetBasis). Bitstrings print with
/// qubit 0 as the leftmost character.
class HWState {
  public:
    HWState(unsigned n, std::vector<unsigned> weights) : n_(n) {
        std::sort(weights.begin(), weights.end());
        weights.erase(std::unique(weights.begin(), weights.end()), weights.end());
        std::size_t off = 0;
        for (unsigned k : weights) {
            if (k > n) throw std::invalid_argument("HWState: weight exceeds qubit count");
            sectors_.push_back(Sector{k, SubsetBasis::make(n, k), off});
            off += sectors_.back().basis.size();
        }
        amps_.assign(off, 0.0);
    }

    unsigned num_qubits() const { return n_; }
    std::size_t dim() const { return amps_.size(); }
    std::vector<double> &amplitudes() { return amps_; }
    const std::vector<double> &amplitudes() const { return amps_; }

    std::vector<unsigned> weights() const {
        std::vector<unsigned> w;
        for (const auto &s : sectors_) w.push_back(s.weight);
        return w;
    }

    bool has_weight(unsigned k) const { return find_sector(k) != nullptr; }

    std::size_t sector_offset(unsigned k) const { return require_sector(k).offset; }
    std::size_t sector_dim(unsigned k) const { return require_sector(k).basis.size(); }
    const SubsetBasis &sector_basis(unsigned k) const { return require_sector(k).basis; }

    double &amp(unsigned k, std::size_t rank) { return amps_[require_sector(k).offset + rank]; }
    double amp(unsigned k, std::size_t rank) const {
        return amps_[require_sector(k).offset + rank];
    }

    double norm() const {
        double s = 0.0;
        for (double a : amps_) s += a * a;
        return std::sqrt(s);
    }

    /// Total probability carried by one weight sector.
    double sector_probability(unsigned k) const {
        const Sector &s = require_sector(k);
        double p = 0.0;
        for (std::size_t i = 0; i < s.basis.size(); ++i)
            p += amps_[s.offset + i] * amps_[s.offset + i];
        return p;
    }

    void normalize() {
        const double nrm = norm();
        if (nrm == 0.0) throw std::invalid_argument("HWState: cannot normalize zero state");
        for (double &a : amps_) a /= nrm;
    }

    struct Sector {
        unsigned weight;
        SubsetBasis basis;
        std::size_t offset;
    };
    const std::vector<Sector> &sectors() const { return sectors_; }

  private:
    const Sector *find_sector(unsigned k) const {
        for (const auto &s : sectors_)
            if (s.weight == k) return &s;
        return nullptr;
    }
    const Sector &require_sector(unsigned k) const {
        const Sector *s = find_sector(k);
        if (!s) throw std::invalid_argument("HWState: weight sector not present");
        return *s;
    }

    unsigned n_;
    std::vector<Sector> sectors_;
    std::vector<double> amps_;
};

/// Weight-k bitstrings in basis order; qubit 0 is the leftmost character.
inline std::vector<std::string> hw_basis(unsigned n, unsigned k) {
    if (k > n) throw std::invalid_argument("hw_basis: k > n");
    const SubsetBasis basis = SubsetBasis::make(n, k);
    std::vector<std::string> out;
    out.reserve(basis.size());
    for (const auto &subset : basis.subsets()) {
        std::string s(n, '0');
        for (unsigned pos : subset) s[pos] = '1';
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

// Shared two-qubit beam-splitter kernel. For each basis pair related by
// moving the excitation between qubits i and j, rotates amplitudes by the
// middle block [[cos, sin], [-sin, cos]] with the |0_i 1_j> state in the
// first slot. `fermionic` flips the angle sign when the occupation parity
// strictly between the two qubits is odd.
inline HWState apply_beam_splitter(const HWState &state, unsigned i, unsigned j, double theta,
                                   bool fermionic) {
    const unsigned n = state.num_qubits();
    if (i == j || i >= n || j >= n)
        throw std::invalid_argument("beam splitter: qubits must be distinct and in range");
    const unsigned lo = std::min(i, j), hi = std::max(i, j);
    HWState out = state;
    const double c = std::cos(theta), s = std::sin(theta);
    for (const auto &sector : state.sectors()) {
        const SubsetBasis &basis = sector.basis;
        std::vector<unsigned> partner(sector.weight);
        for (std::size_t r = 0; r < basis.size(); ++r) {
            const auto &subset = basis.unrank(r);
            const bool has_i = std::binary_search(subset.begin(), subset.end(), i);
            const bool has_j = std::binary_search(subset.begin(), subset.end(), j);
            if (has_i || !has_j) continue;  // process each pair once, from its |0_i 1_j> member
            // Partner: same subset with j replaced by i.
            partner.clear();
            for (unsigned pos : subset) partner.push_back(pos == j ? i : pos);
            std::sort(partner.begin(), partner.end());
            const std::size_t pr = basis.rank(partner);
            double angle_c = c, angle_s = s;
            if (fermionic) {
                unsigned between = 0;
                for (unsigned pos : subset)
                    if (pos > lo && pos < hi) ++between;
                if (between % 2 == 1) angle_s = -s;
            }
            const double a01 = state.amplitudes()[sector.offset + r];
            const double a10 = state.amplitudes()[sector.offset + pr];
            out.amplitudes()[sector.offset + r] = angle_c * a01 + angle_s * a10;
            out.amplitudes()[sector.offset + pr] = -angle_s * a01 + angle_c * a10;
        }
    }
    return out;
}

}  // namespace detail

/// Reconfigurable beam splitter: a Givens rotation on the |01⟩/|10⟩ pair of
/// qubits (i, j). Hamming weight and norm are conserved exactly.
inline HWState apply_rbs(const HWState &state, unsigned i, unsigned j, double theta) {
    return detail::apply_beam_splitter(state, i, j, theta, false);
}

/// Fermionic beam splitter: acts as RBS(θ) when the occupation parity
/// strictly between the endpoints is even and as RBS(−θ) when odd. The gate
/// is symmetric in its endpoints; FBS(i, j) == FBS(j, i).
inline HWState apply_fbs(const HWState &state, unsigned i, unsigned j, double theta) {
    return detail::apply_beam_splitter(state, std::min(i, j), std::max(i, j), theta, true);
}

/// State with amplitude 1 on a single weight-k basis element.
inline HWState basis_state(unsigned n, unsigned k, std::size_t rank) {
    HWState st(n, {k});
    st.amp(k, rank) = 1.0;
    return st;
}

/// Direct amplitude injection of x into the weight-k sector, normalized.
inline HWState hw_k_load(const std::vector<double> &x, unsigned n, unsigned k) {
    const std::uint64_t want = binomial(n, k);
    if (x.size() != want)
        throw std::invalid_argument("hw_k_load: expected length C(n,k) = " + std::to_string(want));
    HWState st(n, {k});
    for (std::size_t i = 0; i < x.size(); ++i) st.amp(k, i) = x[i];
    st.normalize();
    return st;
}

/// Concatenates per-weight payloads, then normalizes globally.
inline HWState hw_load_multi(unsigned n,
                             const std::vector<std::pair<unsigned, std::vector<double>>> &parts) {
    std::vector<unsigned> weights;
    for (const auto &[k, x] : parts) {
        if (x.size() != binomial(n, k))
            throw std::invalid_argument("hw_load_multi: sector length mismatch");
        weights.push_back(k);
    }
    HWState st(n, weights);
    for (const auto &[k, x] : parts)
        for (std::size_t i = 0; i < x.size(); ++i) st.amp(k, i) = x[i];
    st.normalize();
    return st;
}

}  // namespace cadapt

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
#include <cstdint>
#include <string>
#include <vector>

#include "cadapt/compound.hpp"
#include "cadapt/errors.hpp"
#include "cadapt/hwsim.hpp"
#include "cadapt/matrix.hpp"

namespace cadapt {

enum class LayoutKind { pyramid, butterfly, custom };

inline const char *to_string(LayoutKind k) {
    switch (k) {
        case LayoutKind::pyramid: return "pyramid";
        case LayoutKind::butterfly: return "butterfly";
        default: return "custom";
    }
}

/// Ordered gate list: (i, j, angle index). Gates are applied to states in
/// list order, first triplet first.
struct CircuitLayout {
    unsigned n = 0;
    LayoutKind kind = LayoutKind::custom;
    struct Gate {
        unsigned i, j, angle;
    };
    std::vector<Gate> gates;

    unsigned num_angles() const {
        unsigned m = 0;
        for (const auto &g : gates) m = std::max(m, g.angle + 1);
        return m;
    }

    void validate() const {
        for (const auto &g : gates)
            if (g.i == g.j || g.i >= n || g.j >= n)
                throw ConfigError("CircuitLayout: bad gate (" + std::to_string(g.i) + "," +
                                  std::to_string(g.j) + ")");
    }
};

/// Nearest-neighbour triangle with n(n−1)/2 gates: a full staircase
/// (0,1)...(n−2,n−1), then one gate shorter, down to a single (0,1). This
/// pattern parameterizes all of SO(n).
inline CircuitLayout pyramid_layout(unsigned n) {
    if (n < 2) throw ConfigError("pyramid_layout: need at least 2 qubits");
    CircuitLayout layout;
    layout.n = n;
    layout.kind = LayoutKind::pyramid;
    unsigned angle = 0;
    for (unsigned len = n - 1; len >= 1; --len)
        for (unsigned i = 0; i < len; ++i)
            layout.gates.push_back({i, i + 1, angle++});
    return layout;
}

/// Log-depth stages pairing indices that differ in one bit; (n/2)·log2(n)
/// gates, n a power of two.
inline CircuitLayout butterfly_layout(unsigned n) {
    if (n < 2 || (n & (n - 1)) != 0)
        throw ConfigError("butterfly_layout: qubit count must be a power of two >= 2");
    CircuitLayout layout;
    layout.n = n;
    layout.kind = LayoutKind::butterfly;
    unsigned angle = 0;
    for (unsigned stride = 1; stride < n; stride <<= 1)
        for (unsigned i = 0; i < n; ++i)
            if ((i & stride) == 0) layout.gates.push_back({i, i + stride, angle++});
    return layout;
}

/// Applies the gate sequence with fermionic (FBS) semantics by default.
inline HWState apply_layout(HWState state, const CircuitLayout &layout,
                            const std::vector<double> &theta, bool fermionic = true) {
    layout.validate();
    if (theta.size() < layout.num_angles())
        throw std::invalid_argument("apply_layout: not enough angles");
    for (const auto &g : layout.gates)
        state = fermionic ? apply_fbs(state, g.i, g.j, theta[g.angle])
                          : apply_rbs(state, g.i, g.j, theta[g.angle]);
    return state;
}

/// The n×n orthogonal matrix the layer applies to the weight-1 sector:
/// the ordered product of Givens rotations G(i, j, θ) with G[i][i] = cos,
/// G[i][j] = −sin, G[j][i] = sin, G[j][j] = cos.
inline Matrix layer_unary_matrix(const CircuitLayout &layout, const std::vector<double> &theta) {
    layout.validate();
    if (theta.size() < layout.num_angles())
        throw std::invalid_argument("layer_unary_matrix: not enough angles");
    const unsigned n = layout.n;
    Matrix w = Matrix::identity(n);
    for (const auto &g : layout.gates) {
        const double c = std::cos(theta[g.angle]), s = std::sin(theta[g.angle]);
        // Left-multiply by G(i, j, θ): only rows i and j change.
        for (unsigned col = 0; col < n; ++col) {
            const double ri = w(g.i, col), rj = w(g.j, col);
            w(g.i, col) = c * ri - s * rj;
            w(g.j, col) = s * ri + c * rj;
        }
    }
    return w;
}

/// Simulates the full gate sequence on every weight-k basis state, assembles
/// the sector action M_k, and returns ‖M_k − compound(W, k)‖_max where W is
/// the unary-sector matrix. This is the quantum-native equivalence check:
/// the circuit's action on weight k is exactly the order-k compound.
inline double verify_compound_equivalence(const CircuitLayout &layout,
                                          const std::vector<double> &theta, unsigned k) {
    if (k == 0 || k > layout.n)
        throw std::invalid_argument("verify_compound_equivalence: require 1 <= k <= n");
    const std::size_t dim = static_cast<std::size_t>(binomial(layout.n, k));
    Matrix action(dim, dim);
    for (std::size_t col = 0; col < dim; ++col) {
        const HWState out = apply_layout(basis_state(layout.n, k, col), layout, theta);
        for (std::size_t row = 0; row < dim; ++row) action(row, col) = out.amp(k, row);
    }
    const Matrix reference = compound(layer_unary_matrix(layout, theta), k, MinorOp::comp).entries;
    return max_abs_diff(action, reference);
}

/// Exact gate-cost sum Σ_{k=1..K} k·C(n,k) for stacked fixed-weight loaders;
/// an order-of-magnitude estimate of the CNOT count.
inline std::uint64_t loader_cost(unsigned n, unsigned K) {
    if (K == 0 || K > n) throw std::invalid_argument("loader_cost: require 1 <= K <= n");
    std::uint64_t total = 0;
    for (unsigned k = 1; k <= K; ++k) total += static_cast<std::uint64_t>(k) * binomial(n, k);
    return total;
}

/// Unary amplitude encoder: the weight-1 state x/‖x‖ plus a log-depth binary
/// tree of RBS gates that prepares it from |10…0⟩.
struct UnaryLoader {
    HWState state;
    CircuitLayout circuit;
    std::vector<double> angles;
};

inline UnaryLoader unary_load(const std::vector<double> &x) {
    const unsigned n = static_cast<unsigned>(x.size());
    // A single-qubit loader has no gate to set the sign of the lone
    // amplitude, so the degenerate n = 1 case is rejected outright.
    if (n < 2) throw std::invalid_argument("unary_load: need at least 2 dimensions");
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw std::invalid_argument("unary_load: zero vector");

    UnaryLoader loader{HWState(n, {1}), CircuitLayout{}, {}};
    for (unsigned i = 0; i < n; ++i) loader.state.amp(1, i) = x[i] / nrm;
    loader.circuit.n = n;
    loader.circuit.kind = LayoutKind::custom;

    // Branch target: the signed entry itself for a leaf, the subtree norm
    // otherwise. Internal amplitudes stay non-negative, so the one signed
    // rotation per leaf lands the correct sign.
    auto branch_target = [&x](unsigned lo, unsigned hi) {
        if (hi - lo == 1) return x[lo];
        double s = 0.0;
        for (unsigned i = lo; i < hi; ++i) s += x[i] * x[i];
        return std::sqrt(s);
    };
    // Breadth-first split keeps the tree depth at ceil(log2 n).
    std::vector<std::pair<unsigned, unsigned>> queue{{0, n}};
    unsigned angle = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
        const auto [lo, hi] = queue[q];
        if (hi - lo <= 1) continue;
        const unsigned mid = lo + (hi - lo + 1) / 2;
        const double left = branch_target(lo, mid);
        const double right = branch_target(mid, hi);
        loader.circuit.gates.push_back({lo, mid, angle});
        loader.angles.push_back(std::atan2(right, left));
        ++angle;
        queue.emplace_back(lo, mid);
        queue.emplace_back(mid, hi);
    }
    return loader;
}

/// Runs a unary loader circuit from |10…0⟩.
inline HWState run_unary_loader(const UnaryLoader &loader) {
    return apply_layout(basis_state(loader.circuit.n, 1, 0), loader.circuit, loader.angles);
}

}  // namespace cadapt

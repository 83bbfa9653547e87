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

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cadapt/cayley.hpp"
#include "cadapt/compound.hpp"
#include "cadapt/errors.hpp"
#include "cadapt/matrix.hpp"

namespace cadapt {

/// Experiment tuple for one adapted matrix: which compound orders are
/// present, the minor operation, the block count, orthogonality and
/// block-share switches, and how many adapters are stacked multiplicatively.
///
/// Nomenclature is kept strict: `num_blocks` (r) counts diagonal blocks,
/// `block_size()` (b = d / r) is their side length. The two are never
/// overloaded onto one symbol.
struct AdapterConfig {
    std::size_t d = 0;                  ///< adapted layer dimension
    std::vector<unsigned> orders;       ///< compound orders, ascending, distinct
    MinorOp op = MinorOp::comp;
    std::size_t num_blocks = 1;         ///< r
    int gamma = 0;                      ///< 0 = orthogonality enforced (Cayley), 1 = free
    int beta = 0;                       ///< 1 = one parameter block shared across all r blocks
    std::size_t num_adapters = 1;       ///< m, multiplicative stack depth
    unsigned order_cap = 4;

    std::size_t block_size() const { return num_blocks == 0 ? 0 : d / num_blocks; }

    void validate() const {
        if (d == 0) throw ConfigError("adapter: d must be positive");
        if (num_blocks == 0) throw ConfigError("adapter: block count must be positive");
        if (d % num_blocks != 0)
            throw ConfigError("adapter: block count " + std::to_string(num_blocks) +
                              " does not divide d=" + std::to_string(d));
        if (orders.empty()) throw ConfigError("adapter: empty compound-order set");
        if (order_cap > 4) throw ConfigError("adapter: order cap exceeds supported maximum 4");
        for (std::size_t i = 0; i < orders.size(); ++i) {
            if (orders[i] == 0 || orders[i] > order_cap)
                throw ConfigError("adapter: order out of range: " + std::to_string(orders[i]));
            if (i > 0 && orders[i] <= orders[i - 1])
                throw ConfigError("adapter: orders must be ascending and distinct");
        }
        if (gamma != 0 && gamma != 1) throw ConfigError("adapter: gamma must be 0 or 1");
        if (beta != 0 && beta != 1) throw ConfigError("adapter: beta must be 0 or 1");
        if (num_adapters == 0) throw ConfigError("adapter: need at least one adapter");
    }

    /// Canonical compact echo, e.g. "d=768;r=3;cfg=1+2;op=comp;gamma=0;beta=0;m=1".
    std::string echo() const {
        std::ostringstream os;
        os << "d=" << d << ";r=" << num_blocks << ";cfg=";
        for (std::size_t i = 0; i < orders.size(); ++i) {
            if (i) os << '+';
            os << orders[i];
        }
        os << ";op=" << to_string(op) << ";gamma=" << gamma << ";beta=" << beta
           << ";m=" << num_adapters;
        return os.str();
    }
};

/// Largest base dimension n with Σ_{k in orders} C(n, k) <= b. The result
/// must host every requested order (n >= max k), so a block too small for
/// its order set is a configuration error rather than a silently empty
/// sector.
inline unsigned fit_base_dim(std::size_t b, const std::vector<unsigned> &orders) {
    if (b == 0 || orders.empty())
        throw ConfigError("fit_base_dim: need positive block size and a non-empty order set");
    const unsigned highest = *std::max_element(orders.begin(), orders.end());
    auto width = [&](unsigned n) {
        std::uint64_t s = 0;
        for (unsigned k : orders) s += binomial(n, k);
        return s;
    };
    if (width(highest) > b)
        throw ConfigError("fit_base_dim: block size " + std::to_string(b) +
                          " cannot host compound orders up to " + std::to_string(highest));
    unsigned n = highest;
    while (width(n + 1) <= b) ++n;
    return n;
}

/// Geometry of one adapter block: base dimension, occupied width, identity pad.
struct BlockSpec {
    unsigned n = 0;           ///< base-matrix dimension
    std::size_t d_comp = 0;   ///< Σ C(n, k) over the configured orders
    std::size_t pad = 0;      ///< b − d_comp, filled with identity
};

inline BlockSpec make_block_spec(std::size_t b, const std::vector<unsigned> &orders) {
    BlockSpec spec;
    spec.n = fit_base_dim(b, orders);
    std::uint64_t s = 0;
    for (unsigned k : orders) s += binomial(spec.n, k);
    spec.d_comp = static_cast<std::size_t>(s);
    spec.pad = b - spec.d_comp;
    return spec;
}

/// Trainable parameters of one block: an unconstrained P plus the
/// orthogonality switch. The base matrix A is Cayley(P) when gamma == 0 and
/// P itself when gamma == 1.
struct BaseParams {
    Matrix p;
    int gamma = 0;

    Matrix base_matrix() const { return gamma == 0 ? cayley(p) : p; }
};

/// Identity start: Cayley of zero for gamma == 0; P = I for gamma == 1 so
/// the unconstrained branch also begins at the frozen model.
inline BaseParams init_base_params(unsigned n, int gamma) {
    BaseParams bp;
    bp.gamma = gamma;
    bp.p = (gamma == 0) ? Matrix(n, n, 0.0) : Matrix::identity(n);
    return bp;
}

/// One b×b adapter block: compounds of the base in ascending order followed
/// by an identity pad. Orders larger than the base dimension contribute an
/// empty sector.
inline Matrix build_block(const BaseParams &base, const BlockSpec &spec,
                          const std::vector<unsigned> &orders, MinorOp op) {
    if (base.p.rows() != spec.n)
        throw std::invalid_argument("build_block: base dimension disagrees with spec");
    const std::size_t b = spec.d_comp + spec.pad;
    const Matrix a = base.base_matrix();
    Matrix block(b, b, 0.0);
    std::size_t off = 0;
    for (unsigned k : orders) {
        if (k > spec.n) continue;
        const Matrix ck = compound(a, k, op).entries;
        block.set_block(off, off, ck);
        off += ck.rows();
    }
    for (std::size_t i = off; i < b; ++i) block(i, i) = 1.0;
    return block;
}

/// An assembled multiplicative adapter with provenance back to its blocks.
struct Adapter {
    AdapterConfig config;
    BlockSpec spec;
    std::vector<BaseParams> blocks;      ///< length r, or 1 when beta == 1
    std::vector<Matrix> block_matrices;  ///< length r
    Matrix delta;                        ///< d×d block-diagonal ΔW_Q
};

inline Adapter build_adapter(const AdapterConfig &config, std::vector<BaseParams> params) {
    config.validate();
    const std::size_t expected = config.beta == 1 ? 1 : config.num_blocks;
    if (params.size() != expected)
        throw ConfigError("build_adapter: expected " + std::to_string(expected) +
                          " parameter blocks, got " + std::to_string(params.size()));
    Adapter ad;
    ad.config = config;
    ad.spec = make_block_spec(config.block_size(), config.orders);
    for (const auto &bp : params) {
        if (bp.p.rows() != ad.spec.n || !bp.p.square())
            throw ConfigError("build_adapter: base parameter shape disagrees with fit");
        if (bp.gamma != config.gamma)
            throw ConfigError("build_adapter: gamma flag disagrees between params and config");
    }
    ad.blocks = std::move(params);
    const std::size_t b = config.block_size();
    ad.delta = Matrix(config.d, config.d, 0.0);
    ad.block_matrices.reserve(config.num_blocks);
    for (std::size_t i = 0; i < config.num_blocks; ++i) {
        const BaseParams &bp = ad.blocks[config.beta == 1 ? 0 : i];
        Matrix blk = build_block(bp, ad.spec, config.orders, config.op);
        ad.delta.set_block(i * b, i * b, blk);
        ad.block_matrices.push_back(std::move(blk));
    }
    return ad;
}

/// Fresh identity adapter for a configuration.
inline Adapter make_identity_adapter(const AdapterConfig &config) {
    config.validate();
    const BlockSpec spec = make_block_spec(config.block_size(), config.orders);
    const std::size_t count = config.beta == 1 ? 1 : config.num_blocks;
    std::vector<BaseParams> params;
    params.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        params.push_back(init_base_params(spec.n, config.gamma));
    return build_adapter(config, std::move(params));
}

/// W_adapt = ΔW_Q · W*.
inline Matrix apply_adapter(const Adapter &adapter, const Matrix &w_star) {
    if (adapter.config.d != w_star.rows())
        throw std::invalid_argument("apply_adapter: adapter dimension disagrees with layer");
    return adapter.delta * w_star;
}

/// Ordered product of stacked adapters; the first adapter in the list is the
/// leftmost factor, i.e. applied last. An empty stack is the identity.
inline Matrix stack_adapters(const std::vector<Adapter> &adapters, std::size_t d) {
    Matrix prod = Matrix::identity(d);
    for (const Adapter &a : adapters) {
        if (a.config.d != d)
            throw std::invalid_argument("stack_adapters: dimension mismatch in stack");
        prod = prod * a.delta;
    }
    return prod;
}

inline Matrix stack_adapters(const std::vector<Adapter> &adapters) {
    if (adapters.empty())
        throw std::invalid_argument("stack_adapters: dimension needed for an empty stack");
    return stack_adapters(adapters, adapters.front().config.d);
}

/// Trainable scalars: m · s · (n(n−1)/2 if orthogonal else n²), where s is
/// the number of distinct parameter blocks. Only the strict lower triangle
/// of P counts under the Cayley parameterization since Q discards the
/// symmetric part.
inline std::size_t param_count(const AdapterConfig &config) {
    config.validate();
    const unsigned n = fit_base_dim(config.block_size(), config.orders);
    const std::size_t per_block =
        config.gamma == 0 ? static_cast<std::size_t>(n) * (n - 1) / 2
                          : static_cast<std::size_t>(n) * n;
    const std::size_t shares = config.beta == 1 ? 1 : config.num_blocks;
    return config.num_adapters * shares * per_block;
}

/// Pullback of a cotangent on ΔW_Q to each parameter block. Returns one
/// matrix per entry of `adapter.blocks` (block-share accumulates all r block
/// positions into the single shared slot).
inline std::vector<Matrix> adapter_pullback(const Adapter &adapter, const Matrix &delta_bar) {
    const AdapterConfig &cfg = adapter.config;
    if (delta_bar.rows() != cfg.d || delta_bar.cols() != cfg.d)
        throw std::invalid_argument("adapter_pullback: cotangent shape mismatch");
    const std::size_t b = cfg.block_size();
    std::vector<Matrix> pbars(adapter.blocks.size(), Matrix(adapter.spec.n, adapter.spec.n, 0.0));
    for (std::size_t i = 0; i < cfg.num_blocks; ++i) {
        const std::size_t slot = cfg.beta == 1 ? 0 : i;
        const BaseParams &bp = adapter.blocks[slot];
        const Matrix a = bp.base_matrix();
        Matrix abar(adapter.spec.n, adapter.spec.n, 0.0);
        std::size_t off = 0;
        for (unsigned k : cfg.orders) {
            if (k > adapter.spec.n) continue;
            const std::size_t dim = static_cast<std::size_t>(binomial(adapter.spec.n, k));
            const Matrix gk = delta_bar.block(i * b + off, i * b + off, dim, dim);
            abar += compound_pullback(a, k, cfg.op, gk);
            off += dim;
        }
        if (cfg.gamma == 0) {
            pbars[slot] += cayley_vjp(bp.p, abar);
        } else {
            pbars[slot] += abar;
        }
    }
    return pbars;
}

// ---------------------------------------------------------------------------
// Dense-matrix export.
//
// Text format:
//   line 1:  "cadapt-adapter v1"
//   line 2:  "d=<d> r=<r> cfg=<k1+k2+..> op=<op> gamma=<g> beta=<b> m=<m>"
//   then d lines of d space-separated %.17g values, row-major.
//
// Binary format:
//   magic "CADAPT1\n", then uint32 LE fields d, r, ncfg, cfg orders, op code
//   (0 comp / 1 max / 2 avg), gamma, beta, m, then d*d float64 LE row-major.
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "adapter binary export assumes a little-endian host");

inline void write_adapter_text(const AdapterConfig &c, const Matrix &delta, std::ostream &os) {
    os << "cadapt-adapter v1\n";
    os << "d=" << c.d << " r=" << c.num_blocks << " cfg=";
    for (std::size_t i = 0; i < c.orders.size(); ++i) {
        if (i) os << '+';
        os << c.orders[i];
    }
    os << " op=" << to_string(c.op) << " gamma=" << c.gamma << " beta=" << c.beta
       << " m=" << c.num_adapters << "\n";
    char buf[32];
    for (std::size_t r = 0; r < c.d; ++r) {
        for (std::size_t cc = 0; cc < c.d; ++cc) {
            std::snprintf(buf, sizeof buf, "%.17g", delta(r, cc));
            os << (cc ? " " : "") << buf;
        }
        os << "\n";
    }
}

inline void write_adapter_text(const Adapter &adapter, std::ostream &os) {
    write_adapter_text(adapter.config, adapter.delta, os);
}

inline void write_adapter_binary(const AdapterConfig &c, const Matrix &delta, std::ostream &os) {
    os.write("CADAPT1\n", 8);
    auto put_u32 = [&os](std::uint32_t v) {
        os.write(reinterpret_cast<const char *>(&v), 4);
    };
    put_u32(static_cast<std::uint32_t>(c.d));
    put_u32(static_cast<std::uint32_t>(c.num_blocks));
    put_u32(static_cast<std::uint32_t>(c.orders.size()));
    for (unsigned k : c.orders) put_u32(k);
    put_u32(static_cast<std::uint32_t>(c.op));
    put_u32(static_cast<std::uint32_t>(c.gamma));
    put_u32(static_cast<std::uint32_t>(c.beta));
    put_u32(static_cast<std::uint32_t>(c.num_adapters));
    os.write(reinterpret_cast<const char *>(delta.data()),
             static_cast<std::streamsize>(sizeof(double) * delta.size()));
}

inline void write_adapter_binary(const Adapter &adapter, std::ostream &os) {
    write_adapter_binary(adapter.config, adapter.delta, os);
}

/// Reads back a binary export: the header fields and the dense ΔW_Q.
inline std::pair<AdapterConfig, Matrix> read_adapter_binary(std::istream &is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "CADAPT1\n", 8) != 0)
        throw ConfigError("read_adapter_binary: bad magic");
    auto get_u32 = [&is]() {
        std::uint32_t v = 0;
        is.read(reinterpret_cast<char *>(&v), 4);
        return v;
    };
    AdapterConfig c;
    c.d = get_u32();
    c.num_blocks = get_u32();
    const std::uint32_t ncfg = get_u32();
    for (std::uint32_t i = 0; i < ncfg; ++i) c.orders.push_back(get_u32());
    c.op = static_cast<MinorOp>(get_u32());
    c.gamma = static_cast<int>(get_u32());
    c.beta = static_cast<int>(get_u32());
    c.num_adapters = get_u32();
    Matrix delta(c.d, c.d);
    is.read(reinterpret_cast<char *>(delta.data()),
            static_cast<std::streamsize>(sizeof(double) * delta.size()));
    if (!is) throw ConfigError("read_adapter_binary: truncated payload");
    return {std::move(c), std::move(delta)};
}

}  // namespace cadapt

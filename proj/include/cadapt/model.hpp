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
#include <optional>
#include <span>
#include <vector>

#include "cadapt/adapter.hpp"
#include "cadapt/lora.hpp"
#include "cadapt/matrix.hpp"

namespace cadapt {

// ---------------------------------------------------------------------------
// Frozen toy models. Data convention: a batch is a matrix whose columns are
// samples (or, for attention, the tokens of one sequence), h = W·x.
// ---------------------------------------------------------------------------

enum class BlockKind { linear, attention, ffn };

struct ModelBlock {
    BlockKind kind = BlockKind::linear;
    Matrix w;            // linear
    Matrix wq, wk, wv;   // attention, all d×d
    Matrix w1, w2;       // ffn: w1 is d_f×d, w2 is d×d_f
    std::vector<double> b1, b2;

    std::size_t in_dim() const {
        switch (kind) {
            case BlockKind::linear: return w.cols();
            case BlockKind::attention: return wq.cols();
            default: return w1.cols();
        }
    }
    std::size_t out_dim() const {
        switch (kind) {
            case BlockKind::linear: return w.rows();
            case BlockKind::attention: return wq.rows();
            default: return w2.rows();
        }
    }
};

struct ToyModel {
    std::vector<ModelBlock> blocks;

    std::size_t input_dim() const { return blocks.front().in_dim(); }
    std::size_t output_dim() const { return blocks.back().out_dim(); }
};

inline ModelBlock make_linear_block(Matrix w) {
    ModelBlock b;
    b.kind = BlockKind::linear;
    b.w = std::move(w);
    return b;
}

inline ModelBlock make_attention_block(Matrix wq, Matrix wk, Matrix wv) {
    ModelBlock b;
    b.kind = BlockKind::attention;
    b.wq = std::move(wq);
    b.wk = std::move(wk);
    b.wv = std::move(wv);
    return b;
}

inline ModelBlock make_ffn_block(Matrix w1, std::vector<double> b1, Matrix w2,
                                 std::vector<double> b2) {
    ModelBlock b;
    b.kind = BlockKind::ffn;
    b.w1 = std::move(w1);
    b.b1 = std::move(b1);
    b.w2 = std::move(w2);
    b.b2 = std::move(b2);
    return b;
}

// ---------------------------------------------------------------------------
// Adapter assignment: which frozen matrices get adapters, and their state.
// ---------------------------------------------------------------------------

enum class SiteRole { weight, query, value, ffn_in };

struct SiteId {
    std::size_t block = 0;
    SiteRole role = SiteRole::weight;

    bool operator==(const SiteId &o) const { return block == o.block && role == o.role; }
};

inline const Matrix &frozen_matrix(const ToyModel &model, SiteId id) {
    const ModelBlock &b = model.blocks.at(id.block);
    switch (id.role) {
        case SiteRole::weight: return b.w;
        case SiteRole::query: return b.wq;
        case SiteRole::value: return b.wv;
        default: return b.w1;
    }
}

/// Default attachment: the weight for linear, W_Q and W_V for attention,
/// W_1 for ffn.
inline std::vector<SiteId> default_sites(const ToyModel &model) {
    std::vector<SiteId> sites;
    for (std::size_t i = 0; i < model.blocks.size(); ++i) {
        switch (model.blocks[i].kind) {
            case BlockKind::linear: sites.push_back({i, SiteRole::weight}); break;
            case BlockKind::attention:
                sites.push_back({i, SiteRole::query});
                sites.push_back({i, SiteRole::value});
                break;
            case BlockKind::ffn: sites.push_back({i, SiteRole::ffn_in}); break;
        }
    }
    return sites;
}

/// A stack of m multiplicative adapters on one site, parameters only; the
/// dense adapters are rebuilt from these on every evaluation.
struct MultiplicativeState {
    AdapterConfig config;
    std::vector<std::vector<BaseParams>> params;  // m × (r, or 1 when beta == 1)
};

struct SiteAdapter {
    SiteId id;
    std::optional<MultiplicativeState> mult;
    std::optional<LoraParams> lora;
};

using Assignment = std::vector<SiteAdapter>;

/// Identity-start multiplicative state for a config (P = 0 under Cayley,
/// P = I unconstrained).
inline MultiplicativeState make_identity_state(const AdapterConfig &config) {
    config.validate();
    const BlockSpec spec = make_block_spec(config.block_size(), config.orders);
    MultiplicativeState st;
    st.config = config;
    const std::size_t per = config.beta == 1 ? 1 : config.num_blocks;
    for (std::size_t a = 0; a < config.num_adapters; ++a) {
        std::vector<BaseParams> blocks;
        for (std::size_t i = 0; i < per; ++i)
            blocks.push_back(init_base_params(spec.n, config.gamma));
        st.params.push_back(std::move(blocks));
    }
    return st;
}

/// Template config re-targeted at one site's output dimension.
inline AdapterConfig site_config(const AdapterConfig &tpl, std::size_t site_dim) {
    AdapterConfig c = tpl;
    c.d = site_dim;
    c.validate();
    return c;
}

inline Assignment make_multiplicative_assignment(const ToyModel &model,
                                                 const std::vector<SiteId> &sites,
                                                 const AdapterConfig &tpl) {
    Assignment asg;
    for (SiteId id : sites) {
        SiteAdapter sa;
        sa.id = id;
        sa.mult = make_identity_state(site_config(tpl, frozen_matrix(model, id).rows()));
        asg.push_back(std::move(sa));
    }
    return asg;
}

// ---------------------------------------------------------------------------
// Forward pass with cached intermediates for the hand-rolled backward pass.
// ---------------------------------------------------------------------------

struct SiteCache {
    std::vector<Adapter> built;  // multiplicative stack, dense
    Matrix delta;                // stacked product (multiplicative) or ΔW (additive)
    Matrix w_eff;
};

struct BlockCache {
    Matrix x;                   // block input
    Matrix q, k, v, attn;       // attention; attn is the seq×seq row-softmax
    Matrix z1, h;               // ffn pre-activation and ReLU output
    Matrix y;                   // block output
};

struct ForwardCache {
    std::vector<SiteCache> sites;  // parallel to the assignment
    std::vector<BlockCache> blocks;
    Matrix output;
};

namespace detail {

inline const SiteAdapter *find_site(const Assignment &asg, SiteId id, std::size_t *index) {
    for (std::size_t i = 0; i < asg.size(); ++i)
        if (asg[i].id == id) {
            if (index) *index = i;
            return &asg[i];
        }
    return nullptr;
}

inline Matrix row_softmax(const Matrix &s) {
    Matrix a(s.rows(), s.cols());
    for (std::size_t r = 0; r < s.rows(); ++r) {
        double mx = s(r, 0);
        for (std::size_t c = 1; c < s.cols(); ++c) mx = std::max(mx, s(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < s.cols(); ++c) {
            a(r, c) = std::exp(s(r, c) - mx);
            sum += a(r, c);
        }
        for (std::size_t c = 0; c < s.cols(); ++c) a(r, c) /= sum;
    }
    return a;
}

}  // namespace detail

/// Effective weight of a site under its adapter (frozen weight if none).
inline SiteCache build_site(const ToyModel &model, const SiteAdapter &sa) {
    SiteCache cache;
    const Matrix &w = frozen_matrix(model, sa.id);
    if (sa.mult) {
        for (const auto &blocks : sa.mult->params)
            cache.built.push_back(build_adapter(sa.mult->config, blocks));
        cache.delta = stack_adapters(cache.built, sa.mult->config.d);
        cache.w_eff = cache.delta * w;
    } else if (sa.lora) {
        cache.delta = lora_delta(*sa.lora);
        cache.w_eff = w + cache.delta;
    } else {
        cache.w_eff = w;
    }
    return cache;
}

inline ForwardCache forward(const ToyModel &model, const Assignment &asg, const Matrix &batch) {
    if (batch.rows() != model.input_dim())
        throw std::invalid_argument("forward: batch dimension disagrees with model input");
    ForwardCache cache;
    cache.sites.reserve(asg.size());
    for (const auto &sa : asg) cache.sites.push_back(build_site(model, sa));

    auto effective = [&](SiteId id) -> const Matrix & {
        std::size_t idx;
        if (detail::find_site(asg, id, &idx)) return cache.sites[idx].w_eff;
        return frozen_matrix(model, id);
    };

    Matrix x = batch;
    for (std::size_t bi = 0; bi < model.blocks.size(); ++bi) {
        const ModelBlock &blk = model.blocks[bi];
        BlockCache bc;
        bc.x = x;
        switch (blk.kind) {
            case BlockKind::linear: {
                bc.y = effective({bi, SiteRole::weight}) * x;
                break;
            }
            case BlockKind::attention: {
                const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(blk.wq.rows()));
                bc.q = effective({bi, SiteRole::query}) * x;
                bc.k = blk.wk * x;
                bc.v = effective({bi, SiteRole::value}) * x;
                Matrix scores = bc.q.transposed() * bc.k;
                scores *= inv_sqrt_d;
                bc.attn = detail::row_softmax(scores);
                bc.y = bc.v * bc.attn.transposed();
                break;
            }
            case BlockKind::ffn: {
                bc.z1 = effective({bi, SiteRole::ffn_in}) * x;
                for (std::size_t r = 0; r < bc.z1.rows(); ++r)
                    for (std::size_t c = 0; c < bc.z1.cols(); ++c) bc.z1(r, c) += blk.b1[r];
                bc.h = bc.z1;
                for (std::size_t i = 0; i < bc.h.size(); ++i)
                    if (bc.h.data()[i] < 0.0) bc.h.data()[i] = 0.0;
                bc.y = blk.w2 * bc.h;
                for (std::size_t r = 0; r < bc.y.rows(); ++r)
                    for (std::size_t c = 0; c < bc.y.cols(); ++c) bc.y(r, c) += blk.b2[r];
                break;
            }
        }
        x = bc.y;
        cache.blocks.push_back(std::move(bc));
    }
    cache.output = x;
    return cache;
}

/// Mean squared error over all output entries.
inline double mse_loss(const Matrix &y, const Matrix &target) {
    if (y.rows() != target.rows() || y.cols() != target.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y.data()[i] - target.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// Backward pass: exact gradients for every trainable scalar, chaining the
// compound and Cayley pullbacks through the model.
// ---------------------------------------------------------------------------

struct SiteGrads {
    std::vector<std::vector<Matrix>> mult;  // m × blocks P-bars
    Matrix lora_up, lora_down;
};

struct BackwardResult {
    double loss = 0.0;
    std::vector<SiteGrads> sites;
};

namespace detail {

// Pulls a cotangent on one site's effective weight back to its parameters.
inline SiteGrads pull_site(const ToyModel &model, const SiteAdapter &sa, const SiteCache &cache,
                           const Matrix &w_eff_bar) {
    SiteGrads g;
    const Matrix &w = frozen_matrix(model, sa.id);
    if (sa.mult) {
        const Matrix delta_bar = w_eff_bar * w.transposed();
        const std::size_t m = cache.built.size();
        // Prefix products Δ₁…Δᵢ₋₁ and suffix products Δᵢ₊₁…Δ_m.
        std::vector<Matrix> prefix(m + 1), suffix(m + 1);
        prefix[0] = Matrix::identity(sa.mult->config.d);
        for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * cache.built[i].delta;
        suffix[m] = Matrix::identity(sa.mult->config.d);
        for (std::size_t i = m; i-- > 0;) suffix[i] = cache.built[i].delta * suffix[i + 1];
        for (std::size_t i = 0; i < m; ++i) {
            const Matrix gi = prefix[i].transposed() * delta_bar * suffix[i + 1].transposed();
            g.mult.push_back(adapter_pullback(cache.built[i], gi));
        }
    } else if (sa.lora) {
        auto [up, down] = lora_pullback(*sa.lora, w_eff_bar);
        g.lora_up = std::move(up);
        g.lora_down = std::move(down);
    }
    return g;
}

}  // namespace detail

/// Gradients of the MSE loss with respect to every adapter parameter.
inline BackwardResult backward(const ToyModel &model, const Assignment &asg, const Matrix &batch,
                               const Matrix &target) {
    const ForwardCache cache = forward(model, asg, batch);
    BackwardResult result;
    result.loss = mse_loss(cache.output, target);
    result.sites.resize(asg.size());

    // dL/dY of the final output.
    Matrix gy(cache.output.rows(), cache.output.cols());
    const double scale = 2.0 / static_cast<double>(cache.output.size());
    for (std::size_t i = 0; i < gy.size(); ++i)
        gy.data()[i] = scale * (cache.output.data()[i] - target.data()[i]);

    auto site_index = [&](SiteId id) -> std::ptrdiff_t {
        std::size_t idx;
        if (detail::find_site(asg, id, &idx)) return static_cast<std::ptrdiff_t>(idx);
        return -1;
    };
    auto effective = [&](SiteId id) -> const Matrix & {
        const std::ptrdiff_t idx = site_index(id);
        return idx >= 0 ? cache.sites[idx].w_eff : frozen_matrix(model, id);
    };
    auto accumulate_site = [&](SiteId id, const Matrix &w_eff_bar) {
        const std::ptrdiff_t idx = site_index(id);
        if (idx < 0) return;
        result.sites[idx] =
            detail::pull_site(model, asg[idx], cache.sites[idx], w_eff_bar);
    };

    for (std::size_t bi = model.blocks.size(); bi-- > 0;) {
        const ModelBlock &blk = model.blocks[bi];
        const BlockCache &bc = cache.blocks[bi];
        Matrix gx;
        switch (blk.kind) {
            case BlockKind::linear: {
                const Matrix &w_eff = effective({bi, SiteRole::weight});
                accumulate_site({bi, SiteRole::weight}, gy * bc.x.transposed());
                gx = w_eff.transposed() * gy;
                break;
            }
            case BlockKind::attention: {
                const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(blk.wq.rows()));
                // y = V·Aᵀ
                const Matrix dv = gy * bc.attn;
                Matrix da = gy.transposed() * bc.v;  // seq×seq, (query t, key s)
                // Row softmax backward.
                Matrix ds(da.rows(), da.cols());
                for (std::size_t t = 0; t < da.rows(); ++t) {
                    double inner = 0.0;
                    for (std::size_t s = 0; s < da.cols(); ++s) inner += da(t, s) * bc.attn(t, s);
                    for (std::size_t s = 0; s < da.cols(); ++s)
                        ds(t, s) = bc.attn(t, s) * (da(t, s) - inner);
                }
                ds *= inv_sqrt_d;
                const Matrix dq = bc.k * ds.transposed();
                const Matrix dk = bc.q * ds;
                accumulate_site({bi, SiteRole::query}, dq * bc.x.transposed());
                accumulate_site({bi, SiteRole::value}, dv * bc.x.transposed());
                gx = effective({bi, SiteRole::query}).transposed() * dq;
                gx += blk.wk.transposed() * dk;
                gx += effective({bi, SiteRole::value}).transposed() * dv;
                break;
            }
            case BlockKind::ffn: {
                const Matrix gh = blk.w2.transposed() * gy;
                Matrix gz = gh;
                for (std::size_t i = 0; i < gz.size(); ++i)
                    if (bc.z1.data()[i] <= 0.0) gz.data()[i] = 0.0;
                accumulate_site({bi, SiteRole::ffn_in}, gz * bc.x.transposed());
                gx = effective({bi, SiteRole::ffn_in}).transposed() * gz;
                break;
            }
        }
        gy = std::move(gx);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Flat coordinate view of the trainable parameters. Under the Cayley
// parameterization only the strict lower triangle of each P is a coordinate;
// unconstrained blocks expose all n² entries.
// ---------------------------------------------------------------------------

namespace detail {

template <class Asg, class Fn>
void for_each_coord(Asg &asg, Fn &&fn) {
    for (auto &sa : asg) {
        if (sa.mult) {
            for (auto &blocks : sa.mult->params)
                for (auto &bp : blocks) {
                    const std::size_t n = bp.p.rows();
                    if (bp.gamma == 0) {
                        for (std::size_t i = 1; i < n; ++i)
                            for (std::size_t j = 0; j < i; ++j) fn(bp.p(i, j));
                    } else {
                        for (std::size_t i = 0; i < bp.p.size(); ++i) fn(bp.p.data()[i]);
                    }
                }
        } else if (sa.lora) {
            for (std::size_t i = 0; i < sa.lora->w_up.size(); ++i) fn(sa.lora->w_up.data()[i]);
            for (std::size_t i = 0; i < sa.lora->w_down.size(); ++i) fn(sa.lora->w_down.data()[i]);
        }
    }
}

}  // namespace detail

inline std::size_t coord_count(const Assignment &asg) {
    std::size_t count = 0;
    detail::for_each_coord(asg, [&](const double &) { ++count; });
    return count;
}

inline std::vector<double> collect_coords(const Assignment &asg) {
    std::vector<double> out;
    detail::for_each_coord(asg, [&](const double &v) { out.push_back(v); });
    return out;
}

inline void apply_coords(Assignment &asg, std::span<const double> coords) {
    std::size_t i = 0;
    detail::for_each_coord(asg, [&](double &v) { v = coords[i++]; });
    if (i != coords.size())
        throw std::invalid_argument("apply_coords: coordinate count mismatch");
}

/// Gradient vector in the same coordinate order as collect_coords.
inline std::vector<double> collect_grads(const Assignment &asg,
                                         const std::vector<SiteGrads> &grads) {
    std::vector<double> out;
    for (std::size_t si = 0; si < asg.size(); ++si) {
        const auto &sa = asg[si];
        const auto &g = grads[si];
        if (sa.mult) {
            for (std::size_t a = 0; a < sa.mult->params.size(); ++a)
                for (std::size_t b = 0; b < sa.mult->params[a].size(); ++b) {
                    const Matrix &pbar = g.mult[a][b];
                    const std::size_t n = pbar.rows();
                    if (sa.mult->config.gamma == 0) {
                        for (std::size_t i = 1; i < n; ++i)
                            for (std::size_t j = 0; j < i; ++j) out.push_back(pbar(i, j));
                    } else {
                        for (std::size_t i = 0; i < pbar.size(); ++i)
                            out.push_back(pbar.data()[i]);
                    }
                }
        } else if (sa.lora) {
            for (std::size_t i = 0; i < g.lora_up.size(); ++i) out.push_back(g.lora_up.data()[i]);
            for (std::size_t i = 0; i < g.lora_down.size(); ++i)
                out.push_back(g.lora_down.data()[i]);
        }
    }
    return out;
}

}  // namespace cadapt

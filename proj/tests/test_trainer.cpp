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

#include <catch2/catch_amalgamated.hpp>

#include "cadapt/model.hpp"
#include "cadapt/train.hpp"
#include "test_support.hpp"

using namespace cadapt;

namespace {

AdapterConfig make_config(std::size_t d, std::vector<unsigned> orders, std::size_t r,
                          int gamma = 0, int beta = 0, std::size_t m = 1,
                          MinorOp op = MinorOp::comp) {
    AdapterConfig c;
    c.d = d;
    c.orders = std::move(orders);
    c.num_blocks = r;
    c.gamma = gamma;
    c.beta = beta;
    c.num_adapters = m;
    c.op = op;
    return c;
}

// Randomize the trainable coordinates of an assignment.
void randomize(Assignment &asg, Rng &rng, double scale) {
    auto coords = collect_coords(asg);
    for (auto &c : coords) c += scale * rng.gauss();
    apply_coords(asg, coords);
}

// Full finite-difference sweep over every trainable coordinate.
void check_gradients(const ToyModel &model, Assignment &asg, const Matrix &x, const Matrix &t,
                     double rel_tol = 1e-4, double abs_floor = 1e-8) {
    const BackwardResult back = backward(model, asg, x, t);
    const auto analytic = collect_grads(asg, back.sites);
    auto coords = collect_coords(asg);
    REQUIRE(analytic.size() == coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const double saved = coords[i];
        auto eval = [&](double v) {
            coords[i] = v;
            apply_coords(asg, coords);
            const double loss = mse_loss(forward(model, asg, x).output, t);
            coords[i] = saved;
            apply_coords(asg, coords);
            return loss;
        };
        const double numeric = testsupport::central_diff(eval, saved);
        INFO("coordinate " << i << ": analytic " << analytic[i] << " numeric " << numeric);
        REQUIRE(testsupport::grad_close(analytic[i], numeric, rel_tol, abs_floor));
    }
}

}  // namespace

TEST_CASE("forward equals the frozen model under identity adapters, bitwise") {
    Rng rng(41);
    for (BlockKind kind : {BlockKind::linear, BlockKind::attention, BlockKind::ffn}) {
        const ToyModel model = make_frozen_model(8, kind, rng);
        const Assignment idle =
            make_multiplicative_assignment(model, default_sites(model), make_config(8, {1, 2}, 2));
        const Matrix x = rng.gaussian_matrix(8, 5);
        const Matrix with = forward(model, idle, x).output;
        const Matrix without = forward(model, {}, x).output;
        REQUIRE(with == without);
    }
}

TEST_CASE("linear forward matches a hand product") {
    ToyModel model;
    model.blocks.push_back(make_linear_block(Matrix{{1, 2}, {3, 4}}));
    Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                    make_config(2, {1}, 1, 1));
    // gamma=1: P is the block itself; set it to a known rotation-ish matrix.
    asg[0].mult->params[0][0].p = Matrix{{0, 1}, {1, 0}};
    const Matrix x{{1}, {2}};
    const Matrix y = forward(model, asg, x).output;
    // ΔW·W* = [[0,1],[1,0]]·[[1,2],[3,4]] = [[3,4],[1,2]]; times x = [11, 5].
    CHECK(y(0, 0) == 11.0);
    CHECK(y(1, 0) == 5.0);
}

TEST_CASE("attention forward matches a brute-force oracle") {
    Rng rng(42);
    const std::size_t d = 4, seq = 3;
    const ToyModel model = make_frozen_model(d, BlockKind::attention, rng);
    Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                    make_config(d, {1}, 1));
    randomize(asg, rng, 0.4);
    const Matrix x = rng.gaussian_matrix(d, seq);
    const Matrix y = forward(model, asg, x).output;

    // Oracle: scalar-loop softmax attention with explicitly adapted weights.
    const Matrix wq_eff = build_site(model, asg[0]).w_eff;
    const Matrix wv_eff = build_site(model, asg[1]).w_eff;
    const Matrix &wk = model.blocks[0].wk;
    std::vector<std::vector<double>> q(seq, std::vector<double>(d)), k = q, v = q;
    for (std::size_t t = 0; t < seq; ++t)
        for (std::size_t i = 0; i < d; ++i) {
            double sq = 0, sk = 0, sv = 0;
            for (std::size_t j = 0; j < d; ++j) {
                sq += wq_eff(i, j) * x(j, t);
                sk += wk(i, j) * x(j, t);
                sv += wv_eff(i, j) * x(j, t);
            }
            q[t][i] = sq;
            k[t][i] = sk;
            v[t][i] = sv;
        }
    for (std::size_t t = 0; t < seq; ++t) {
        std::vector<double> scores(seq);
        double denom = 0.0;
        for (std::size_t s = 0; s < seq; ++s) {
            double dotqk = 0.0;
            for (std::size_t i = 0; i < d; ++i) dotqk += q[t][i] * k[s][i];
            scores[s] = std::exp(dotqk / std::sqrt(double(d)));
            denom += scores[s];
        }
        for (std::size_t i = 0; i < d; ++i) {
            double out = 0.0;
            for (std::size_t s = 0; s < seq; ++s) out += (scores[s] / denom) * v[s][i];
            REQUIRE(y(i, t) == Catch::Approx(out).margin(1e-12));
        }
    }
}

TEST_CASE("gradients match finite differences across adapter configs") {
    Rng rng(43);
    const std::size_t d = 16, r = 2;
    const ToyModel model = make_frozen_model(d, BlockKind::linear, rng);
    const Matrix x = rng.gaussian_matrix(d, 8);
    const Matrix t = rng.gaussian_matrix(d, 8);
    for (auto orders : std::vector<std::vector<unsigned>>{{1}, {1, 2}, {1, 2, 3}}) {
        for (int gamma : {0, 1}) {
            Assignment asg = make_multiplicative_assignment(
                model, default_sites(model), make_config(d, orders, r, gamma));
            randomize(asg, rng, 0.3);
            check_gradients(model, asg, x, t);
        }
    }
}

TEST_CASE("gradients through stacked adapters and block share") {
    Rng rng(44);
    const std::size_t d = 8;
    const ToyModel model = make_frozen_model(d, BlockKind::linear, rng);
    const Matrix x = rng.gaussian_matrix(d, 6);
    const Matrix t = rng.gaussian_matrix(d, 6);
    SECTION("m=3 stack") {
        Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                        make_config(d, {1, 2}, 2, 0, 0, 3));
        randomize(asg, rng, 0.3);
        check_gradients(model, asg, x, t);
    }
    SECTION("beta=1 share") {
        Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                        make_config(d, {1, 2}, 2, 0, 1));
        randomize(asg, rng, 0.3);
        check_gradients(model, asg, x, t);
    }
}

TEST_CASE("gradients through attention and ffn models") {
    Rng rng(45);
    SECTION("attention, adapters on W_Q and W_V") {
        const ToyModel model = make_frozen_model(8, BlockKind::attention, rng);
        Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                        make_config(8, {1, 2}, 2));
        randomize(asg, rng, 0.3);
        const Matrix x = rng.gaussian_matrix(8, 4);
        const Matrix t = rng.gaussian_matrix(8, 4);
        check_gradients(model, asg, x, t);
    }
    SECTION("ffn, adapter on W_1") {
        const ToyModel model = make_frozen_model(8, BlockKind::ffn, rng, 8);
        Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                        make_config(8, {1}, 2));
        randomize(asg, rng, 0.3);
        const Matrix x = rng.gaussian_matrix(8, 6);
        const Matrix t = rng.gaussian_matrix(8, 6);
        check_gradients(model, asg, x, t);
    }
    SECTION("two-block model: gradients flow through attention inputs") {
        Rng mrng(46);
        ToyModel model;
        model.blocks.push_back(make_linear_block(mrng.gaussian_matrix(6, 6, 0.4)));
        const double s = 1.0 / std::sqrt(6.0);
        model.blocks.push_back(make_attention_block(mrng.gaussian_matrix(6, 6, s),
                                                    mrng.gaussian_matrix(6, 6, s),
                                                    mrng.gaussian_matrix(6, 6, s)));
        Assignment asg = make_multiplicative_assignment(model, {{0, SiteRole::weight}},
                                                        make_config(6, {1, 2}, 1));
        randomize(asg, mrng, 0.3);
        const Matrix x = mrng.gaussian_matrix(6, 4);
        const Matrix t = mrng.gaussian_matrix(6, 4);
        check_gradients(model, asg, x, t);
    }
}

TEST_CASE("gradients with every switch engaged at once") {
    // All orders, unconstrained base, shared blocks, two-deep stack.
    Rng rng(53);
    const ToyModel model = make_frozen_model(16, BlockKind::linear, rng);
    Assignment asg = make_multiplicative_assignment(
        model, default_sites(model), make_config(16, {1, 2, 3}, 2, 1, 1, 2));
    randomize(asg, rng, 0.2);
    const Matrix x = rng.gaussian_matrix(16, 6);
    const Matrix t = rng.gaussian_matrix(16, 6);
    check_gradients(model, asg, x, t);
}

TEST_CASE("ffn with a wider hidden layer adapts at the hidden dimension") {
    Rng rng(54);
    const std::size_t d = 6, d_ff = 12;
    const ToyModel model = make_frozen_model(d, BlockKind::ffn, rng, d_ff);
    Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                    make_config(d_ff, {1, 2}, 2));
    REQUIRE(asg[0].mult->config.d == d_ff);
    randomize(asg, rng, 0.3);
    const Matrix x = rng.gaussian_matrix(d, 5);
    const Matrix t = rng.gaussian_matrix(d, 5);
    check_gradients(model, asg, x, t);
}

TEST_CASE("lora gradients match finite differences") {
    Rng rng(47);
    const ToyModel model = make_frozen_model(8, BlockKind::linear, rng);
    Assignment asg(1);
    asg[0].id = {0, SiteRole::weight};
    asg[0].lora = lora_init(8, 8, 2, 1.5, rng);
    // Give W_up nonzero values so both factors carry gradient.
    asg[0].lora->w_up = rng.gaussian_matrix(8, 2, 0.3);
    const Matrix x = rng.gaussian_matrix(8, 6);
    const Matrix t = rng.gaussian_matrix(8, 6);
    check_gradients(model, asg, x, t);
}

TEST_CASE("max-op gradients match finite differences away from ties") {
    Rng rng(48);
    const ToyModel model = make_frozen_model(8, BlockKind::linear, rng);
    Assignment asg = make_multiplicative_assignment(
        model, default_sites(model), make_config(8, {1, 2}, 2, 1, 0, 1, MinorOp::max));
    randomize(asg, rng, 0.5);
    const Matrix x = rng.gaussian_matrix(8, 6);
    const Matrix t = rng.gaussian_matrix(8, 6);
    check_gradients(model, asg, x, t);
}

TEST_CASE("zero cotangent gives zero gradients") {
    Rng rng(49);
    const ToyModel model = make_frozen_model(8, BlockKind::linear, rng);
    Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                    make_config(8, {1, 2}, 2));
    randomize(asg, rng, 0.3);
    const Matrix x = rng.gaussian_matrix(8, 4);
    // Target equals output: loss gradient is identically zero.
    const Matrix t = forward(model, asg, x).output;
    const BackwardResult back = backward(model, asg, x, t);
    for (double g : collect_grads(asg, back.sites)) CHECK(g == 0.0);
}

TEST_CASE("determinant gradient flow exists for C1-bearing configs") {
    Rng rng(50);
    const ToyModel model = make_frozen_model(16, BlockKind::linear, rng);
    for (auto orders : std::vector<std::vector<unsigned>>{{1}, {1, 2}, {1, 2, 3}}) {
        Assignment asg = make_multiplicative_assignment(model, default_sites(model),
                                                        make_config(16, orders, 2));
        randomize(asg, rng, 0.4);
        const Matrix x = rng.gaussian_matrix(16, 6);
        const Matrix t = rng.gaussian_matrix(16, 6);
        const BackwardResult back = backward(model, asg, x, t);
        double norm = 0.0;
        for (double g : collect_grads(asg, back.sites)) norm += g * g;
        CHECK(norm > 1e-12);
    }
}

TEST_CASE("realizable task construction") {
    SECTION("identity teacher is solved at initialization") {
        const auto cfg = make_config(8, {1, 2}, 2);
        const TaskSpec task = make_realizable_task(8, cfg, 7, BlockKind::linear, 0.0);
        Rng rng(1);
        const Matrix x = task.sample_inputs(rng);
        const Assignment student =
            make_multiplicative_assignment(task.model, default_sites(task.model), cfg);
        CHECK(mse_loss(forward(task.model, student, x).output, task.targets(x)) == 0.0);
    }
    SECTION("planted teacher is recovered exactly when parameters are copied") {
        const auto cfg = make_config(8, {1, 2}, 2);
        const TaskSpec task = make_realizable_task(8, cfg, 8, BlockKind::linear, 0.5);
        Assignment student =
            make_multiplicative_assignment(task.model, default_sites(task.model), cfg);
        apply_coords(student, collect_coords(task.teacher));
        Rng rng(2);
        const Matrix x = task.sample_inputs(rng);
        CHECK(mse_loss(forward(task.model, student, x).output, task.targets(x)) < 1e-24);
    }
    SECTION("orthogonal teacher remains realizable for an unconstrained student") {
        auto teacher_cfg = make_config(8, {1}, 2, 0);
        const TaskSpec task = make_realizable_task(8, teacher_cfg, 9, BlockKind::linear, 0.5);
        auto student_cfg = make_config(8, {1}, 2, 1);
        Assignment student =
            make_multiplicative_assignment(task.model, default_sites(task.model), student_cfg);
        // Copy the teacher's dense blocks into the unconstrained parameters.
        const Adapter planted = build_adapter(teacher_cfg, task.teacher[0].mult->params[0]);
        std::vector<double> coords;
        for (const Matrix &blk : planted.block_matrices)
            for (std::size_t i = 0; i < blk.size(); ++i) coords.push_back(blk.data()[i]);
        apply_coords(student, coords);
        Rng rng(3);
        const Matrix x = task.sample_inputs(rng);
        CHECK(mse_loss(forward(task.model, student, x).output, task.targets(x)) < 1e-24);
    }
}

TEST_CASE("training") {
    const auto cfg = make_config(8, {1}, 1);
    const TaskSpec task = make_realizable_task(8, cfg, 11, BlockKind::linear, 0.4);
    SECTION("zero steps yields a single baseline entry") {
        const auto history = train(cfg, task, {.steps = 0, .lr = 0.5}, 1);
        REQUIRE(history.size() == 1);
        CHECK(history[0].step == 0);
        CHECK(history[0].loss > 0.0);
    }
    SECTION("same seed gives identical histories") {
        const TrainOptions opts{.steps = 50, .lr = 0.5, .momentum = 0.0, .log_every = 10};
        const auto h1 = train(cfg, task, opts, 5);
        const auto h2 = train(cfg, task, opts, 5);
        REQUIRE(h1.size() == h2.size());
        for (std::size_t i = 0; i < h1.size(); ++i) {
            CHECK(h1[i].loss == h2[i].loss);
            CHECK(h1[i].params == h2[i].params);
        }
    }
    SECTION("different seeds differ") {
        const TrainOptions opts{.steps = 20, .lr = 0.5};
        CHECK(train(cfg, task, opts, 1).back().loss != train(cfg, task, opts, 2).back().loss);
    }
    SECTION("identity start: step-0 loss equals the frozen baseline loss") {
        Rng rng(4);
        const auto history = train(cfg, task, {.steps = 0}, 9);
        Rng data_rng(task.data_seed ^ 9);
        const Matrix x = task.sample_inputs(data_rng);
        const double frozen = mse_loss(forward(task.model, {}, x).output, task.targets(x));
        CHECK(history[0].loss == frozen);
    }
    SECTION("loss decreases on a realizable task") {
        const auto history = train(cfg, task, {.steps = 300, .lr = 0.5, .log_every = 100}, 3);
        CHECK(history.back().loss < 1e-3 * history.front().loss);
    }
    SECTION("frozen weights are untouched by training") {
        const Matrix before = task.model.blocks[0].w;
        (void)train(cfg, task, {.steps = 30, .lr = 0.5}, 6);
        CHECK(task.model.blocks[0].w == before);
    }
    SECTION("divergence aborts with a diagnostic") {
        // The Cayley branch is bounded by construction; only the
        // unconstrained branch can blow up.
        const auto free_cfg = make_config(8, {1}, 1, 1);
        CHECK_THROWS_AS(train(free_cfg, task, {.steps = 500, .lr = 1e6}, 2), NumericalError);
    }
}

TEST_CASE("forward rejects mismatched batch dimensions") {
    Rng rng(60);
    const ToyModel model = make_frozen_model(8, BlockKind::linear, rng);
    CHECK_THROWS_AS(forward(model, {}, Matrix(5, 3, 1.0)), std::invalid_argument);
}

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

#include "cadapt/errors.hpp"
#include "cadapt/model.hpp"
#include "cadapt/rng.hpp"

namespace cadapt {

/// Plant-and-recover task: a frozen model plus a teacher assignment drawn
/// from a known adapter family. Targets are the teacher's outputs, so the
/// infimum of the training loss is zero by construction.
struct TaskSpec {
    ToyModel model;
    Assignment teacher;
    std::size_t batch_cols = 32;
    double input_std = 1.0;
    std::uint64_t data_seed = 0;

    Matrix sample_inputs(Rng &rng) const {
        return rng.gaussian_matrix(model.input_dim(), batch_cols, input_std);
    }
    Matrix targets(const Matrix &inputs) const {
        return forward(model, teacher, inputs).output;
    }
};

/// Random frozen weights with 1/√d column scaling, one block of the given kind.
inline ToyModel make_frozen_model(std::size_t d, BlockKind kind, Rng &rng,
                                  std::size_t d_ff = 0) {
    const double std_w = 1.0 / std::sqrt(static_cast<double>(d));
    ToyModel model;
    switch (kind) {
        case BlockKind::linear:
            model.blocks.push_back(make_linear_block(rng.gaussian_matrix(d, d, std_w)));
            break;
        case BlockKind::attention:
            model.blocks.push_back(make_attention_block(rng.gaussian_matrix(d, d, std_w),
                                                        rng.gaussian_matrix(d, d, std_w),
                                                        rng.gaussian_matrix(d, d, std_w)));
            break;
        case BlockKind::ffn: {
            if (d_ff == 0) d_ff = d;
            std::vector<double> b1(d_ff), b2(d);
            for (auto &v : b1) v = 0.1 * rng.gauss();
            for (auto &v : b2) v = 0.1 * rng.gauss();
            model.blocks.push_back(make_ffn_block(rng.gaussian_matrix(d_ff, d, std_w),
                                                  std::move(b1),
                                                  rng.gaussian_matrix(d, d_ff,
                                                                      1.0 / std::sqrt(double(d_ff))),
                                                  std::move(b2)));
            break;
        }
    }
    return model;
}

/// Draws teacher parameters from the family of `config`: a Gaussian
/// perturbation of scale `plant_std` applied to the trainable coordinates
/// (so the planted adapter is exactly recoverable by a matching student).
inline Assignment make_planted_assignment(const ToyModel &model, const std::vector<SiteId> &sites,
                                          const AdapterConfig &tpl, double plant_std, Rng &rng) {
    Assignment teacher = make_multiplicative_assignment(model, sites, tpl);
    auto coords = collect_coords(teacher);
    for (auto &c : coords) c += plant_std * rng.gauss();
    apply_coords(teacher, coords);
    return teacher;
}

inline TaskSpec make_realizable_task(std::size_t d, const AdapterConfig &tpl, std::uint64_t seed,
                                     BlockKind kind = BlockKind::linear, double plant_std = 0.5,
                                     std::size_t batch_cols = 32) {
    Rng rng(seed);
    TaskSpec task;
    task.model = make_frozen_model(d, kind, rng);
    task.teacher =
        make_planted_assignment(task.model, default_sites(task.model), tpl, plant_std, rng);
    task.batch_cols = batch_cols;
    task.data_seed = seed ^ 0x9e3779b97f4a7c15ULL;
    return task;
}

struct TrainOptions {
    std::size_t steps = 1000;
    double lr = 0.5;
    double momentum = 0.0;  // plain gradient descent by default
    std::size_t log_every = 100;
};

struct TrainState {
    std::size_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    std::vector<double> params;   // snapshot at this step
    std::vector<double> moments;  // momentum buffer snapshot; empty for plain GD
};

/// Deterministic gradient-descent run of a student config against a task.
/// Fresh input batches are drawn each step; the logged loss is measured on a
/// fixed evaluation batch so the history is comparable across steps.
/// Aborts with NumericalError if the loss leaves the finite range.
inline std::vector<TrainState> train(const AdapterConfig &student_tpl, const TaskSpec &task,
                                     const TrainOptions &opts, std::uint64_t seed) {
    Assignment student = make_multiplicative_assignment(
        task.model, default_sites(task.model), student_tpl);

    Rng data_rng(task.data_seed ^ seed);
    const Matrix eval_x = task.sample_inputs(data_rng);
    const Matrix eval_t = task.targets(eval_x);

    std::vector<TrainState> history;
    std::vector<double> velocity(coord_count(student), 0.0);
    auto log_state = [&](std::size_t step) {
        const double loss = mse_loss(forward(task.model, student, eval_x).output, eval_t);
        if (!std::isfinite(loss))
            throw NumericalError("train: non-finite loss at step " + std::to_string(step));
        history.push_back({step, loss, opts.lr, collect_coords(student),
                           opts.momentum != 0.0 ? velocity : std::vector<double>{}});
    };

    log_state(0);
    for (std::size_t step = 1; step <= opts.steps; ++step) {
        const Matrix x = task.sample_inputs(data_rng);
        const Matrix t = task.targets(x);
        BackwardResult back = backward(task.model, student, x, t);
        if (!std::isfinite(back.loss))
            throw NumericalError("train: non-finite loss at step " + std::to_string(step));
        const std::vector<double> grad = collect_grads(student, back.sites);
        std::vector<double> coords = collect_coords(student);
        for (std::size_t i = 0; i < coords.size(); ++i) {
            velocity[i] = opts.momentum * velocity[i] + grad[i];
            coords[i] -= opts.lr * velocity[i];
        }
        apply_coords(student, coords);
        if (step == opts.steps || (opts.log_every > 0 && step % opts.log_every == 0))
            log_state(step);
    }
    return history;
}

}  // namespace cadapt

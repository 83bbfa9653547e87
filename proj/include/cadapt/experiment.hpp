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
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cadapt/adapter.hpp"
#include "cadapt/circuit.hpp"
#include "cadapt/errors.hpp"
#include "cadapt/report.hpp"
#include "cadapt/train.hpp"

namespace cadapt {

// ---------------------------------------------------------------------------
// Experiment configuration: a single JSON file per experiment. Unknown keys
// are rejected everywhere; grids are expressed as value lists on the adapter
// axes.
// ---------------------------------------------------------------------------

enum class RunMode { verify, train, sweep, table };

struct TaskParams {
    BlockKind kind = BlockKind::linear;
    std::size_t steps = 1000;
    double lr = 0.5;
    double momentum = 0.0;
    std::size_t batch = 32;
    double plant_std = 0.5;
    std::size_t log_every = 0;  // 0 = log only the initial and final states
    std::string export_adapter;  // optional dump of the trained stack
    bool export_text = false;    // text instead of binary
};

struct VerifyParams {
    std::size_t trials = 50;
    unsigned max_qubits = 8;
    unsigned max_order = 3;
    // Optional explicit circuit to check instead of random draws only.
    std::optional<CircuitLayout> layout;
    std::vector<double> angles;
    unsigned layout_order = 2;
};

// Layouts and angle vectors serialize to the config format.
inline nlohmann::json layout_to_json(const CircuitLayout &layout,
                                     const std::vector<double> &angles) {
    nlohmann::json doc;
    doc["kind"] = to_string(layout.kind);
    doc["n"] = layout.n;
    if (layout.kind == LayoutKind::custom) {
        nlohmann::json gates = nlohmann::json::array();
        for (const auto &g : layout.gates) gates.push_back({g.i, g.j, g.angle});
        doc["gates"] = gates;
    }
    doc["angles"] = angles;
    return doc;
}

inline std::pair<CircuitLayout, std::vector<double>> layout_from_json(const nlohmann::json &doc);

/// Scalar adapter tuple minus d (shared with the model dimension).
struct AdapterAxes {
    std::vector<std::vector<unsigned>> cfg{{1}};
    std::vector<MinorOp> op{MinorOp::comp};
    std::vector<std::size_t> blocks{1};
    std::vector<int> gamma{0};
    std::vector<int> beta{0};
    std::vector<std::size_t> adapters{1};

    std::size_t cells() const {
        return cfg.size() * op.size() * blocks.size() * gamma.size() * beta.size() *
               adapters.size();
    }
};

struct ExperimentConfig {
    RunMode mode = RunMode::train;
    std::size_t d = 16;
    AdapterAxes axes;
    std::optional<AdapterAxes> teacher;  // scalar axes; defaults to the student cell
    TaskParams task;
    VerifyParams verify;
    std::vector<std::uint64_t> seeds;
    std::string output;      // report path prefix (writes <prefix>.csv/.json)
    std::string table_name;  // table mode
    double tol_equivalence = 1e-9;
    double tol_conservation = 1e-12;
};

namespace detail {

inline void require_keys(const nlohmann::json &obj, const std::string &where,
                         std::initializer_list<const char *> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char *a : allowed)
            if (it.key() == a) { known = true; break; }
        if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json &v, const std::string &where) {
    std::vector<T> out;
    if (v.is_array()) {
        for (const auto &e : v) out.push_back(e.get<T>());
        if (out.empty()) throw ConfigError(where + ": empty list");
    } else {
        out.push_back(v.get<T>());
    }
    return out;
}

inline std::vector<std::vector<unsigned>> cfg_axis(const nlohmann::json &v,
                                                   const std::string &where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": cfg must be a non-empty list");
    std::vector<std::vector<unsigned>> out;
    if (v[0].is_array()) {
        for (const auto &e : v) out.push_back(e.get<std::vector<unsigned>>());
    } else {
        out.push_back(v.get<std::vector<unsigned>>());
    }
    return out;
}

inline AdapterAxes parse_axes(const nlohmann::json &obj, const std::string &where) {
    require_keys(obj, where, {"d", "cfg", "op", "blocks", "gamma", "beta", "adapters"});
    AdapterAxes axes;
    if (obj.contains("cfg")) axes.cfg = cfg_axis(obj["cfg"], where);
    if (obj.contains("op")) {
        axes.op.clear();
        for (const auto &s : scalar_or_list<std::string>(obj["op"], where))
            axes.op.push_back(minor_op_from_string(s));
    }
    if (obj.contains("blocks")) axes.blocks = scalar_or_list<std::size_t>(obj["blocks"], where);
    if (obj.contains("gamma")) axes.gamma = scalar_or_list<int>(obj["gamma"], where);
    if (obj.contains("beta")) axes.beta = scalar_or_list<int>(obj["beta"], where);
    if (obj.contains("adapters"))
        axes.adapters = scalar_or_list<std::size_t>(obj["adapters"], where);
    return axes;
}

inline BlockKind block_kind_from_string(const std::string &s) {
    if (s == "linear") return BlockKind::linear;
    if (s == "attention") return BlockKind::attention;
    if (s == "ffn") return BlockKind::ffn;
    throw ConfigError("task.kind: unknown model kind '" + s + "'");
}

inline LayoutKind layout_kind_from_string(const std::string &s) {
    if (s == "pyramid") return LayoutKind::pyramid;
    if (s == "butterfly") return LayoutKind::butterfly;
    if (s == "custom") return LayoutKind::custom;
    throw ConfigError("layout.kind: unknown layout kind '" + s + "'");
}

inline const char *block_kind_name(BlockKind k) {
    switch (k) {
        case BlockKind::linear: return "linear";
        case BlockKind::attention: return "attention";
        default: return "ffn";
    }
}

}  // namespace detail

inline std::pair<CircuitLayout, std::vector<double>> layout_from_json(const nlohmann::json &doc) {
    detail::require_keys(doc, "layout", {"kind", "n", "gates", "angles"});
    if (!doc.contains("kind") || !doc.contains("n"))
        throw ConfigError("layout: 'kind' and 'n' are required");
    const LayoutKind kind = detail::layout_kind_from_string(doc["kind"].get<std::string>());
    const unsigned n = doc["n"].get<unsigned>();
    CircuitLayout layout;
    switch (kind) {
        case LayoutKind::pyramid: layout = pyramid_layout(n); break;
        case LayoutKind::butterfly: layout = butterfly_layout(n); break;
        case LayoutKind::custom: {
            if (!doc.contains("gates")) throw ConfigError("layout: custom kind requires 'gates'");
            layout.n = n;
            layout.kind = LayoutKind::custom;
            for (const auto &g : doc["gates"]) {
                if (!g.is_array() || g.size() != 3)
                    throw ConfigError("layout.gates: expected [i, j, angle_index] triplets");
                layout.gates.push_back({g[0].get<unsigned>(), g[1].get<unsigned>(),
                                        g[2].get<unsigned>()});
            }
            layout.validate();
            break;
        }
    }
    std::vector<double> angles;
    if (doc.contains("angles")) angles = doc["angles"].get<std::vector<double>>();
    return {std::move(layout), std::move(angles)};
}

inline ExperimentConfig parse_experiment(const nlohmann::json &doc) {
    detail::require_keys(doc, "experiment",
                         {"mode", "adapter", "task", "seeds", "output", "table", "verify",
                          "tolerances"});
    ExperimentConfig cfg;
    if (!doc.contains("mode")) throw ConfigError("experiment: missing 'mode'");
    const std::string mode = doc["mode"].get<std::string>();
    if (mode == "verify") cfg.mode = RunMode::verify;
    else if (mode == "train") cfg.mode = RunMode::train;
    else if (mode == "sweep") cfg.mode = RunMode::sweep;
    else if (mode == "table") cfg.mode = RunMode::table;
    else throw ConfigError("experiment: unknown mode '" + mode + "'");

    if (doc.contains("adapter")) {
        const auto &a = doc["adapter"];
        cfg.axes = detail::parse_axes(a, "adapter");
        if (a.contains("d")) cfg.d = a["d"].get<std::size_t>();
    }
    if (doc.contains("task")) {
        const auto &t = doc["task"];
        detail::require_keys(t, "task",
                             {"kind", "steps", "lr", "momentum", "batch", "plant_std",
                              "log_every", "export_adapter", "export_format", "teacher"});
        if (t.contains("kind"))
            cfg.task.kind = detail::block_kind_from_string(t["kind"].get<std::string>());
        if (t.contains("steps")) cfg.task.steps = t["steps"].get<std::size_t>();
        if (t.contains("lr")) cfg.task.lr = t["lr"].get<double>();
        if (t.contains("momentum")) cfg.task.momentum = t["momentum"].get<double>();
        if (t.contains("batch")) cfg.task.batch = t["batch"].get<std::size_t>();
        if (t.contains("plant_std")) cfg.task.plant_std = t["plant_std"].get<double>();
        if (t.contains("log_every")) cfg.task.log_every = t["log_every"].get<std::size_t>();
        if (t.contains("export_adapter"))
            cfg.task.export_adapter = t["export_adapter"].get<std::string>();
        if (t.contains("export_format")) {
            const std::string fmt = t["export_format"].get<std::string>();
            if (fmt != "binary" && fmt != "text")
                throw ConfigError("task.export_format: expected 'binary' or 'text'");
            cfg.task.export_text = fmt == "text";
        }
        if (t.contains("teacher")) {
            cfg.teacher = detail::parse_axes(t["teacher"], "task.teacher");
            if (cfg.teacher->cells() != 1)
                throw ConfigError("task.teacher: must be a single configuration, not a grid");
        }
    }
    if (doc.contains("verify")) {
        const auto &v = doc["verify"];
        detail::require_keys(v, "verify", {"trials", "max_qubits", "max_order", "layout", "k"});
        if (v.contains("trials")) cfg.verify.trials = v["trials"].get<std::size_t>();
        if (v.contains("max_qubits")) cfg.verify.max_qubits = v["max_qubits"].get<unsigned>();
        if (v.contains("max_order")) cfg.verify.max_order = v["max_order"].get<unsigned>();
        if (v.contains("layout")) {
            auto [layout, angles] = layout_from_json(v["layout"]);
            cfg.verify.layout = std::move(layout);
            cfg.verify.angles = std::move(angles);
        }
        if (v.contains("k")) cfg.verify.layout_order = v["k"].get<unsigned>();
    }
    if (doc.contains("tolerances")) {
        const auto &t = doc["tolerances"];
        detail::require_keys(t, "tolerances", {"equivalence", "conservation"});
        if (t.contains("equivalence")) cfg.tol_equivalence = t["equivalence"].get<double>();
        if (t.contains("conservation")) cfg.tol_conservation = t["conservation"].get<double>();
    }
    if (doc.contains("seeds")) cfg.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("output")) cfg.output = doc["output"].get<std::string>();
    if (doc.contains("table")) cfg.table_name = doc["table"].get<std::string>();

    // Mode-specific validation, before any run starts.
    if (cfg.mode == RunMode::train || cfg.mode == RunMode::sweep) {
        if (cfg.seeds.empty())
            throw ConfigError("experiment: 'seeds' must be a non-empty list for train/sweep");
        if (cfg.mode == RunMode::train && cfg.axes.cells() != 1)
            throw ConfigError("experiment: train mode takes a single adapter cell, not a grid");
    }
    if (cfg.mode == RunMode::table && cfg.table_name.empty())
        throw ConfigError("experiment: table mode requires 'table'");
    if (cfg.mode == RunMode::verify && cfg.seeds.empty()) cfg.seeds = {1};
    return cfg;
}

inline ExperimentConfig parse_experiment_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_experiment(doc);
}

// ---------------------------------------------------------------------------
// Mode implementations. All modes return rows; run_experiment sorts them and
// reports overall success.
// ---------------------------------------------------------------------------

struct RunResult {
    std::vector<ReportRow> rows;
    bool ok = true;
};

namespace detail {

inline AdapterConfig cell_config(std::size_t d, const AdapterAxes &axes, std::size_t index) {
    AdapterConfig c;
    c.d = d;
    const auto pick = [&index](std::size_t size) {
        const std::size_t i = index % size;
        index /= size;
        return i;
    };
    c.orders = axes.cfg[pick(axes.cfg.size())];
    c.op = axes.op[pick(axes.op.size())];
    c.num_blocks = axes.blocks[pick(axes.blocks.size())];
    c.gamma = axes.gamma[pick(axes.gamma.size())];
    c.beta = axes.beta[pick(axes.beta.size())];
    c.num_adapters = axes.adapters[pick(axes.adapters.size())];
    return c;
}

inline std::string task_echo(const AdapterConfig &student, const TaskParams &task) {
    std::ostringstream os;
    os << student.echo() << ";kind=" << block_kind_name(task.kind) << ";steps=" << task.steps
       << ";lr=" << format_value(task.lr);
    return os.str();
}

/// One training cell: plant a task from the teacher family, train the
/// student, emit loss rows. Shared verbatim by train and sweep modes.
inline void run_train_cell(const AdapterConfig &student, const AdapterConfig &teacher,
                           const TaskParams &task, std::uint64_t seed,
                           std::vector<ReportRow> &rows) {
    const std::string echo = task_echo(student, task);
    std::size_t params = 0;
    try {
        params = param_count(student);
        (void)param_count(teacher);
    } catch (const ConfigError &) {
        rows.push_back({echo, "status", "infeasible", "counted", seed});
        return;
    }
    const TaskSpec spec =
        make_realizable_task(student.d, teacher, seed, task.kind, task.plant_std, task.batch);
    TrainOptions opts;
    opts.steps = task.steps;
    opts.lr = task.lr;
    opts.momentum = task.momentum;
    opts.log_every = task.log_every;
    try {
        const auto history = train(student, spec, opts, seed);
        rows.push_back({echo, "param_count", format_value(std::uint64_t(params)), "counted", seed});
        rows.push_back({echo, "initial_loss", format_value(history.front().loss), "measured", seed});
        rows.push_back({echo, "final_loss", format_value(history.back().loss), "measured", seed});
        if (task.log_every > 0) {
            char name[32];
            for (const auto &st : history) {
                std::snprintf(name, sizeof name, "loss[%06zu]", st.step);
                rows.push_back({echo, name, format_value(st.loss), "measured", seed});
            }
        }
        if (!task.export_adapter.empty()) {
            // Rebuild the final student and export the stacked product per site.
            Assignment student_asg = make_multiplicative_assignment(
                spec.model, default_sites(spec.model), student);
            apply_coords(student_asg, history.back().params);
            for (std::size_t si = 0; si < student_asg.size(); ++si) {
                const SiteCache sc = build_site(spec.model, student_asg[si]);
                std::string path = task.export_adapter;
                if (student_asg.size() > 1) path += ".site" + std::to_string(si);
                path += ".seed" + std::to_string(seed) + (task.export_text ? ".txt" : ".bin");
                std::ofstream out(path, std::ios::binary);
                if (!out) throw ConfigError("cannot open export file: " + path);
                AdapterConfig site_cfg = student;
                site_cfg.d = sc.w_eff.rows();
                if (task.export_text)
                    write_adapter_text(site_cfg, sc.delta, out);
                else
                    write_adapter_binary(site_cfg, sc.delta, out);
            }
        }
    } catch (const NumericalError &e) {
        rows.push_back({echo, "status", std::string("diverged: ") + e.what(), "measured", seed});
    }
}

}  // namespace detail

/// Built-in structural tables.
inline std::vector<ReportRow> table_rows(const std::string &name) {
    std::vector<ReportRow> rows;
    const std::vector<std::vector<unsigned>> all_cfgs{{1}, {2}, {3}, {1, 2},
                                                      {1, 3}, {2, 3}, {1, 2, 3}};
    auto cfg_str = [](const std::vector<unsigned> &orders) {
        std::string s;
        for (std::size_t i = 0; i < orders.size(); ++i) {
            if (i) s += '+';
            s += std::to_string(orders[i]);
        }
        return s;
    };
    if (name == "dims") {
        rows.push_back({"b=1024;cfg=1+2", "base_dim",
                        format_value(std::uint64_t(fit_base_dim(1024, {1, 2}))), "counted", 0});
        for (const auto &orders : all_cfgs)
            rows.push_back({"b=256;cfg=" + cfg_str(orders), "base_dim",
                            format_value(std::uint64_t(fit_base_dim(256, orders))), "counted", 0});
    } else if (name == "params") {
        for (const auto &orders : all_cfgs) {
            for (int gamma : {0, 1}) {
                AdapterConfig c;
                c.d = 768;
                c.orders = orders;
                c.num_blocks = 3;
                c.gamma = gamma;
                rows.push_back({c.echo(), "param_count",
                                format_value(std::uint64_t(param_count(c))), "counted", 0});
            }
        }
        AdapterConfig shared;
        shared.d = 768;
        shared.orders = {1, 2};
        shared.num_blocks = 3;
        shared.beta = 1;
        rows.push_back({shared.echo(), "param_count",
                        format_value(std::uint64_t(param_count(shared))), "counted", 0});
        AdapterConfig stacked;
        stacked.d = 768;
        stacked.orders = {1, 2};
        stacked.num_blocks = 3;
        stacked.num_adapters = 4;
        rows.push_back({stacked.echo(), "param_count",
                        format_value(std::uint64_t(param_count(stacked))), "counted", 0});
    } else if (name == "gates") {
        for (unsigned n : {2u, 4u, 8u, 16u, 32u}) {
            rows.push_back({"layout=pyramid;n=" + std::to_string(n), "gate_count",
                            format_value(std::uint64_t(pyramid_layout(n).gates.size())),
                            "counted", 0});
            rows.push_back({"layout=butterfly;n=" + std::to_string(n), "gate_count",
                            format_value(std::uint64_t(butterfly_layout(n).gates.size())),
                            "counted", 0});
        }
        for (auto [n, K] : std::vector<std::pair<unsigned, unsigned>>{
                 {4, 1}, {4, 2}, {5, 3}, {8, 2}, {8, 3}, {16, 3}, {44, 2}})
            rows.push_back({"loader;n=" + std::to_string(n) + ";K=" + std::to_string(K),
                            "cnot_estimate", format_value(loader_cost(n, K)), "counted", 0});
    } else {
        throw ConfigError("unknown table '" + name + "' (expected dims, params or gates)");
    }
    return rows;
}

/// Quantum-equivalence verification suite: random layouts and angles, sector
/// action vs compound reference, conservation drifts, and the FBS parity
/// sign cases. Rows that meet tolerance carry provenance "verified".
inline RunResult verify_rows(const VerifyParams &vp, double tol_equivalence,
                             double tol_conservation, const std::vector<std::uint64_t> &seeds) {
    RunResult result;
    for (std::uint64_t seed : seeds) {
        Rng rng(seed);
        if (vp.layout) {
            std::vector<double> theta = vp.angles;
            if (theta.size() < vp.layout->num_angles()) {
                theta.resize(vp.layout->num_angles());
                for (auto &t : theta) t = rng.uniform(-3.141592653589793, 3.141592653589793);
            }
            const double err = verify_compound_equivalence(*vp.layout, theta, vp.layout_order);
            const bool pass = err < tol_equivalence;
            result.ok = result.ok && pass;
            std::ostringstream echo;
            echo << "layout=" << to_string(vp.layout->kind) << ";n=" << vp.layout->n
                 << ";k=" << vp.layout_order << ";explicit";
            result.rows.push_back({echo.str(), "compound_equivalence_error", format_value(err),
                                   pass ? "verified" : "measured", seed});
        }
        for (std::size_t trial = 0; trial < vp.trials; ++trial) {
            const unsigned n =
                2 + static_cast<unsigned>(rng.next_u64() % (vp.max_qubits - 1));
            const bool use_butterfly = ((n & (n - 1)) == 0) && (trial % 2 == 1);
            const CircuitLayout layout = use_butterfly ? butterfly_layout(n) : pyramid_layout(n);
            std::vector<double> theta(layout.num_angles());
            for (auto &t : theta) t = rng.uniform(-3.141592653589793, 3.141592653589793);
            const unsigned k =
                1 + static_cast<unsigned>(rng.next_u64() % std::min(vp.max_order, n));
            const double err = verify_compound_equivalence(layout, theta, k);
            std::ostringstream echo;
            echo << "layout=" << to_string(layout.kind) << ";n=" << n << ";k=" << k
                 << ";trial=" << trial;
            const bool pass = err < tol_equivalence;
            result.ok = result.ok && pass;
            result.rows.push_back({echo.str(), "compound_equivalence_error", format_value(err),
                                   pass ? "verified" : "measured", seed});

            // Gate-level conservation on a random multi-sector state.
            std::vector<std::pair<unsigned, std::vector<double>>> parts;
            for (unsigned kk = 1; kk <= std::min(vp.max_order, n); ++kk) {
                std::vector<double> x(binomial(n, kk));
                for (auto &v : x) v = rng.gauss();
                parts.emplace_back(kk, std::move(x));
            }
            HWState st = hw_load_multi(n, parts);
            double worst_leak = 0.0, worst_norm = 0.0;
            std::vector<double> probs;
            for (const auto &s : st.sectors()) probs.push_back(st.sector_probability(s.weight));
            for (const auto &g : layout.gates) {
                st = apply_fbs(st, g.i, g.j, theta[g.angle]);
                worst_norm = std::max(worst_norm, std::fabs(st.norm() - 1.0));
                std::size_t pi = 0;
                for (const auto &s : st.sectors())
                    worst_leak = std::max(
                        worst_leak, std::fabs(st.sector_probability(s.weight) - probs[pi++]));
            }
            const bool conserve = worst_leak < tol_conservation && worst_norm < tol_conservation;
            result.ok = result.ok && conserve;
            result.rows.push_back({echo.str(), "sector_leakage", format_value(worst_leak),
                                   conserve ? "verified" : "measured", seed});
            result.rows.push_back({echo.str(), "norm_drift", format_value(worst_norm),
                                   conserve ? "verified" : "measured", seed});
        }

        // FBS parity sign cases on three qubits, endpoints 0 and 2.
        const double theta = 0.37;
        {
            HWState st(3, {1});
            st.amp(1, 2) = 1.0;  // |001>, middle qubit empty -> +theta
            const HWState out = apply_fbs(st, 0, 2, theta);
            const double err = std::max(std::fabs(out.amp(1, 2) - std::cos(theta)),
                                        std::fabs(out.amp(1, 0) + std::sin(theta)));
            const bool pass = err < 1e-15;
            result.ok = result.ok && pass;
            result.rows.push_back({"fbs;n=3;pair=100/001;middle=0", "parity_sign_error",
                                   format_value(err), pass ? "verified" : "measured", seed});
        }
        {
            HWState st(3, {2});
            const unsigned s011[] = {1, 2}, s110[] = {0, 1};
            const auto &basis = st.sector_basis(2);
            st.amp(2, basis.rank(s011)) = 1.0;  // middle qubit occupied -> -theta
            const HWState out = apply_fbs(st, 0, 2, theta);
            const double err =
                std::max(std::fabs(out.amp(2, basis.rank(s011)) - std::cos(theta)),
                         std::fabs(out.amp(2, basis.rank(s110)) - std::sin(theta)));
            const bool pass = err < 1e-15;
            result.ok = result.ok && pass;
            result.rows.push_back({"fbs;n=3;pair=110/011;middle=1", "parity_sign_error",
                                   format_value(err), pass ? "verified" : "measured", seed});
        }
    }
    return result;
}

/// Full experiment dispatch. Grid cells and seeds may run concurrently;
/// rows come back in canonical order regardless.
inline RunResult run_experiment(const ExperimentConfig &cfg, unsigned threads = 1) {
    RunResult result;
    switch (cfg.mode) {
        case RunMode::table:
            result.rows = table_rows(cfg.table_name);
            break;
        case RunMode::verify:
            result = verify_rows(cfg.verify, cfg.tol_equivalence, cfg.tol_conservation, cfg.seeds);
            break;
        case RunMode::train:
        case RunMode::sweep: {
            struct Cell {
                AdapterConfig student, teacher;
                std::uint64_t seed;
            };
            std::vector<Cell> cells;
            for (std::size_t c = 0; c < cfg.axes.cells(); ++c) {
                const AdapterConfig student = detail::cell_config(cfg.d, cfg.axes, c);
                const AdapterConfig teacher =
                    cfg.teacher ? detail::cell_config(cfg.d, *cfg.teacher, 0) : student;
                for (std::uint64_t seed : cfg.seeds) cells.push_back({student, teacher, seed});
            }
            std::vector<std::vector<ReportRow>> buckets(cells.size());
            if (threads <= 1) {
                for (std::size_t i = 0; i < cells.size(); ++i)
                    detail::run_train_cell(cells[i].student, cells[i].teacher, cfg.task,
                                           cells[i].seed, buckets[i]);
            } else {
                std::vector<std::thread> pool;
                for (unsigned t = 0; t < threads; ++t)
                    pool.emplace_back([&, t]() {
                        for (std::size_t i = t; i < cells.size(); i += threads)
                            detail::run_train_cell(cells[i].student, cells[i].teacher, cfg.task,
                                                   cells[i].seed, buckets[i]);
                    });
                for (auto &th : pool) th.join();
            }
            for (auto &b : buckets)
                result.rows.insert(result.rows.end(), b.begin(), b.end());
            break;
        }
    }
    sort_rows(result.rows);
    return result;
}

/// Writes <prefix>.csv and <prefix>.json, creating parent directories.
inline void write_reports(const std::vector<ReportRow> &rows, const std::string &prefix) {
    const std::filesystem::path p(prefix);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    write_csv_report(rows, prefix + ".csv");
    write_json_report(rows, prefix + ".json");
}

}  // namespace cadapt

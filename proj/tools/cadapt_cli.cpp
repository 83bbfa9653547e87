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
//
// Experiment runner. Exit codes: 0 success, 1 verification failure,
// 2 config/parse error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cadapt/experiment.hpp"

namespace {

struct CommonFlags {
    std::vector<std::uint64_t> seeds;
    std::string out;
    double tol = -1.0;
    unsigned threads = 1;
};

void add_common(CLI::App *cmd, CommonFlags &flags) {
    cmd->add_option("--seed", flags.seeds, "seed(s), overriding the config list");
    cmd->add_option("--out", flags.out, "report path prefix (writes .csv and .json)");
    cmd->add_option("--tol", flags.tol, "equivalence tolerance override");
    cmd->add_option("--threads", flags.threads, "worker threads for grid cells")
        ->check(CLI::PositiveNumber);
}

int execute(cadapt::ExperimentConfig cfg, const CommonFlags &flags) {
    if (!flags.seeds.empty()) cfg.seeds = flags.seeds;
    if (!flags.out.empty()) cfg.output = flags.out;
    if (flags.tol > 0.0) cfg.tol_equivalence = flags.tol;

    const cadapt::RunResult result = cadapt::run_experiment(cfg, flags.threads);
    if (!cfg.output.empty()) {
        cadapt::write_reports(result.rows, cfg.output);
        std::cout << "wrote " << cfg.output << ".csv and " << cfg.output << ".json\n";
    }
    std::size_t verified = 0, skipped = 0;
    for (const auto &r : result.rows) {
        if (r.provenance == "verified") ++verified;
        if (r.metric == "status") ++skipped;
    }
    std::cout << result.rows.size() << " rows";
    if (verified) std::cout << ", " << verified << " verified";
    if (skipped) std::cout << ", " << skipped << " infeasible/diverged cells";
    std::cout << "\n";
    if (!result.ok) {
        std::cerr << "verification FAILED\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"cadapt: compound-adapter construction, training and circuit verification"};
    app.require_subcommand(1);

    std::string run_config, sweep_config, table_name;
    CommonFlags run_flags, verify_flags, table_flags, sweep_flags;
    std::size_t verify_trials = 50;

    CLI::App *run_cmd = app.add_subcommand("run", "run an experiment config file");
    run_cmd->add_option("config", run_config, "JSON experiment config")->required();
    add_common(run_cmd, run_flags);

    CLI::App *verify_cmd =
        app.add_subcommand("verify", "built-in circuit/compound equivalence suite");
    verify_cmd->add_option("--trials", verify_trials, "random trials per seed");
    add_common(verify_cmd, verify_flags);

    CLI::App *table_cmd = app.add_subcommand("table", "emit a structural table");
    table_cmd->add_option("name", table_name, "dims | params | gates")->required();
    add_common(table_cmd, table_flags);

    CLI::App *sweep_cmd = app.add_subcommand("sweep", "run a sweep config file");
    sweep_cmd->add_option("config", sweep_config, "JSON experiment config with mode=sweep")
        ->required();
    add_common(sweep_cmd, sweep_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return execute(cadapt::parse_experiment_file(run_config), run_flags);
        if (verify_cmd->parsed()) {
            cadapt::ExperimentConfig cfg;
            cfg.mode = cadapt::RunMode::verify;
            cfg.verify.trials = verify_trials;
            cfg.seeds = {1};
            return execute(std::move(cfg), verify_flags);
        }
        if (table_cmd->parsed()) {
            cadapt::ExperimentConfig cfg;
            cfg.mode = cadapt::RunMode::table;
            cfg.table_name = table_name;
            return execute(std::move(cfg), table_flags);
        }
        if (sweep_cmd->parsed()) {
            cadapt::ExperimentConfig cfg = cadapt::parse_experiment_file(sweep_config);
            if (cfg.mode != cadapt::RunMode::sweep)
                throw cadapt::ConfigError("sweep: config file must set mode=sweep");
            return execute(std::move(cfg), sweep_flags);
        }
    } catch (const cadapt::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

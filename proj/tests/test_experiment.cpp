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

#include "cadapt/experiment.hpp"

using namespace cadapt;
using nlohmann::json;

namespace {

json base_train_config() {
    return json{{"mode", "train"},
                {"adapter", {{"d", 16}, {"cfg", {1, 2}}, {"blocks", 2}}},
                {"task", {{"kind", "linear"}, {"steps", 40}, {"lr", 0.5}, {"batch", 8}}},
                {"seeds", {1, 2}}};
}

std::vector<const ReportRow *> rows_with(const std::vector<ReportRow> &rows,
                                         const std::string &metric) {
    std::vector<const ReportRow *> out;
    for (const auto &r : rows)
        if (r.metric == metric) out.push_back(&r);
    return out;
}

}  // namespace

TEST_CASE("config parsing accepts the documented schema") {
    const ExperimentConfig cfg = parse_experiment(base_train_config());
    CHECK(cfg.mode == RunMode::train);
    CHECK(cfg.d == 16);
    CHECK(cfg.axes.cfg == std::vector<std::vector<unsigned>>{{1, 2}});
    CHECK(cfg.axes.blocks == std::vector<std::size_t>{2});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("config validation") {
    SECTION("unknown top-level key") {
        json doc = base_train_config();
        doc["surprise"] = 1;
        CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
    }
    SECTION("unknown adapter key") {
        json doc = base_train_config();
        doc["adapter"]["rank"] = 4;
        CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
    }
    SECTION("unknown task key") {
        json doc = base_train_config();
        doc["task"]["optimizer"] = "adam";
        CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
    }
    SECTION("empty seeds list") {
        json doc = base_train_config();
        doc["seeds"] = json::array();
        CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
    }
    SECTION("missing mode") {
        json doc = base_train_config();
        doc.erase("mode");
        CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
    }
    SECTION("train mode rejects grids") {
        json doc = base_train_config();
        doc["adapter"]["gamma"] = {0, 1};
        CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
    }
    SECTION("unknown op and table names") {
        json doc = base_train_config();
        doc["adapter"]["op"] = "det";
        CHECK_THROWS_AS(parse_experiment(doc), std::invalid_argument);
        CHECK_THROWS_AS(table_rows("nope"), ConfigError);
    }
    SECTION("malformed JSON surfaces as a config error with position info") {
        const auto path = std::filesystem::temp_directory_path() / "cadapt_broken.json";
        std::ofstream(path) << "{ \"mode\": \"train\", }";
        CHECK_THROWS_AS(parse_experiment_file(path.string()), ConfigError);
        CHECK_THROWS_AS(parse_experiment_file("/does/not/exist.json"), ConfigError);
    }
}

TEST_CASE("dims table matches the published base sizes") {
    const auto rows = table_rows("dims");
    auto find = [&](const std::string &config) -> std::string {
        for (const auto &r : rows)
            if (r.config == config) return r.value;
        return "<missing>";
    };
    CHECK(find("b=1024;cfg=1+2") == "44");
    CHECK(find("b=256;cfg=1") == "256");
    CHECK(find("b=256;cfg=2") == "23");
    CHECK(find("b=256;cfg=3") == "12");
    CHECK(find("b=256;cfg=1+2") == "22");
    CHECK(find("b=256;cfg=1+3") == "12");
    CHECK(find("b=256;cfg=2+3") == "11");
    CHECK(find("b=256;cfg=1+2+3") == "11");
}

TEST_CASE("gates table counting laws") {
    const auto rows = table_rows("gates");
    for (const auto &r : rows) {
        if (r.config == "layout=pyramid;n=16") CHECK(r.value == "120");
        if (r.config == "layout=butterfly;n=16") CHECK(r.value == "32");
        if (r.config == "loader;n=5;K=3") CHECK(r.value == "55");
    }
}

TEST_CASE("train mode emits reproducible rows") {
    const ExperimentConfig cfg = parse_experiment(base_train_config());
    const RunResult a = run_experiment(cfg);
    const RunResult b = run_experiment(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(csv_body(a.rows) == csv_body(b.rows));
    CHECK(rows_with(a.rows, "final_loss").size() == 2);   // one per seed
    CHECK(rows_with(a.rows, "initial_loss").size() == 2);
    CHECK(rows_with(a.rows, "param_count").size() == 2);
    for (const auto *r : rows_with(a.rows, "param_count")) CHECK(r->value == "6");
}

TEST_CASE("sweep mode") {
    json doc = base_train_config();
    doc["mode"] = "sweep";
    doc["adapter"]["cfg"] = json::array({json::array({1}), json::array({1, 2})});
    doc["adapter"]["gamma"] = {0, 1};
    const ExperimentConfig cfg = parse_experiment(doc);

    SECTION("one row set per cell per seed") {
        const RunResult res = run_experiment(cfg);
        CHECK(rows_with(res.rows, "final_loss").size() == 2 * 2 * 2);
    }
    SECTION("single cell reproduces train mode exactly") {
        json single = base_train_config();
        const RunResult train_res = run_experiment(parse_experiment(single));
        json swept = single;
        swept["mode"] = "sweep";
        const RunResult sweep_res = run_experiment(parse_experiment(swept));
        CHECK(csv_body(train_res.rows) == csv_body(sweep_res.rows));
    }
    SECTION("threaded execution yields byte-identical reports") {
        const RunResult seq = run_experiment(cfg, 1);
        const RunResult par = run_experiment(cfg, 4);
        CHECK(csv_body(seq.rows) == csv_body(par.rows));
    }
    SECTION("infeasible cells are recorded, not fatal") {
        json doc2 = base_train_config();
        doc2["mode"] = "sweep";
        doc2["adapter"]["d"] = 8;
        doc2["adapter"]["blocks"] = 4;  // b = 2 cannot host order 2
        doc2["adapter"]["cfg"] = json::array({json::array({1}), json::array({1, 2})});
        const RunResult res = run_experiment(parse_experiment(doc2));
        std::size_t infeasible = 0, trained = 0;
        for (const auto &r : res.rows) {
            if (r.metric == "status" && r.value == "infeasible") ++infeasible;
            if (r.metric == "final_loss") ++trained;
        }
        CHECK(infeasible == 2);  // the {1,2} cell, both seeds
        CHECK(trained == 2);     // the {1} cell trains fine
    }
}

TEST_CASE("param_count scaling laws through the sweep surface") {
    json doc = base_train_config();
    doc["mode"] = "sweep";
    doc["task"]["steps"] = 1;
    doc["adapter"]["adapters"] = {1, 4};
    doc["seeds"] = {1};
    const RunResult res = run_experiment(parse_experiment(doc));
    const auto counts = rows_with(res.rows, "param_count");
    REQUIRE(counts.size() == 2);
    const std::uint64_t a = std::stoull(counts[0]->value);
    const std::uint64_t b = std::stoull(counts[1]->value);
    CHECK(std::max(a, b) == 4 * std::min(a, b));
}

TEST_CASE("verify mode passes and reports verified rows") {
    VerifyParams vp;
    vp.trials = 8;
    const RunResult res = verify_rows(vp, 1e-9, 1e-12, {1});
    CHECK(res.ok);
    for (const auto &r : res.rows) CHECK(r.provenance == "verified");
    CHECK(rows_with(res.rows, "compound_equivalence_error").size() == 8);
    CHECK(rows_with(res.rows, "parity_sign_error").size() == 2);
    SECTION("an absurd tolerance flips rows to measured and fails the run") {
        const RunResult strict = verify_rows(vp, 1e-30, 1e-12, {1});
        CHECK_FALSE(strict.ok);
    }
}

TEST_CASE("verify mode is deterministic per seed") {
    VerifyParams vp;
    vp.trials = 5;
    const RunResult a = verify_rows(vp, 1e-9, 1e-12, {7});
    const RunResult b = verify_rows(vp, 1e-9, 1e-12, {7});
    CHECK(csv_body(a.rows) == csv_body(b.rows));
}

TEST_CASE("layouts and angles round-trip through the config format") {
    const auto pyramid = pyramid_layout(5);
    std::vector<double> theta(pyramid.num_angles(), 0.25);
    const json doc = layout_to_json(pyramid, theta);
    const auto [parsed, angles] = layout_from_json(doc);
    CHECK(parsed.kind == LayoutKind::pyramid);
    CHECK(parsed.n == 5);
    CHECK(parsed.gates.size() == pyramid.gates.size());
    CHECK(angles == theta);

    CircuitLayout custom;
    custom.n = 4;
    custom.kind = LayoutKind::custom;
    custom.gates = {{0, 2, 0}, {1, 3, 1}};
    const json cdoc = layout_to_json(custom, {0.5, -0.5});
    const auto [cparsed, cangles] = layout_from_json(cdoc);
    REQUIRE(cparsed.gates.size() == 2);
    CHECK(cparsed.gates[1].i == 1);
    CHECK(cparsed.gates[1].j == 3);
    CHECK(cangles == std::vector<double>{0.5, -0.5});

    json bad = cdoc;
    bad["oops"] = 1;
    CHECK_THROWS_AS(layout_from_json(bad), ConfigError);
}

TEST_CASE("verify mode honors an explicit layout from the config") {
    json doc{{"mode", "verify"},
             {"verify",
              {{"trials", 2},
               {"layout", {{"kind", "pyramid"}, {"n", 4}, {"angles", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}}}},
               {"k", 2}}},
             {"seeds", {5}}};
    const ExperimentConfig cfg = parse_experiment(doc);
    REQUIRE(cfg.verify.layout.has_value());
    const RunResult res = run_experiment(cfg);
    CHECK(res.ok);
    bool saw_explicit = false;
    for (const auto &r : res.rows)
        if (r.config == "layout=pyramid;n=4;k=2;explicit") saw_explicit = true;
    CHECK(saw_explicit);
}

TEST_CASE("train mode exports the trained adapter stack on request") {
    const auto dir = std::filesystem::temp_directory_path() / "cadapt_export_test";
    std::filesystem::create_directories(dir);
    json doc = base_train_config();
    doc["task"]["export_adapter"] = (dir / "adapter").string();
    doc["seeds"] = {9};
    const RunResult res = run_experiment(parse_experiment(doc));
    REQUIRE(!res.rows.empty());
    std::ifstream in(dir / "adapter.seed9.bin", std::ios::binary);
    REQUIRE(in.good());
    const auto [cfg, delta] = read_adapter_binary(in);
    CHECK(cfg.d == 16);
    CHECK(cfg.orders == std::vector<unsigned>{1, 2});
    // Trained orthogonal stack stays orthogonal.
    CHECK(orthogonality_defect(delta) < 1e-9);

    SECTION("text format") {
        doc["task"]["export_format"] = "text";
        (void)run_experiment(parse_experiment(doc));
        std::ifstream tin(dir / "adapter.seed9.txt");
        REQUIRE(tin.good());
        std::string line;
        std::getline(tin, line);
        CHECK(line == "cadapt-adapter v1");
        std::getline(tin, line);
        CHECK(line == "d=16 r=2 cfg=1+2 op=comp gamma=0 beta=0 m=1");
        std::size_t data_rows = 0;
        while (std::getline(tin, line))
            if (!line.empty()) ++data_rows;
        CHECK(data_rows == 16);
    }
}

TEST_CASE("csv body segregates the timestamp to the header") {
    const auto rows = table_rows("dims");
    const std::string body = csv_body(rows);
    CHECK(body.find("cadapt report") == std::string::npos);
    CHECK(body.rfind("config,metric,value,provenance,seed\n", 0) == 0);
}

TEST_CASE("json report mirrors the csv rows") {
    const auto dir = std::filesystem::temp_directory_path() / "cadapt_mirror_test";
    std::filesystem::create_directories(dir);
    const auto rows = table_rows("params");
    write_reports(rows, (dir / "params").string());

    std::ifstream jin(dir / "params.json");
    json doc;
    jin >> doc;
    REQUIRE(doc.contains("rows"));
    REQUIRE(doc["rows"].size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(doc["rows"][i]["config"] == rows[i].config);
        CHECK(doc["rows"][i]["metric"] == rows[i].metric);
        CHECK(doc["rows"][i]["value"] == rows[i].value);
        CHECK(doc["rows"][i]["provenance"] == rows[i].provenance);
    }

    std::ifstream cin_(dir / "params.csv");
    std::string line;
    std::size_t data_lines = 0;
    bool saw_header_comment = false;
    while (std::getline(cin_, line)) {
        if (line.starts_with("#")) saw_header_comment = true;
        else if (!line.empty() && line != "config,metric,value,provenance,seed") ++data_lines;
    }
    CHECK(saw_header_comment);
    CHECK(data_lines == rows.size());
}

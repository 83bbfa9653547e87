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
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace cadapt {

/// One result row. Every row is reproducible from (config echo, seed);
/// provenance records whether the value was measured by running something,
/// counted exactly, or verified against an oracle.
struct ReportRow {
    std::string config;
    std::string metric;
    std::string value;
    std::string provenance;  // measured | counted | verified
    std::uint64_t seed = 0;
};

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_value(std::uint64_t v) { return std::to_string(v); }

/// Canonical ordering: by config echo, then metric, then seed. Output order
/// is therefore independent of completion order under concurrency.
inline void sort_rows(std::vector<ReportRow> &rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow &a, const ReportRow &b) {
        if (a.config != b.config) return a.config < b.config;
        if (a.metric != b.metric) return a.metric < b.metric;
        return a.seed < b.seed;
    });
}

/// CSV body: deterministic for a fixed row set. The timestamp is segregated
/// to a leading comment line so reruns produce byte-identical bodies.
inline std::string csv_body(const std::vector<ReportRow> &rows) {
    std::ostringstream os;
    os << "config,metric,value,provenance,seed\n";
    for (const auto &r : rows)
        os << '"' << r.config << "\"," << r.metric << ',' << r.value << ',' << r.provenance
           << ',' << r.seed << '\n';
    return os.str();
}

inline std::string iso_timestamp() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_csv_report(const std::vector<ReportRow> &rows, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open report file: " + path);
    out << "# cadapt report " << iso_timestamp() << "\n";
    out << csv_body(rows);
}

inline nlohmann::json rows_json(const std::vector<ReportRow> &rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &r : rows)
        arr.push_back({{"config", r.config},
                       {"metric", r.metric},
                       {"value", r.value},
                       {"provenance", r.provenance},
                       {"seed", r.seed}});
    return arr;
}

inline void write_json_report(const std::vector<ReportRow> &rows, const std::string &path) {
    nlohmann::json doc;
    doc["meta"] = {{"tool", "cadapt"}, {"generated", iso_timestamp()}};
    doc["rows"] = rows_json(rows);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open report file: " + path);
    out << doc.dump(2) << "\n";
}

}  // namespace cadapt

/*
 * Copyright 2026 The splitarch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "splitarch/error.hpp"
#include "splitarch/harness.hpp"

using namespace splitarch;

namespace {

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kConfigError = 2;

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

int report_outcome(const MetricsReport& r)
{
    for (const std::string& e : r.event_errors)
        spdlog::warn("event error: {}", e);
    for (const std::string& f : r.assertion_failures)
        spdlog::error("assertion failed: {}", f);
    return r.assertion_failures.empty() ? kOk : kAssertionFailed;
}

int cmd_run(const std::string& path, std::uint64_t seed, const std::string& out, const std::string& trace)
{
    const Scenario s = parse_scenario(path);
    spdlog::info("running {} (seed {}, horizon {} us)", s.name, seed, s.horizon_us);
    const RunResult r = run_scenario(s, seed);
    const std::string csv = format_csv(r.report);
    if (out.empty())
        std::cout << csv;
    else
        write_text_file(out, csv);
    if (!trace.empty())
        write_text_file(trace, format_trace(r.trace));
    spdlog::info("{} metric rows, {} trace records", r.report.rows.size(), r.trace.size());
    return report_outcome(r.report);
}

int cmd_sweep(const std::string& path, std::uint64_t seed, const std::string& param, const std::string& out_dir)
{
    const auto eq = param.find('=');
    if (eq == std::string::npos || eq == 0)
        throw Error(ErrorCode::ConfigError, "--param", "expected key=v1,v2,...");
    const std::string key = param.substr(0, eq);
    const std::vector<std::string> values = split(param.substr(eq + 1), ',');
    const auto doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::ConfigError, "$", "not valid JSON");
    const auto points = run_sweep(doc, key, values, seed);
    std::filesystem::create_directories(out_dir);
    MetricsReport merged;
    merged.seed = seed;
    int status = kOk;
    for (const SweepPoint& p : points) {
        write_text_file(out_dir + "/" + key + "=" + p.value + ".csv", format_csv(p.result.report));
        for (MetricRow row : p.result.report.rows) {
            row.subject = key + "=" + p.value + "/" + row.subject;
            merged.rows.push_back(row);
        }
        if (report_outcome(p.result.report) != kOk)
            status = kAssertionFailed;
        spdlog::info("{}={}: {} rows", key, p.value, p.result.report.rows.size());
    }
    std::sort(merged.rows.begin(), merged.rows.end());
    merged.config_hash = points.empty() ? "" : points.front().result.report.config_hash;
    write_text_file(out_dir + "/sweep.csv", format_csv(merged));
    return status;
}

int cmd_bras(const std::string& path, const std::vector<std::string>& enable, const std::vector<std::string>& disable,
             const std::string& out)
{
    auto doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::ConfigError, "$", "not valid JSON");
    parse_scenario_json(doc, "");
    if (!doc.contains("bras"))
        throw Error(ErrorCode::ConfigError, "bras", "scenario has no bras section");
    auto& ds = doc["bras"]["descriptors"];
    auto set_enabled = [&](const std::string& id, bool on) {
        for (auto& d : ds) {
            if (d["id"] == id) {
                d["enabled"] = on;
                return;
            }
        }
        throw Error(ErrorCode::UnknownBras, id);
    };
    for (const std::string& id : enable)
        set_enabled(id, true);
    for (const std::string& id : disable)
        set_enabled(id, false);
    const Scenario s = parse_scenario_json(doc, "");
    std::cout << "id,host,priority,enabled\n";
    for (const BrasDescriptorSpec& d : s.bras->descriptors)
        std::cout << d.id << "," << d.host << "," << d.priority << "," << (d.enabled ? "yes" : "no") << "\n";
    if (!out.empty())
        write_text_file(out, doc.dump(2) + "\n");
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"splitarch: split-architecture network simulator"};
    app.require_subcommand(1);

    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    std::string scenario;
    std::uint64_t seed = 1;
    std::string out;
    std::string trace;

    auto* run = app.add_subcommand("run", "run a scenario and write its metrics as CSV");
    run->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "random seed");
    run->add_option("--out", out, "metrics CSV path (stdout if omitted)");
    run->add_option("--trace", trace, "JSON-lines trace path");
    run->add_option("--log-level", log_level)->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    auto* validate = app.add_subcommand("validate", "check a scenario file without running it");
    validate->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);

    std::string param;
    auto* sweep = app.add_subcommand("sweep", "run a scenario over a range of values for one key");
    sweep->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
    sweep->add_option("--param", param, "dotted.key=v1,v2,...")->required();
    sweep->add_option("--out", out, "output directory")->required();
    sweep->add_option("--seed", seed, "random seed");

    std::string dot;
    auto* topo = app.add_subcommand("topo", "render the topology as Graphviz");
    topo->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
    topo->add_option("--dot", dot, "output .dot path")->required();

    std::vector<std::string> enable;
    std::vector<std::string> disable;
    auto* bras = app.add_subcommand("bras", "list BRAS descriptors, optionally toggling them");
    bras->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
    bras->add_option("--enable", enable, "descriptor id to enable");
    bras->add_option("--disable", disable, "descriptor id to disable");
    bras->add_option("--out", out, "write the edited scenario here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    auto logger = spdlog::stderr_color_st("splitarch");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("%l: %v");
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run)
            return cmd_run(scenario, seed, out, trace);
        if (*validate) {
            const Scenario s = parse_scenario(scenario);
            std::cout << s.name << ": ok (" << s.topology.nodes.size() << " nodes, " << s.events.size()
                      << " events)\n";
            return kOk;
        }
        if (*sweep)
            return cmd_sweep(scenario, seed, param, out);
        if (*topo) {
            write_text_file(dot, format_dot(parse_scenario(scenario)));
            return kOk;
        }
        if (*bras)
            return cmd_bras(scenario, enable, disable, out);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return e.code() == ErrorCode::ConfigError ? kConfigError : kAssertionFailed;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    }
    return kOk;
}

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

#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "splitarch/error.hpp"
#include "splitarch/harness.hpp"
#include "splitarch/rng.hpp"

using namespace splitarch;
using nlohmann::json;

namespace {

const char* kMinimal = R"({
  "nodes": [{"id": "a"}, {"id": "b"}],
  "links": [{"a": "a", "b": "b"}],
  "controllers": [{"id": "tc", "domain": ["a", "b"]}],
  "horizon_us": 1000
})";

json minimal_doc()
{
    return json::parse(kMinimal);
}

std::string config_error_path(const json& doc)
{
    try {
        parse_scenario_json(doc, "");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        return e.context();
    }
    return "<accepted>";
}

json scenario_doc(const std::string& name)
{
    return json::parse(read_text_file(std::string(SPLITARCH_SCENARIO_DIR) + "/" + name + ".json"));
}

MetricsReport run_doc(const json& doc, std::uint64_t seed = 1)
{
    return run_scenario(parse_scenario_json(doc, "test"), seed).report;
}

} // namespace

TEST_CASE("minimal scenario gets every default")
{
    const Scenario s = parse_scenario_text(kMinimal);
    REQUIRE(s.topology.nodes.size() == 2);
    CHECK_FALSE(s.topology.nodes[0].processing);
    REQUIRE(s.topology.links.size() == 1);
    CHECK(s.topology.links[0].id == "a-b");
    CHECK(s.topology.links[0].delay_us == 100);
    CHECK(s.topology.links[0].weight == 1);
    REQUIRE(s.controllers.size() == 1);
    CHECK(s.controllers[0].latency_us == 1000);
    CHECK(s.controllers[0].per_message_proc_us == 100);
    CHECK(s.controllers[0].discovery_timeout_us == 20000);
    CHECK(s.oam.interval_us == 3333);
    CHECK(s.oam.k == 3);
    CHECK_FALSE(s.bras);
    CHECK(s.events.empty());
    CHECK(s.config_hash.size() == 16);
}

TEST_CASE("configuration errors name the offending json path")
{
    json late = minimal_doc();
    late["events"] = json::array({{{"at_us", 5000}, {"action", "fail_link"}, {"link", "a-b"}}});
    CHECK(config_error_path(late) == "events[0].at_us");

    json verb = minimal_doc();
    verb["events"] = json::array({{{"at_us", 1}, {"action", "fail_link"}, {"link", "a-b"}},
                                  {{"at_us", 2}, {"action", "restore_link"}, {"link", "a-b"}},
                                  {{"at_us", 3}, {"action", "reboot"}}});
    CHECK(config_error_path(verb) == "events[2].action");

    json dangling = minimal_doc();
    dangling["links"][0]["b"] = "z";
    CHECK(config_error_path(dangling) == "links[0].b");

    json stray = minimal_doc();
    stray["controllers"][0]["latency"] = 5;
    CHECK(config_error_path(stray) == "controllers[0].latency");

    json twice = minimal_doc();
    twice["controllers"].push_back({{"id", "tc2"}, {"domain", {"b"}}});
    CHECK(config_error_path(twice) == "controllers[1].domain[0]");

    CHECK_THROWS_AS(parse_scenario_text("{ not json"), Error);
}

TEST_CASE("csv output")
{
    SUBCASE("empty report is the header alone")
    {
        MetricsReport r;
        CHECK(format_csv(r) == "metric,subject,value_us,seed,config_hash\n");
    }
    SUBCASE("two probes give two restoration rows plus channel counts, sorted")
    {
        json doc = scenario_doc("minimal");
        doc["probes"].push_back({{"id", "q"},
                                 {"src", {{"node", "b"}, {"port", 100}}},
                                 {"sink", {{"node", "a"}, {"port", 100}}},
                                 {"start_us", 40000},
                                 {"stop_us", 60000}});
        const MetricsReport r = run_doc(doc);
        int restoration = 0;
        int channels = 0;
        for (const MetricRow& row : r.rows) {
            restoration += row.metric == "restoration";
            channels += row.metric == "messages";
        }
        CHECK(restoration == 2);
        CHECK(channels == 2);
        CHECK(std::is_sorted(r.rows.begin(), r.rows.end()));
        CHECK(r.value("restoration", "q") == 0);
    }
}

TEST_CASE("same scenario and seed give byte-identical output")
{
    const Scenario s = parse_scenario(std::string(SPLITARCH_SCENARIO_DIR) + "/ac7_internal_failure.json");
    const RunResult a = run_scenario(s, 42);
    const RunResult b = run_scenario(s, 42);
    CHECK(format_csv(a.report) == format_csv(b.report));
    CHECK(format_trace(a.trace) == format_trace(b.trace));
    CHECK(format_csv(a.report).find(",42," + s.config_hash) != std::string::npos);
}

TEST_CASE("assertions and event errors are reported, not thrown")
{
    json doc = scenario_doc("minimal");
    doc["events"].push_back({{"at_us", 70000}, {"action", "assert_metric"}, {"metric", "probe_rx"},
                             {"subject", "p"}, {"op", "gt"}, {"value", 1000}});
    doc["events"].push_back({{"at_us", 70000}, {"action", "enable_bras"}, {"bras", "B9"}});
    CHECK(config_error_path(doc) == "events[4].bras");
    doc["events"].erase(4);
    doc["events"].push_back({{"at_us", 10}, {"action", "create_pw"},
                             {"a", {{"node", "a"}, {"port", 100}}}, {"b", {{"node", "a"}, {"port", 7}}}});
    const MetricsReport r = run_doc(doc);
    REQUIRE(r.assertion_failures.size() == 1);
    CHECK(r.assertion_failures[0].rfind("events[3]", 0) == 0);
    REQUIRE(r.event_errors.size() == 1);
    CHECK(r.value("event_error", "events[4]").has_value());
}

TEST_CASE("repeated PADI from one access port reuses its pseudowire")
{
    json doc = scenario_doc("ac5_floating_bras");
    json events = json::array();
    for (const json& e : doc["events"]) {
        if (e["action"] == "disable_bras" || (e["action"] == "assert_metric" && e["at_us"] == 400000))
            continue;
        events.push_back(e);
    }
    doc["events"] = events;
    const MetricsReport r = run_doc(doc);
    CHECK(r.assertion_failures.empty());
    CHECK(r.value("pw_created", "steering") == 1);
    int established = 0;
    for (const MetricRow& row : r.rows)
        established += row.metric == "service_established" && row.subject == "c1@B1";
    CHECK(established == 1);
    CHECK(r.value("sessions_open", "B1") == 1);
}

TEST_CASE("a customer always lands on the best enabled BRAS")
{
    Rng rng(55);
    const json base = scenario_doc("ac5_floating_bras");
    for (int round = 0; round < 6; ++round) {
        json doc = base;
        doc["probes"] = json::array();
        doc["horizon_us"] = 100000;
        doc["events"] = json::array({{{"at_us", 10000}, {"action", "send_padi"}, {"customer", "c1"}}});
        auto& ds = doc["bras"]["descriptors"];
        ds.push_back({{"id", "B3"}, {"host", "n2"}, {"priority", 0}, {"enabled", true}});
        std::vector<int> prio = {1, 2, 3};
        for (std::size_t i = prio.size(); i > 1; --i)
            std::swap(prio[i - 1], prio[rng.uniform(0, i - 1)]);
        std::string best;
        int best_prio = -1;
        int enabled = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            ds[i]["priority"] = prio[i];
            const bool on = enabled == 0 || rng.uniform(0, 1) == 1;
            ds[i]["enabled"] = on;
            enabled += on;
            if (on && prio[i] > best_prio) {
                best_prio = prio[i];
                best = ds[i]["id"];
            }
        }
        const MetricsReport r = run_doc(doc);
        CAPTURE(round);
        CHECK(r.value("service_established", "c1@" + best).has_value());
        CHECK(r.value("pw_created", "steering") == 1);
    }
}

TEST_CASE("overrides reach into arrays and keep json types")
{
    json doc = minimal_doc();
    doc = apply_override(doc, "links.0.weight", "7");
    doc = apply_override(doc, "controllers.0.id", "ctl");
    CHECK(doc["links"][0]["weight"] == 7);
    CHECK(doc["controllers"][0]["id"] == "ctl");
    CHECK_THROWS_AS(apply_override(doc, "links.4.weight", "1"), Error);
}

TEST_CASE("least-squares fit against a hand computation")
{
    const LinearFit f = fit_line({0, 1, 2, 3}, {1, 3, 2, 5});
    CHECK(f.slope == doctest::Approx(1.1));
    CHECK(f.intercept == doctest::Approx(1.1));
    CHECK(f.r2 == doctest::Approx(1.0 - 2.7 / 8.75));
    CHECK_THROWS_AS(fit_line({1}, {1}), Error);
}

TEST_CASE("every shipped scenario runs clean and within budget")
{
    for (const auto& entry : std::filesystem::directory_iterator(SPLITARCH_SCENARIO_DIR)) {
        if (entry.path().extension() != ".json")
            continue;
        CAPTURE(entry.path().filename().string());
        const auto t0 = std::chrono::steady_clock::now();
        const RunResult r = run_scenario(parse_scenario(entry.path().string()), 1);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(r.report.assertion_failures.empty());
        CHECK(r.report.event_errors.empty());
        CHECK(secs < 5.0);
    }
}

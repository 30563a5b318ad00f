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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitarch/brasctl.hpp"
#include "splitarch/simnet.hpp"
#include "splitarch/transportctl.hpp"

namespace splitarch {

struct AttachmentSpec {
    std::string node;
    std::optional<PortId> port;
    std::optional<std::uint16_t> vlan;
};

struct ControllerSpec {
    std::string id;
    std::vector<std::string> domain;
    SimTime latency_us = 1000;
    SimTime per_message_proc_us = 100;
    SimTime discovery_timeout_us = 20000;
    bool parallel_paths = true;
};

struct CorePeerSpec {
    std::string id;
    std::string controller;
    std::string border_node;
    std::optional<PortId> port;
    MacAddr mac{};
    Ipv4Addr ip = 0;
    SimTime delay_us = 100;
    SimTime latency_us = 1000;
    SimTime per_message_proc_us = 100;
};

struct CustomerSpec {
    std::string id;
    std::string access_node;
    std::optional<PortId> port;
    MacAddr mac{};
    std::string echo_target; // core peer id
    SimTime delay_us = 100;
};

struct BrasDescriptorSpec {
    std::string id;
    std::string host;
    int priority = 0;
    bool enabled = false;
    MacAddr mac{};
};

struct BrasSpec {
    std::vector<BrasDescriptorSpec> descriptors;
    Ipv4Prefix pool{};
    std::string gateway_node;
    std::optional<PortId> gateway_port;
    std::optional<std::vector<MacAddr>> allow_list;
    SimTime latency_us = 1000;
    SimTime per_message_proc_us = 100;
};

struct OamSpec {
    SimTime interval_us = 3333;
    std::uint32_t k = 3;
};

struct ProbeSpec {
    std::string id;
    std::optional<AttachmentSpec> src;
    std::optional<AttachmentSpec> sink;
    std::string customer; // echo probe through a PPPoE session instead
    SimTime period_us = 1000;
    std::optional<SimTime> start_us;
    std::optional<SimTime> stop_us;
    std::optional<std::uint16_t> vlan;
};

struct EventSpec {
    SimTime at_us = 0;
    std::string action;
    nlohmann::json args;
};

struct Scenario {
    std::string name;
    TopologyConfig topology;
    std::vector<ControllerSpec> controllers;
    std::vector<CorePeerSpec> core_peers;
    std::vector<CustomerSpec> customers;
    std::optional<BrasSpec> bras;
    OamSpec oam;
    std::vector<ProbeSpec> probes;
    std::vector<EventSpec> events;
    SimTime horizon_us = 0;
    std::string config_hash;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Validates a scenario document; ConfigError carries the offending path.
Scenario parse_scenario_json(const nlohmann::json& doc, std::string config_hash);
Scenario parse_scenario_text(std::string_view text);
Scenario parse_scenario(const std::string& path);

struct MetricRow {
    std::string metric;
    std::string subject;
    std::int64_t value_us = 0;

    auto operator<=>(const MetricRow&) const = default;
};

struct MetricsReport {
    std::vector<MetricRow> rows; // sorted
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<std::string> assertion_failures;
    std::vector<std::string> event_errors;

    std::optional<std::int64_t> value(const std::string& metric, const std::string& subject) const;
};

struct RunResult {
    MetricsReport report;
    std::vector<TraceRecord> trace;
};

RunResult run_scenario(const Scenario& s, std::uint64_t seed);

std::string format_csv(const MetricsReport& report);
std::string format_trace(const std::vector<TraceRecord>& trace);
std::string format_dot(const Scenario& s);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Replaces the value at a dotted path such as `events.2.count`; the new
/// value is read as JSON when it parses, else as a string.
nlohmann::json apply_override(nlohmann::json doc, const std::string& key, const std::string& value);

struct SweepPoint {
    std::string value;
    RunResult result;
};

/// Runs one scenario per value, in parallel; results keep the value order.
std::vector<SweepPoint> run_sweep(const nlohmann::json& doc, const std::string& key,
                                  const std::vector<std::string>& values, std::uint64_t seed);

/// Ordinary least squares fit of y on x.
struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace splitarch

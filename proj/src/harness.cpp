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

#include "splitarch/harness.hpp"

#include <omp.h>

#include <gsl/gsl_fit.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "splitarch/error.hpp"

namespace splitarch {

using nlohmann::json;

namespace {

// ---- scenario reading -------------------------------------------------------

std::string child(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

[[noreturn]] void config_error(const std::string& path, const std::string& why)
{
    throw Error(ErrorCode::ConfigError, path, why);
}

void expect_object(const json& v, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!v.is_object())
        config_error(path, "expected an object");
    for (const auto& [k, val] : v.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* allowed) { return k == allowed; }))
            config_error(child(path, k), "unknown key");
    }
}

const json& array_at(const json& obj, const char* key, const std::string& path)
{
    static const json empty = json::array();
    if (!obj.contains(key))
        return empty;
    const json& v = obj.at(key);
    if (!v.is_array())
        config_error(child(path, key), "expected an array");
    return v;
}

std::string str(const json& v, const std::string& path)
{
    if (!v.is_string())
        config_error(path, "expected a string");
    return v.get<std::string>();
}

std::int64_t integer(const json& v, const std::string& path, std::int64_t lo, std::int64_t hi)
{
    if (!v.is_number_integer())
        config_error(path, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi)
        config_error(path, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

bool boolean(const json& v, const std::string& path)
{
    if (!v.is_boolean())
        config_error(path, "expected true or false");
    return v.get<bool>();
}

std::string req_str(const json& obj, const char* key, const std::string& path)
{
    if (!obj.contains(key))
        config_error(child(path, key), "required");
    return str(obj.at(key), child(path, key));
}

std::int64_t int_or(const json& obj, const char* key, const std::string& path, std::int64_t dflt,
                    std::int64_t lo, std::int64_t hi)
{
    if (!obj.contains(key))
        return dflt;
    return integer(obj.at(key), child(path, key), lo, hi);
}

template <class T>
std::optional<T> opt_int(const json& obj, const char* key, const std::string& path, std::int64_t lo,
                         std::int64_t hi)
{
    if (!obj.contains(key))
        return std::nullopt;
    return static_cast<T>(integer(obj.at(key), child(path, key), lo, hi));
}

MacAddr mac_field(const json& obj, const char* key, const std::string& path, std::optional<MacAddr> dflt = {})
{
    if (!obj.contains(key)) {
        if (dflt)
            return *dflt;
        config_error(child(path, key), "required");
    }
    try {
        return parse_mac(str(obj.at(key), child(path, key)));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError)
            throw;
        config_error(child(path, key), "not a MAC address");
    }
}

Ipv4Addr ip_field(const json& obj, const char* key, const std::string& path)
{
    try {
        return parse_ipv4(req_str(obj, key, path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError)
            throw;
        config_error(child(path, key), "not an IPv4 address");
    }
}

constexpr std::int64_t kMaxTime = std::int64_t{1} << 50;
constexpr std::int64_t kMaxPort = 0xffff;

const std::set<std::string>& actions()
{
    static const std::set<std::string> verbs = {"fail_link",    "restore_link",  "enable_bras", "disable_bras",
                                                "send_padi",    "start_probe",   "stop_probe",  "create_pw",
                                                "setup_e2e_lsp", "assert_metric"};
    return verbs;
}

AttachmentSpec attachment(const json& v, const std::string& path, const std::set<std::string>& nodes)
{
    expect_object(v, path, {"node", "port", "vlan"});
    AttachmentSpec a;
    a.node = req_str(v, "node", path);
    if (!nodes.contains(a.node))
        config_error(child(path, "node"), "unknown node " + a.node);
    a.port = opt_int<PortId>(v, "port", path, 1, kMaxPort);
    a.vlan = opt_int<std::uint16_t>(v, "vlan", path, 1, 4094);
    return a;
}

struct Names {
    std::set<std::string> nodes;
    std::set<std::string> links;
    std::set<std::string> controllers;
    std::set<std::string> peers;
    std::set<std::string> customers;
    std::set<std::string> bras;
    std::set<std::string> probes;
};

void check_ref(const std::set<std::string>& known, const std::string& value, const std::string& path,
               const char* what)
{
    if (!known.contains(value))
        config_error(path, std::string("unknown ") + what + " " + value);
}

void validate_event(EventSpec& e, const json& v, const std::string& path, const Names& names)
{
    const json& a = e.args;
    auto need = [&](const char* key, const std::set<std::string>& known, const char* what) {
        check_ref(known, req_str(a, key, path), child(path, key), what);
    };
    if (e.action == "fail_link" || e.action == "restore_link") {
        expect_object(v, path, {"at_us", "action", "link"});
        need("link", names.links, "link");
    } else if (e.action == "enable_bras" || e.action == "disable_bras") {
        expect_object(v, path, {"at_us", "action", "bras"});
        need("bras", names.bras, "bras");
    } else if (e.action == "send_padi") {
        expect_object(v, path, {"at_us", "action", "customer"});
        need("customer", names.customers, "customer");
    } else if (e.action == "start_probe" || e.action == "stop_probe") {
        expect_object(v, path, {"at_us", "action", "probe"});
        need("probe", names.probes, "probe");
    } else if (e.action == "create_pw") {
        expect_object(v, path, {"at_us", "action", "a", "b", "count", "protection", "vlan_base"});
        for (const char* end : {"a", "b"}) {
            if (!a.contains(end))
                config_error(child(path, end), "required");
            attachment(a.at(end), child(path, end), names.nodes);
        }
        int_or(a, "count", path, 1, 1, 4000);
        int_or(a, "vlan_base", path, 1, 1, 4094);
        if (a.contains("protection")) {
            const std::string p = str(a.at("protection"), child(path, "protection"));
            if (p != "auto" && p != "none" && p != "protected")
                config_error(child(path, "protection"), "expected auto, none or protected");
        }
    } else if (e.action == "setup_e2e_lsp") {
        expect_object(v, path, {"at_us", "action", "controller", "role", "endpoint", "border", "border_b",
                                "remote_label", "remote_label_b"});
        const std::string role = a.contains("role") ? str(a.at("role"), child(path, "role")) : "head";
        if (role != "head" && role != "tail" && role != "transit")
            config_error(child(path, "role"), "expected head, tail or transit");
        need("border", names.peers, "core peer");
        if (role == "transit")
            need("border_b", names.peers, "core peer");
        else
            need("endpoint", names.nodes, "node");
        if (a.contains("controller"))
            need("controller", names.controllers, "controller");
        int_or(a, "remote_label", path, 0, 0, (1 << 20) - 1);
        int_or(a, "remote_label_b", path, 0, 0, (1 << 20) - 1);
    } else if (e.action == "assert_metric") {
        expect_object(v, path, {"at_us", "action", "metric", "subject", "op", "value"});
        req_str(a, "metric", path);
        const std::string op = req_str(a, "op", path);
        static const std::set<std::string> ops = {"lt", "le", "gt", "ge", "eq", "exists"};
        if (!ops.contains(op))
            config_error(child(path, "op"), "unknown comparison " + op);
        if (op != "exists") {
            if (!a.contains("value"))
                config_error(child(path, "value"), "required");
            integer(a.at("value"), child(path, "value"), INT64_MIN, INT64_MAX);
        }
        if (a.contains("subject"))
            str(a.at("subject"), child(path, "subject"));
    }
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

Scenario parse_scenario_json(const json& doc, std::string config_hash)
{
    expect_object(doc, "", {"name", "nodes", "links", "controllers", "core_peers", "customers", "bras", "oam",
                            "probes", "events", "horizon_us"});
    Scenario s;
    s.config_hash = std::move(config_hash);
    if (doc.contains("name"))
        s.name = str(doc.at("name"), "name");
    Names names;

    const json& nodes = array_at(doc, "nodes", "");
    if (nodes.empty())
        config_error("nodes", "at least one node is required");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string p = index("nodes", i);
        expect_object(nodes[i], p, {"id", "processing", "edge_ports"});
        NodeConfig n;
        n.id = req_str(nodes[i], "id", p);
        if (nodes[i].contains("processing"))
            n.processing = boolean(nodes[i].at("processing"), child(p, "processing"));
        const json& ports = array_at(nodes[i], "edge_ports", p);
        for (std::size_t k = 0; k < ports.size(); ++k)
            n.edge_ports.push_back(static_cast<PortId>(integer(ports[k], index(child(p, "edge_ports"), k), 1, kMaxPort)));
        if (!names.nodes.insert(n.id).second)
            config_error(child(p, "id"), "duplicate node " + n.id);
        s.topology.nodes.push_back(std::move(n));
    }

    const json& links = array_at(doc, "links", "");
    for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string p = index("links", i);
        expect_object(links[i], p, {"id", "a", "b", "port_a", "port_b", "delay_us", "weight"});
        LinkConfig l;
        l.a = req_str(links[i], "a", p);
        l.b = req_str(links[i], "b", p);
        check_ref(names.nodes, l.a, child(p, "a"), "node");
        check_ref(names.nodes, l.b, child(p, "b"), "node");
        l.id = links[i].contains("id") ? str(links[i].at("id"), child(p, "id")) : l.a + "-" + l.b;
        l.port_a = opt_int<PortId>(links[i], "port_a", p, 1, kMaxPort);
        l.port_b = opt_int<PortId>(links[i], "port_b", p, 1, kMaxPort);
        l.delay_us = int_or(links[i], "delay_us", p, 100, 1, kMaxTime);
        l.weight = static_cast<std::uint32_t>(int_or(links[i], "weight", p, 1, 1, 1 << 20));
        if (!names.links.insert(l.id).second)
            config_error(child(p, "id"), "duplicate link " + l.id);
        s.topology.links.push_back(std::move(l));
    }

    const json& ctls = array_at(doc, "controllers", "");
    if (ctls.empty())
        config_error("controllers", "at least one controller is required");
    std::set<std::string> owned;
    for (std::size_t i = 0; i < ctls.size(); ++i) {
        const std::string p = index("controllers", i);
        expect_object(ctls[i], p, {"id", "domain", "latency_us", "per_message_proc_us", "discovery_timeout_us",
                                   "parallel_paths"});
        ControllerSpec c;
        c.id = req_str(ctls[i], "id", p);
        if (!ctls[i].contains("domain"))
            config_error(child(p, "domain"), "required");
        const json& dom = array_at(ctls[i], "domain", p);
        for (std::size_t k = 0; k < dom.size(); ++k) {
            const std::string dp = index(child(p, "domain"), k);
            const std::string n = str(dom[k], dp);
            check_ref(names.nodes, n, dp, "node");
            if (!owned.insert(n).second)
                config_error(dp, "node " + n + " already belongs to a controller");
            c.domain.push_back(n);
        }
        c.latency_us = int_or(ctls[i], "latency_us", p, 1000, 1, kMaxTime);
        c.per_message_proc_us = int_or(ctls[i], "per_message_proc_us", p, 100, 0, kMaxTime);
        c.discovery_timeout_us = int_or(ctls[i], "discovery_timeout_us", p, 20000, 1, kMaxTime);
        if (ctls[i].contains("parallel_paths"))
            c.parallel_paths = boolean(ctls[i].at("parallel_paths"), child(p, "parallel_paths"));
        if (!names.controllers.insert(c.id).second || names.nodes.contains(c.id))
            config_error(child(p, "id"), "duplicate name " + c.id);
        s.controllers.push_back(std::move(c));
    }

    auto owner_of = [&](const std::string& node) -> std::string {
        for (const ControllerSpec& c : s.controllers) {
            if (std::find(c.domain.begin(), c.domain.end(), node) != c.domain.end())
                return c.id;
        }
        return "";
    };
    auto fresh_name = [&](const std::string& name, const std::string& path) {
        if (names.nodes.contains(name) || names.controllers.contains(name) || names.peers.contains(name) ||
            names.customers.contains(name) || names.bras.contains(name))
            config_error(path, "duplicate name " + name);
    };

    const json& peers = array_at(doc, "core_peers", "");
    for (std::size_t i = 0; i < peers.size(); ++i) {
        const std::string p = index("core_peers", i);
        expect_object(peers[i], p, {"id", "controller", "border_node", "port", "mac", "ip", "delay_us",
                                    "latency_us", "per_message_proc_us"});
        CorePeerSpec c;
        c.id = req_str(peers[i], "id", p);
        fresh_name(c.id, child(p, "id"));
        c.border_node = req_str(peers[i], "border_node", p);
        check_ref(names.nodes, c.border_node, child(p, "border_node"), "node");
        c.controller = peers[i].contains("controller") ? str(peers[i].at("controller"), child(p, "controller"))
                                                       : owner_of(c.border_node);
        check_ref(names.controllers, c.controller, child(p, "controller"), "controller");
        if (owner_of(c.border_node) != c.controller)
            config_error(child(p, "border_node"), "not in the domain of " + c.controller);
        c.port = opt_int<PortId>(peers[i], "port", p, 1, kMaxPort);
        c.mac = mac_field(peers[i], "mac", p, mac_from_u64(0x0c0000000001 + i));
        c.ip = peers[i].contains("ip") ? ip_field(peers[i], "ip", p) : 0x0a640001 + static_cast<Ipv4Addr>(i);
        c.delay_us = int_or(peers[i], "delay_us", p, 100, 1, kMaxTime);
        c.latency_us = int_or(peers[i], "latency_us", p, 1000, 1, kMaxTime);
        c.per_message_proc_us = int_or(peers[i], "per_message_proc_us", p, 100, 0, kMaxTime);
        names.peers.insert(c.id);
        names.links.insert(c.border_node + "-" + c.id);
        s.core_peers.push_back(std::move(c));
    }

    const json& custs = array_at(doc, "customers", "");
    for (std::size_t i = 0; i < custs.size(); ++i) {
        const std::string p = index("customers", i);
        expect_object(custs[i], p, {"id", "access_node", "port", "mac", "echo_target", "delay_us"});
        CustomerSpec c;
        c.id = req_str(custs[i], "id", p);
        fresh_name(c.id, child(p, "id"));
        c.access_node = req_str(custs[i], "access_node", p);
        check_ref(names.nodes, c.access_node, child(p, "access_node"), "node");
        c.port = opt_int<PortId>(custs[i], "port", p, 1, kMaxPort);
        c.mac = mac_field(custs[i], "mac", p, mac_from_u64(0x02cc00000001 + i));
        if (custs[i].contains("echo_target")) {
            c.echo_target = str(custs[i].at("echo_target"), child(p, "echo_target"));
            check_ref(names.peers, c.echo_target, child(p, "echo_target"), "core peer");
        } else if (!s.core_peers.empty()) {
            c.echo_target = s.core_peers.front().id;
        }
        c.delay_us = int_or(custs[i], "delay_us", p, 100, 1, kMaxTime);
        names.customers.insert(c.id);
        names.links.insert(c.access_node + "-" + c.id);
        s.customers.push_back(std::move(c));
    }

    if (doc.contains("bras")) {
        const json& b = doc.at("bras");
        expect_object(b, "bras", {"descriptors", "pool", "gateway", "allow_list", "latency_us", "per_message_proc_us"});
        BrasSpec bs;
        const json& ds = array_at(b, "descriptors", "bras");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::string p = index("bras.descriptors", i);
            expect_object(ds[i], p, {"id", "host", "priority", "enabled", "mac"});
            BrasDescriptorSpec d;
            d.id = req_str(ds[i], "id", p);
            fresh_name(d.id, child(p, "id"));
            d.host = req_str(ds[i], "host", p);
            check_ref(names.nodes, d.host, child(p, "host"), "node");
            if (!ds[i].contains("priority"))
                config_error(child(p, "priority"), "required");
            d.priority = static_cast<int>(integer(ds[i].at("priority"), child(p, "priority"), INT32_MIN, INT32_MAX));
            if (ds[i].contains("enabled"))
                d.enabled = boolean(ds[i].at("enabled"), child(p, "enabled"));
            d.mac = mac_field(ds[i], "mac", p, mac_from_u64(0x02bb00000001 + i));
            names.bras.insert(d.id);
            bs.descriptors.push_back(std::move(d));
        }
        try {
            bs.pool = parse_prefix(req_str(b, "pool", "bras"));
        } catch (const Error&) {
            config_error("bras.pool", "expected a.b.c.d/len");
        }
        if (!b.contains("gateway"))
            config_error("bras.gateway", "required");
        const json& gw = b.at("gateway");
        expect_object(gw, "bras.gateway", {"border_node", "port"});
        bs.gateway_node = req_str(gw, "border_node", "bras.gateway");
        check_ref(names.nodes, bs.gateway_node, "bras.gateway.border_node", "node");
        bs.gateway_port = opt_int<PortId>(gw, "port", "bras.gateway", 1, kMaxPort);
        const bool has_peer = std::any_of(s.core_peers.begin(), s.core_peers.end(), [&](const CorePeerSpec& c) {
            return c.border_node == bs.gateway_node && (!bs.gateway_port || !c.port || c.port == bs.gateway_port);
        });
        if (!has_peer)
            config_error("bras.gateway", "no core peer attached there");
        const std::string gw_owner = owner_of(bs.gateway_node);
        for (std::size_t i = 0; i < bs.descriptors.size(); ++i) {
            if (owner_of(bs.descriptors[i].host) != gw_owner)
                config_error(child(index("bras.descriptors", i), "host"), "outside the gateway domain");
        }
        for (std::size_t i = 0; i < s.customers.size(); ++i) {
            if (owner_of(s.customers[i].access_node) != gw_owner)
                config_error(child(index("customers", i), "access_node"), "outside the gateway domain");
        }
        if (b.contains("allow_list")) {
            const json& al = array_at(b, "allow_list", "bras");
            std::vector<MacAddr> macs;
            for (std::size_t i = 0; i < al.size(); ++i) {
                try {
                    macs.push_back(parse_mac(str(al[i], index("bras.allow_list", i))));
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::ConfigError)
                        throw;
                    config_error(index("bras.allow_list", i), "not a MAC address");
                }
            }
            bs.allow_list = std::move(macs);
        }
        bs.latency_us = int_or(b, "latency_us", "bras", 1000, 1, kMaxTime);
        bs.per_message_proc_us = int_or(b, "per_message_proc_us", "bras", 100, 0, kMaxTime);
        s.bras = std::move(bs);
    }

    if (doc.contains("oam")) {
        const json& o = doc.at("oam");
        expect_object(o, "oam", {"interval_us", "k"});
        s.oam.interval_us = int_or(o, "interval_us", "oam", 3333, 1, kMaxTime);
        s.oam.k = static_cast<std::uint32_t>(int_or(o, "k", "oam", 3, 1, 1000));
    }

    if (!doc.contains("horizon_us"))
        config_error("horizon_us", "required");
    s.horizon_us = integer(doc.at("horizon_us"), "horizon_us", 1, kMaxTime);

    const json& probes = array_at(doc, "probes", "");
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const std::string p = index("probes", i);
        expect_object(probes[i], p, {"id", "src", "sink", "customer", "period_us", "start_us", "stop_us", "vlan"});
        ProbeSpec ps;
        ps.id = req_str(probes[i], "id", p);
        if (!names.probes.insert(ps.id).second)
            config_error(child(p, "id"), "duplicate probe " + ps.id);
        if (probes[i].contains("customer")) {
            ps.customer = str(probes[i].at("customer"), child(p, "customer"));
            check_ref(names.customers, ps.customer, child(p, "customer"), "customer");
            if (probes[i].contains("src") || probes[i].contains("sink"))
                config_error(child(p, "src"), "customer probes have no src or sink");
        } else {
            for (const char* end : {"src", "sink"}) {
                if (!probes[i].contains(end))
                    config_error(child(p, end), "required");
            }
            ps.src = attachment(probes[i].at("src"), child(p, "src"), names.nodes);
            ps.sink = attachment(probes[i].at("sink"), child(p, "sink"), names.nodes);
            if (!ps.src->port)
                config_error(child(child(p, "src"), "port"), "required");
            if (!ps.sink->port)
                config_error(child(child(p, "sink"), "port"), "required");
        }
        ps.period_us = int_or(probes[i], "period_us", p, 1000, 1, kMaxTime);
        ps.start_us = opt_int<SimTime>(probes[i], "start_us", p, 0, s.horizon_us);
        ps.stop_us = opt_int<SimTime>(probes[i], "stop_us", p, 0, kMaxTime);
        ps.vlan = opt_int<std::uint16_t>(probes[i], "vlan", p, 1, 4094);
        s.probes.push_back(std::move(ps));
    }

    const json& events = array_at(doc, "events", "");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const std::string p = index("events", i);
        if (!events[i].is_object())
            config_error(p, "expected an object");
        EventSpec e;
        if (!events[i].contains("at_us"))
            config_error(child(p, "at_us"), "required");
        e.at_us = integer(events[i].at("at_us"), child(p, "at_us"), 0, kMaxTime);
        if (e.at_us > s.horizon_us)
            config_error(child(p, "at_us"), "after the horizon");
        e.action = req_str(events[i], "action", p);
        if (!actions().contains(e.action))
            config_error(child(p, "action"), "unknown action " + e.action);
        e.args = events[i];
        validate_event(e, events[i], p, names);
        s.events.push_back(std::move(e));
    }
    return s;
}

Scenario parse_scenario_text(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        config_error("$", e.what());
    }
    return parse_scenario_json(doc, hex64(fnv1a64(text)));
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, path, "cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, path, "cannot open for writing");
    out << content;
    if (!out)
        throw Error(ErrorCode::IoError, path, "write failed");
}

Scenario parse_scenario(const std::string& path)
{
    Scenario s = parse_scenario_text(read_text_file(path));
    if (s.name.empty()) {
        const auto slash = path.find_last_of('/');
        s.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
    }
    return s;
}

std::optional<std::int64_t> MetricsReport::value(const std::string& metric, const std::string& subject) const
{
    for (const MetricRow& r : rows) {
        if (r.metric == metric && r.subject == subject)
            return r.value_us;
    }
    return std::nullopt;
}

// ---- running ----------------------------------------------------------------

namespace {

Protection protection_of(const json& args)
{
    const std::string p = args.value("protection", std::string("auto"));
    if (p == "none")
        return Protection::None;
    if (p == "protected")
        return Protection::Protected;
    return Protection::Auto;
}

class World {
public:
    World(const Scenario& s, std::uint64_t seed) : s_(s), net_(seed)
    {
        build();
        schedule();
    }

    RunResult run()
    {
        net_.run_until(s_.horizon_us);
        RunResult r;
        r.report.rows = collect();
        r.report.seed = seed_;
        r.report.config_hash = s_.config_hash;
        r.report.assertion_failures = failures_;
        r.report.event_errors = errors_;
        r.trace = net_.trace_records();
        return r;
    }

private:
    NodeId node(const std::string& name) const { return *net_.switch_id(name); }

    TransportController& owner(const std::string& node_name)
    {
        for (const ControllerSpec& c : s_.controllers) {
            if (std::find(c.domain.begin(), c.domain.end(), node_name) != c.domain.end())
                return *ctl_.at(c.id);
        }
        throw Error(ErrorCode::Unreachable, node_name, "no controller owns this node");
    }

    void build()
    {
        TopologyConfig topo = s_.topology;
        for (const CorePeerSpec& c : s_.core_peers) {
            auto peer = std::make_unique<CorePeer>(c.id, c.mac, c.ip);
            peers_[c.id] = peer.get();
            peer_ids_[c.id] = net_.add_actor(std::move(peer));
            topo.links.push_back(LinkConfig{c.border_node + "-" + c.id, c.border_node, c.id, c.port, std::nullopt,
                                            c.delay_us, 1});
        }
        for (const CustomerSpec& c : s_.customers) {
            Ipv4Addr target = 0;
            for (const CorePeerSpec& p : s_.core_peers) {
                if (p.id == c.echo_target)
                    target = p.ip;
            }
            auto cust = std::make_unique<CustomerStub>(c.id, c.mac, target);
            customers_[c.id] = cust.get();
            customer_ids_[c.id] = net_.add_actor(std::move(cust));
            topo.links.push_back(LinkConfig{c.access_node + "-" + c.id, c.access_node, c.id, c.port, std::nullopt,
                                            c.delay_us, 1});
        }
        build_network(net_, topo);

        for (const ControllerSpec& c : s_.controllers) {
            TransportConfig cfg;
            cfg.name = c.id;
            for (const std::string& n : c.domain)
                cfg.domain.push_back(node(n));
            cfg.discovery_timeout_us = c.discovery_timeout_us;
            cfg.oam_interval_us = s_.oam.interval_us;
            cfg.oam_k = s_.oam.k;
            cfg.parallel_paths = c.parallel_paths;
            auto tc = std::make_unique<TransportController>(cfg);
            TransportController* raw = tc.get();
            const ActorId id = net_.add_actor(std::move(tc));
            raw->attach(id);
            ctl_[c.id] = raw;
            for (const std::string& n : c.domain) {
                const ChannelId ch = net_.connect(c.id + "-" + n, Endpoint::of_actor(id),
                                                  Endpoint::of_switch(node(n)), c.latency_us, c.per_message_proc_us);
                net_.set_controller(node(n), ch);
                raw->add_switch_channel(node(n), ch);
            }
        }

        for (const CorePeerSpec& c : s_.core_peers) {
            TransportController& tc = *ctl_.at(c.controller);
            const ChannelId ch = net_.connect(c.controller + "-" + c.id, Endpoint::of_actor(tc.self()),
                                              Endpoint::of_actor(peer_ids_.at(c.id)), c.latency_us,
                                              c.per_message_proc_us, true);
            peers_.at(c.id)->attach(peer_ids_.at(c.id), ch);
            const Link& l = net_.links().at(*net_.link_by_name(c.border_node + "-" + c.id));
            tc.add_border(BorderPort{c.id, PortRef{node(c.border_node), l.a.port}, ch, true});
            core_channels_[c.controller].push_back(ch);
        }
        for (const CustomerSpec& c : s_.customers) {
            const Link& l = net_.links().at(*net_.link_by_name(c.access_node + "-" + c.id));
            customers_.at(c.id)->attach(customer_ids_.at(c.id), l.b.port);
        }

        if (s_.bras)
            build_bras(*s_.bras);

        for (const ProbeSpec& p : s_.probes) {
            ProbeFlow pf;
            pf.id = p.id;
            pf.period_us = p.period_us;
            pf.vlan = p.vlan;
            if (p.customer.empty()) {
                pf.src = Attachment{Endpoint::of_switch(node(p.src->node)), *p.src->port};
                pf.sink = Attachment{Endpoint::of_switch(node(p.sink->node)), *p.sink->port};
            } else {
                pf.src = Attachment{Endpoint::of_actor(customer_ids_.at(p.customer)), 1};
                pf.sink = pf.src;
            }
            const std::size_t idx = net_.add_probe(pf);
            probes_[p.id] = idx;
            if (p.start_us)
                start_probe(p.id, *p.start_us);
            if (p.stop_us)
                stop_probe(p.id, *p.stop_us);
        }
    }

    void build_bras(const BrasSpec& b)
    {
        const CorePeerSpec* gw = nullptr;
        for (const CorePeerSpec& c : s_.core_peers) {
            if (!gw && c.border_node == b.gateway_node && (!b.gateway_port || !c.port || c.port == b.gateway_port))
                gw = &c;
        }
        TransportController& tc = owner(b.gateway_node);
        steering_ = std::make_unique<SteeringModule>(tc, gw->id);
        if (b.allow_list)
            steering_->set_allow_list(std::set<MacAddr>(b.allow_list->begin(), b.allow_list->end()));
        for (const BrasDescriptorSpec& d : b.descriptors) {
            BrasConfig cfg;
            cfg.id = d.id;
            cfg.mac = d.mac;
            cfg.pool = b.pool;
            cfg.gateway_mac = gw->mac;
            auto mod = std::make_unique<BrasModule>(cfg);
            BrasModule* raw = mod.get();
            const ActorId id = net_.add_actor(std::move(mod));
            const ChannelId ch = net_.connect(tc.name() + "-" + d.id, Endpoint::of_actor(tc.self()),
                                              Endpoint::of_actor(id), b.latency_us, b.per_message_proc_us);
            raw->attach(id, ch);
            bras_[d.id] = raw;
            steering_->add_bras(net_, BrasDescriptor{d.id, node(d.host), d.priority, false}, ch);
            if (d.enabled) {
                net_.schedule_action(0, "enable " + d.id,
                                     [this, id = d.id](Network& n) { steering_->enable_bras(n, id); });
            }
        }
        std::vector<NodeId> access;
        for (const CustomerSpec& c : s_.customers)
            access.push_back(node(c.access_node));
        tc.when_ready(net_, [this, access](Network& n) { steering_->install_traps(n, access); });
    }

    void start_probe(const std::string& id, SimTime at)
    {
        const std::size_t idx = probes_.at(id);
        const ProbeSpec& spec = *std::find_if(s_.probes.begin(), s_.probes.end(),
                                              [&](const ProbeSpec& p) { return p.id == id; });
        if (spec.customer.empty()) {
            net_.start_probe(idx, at);
            return;
        }
        CustomerStub* c = customers_.at(spec.customer);
        net_.schedule_action(at, "start " + id, [c, idx, period = spec.period_us](Network& n) {
            n.probe(idx).start_us = n.now();
            c->start_echo(n, idx, period);
        });
    }

    void stop_probe(const std::string& id, SimTime at)
    {
        const std::size_t idx = probes_.at(id);
        const ProbeSpec& spec = *std::find_if(s_.probes.begin(), s_.probes.end(),
                                              [&](const ProbeSpec& p) { return p.id == id; });
        if (spec.customer.empty()) {
            net_.stop_probe(idx, at);
            return;
        }
        CustomerStub* c = customers_.at(spec.customer);
        net_.schedule_action(at, "stop " + id, [c, idx](Network& n) {
            n.probe(idx).stop_us = n.now();
            c->stop_echo();
        });
    }

    void schedule()
    {
        for (std::size_t i = 0; i < s_.events.size(); ++i) {
            const EventSpec& e = s_.events[i];
            const std::string label = "events[" + std::to_string(i) + "]";
            if (e.action == "start_probe") {
                start_probe(e.args.at("probe"), e.at_us);
                continue;
            }
            if (e.action == "stop_probe") {
                stop_probe(e.args.at("probe"), e.at_us);
                continue;
            }
            net_.schedule_action(e.at_us, label + " " + e.action,
                                 [this, i, label](Network& n) { guarded(n, label, [&] { execute(n, s_.events[i], label); }); });
        }
    }

    template <class F>
    void guarded(Network& n, const std::string& label, F&& body)
    {
        try {
            body();
        } catch (const Error& err) {
            errors_.push_back(label + " at " + std::to_string(n.now()) + ": " + err.what());
            n.trace("event_error", label, err.what());
            event_error_rows_.push_back(MetricRow{"event_error", label, n.now()});
        }
    }

    void execute(Network& n, const EventSpec& e, const std::string& label)
    {
        const json& a = e.args;
        if (e.action == "fail_link" || e.action == "restore_link") {
            const std::string link = a.at("link");
            const auto id = n.link_by_name(link);
            if (!id)
                throw Error(ErrorCode::UnknownLink, link);
            if (e.action == "fail_link") {
                n.fail_link(*id, n.now());
                fail_times_.push_back(n.now());
            } else {
                n.restore_link(*id, n.now());
            }
        } else if (e.action == "enable_bras") {
            require_bras().enable_bras(n, a.at("bras"));
        } else if (e.action == "disable_bras") {
            require_bras().disable_bras(n, a.at("bras"));
        } else if (e.action == "send_padi") {
            customers_.at(a.at("customer"))->send_padi(n);
        } else if (e.action == "create_pw") {
            create_pws(n, a, label);
        } else if (e.action == "setup_e2e_lsp") {
            setup_e2e(n, a, label);
        } else if (e.action == "assert_metric") {
            check_assertion(a, label);
        }
    }

    SteeringModule& require_bras()
    {
        if (!steering_)
            throw Error(ErrorCode::UnknownBras, "no bras section");
        return *steering_;
    }

    void create_pws(Network& n, const json& a, const std::string& label)
    {
        const std::set<std::string> all_nodes = [&] {
            std::set<std::string> out;
            for (const NodeConfig& nc : s_.topology.nodes)
                out.insert(nc.id);
            return out;
        }();
        const AttachmentSpec as = attachment(a.at("a"), label + ".a", all_nodes);
        const AttachmentSpec bs = attachment(a.at("b"), label + ".b", all_nodes);
        TransportController& tc = owner(as.node);
        if (&owner(bs.node) != &tc)
            throw Error(ErrorCode::Unreachable, as.node + "-" + bs.node, "pseudowire crosses domains");
        const int count = a.value("count", 1);
        const bool vlan_range = a.contains("vlan_base");
        const int vlan_base = a.value("vlan_base", 1);
        PwOptions opts{protection_of(a)};
        tc.when_ready(n, [&tc, as, bs, count, vlan_range, vlan_base, opts, label, this](Network& net) {
            guarded(net, label, [&] {
            for (int i = 0; i < count; ++i) {
                PwAttachment x{node(as.node), as.port, as.vlan};
                PwAttachment y{node(bs.node), bs.port, bs.vlan};
                if (vlan_range) {
                    x.vlan = static_cast<std::uint16_t>(vlan_base + i);
                    y.vlan = x.vlan;
                }
                tc.create_pw(net, x, y, opts);
            }
            net.mark("pw_created", tc.name(), count);
            });
        });
    }

    void setup_e2e(Network& n, const json& a, const std::string& label)
    {
        E2eRequest req;
        const std::string role = a.value("role", std::string("head"));
        req.role = role == "tail" ? E2eRole::Tail : role == "transit" ? E2eRole::Transit : E2eRole::Head;
        req.border = a.at("border");
        req.border_b = a.value("border_b", std::string());
        req.remote_label = a.value("remote_label", 0u);
        req.remote_label_b = a.value("remote_label_b", 0u);
        std::string ctl;
        if (a.contains("controller")) {
            ctl = a.at("controller");
        } else {
            for (const CorePeerSpec& c : s_.core_peers) {
                if (c.id == req.border)
                    ctl = c.controller;
            }
        }
        TransportController& tc = *ctl_.at(ctl);
        if (req.role != E2eRole::Transit)
            req.endpoint = node(a.at("endpoint"));
        tc.when_ready(n, [&tc, req, label, this](Network& net) {
            guarded(net, label, [&] {
                tc.setup_e2e_lsp(net, req, [](Network& nn, const E2eLsp& l) {
                    nn.mark("e2e_established", std::to_string(l.id), static_cast<std::int64_t>(l.id));
                });
            });
        });
    }

    void check_assertion(const json& a, const std::string& label)
    {
        const std::string metric = a.at("metric");
        const std::string subject = a.value("subject", std::string());
        const std::string op = a.at("op");
        const std::int64_t want = a.value("value", std::int64_t{0});
        const auto rows = collect();
        std::vector<std::int64_t> got;
        for (const MetricRow& r : rows) {
            if (r.metric == metric && r.subject == subject)
                got.push_back(r.value_us);
        }
        bool ok = !got.empty();
        for (std::int64_t v : got) {
            if (op == "lt")
                ok = ok && v < want;
            else if (op == "le")
                ok = ok && v <= want;
            else if (op == "gt")
                ok = ok && v > want;
            else if (op == "ge")
                ok = ok && v >= want;
            else if (op == "eq")
                ok = ok && v == want;
        }
        std::string detail = metric + "," + subject + " " + op;
        if (op != "exists")
            detail += " " + std::to_string(want);
        detail += got.empty() ? " (absent)" : " (got " + std::to_string(got.back()) + ")";
        net_.trace(ok ? "assert_pass" : "assert_fail", label, detail);
        if (!ok)
            failures_.push_back(label + ": " + detail);
    }

    std::vector<MetricRow> collect() const
    {
        std::vector<MetricRow> rows;
        const auto& records = net_.control_records();

        std::set<ActorId> controller_actors;
        for (const auto& [id, tc] : ctl_)
            controller_actors.insert(tc->self());

        for (const auto& [id, idx] : probes_) {
            const ProbeFlow& pf = net_.probes().at(idx);
            rows.push_back({"probe_rx", id, static_cast<std::int64_t>(pf.rx.size())});
            rows.push_back({"probe_sent", id, static_cast<std::int64_t>(pf.next_seq)});
            if (pf.rx.size() < 2)
                continue;
            const SimTime gap = measure_gap(pf);
            rows.push_back({"restoration", id, gap});
            if (gap <= 0)
                continue;
            // The widest silence, bounded by the last arrival before it and
            // the first after it.
            SimTime from = 0;
            SimTime to = 0;
            SimTime widest = -1;
            for (std::size_t i = 1; i < pf.rx.size(); ++i) {
                const SimTime d = pf.rx[i].second - pf.rx[i - 1].second;
                if (d > widest) {
                    widest = d;
                    from = pf.rx[i - 1].second;
                    to = pf.rx[i].second;
                }
            }
            std::int64_t during = 0;
            for (const ControlRecord& r : records) {
                if (r.sent_us >= from && r.sent_us <= to && r.from.kind == Endpoint::Kind::Actor &&
                    controller_actors.contains(r.from.id) && r.to.kind == Endpoint::Kind::Switch)
                    ++during;
            }
            rows.push_back({"outage_ctl_messages", id, during});
        }

        for (const Channel& c : net_.channels())
            rows.push_back({"messages", c.name, static_cast<std::int64_t>(c.sent[0] + c.sent[1])});

        std::map<std::string, SimTime> discovered_at;
        for (const Marker& m : net_.markers()) {
            rows.push_back({m.metric, m.subject, m.at_us});
            if (m.metric == "discovery_complete")
                discovered_at[m.subject] = m.at_us;
            if (m.metric == "restore_begin") {
                SimTime failed = m.at_us;
                for (SimTime t : fail_times_) {
                    if (t <= m.at_us)
                        failed = t;
                }
                std::int64_t sent = 0;
                for (const ControlRecord& r : records)
                    sent += r.tag == m.subject ? 1 : 0;
                rows.push_back({"restoration_messages", m.subject, sent});
                if (auto done = net_.tag_done(m.subject))
                    rows.push_back({"restoration_complete", m.subject, *done - failed});
            }
        }

        for (const auto& [ctl, chans] : core_channels_) {
            std::int64_t total = 0;
            std::int64_t after = 0;
            for (const ControlRecord& r : records) {
                if (std::find(chans.begin(), chans.end(), r.channel) == chans.end())
                    continue;
                ++total;
                auto it = discovered_at.find(ctl);
                if (it != discovered_at.end() && r.sent_us > it->second)
                    ++after;
            }
            rows.push_back({"core_messages", ctl, total});
            rows.push_back({"core_messages_after_discovery", ctl, after});
        }

        for (const auto& [id, b] : bras_) {
            std::int64_t open = 0;
            for (const auto& [k, sess] : b->sessions())
                open += sess.state == SessionState::IpOpen ? 1 : 0;
            rows.push_back({"sessions_open", id, open});
            rows.push_back({"slow_path_packets", id, static_cast<std::int64_t>(b->slow_path_packets())});
        }
        if (steering_)
            rows.push_back({"pw_created", "steering", static_cast<std::int64_t>(steering_->pw_creations())});

        const auto& k = net_.counters();
        rows.push_back({"drops", "network", static_cast<std::int64_t>(k.drops)});
        rows.push_back({"link_cut", "network", static_cast<std::int64_t>(k.link_cut)});
        rows.insert(rows.end(), event_error_rows_.begin(), event_error_rows_.end());
        std::sort(rows.begin(), rows.end());
        return rows;
    }

    const Scenario& s_;
    Network net_;
    std::uint64_t seed_ = 0;
    std::map<std::string, TransportController*> ctl_;
    std::map<std::string, std::vector<ChannelId>> core_channels_;
    std::map<std::string, CorePeer*> peers_;
    std::map<std::string, ActorId> peer_ids_;
    std::map<std::string, CustomerStub*> customers_;
    std::map<std::string, ActorId> customer_ids_;
    std::map<std::string, BrasModule*> bras_;
    std::unique_ptr<SteeringModule> steering_;
    std::map<std::string, std::size_t> probes_;
    std::vector<SimTime> fail_times_;
    std::vector<std::string> failures_;
    std::vector<std::string> errors_;
    std::vector<MetricRow> event_error_rows_;

public:
    void set_seed(std::uint64_t seed) { seed_ = seed; }
};

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

RunResult run_scenario(const Scenario& s, std::uint64_t seed)
{
    World w(s, seed);
    w.set_seed(seed);
    return w.run();
}

std::string format_csv(const MetricsReport& report)
{
    std::string out = "metric,subject,value_us,seed,config_hash\n";
    for (const MetricRow& r : report.rows) {
        out += csv_field(r.metric) + "," + csv_field(r.subject) + "," + std::to_string(r.value_us) + "," +
               std::to_string(report.seed) + "," + report.config_hash + "\n";
    }
    return out;
}

std::string format_trace(const std::vector<TraceRecord>& trace)
{
    std::string out;
    for (const TraceRecord& t : trace) {
        nlohmann::ordered_json j;
        j["at_us"] = t.at_us;
        j["kind"] = t.kind;
        j["node"] = t.node;
        j["detail"] = t.detail;
        out += j.dump() + "\n";
    }
    return out;
}

std::string format_dot(const Scenario& s)
{
    std::ostringstream os;
    os << "graph \"" << (s.name.empty() ? "scenario" : s.name) << "\" {\n";
    for (const ControllerSpec& c : s.controllers) {
        os << "  subgraph \"cluster_" << c.id << "\" {\n    label=\"" << c.id << "\";\n";
        for (const std::string& n : c.domain) {
            const auto it = std::find_if(s.topology.nodes.begin(), s.topology.nodes.end(),
                                         [&](const NodeConfig& nc) { return nc.id == n; });
            os << "    \"" << n << "\"" << (it != s.topology.nodes.end() && it->processing ? " [shape=box]" : "")
               << ";\n";
        }
        os << "  }\n";
    }
    for (const LinkConfig& l : s.topology.links)
        os << "  \"" << l.a << "\" -- \"" << l.b << "\" [label=\"" << l.weight << "\"];\n";
    for (const CorePeerSpec& c : s.core_peers)
        os << "  \"" << c.id << "\" [shape=doublecircle];\n  \"" << c.border_node << "\" -- \"" << c.id
           << "\" [style=dashed];\n";
    for (const CustomerSpec& c : s.customers)
        os << "  \"" << c.id << "\" [shape=plaintext];\n  \"" << c.access_node << "\" -- \"" << c.id
           << "\" [style=dotted];\n";
    os << "}\n";
    return os.str();
}

json apply_override(json doc, const std::string& key, const std::string& value)
{
    json* at = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw Error(ErrorCode::ConfigError, key, "empty path segment");
        const bool numeric = std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (at->is_array() && numeric) {
            const std::size_t i = std::stoul(part);
            if (i >= at->size())
                throw Error(ErrorCode::ConfigError, key, "index out of range");
            at = &(*at)[i];
        } else if (at->is_object()) {
            at = &(*at)[part];
        } else {
            throw Error(ErrorCode::ConfigError, key, "cannot descend into " + part);
        }
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
    json v = json::parse(value, nullptr, false);
    *at = v.is_discarded() ? json(value) : v;
    return doc;
}

std::vector<SweepPoint> run_sweep(const json& doc, const std::string& key, const std::vector<std::string>& values,
                                  std::uint64_t seed)
{
    std::vector<Scenario> scenarios;
    for (const std::string& v : values) {
        const json d = apply_override(doc, key, v);
        scenarios.push_back(parse_scenario_json(d, [&] {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(d.dump())));
            return std::string(buf);
        }()));
    }
    std::vector<SweepPoint> out(values.size());
    std::vector<std::string> failure(values.size());
    const int n = static_cast<int>(values.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            out[i] = SweepPoint{values[i], run_scenario(scenarios[i], seed)};
        } catch (const std::exception& e) {
            failure[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < failure.size(); ++i) {
        if (!failure[i].empty())
            throw Error(ErrorCode::ConfigError, key + "=" + values[i], failure[i]);
    }
    return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorCode::NoTraffic, "fit_line", "need at least two points");
    LinearFit f;
    double cov00 = 0, cov01 = 0, cov11 = 0, sumsq = 0;
    gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &f.intercept, &f.slope, &cov00, &cov01, &cov11, &sumsq);
    double mean = 0;
    for (double v : y)
        mean += v;
    mean /= static_cast<double>(y.size());
    double total = 0;
    for (double v : y)
        total += (v - mean) * (v - mean);
    f.r2 = total == 0 ? 1.0 : 1.0 - sumsq / total;
    return f;
}

} // namespace splitarch

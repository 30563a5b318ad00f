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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "splitarch/ctlproto.hpp"
#include "splitarch/dataplane.hpp"
#include "splitarch/rng.hpp"

namespace splitarch {

using ActorId = std::uint32_t;
using ChannelId = std::uint32_t;
using LinkId = std::size_t;

class Network;

/// Anything in the simulation that is not a switch: controllers, core
/// peers, customer premises.
class Actor {
public:
    virtual ~Actor() = default;
    virtual std::string name() const = 0;
    virtual void on_start(Network&) { }
    virtual void on_message(Network&, ChannelId, const Message&) { }
    virtual void on_packet(Network&, PortId, const Packet&) { }
    virtual void on_timer(Network&, std::uint64_t) { }
};

struct Endpoint {
    enum class Kind { Switch, Actor };
    Kind kind = Kind::Switch;
    std::uint32_t id = 0;
    auto operator<=>(const Endpoint&) const = default;

    static Endpoint of_switch(NodeId n) { return {Kind::Switch, n}; }
    static Endpoint of_actor(ActorId a) { return {Kind::Actor, a}; }
};

struct Attachment {
    Endpoint at;
    PortId port = 0;
    auto operator<=>(const Attachment&) const = default;
};

struct Link {
    std::string name;
    Attachment a;
    Attachment b;
    SimTime delay_us = 1;
    std::uint32_t weight = 1;
    bool up = true;
    std::uint64_t generation = 0;
};

struct Channel {
    std::string name;
    Endpoint a;
    Endpoint b;
    SimTime latency_us = 1000;
    SimTime per_message_proc_us = 100;
    bool core_facing = false;
    SimTime busy_until[2] = {0, 0};
    std::uint64_t sent[2] = {0, 0};
};

struct TraceRecord {
    SimTime at_us = 0;
    std::string kind;
    std::string node;
    std::string detail;
};

/// One control message, from enqueue to the receiver finishing it.
struct ControlRecord {
    SimTime sent_us = 0;
    SimTime done_us = 0;
    ChannelId channel = 0;
    Endpoint from;
    Endpoint to;
    std::string message;
    std::string tag;
};

struct ProbeFlow {
    std::string id;
    Attachment src;
    Attachment sink;
    SimTime period_us = 1000;
    SimTime start_us = 0;
    SimTime stop_us = -1; // -1: until the horizon
    std::optional<std::uint16_t> vlan;
    std::uint32_t next_seq = 0;
    std::vector<std::pair<std::uint32_t, SimTime>> rx;
};

/// Gap in the reception log beyond the nominal period. Zero when no sequence
/// number went missing.
SimTime measure_gap(const ProbeFlow& probe);

struct Marker {
    std::string metric;
    std::string subject;
    std::int64_t value = 0;
    SimTime at_us = 0;
};

struct NodeConfig {
    std::string id;
    bool processing = false;
    std::vector<PortId> edge_ports;
};

struct LinkConfig {
    std::string id; // defaults to "a-b"
    std::string a;
    std::string b;
    std::optional<PortId> port_a;
    std::optional<PortId> port_b;
    SimTime delay_us = 100;
    std::uint32_t weight = 1;
};

struct TopologyConfig {
    std::vector<NodeConfig> nodes;
    std::vector<LinkConfig> links;
};

class Network {
public:
    explicit Network(std::uint64_t seed = 1);
    ~Network();
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    NodeId add_switch(const std::string& name, bool processing, std::vector<PortId> edge_ports);
    ActorId add_actor(std::unique_ptr<Actor> actor);
    LinkId add_link(Link link);
    ChannelId connect(const std::string& name, Endpoint a, Endpoint b, SimTime latency_us,
                      SimTime per_message_proc_us, bool core_facing = false);
    /// The channel on which a switch reports packet-ins and port status.
    void set_controller(NodeId sw, ChannelId ch);

    std::optional<NodeId> switch_id(const std::string& name) const;
    std::optional<ActorId> actor_id(const std::string& name) const;
    const std::string& switch_name(NodeId n) const;
    std::string endpoint_name(Endpoint e) const;
    std::vector<NodeId> switch_ids() const;
    SwitchState& switch_state(NodeId n);
    const SwitchState& switch_state(NodeId n) const;
    Actor& actor(ActorId a);
    std::optional<LinkId> link_at(Attachment att) const;
    std::optional<LinkId> link_by_name(const std::string& name) const;
    const std::vector<Link>& links() const { return links_; }
    const std::vector<Channel>& channels() const { return channels_; }
    const Channel& channel(ChannelId ch) const { return channels_.at(ch); }

    /// Enqueues a message; returns when the receiver will have processed it.
    SimTime send(ChannelId ch, Endpoint from, Message m, std::string tag = {});
    void schedule_timer(ActorId actor, SimTime at_us, std::uint64_t token);
    void schedule_action(SimTime at_us, std::string label, std::function<void(Network&)> fn);
    /// A frame sent by an actor out of one of its link ports.
    void actor_transmit(ActorId actor, PortId port, Packet p);
    /// A frame arriving now at a switch port from outside the simulation.
    void inject(NodeId node, PortId port, Packet p);

    void fail_link(LinkId link, SimTime at_us);
    void restore_link(LinkId link, SimTime at_us);

    std::size_t add_probe(ProbeFlow probe);
    void start_probe(std::size_t probe, SimTime at_us);
    void stop_probe(std::size_t probe, SimTime at_us);
    const std::vector<ProbeFlow>& probes() const { return probes_; }
    std::optional<std::size_t> probe_index(const std::string& id) const;
    /// Probe logs kept by actors (echo probes) live here too.
    ProbeFlow& probe(std::size_t i) { return probes_.at(i); }

    /// Runs every event with at_us <= t. Idempotent for repeated t.
    void run_until(SimTime t_us);
    SimTime now() const { return now_; }

    void trace(std::string kind, std::string node, std::string detail);
    const std::vector<TraceRecord>& trace_records() const { return trace_; }
    const std::vector<ControlRecord>& control_records() const { return control_; }
    void mark(std::string metric, std::string subject, std::int64_t value);
    const std::vector<Marker>& markers() const { return markers_; }
    /// Completion time of the last message carrying `tag`.
    std::optional<SimTime> tag_done(const std::string& tag) const;

    Rng& rng() { return rng_; }

    struct Counters {
        std::uint64_t link_sent = 0;
        std::uint64_t link_arrived = 0;
        std::uint64_t link_cut = 0;
        std::uint64_t drops = 0;
        std::uint64_t edge_out = 0;
    };
    const Counters& counters() const { return counters_; }
    std::uint64_t in_flight() const;

private:
    struct Event;
    struct SwitchSlot;
    struct ActorSlot;

    void push(SimTime at, Event ev);
    void dispatch(Event& ev);
    void handle_effects(NodeId node, Effects fx);
    void handle_switch_message(NodeId node, ChannelId ch, const Message& m);
    void transmit(Attachment from, Packet p);
    void set_link_state(LinkId link, bool up);
    void on_logical_attach(NodeId node, PortId port);
    void emit_probe(std::size_t probe);
    void record_probe_rx(NodeId node, PortId port, const Packet& p);

    Rng rng_;
    SimTime now_ = 0;
    std::uint64_t seq_ = 0;
    bool started_ = false;
    std::map<std::pair<SimTime, std::uint64_t>, std::unique_ptr<Event>> queue_;
    std::vector<SwitchSlot> switches_;
    std::vector<ActorSlot> actors_;
    std::vector<Link> links_;
    std::map<Attachment, LinkId> link_index_;
    std::vector<Channel> channels_;
    std::map<std::pair<NodeId, PortId>, std::uint64_t> oam_epoch_;
    std::vector<ProbeFlow> probes_;
    std::vector<std::uint64_t> probe_epoch_;
    std::vector<TraceRecord> trace_;
    std::vector<ControlRecord> control_;
    std::map<std::string, SimTime> tag_done_;
    std::vector<Marker> markers_;
    Counters counters_;
};

/// Instantiates switches and links. Link endpoints may name actors already
/// registered with the network. Errors carry the offending json path.
void build_network(Network& net, const TopologyConfig& cfg);

/// Recognisable test traffic: probe id and sequence number in the payload.
Packet make_probe_packet(std::uint32_t probe, std::uint32_t seq, std::optional<std::uint16_t> vlan);
std::optional<std::pair<std::uint32_t, std::uint32_t>> parse_probe_packet(const Packet& p);

MacAddr switch_mac(NodeId n);
std::string describe(const Packet& p);

} // namespace splitarch

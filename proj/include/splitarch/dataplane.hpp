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
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "splitarch/packet.hpp"

namespace splitarch {

using NodeId = std::uint32_t;
using PortId = std::uint32_t;
using GroupId = std::uint32_t;
using SimTime = std::int64_t; // microseconds

/// Logical ports live in their own id space so they never collide with
/// physical port numbers.
inline constexpr PortId kFirstLogicalPort = 0x10000;
/// Reserved output port handing a packet to the switch's local OAM entity,
/// which demultiplexes continuity checks to sinks by MEG id.
inline constexpr PortId kLocalOamPort = 0xfffffff0;

inline bool is_logical_port(PortId port)
{
    return port >= kFirstLogicalPort && port != kLocalOamPort;
}

struct Ipv4Prefix {
    Ipv4Addr addr = 0;
    std::uint8_t len = 32;

    bool contains(Ipv4Addr ip) const;
    bool operator==(const Ipv4Prefix&) const = default;
};

struct FieldMatch {
    std::optional<PortId> in_port;
    std::optional<MacAddr> eth_dst;
    std::optional<std::uint16_t> ethertype; // 0x8847 for any labelled packet
    std::optional<std::uint16_t> vlan_vid;  // outer tag
    std::optional<std::uint32_t> mpls_label; // top of stack
    std::optional<bool> mpls_bos;
    std::optional<std::uint16_t> pppoe_session;
    std::optional<std::uint16_t> ppp_proto;
    std::optional<Ipv4Prefix> ipv4_dst;

    /// PPPoE and IPv4 fields are only visible when the packet carries no
    /// MPLS labels above them.
    bool matches(PortId port, const Packet& p) const;
    /// True when every field set in `pattern` is set identically here.
    bool refines(const FieldMatch& pattern) const;
    bool operator==(const FieldMatch&) const = default;
};

enum class Field { EthDst, EthSrc, VlanVid, MplsTc, MplsTtl, Ipv4Ttl, OamSrcNode };

namespace action {
struct Output { PortId port = 0; bool operator==(const Output&) const = default; };
struct Group { GroupId group = 0; bool operator==(const Group&) const = default; };
struct PushMpls {
    std::uint32_t label = 0;
    std::uint8_t tc = 0;
    std::uint8_t ttl = 64;
    bool operator==(const PushMpls&) const = default;
};
struct PopMpls { bool operator==(const PopMpls&) const = default; };
struct SwapMpls { std::uint32_t label = 0; bool operator==(const SwapMpls&) const = default; };
struct SetField {
    Field field = Field::EthDst;
    std::uint64_t value = 0;
    bool operator==(const SetField&) const = default;
};
struct PushPppoe { std::uint16_t session_id = 0; bool operator==(const PushPppoe&) const = default; };
struct PopPppoe { bool operator==(const PopPppoe&) const = default; };
struct ToController { bool operator==(const ToController&) const = default; };
} // namespace action

using Action = std::variant<action::Output, action::Group, action::PushMpls, action::PopMpls,
                            action::SwapMpls, action::SetField, action::PushPppoe,
                            action::PopPppoe, action::ToController>;
using ActionList = std::vector<Action>;

bool is_processing_action(const Action& a);
std::string to_string(const Action& a);

struct FlowEntry {
    std::uint8_t table_id = 0;
    int priority = 0;
    FieldMatch match;
    ActionList actions;
    std::optional<std::uint8_t> goto_table;
    std::uint64_t cookie = 0;

    bool operator==(const FlowEntry&) const = default;
};

struct Bucket {
    PortId watch = 0;
    ActionList actions;

    bool operator==(const Bucket&) const = default;
};

/// Fast-failover group: the first bucket whose watched port is live is used.
struct Group {
    GroupId group_id = 0;
    std::vector<Bucket> buckets;

    bool operator==(const Group&) const = default;
};

struct PppoeBinding {
    MacAddr customer_mac{};
    Ipv4Addr ip = 0;

    bool operator==(const PppoeBinding&) const = default;
};

namespace lp {
/// Terminates PPPoE: frames from below are unwrapped, IPv4 from above is
/// wrapped into the session owning the destination address.
struct PppoeTermination {
    std::map<std::uint16_t, PppoeBinding> sessions;
    MacAddr local_mac{};
    PortId lower = 0;
    bool operator==(const PppoeTermination&) const = default;
};
struct IpOverEthernet {
    MacAddr next_hop_mac{};
    MacAddr local_mac{};
    PortId lower = 0;
    bool operator==(const IpOverEthernet&) const = default;
};
/// Pseudowire or LSP endpoint: pushes `pw_label` on egress and hands the
/// packet to `tunnel_group`; a packet whose top label is `in_label` is
/// decapsulated and re-enters the pipeline from this port.
struct PwEndpoint {
    std::uint32_t pw_label = 0;
    std::uint32_t in_label = 0;
    GroupId tunnel_group = 0;
    bool operator==(const PwEndpoint&) const = default;
};
struct OamSource {
    std::uint32_t meg_id = 0;
    SimTime interval_us = 3333;
    Packet template_packet;
    SimTime activated_us = 0;
    std::uint32_t next_seq = 0;
    bool operator==(const OamSource&) const = default;
};
struct OamSink {
    std::uint32_t meg_id = 0;
    SimTime interval_us = 3333;
    std::uint32_t k_threshold = 3;
    SimTime last_rx_us = 0;
    bool operator==(const OamSink&) const = default;
};
} // namespace lp

using LogicalPortKind =
    std::variant<lp::PppoeTermination, lp::IpOverEthernet, lp::PwEndpoint, lp::OamSource,
                 lp::OamSink>;

struct LogicalPort {
    PortId port_id = 0; // 0 on attach means "assign one"
    LogicalPortKind kind;
    bool live = true;

    bool operator==(const LogicalPort&) const = default;
};

bool requires_processing(const LogicalPortKind& kind);

struct PhysicalPort {
    PortId id = 0;
    bool up = true;
    std::uint64_t rx_packets = 0;
    std::uint64_t tx_packets = 0;
};

struct SwitchState {
    NodeId node_id = 0;
    MacAddr mac{};
    bool processing_capable = false;
    std::map<PortId, PhysicalPort> ports;
    std::map<std::uint8_t, std::vector<FlowEntry>> tables; // each sorted by descending priority
    std::map<GroupId, Group> groups;
    std::map<PortId, LogicalPort> logical_ports;
    PortId next_logical_port = kFirstLogicalPort;

    bool has_port(PortId port) const;
    bool port_live(PortId port) const;
    std::size_t flow_count() const;
};

enum class PacketInReason { TableMiss, Action, LogicalPort, OamNotify };
enum class DropReason {
    PortDown,
    NoLiveBucket,
    UnknownGroup,
    UnknownPort,
    TableMiss,
    DecapMismatch,
    MegMismatch,
    InvalidAction,
    RecirculationLimit,
};

std::string_view to_string(PacketInReason r);
std::string_view to_string(DropReason r);

namespace effect {
struct Emit { PortId port = 0; Packet packet; };
struct PacketIn { PacketInReason reason{}; Packet packet; PortId in_port = 0; };
struct Deliver { PortId logical_port = 0; Packet packet; };
struct Drop { DropReason reason{}; Packet packet; };
struct LivenessDown { std::uint32_t meg_id = 0; PortId sink = 0; };
} // namespace effect

using Effect = std::variant<effect::Emit, effect::PacketIn, effect::Deliver, effect::Drop,
                            effect::LivenessDown>;
using Effects = std::vector<Effect>;

/// Runs a packet through the pipeline. Never throws; anomalies surface as
/// Drop effects. Table-miss in table 0 sends the packet to the controller.
Effects process_packet(SwitchState& s, PortId in_port, Packet p, SimTime now_us);

/// Applies a packet-out: the action list is executed as if by a flow entry
/// matched on `in_port`.
Effects execute_actions(SwitchState& s, PortId in_port, Packet p, const ActionList& actions,
                        SimTime now_us);

enum class ModCommand { Add, Modify, Delete };

struct FlowMod {
    ModCommand command = ModCommand::Add;
    FlowEntry entry;
    /// Delete only: require identical priority and match instead of refinement.
    bool strict = false;

    bool operator==(const FlowMod&) const = default;
};

struct GroupMod {
    ModCommand command = ModCommand::Add;
    Group group;

    bool operator==(const GroupMod&) const = default;
};

/// Add overwrites an entry with identical (table, priority, match); Modify
/// does the same; Delete removes every entry refining the pattern (and
/// carrying the pattern cookie when non-zero).
void apply_flow_mod(SwitchState& s, const FlowMod& mod);
void apply_group_mod(SwitchState& s, const GroupMod& mod);

std::size_t select_ff_bucket(const Group& g, const std::function<bool(PortId)>& live);

PortId attach_logical_port(SwitchState& s, LogicalPort port);
void detach_logical_port(SwitchState& s, PortId port);

enum class Direction { Ingress, Egress };

/// Pure encapsulation/decapsulation of one logical port. PW egress only
/// pushes the PW label; handing over to the tunnel group is pipeline work.
Packet lp_transform(const LogicalPort& port, Direction dir, Packet p);
Packet lp_process(const SwitchState& s, PortId port, Direction dir, Packet p);

Effects oam_emit_cc(SwitchState& s, PortId source, SimTime now_us);
Effects oam_on_receive(SwitchState& s, PortId sink, const Packet& p, SimTime now_us);
Effects oam_on_tick(SwitchState& s, PortId sink, SimTime now_us);

} // namespace splitarch

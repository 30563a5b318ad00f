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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "splitarch/dataplane.hpp"
#include "splitarch/error.hpp"

namespace splitarch {

struct PortDesc {
    PortId port = 0;
    bool up = true;
    std::uint32_t cost = 1;
    bool operator==(const PortDesc&) const = default;
};

namespace msg {

struct Hello { };
struct FeaturesRequest { };
struct FeaturesReply {
    std::uint64_t datapath_id = 0;
    bool processing = false;
    std::vector<PortDesc> ports;
};
/// The full packet is always carried; there are no buffer ids.
struct PacketIn {
    Packet packet;
    PortId in_port = 0;
    PacketInReason reason = PacketInReason::TableMiss;
};
struct PacketOut {
    Packet packet;
    PortId in_port = 0;
    ActionList actions;
};
struct PortStatus {
    PortId port = 0;
    bool up = true;
};
/// Attaches or detaches a logical port with a controller-chosen id.
struct PortMod {
    bool attach = true;
    LogicalPort port;
};
struct ErrorReport {
    ErrorCode code = ErrorCode::ConfigError;
    std::string context;
};

// Stub core signalling.
struct RouterAdvert {
    std::string router_id;
    std::vector<std::string> interfaces;
};
struct LspRequest {
    std::uint64_t e2e_id = 0;
    std::uint32_t label = 0; // label the requester expects to receive
    std::string target_border;
};
struct LspAccept {
    std::uint64_t e2e_id = 0;
    std::uint32_t label = 0; // label the acceptor expects to receive
};
struct LspReject {
    std::uint64_t e2e_id = 0;
};
struct LspTeardown {
    std::uint64_t e2e_id = 0;
};

} // namespace msg

using Message = std::variant<msg::Hello, msg::FeaturesRequest, msg::FeaturesReply, msg::PacketIn,
                             msg::PacketOut, FlowMod, GroupMod, msg::PortStatus, msg::PortMod,
                             msg::ErrorReport, msg::RouterAdvert, msg::LspRequest, msg::LspAccept,
                             msg::LspReject, msg::LspTeardown>;

std::string_view message_name(const Message& m);

enum class MatchField { InPort, EthDst, Ethertype, VlanVid, MplsLabel, MplsBos, PppoeSession,
                        PppProto, Ipv4Dst };

std::set<MatchField> all_match_fields();

struct ViewPolicy {
    std::string client;
    std::set<PortId> allowed_ports;
    std::set<MatchField> allowed_fields = all_match_fields();
};

/// A concrete attachment point: a physical or logical port on one switch.
struct PortRef {
    NodeId node = 0;
    PortId port = 0;
    auto operator<=>(const PortRef&) const = default;
};

struct VirtualSwitch {
    std::uint64_t datapath_id = 0;
    std::string client;
    ViewPolicy policy;
    std::map<PortId, PortRef> ports;

    std::optional<PortId> virtual_port(PortRef concrete) const;
    PortRef concrete(PortId virtual_port) const;
    /// Single node hosting every mapped port, if there is one.
    std::optional<NodeId> sole_node() const;
};

/// Exposes the endpoints of a domain: the candidate virtual port map.
VirtualSwitch create_virtual_switch(const std::map<PortId, PortRef>& endpoints,
                                    std::uint64_t datapath_id, const ViewPolicy& policy);
msg::FeaturesReply features_of(const VirtualSwitch& vs);

/// Carries packets between two nodes of the serving layer. Implemented by
/// the transport controller.
class TransportProvider {
public:
    virtual ~TransportProvider() = default;
    /// Actions at `from` that deliver a packet to `to`, where it arrives with
    /// the transport label popped and continues in table 1.
    virtual std::optional<ActionList> transport_actions(NodeId from, NodeId to) const = 0;
    virtual std::uint32_t allocate_label(NodeId node) = 0;
};

struct ConcreteFlowMod {
    NodeId node = 0;
    FlowMod mod;
};

std::vector<ConcreteFlowMod> translate_virtual_flow_mod(const VirtualSwitch& vs,
                                                        const FlowMod& fm,
                                                        TransportProvider* transport);

msg::PacketIn surface_packet_in(const VirtualSwitch& vs, PortRef at, const msg::PacketIn& in);

struct ConcretePacketOut {
    NodeId node = 0;
    msg::PacketOut out;
};

ConcretePacketOut sink_packet_out(const VirtualSwitch& vs, const msg::PacketOut& out);

} // namespace splitarch

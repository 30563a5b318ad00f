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
#include <set>
#include <string>
#include <vector>

#include "splitarch/ctlproto.hpp"
#include "splitarch/graph.hpp"
#include "splitarch/simnet.hpp"

namespace splitarch {

enum class Protection { Auto, None, Protected };

struct TransportConfig {
    std::string name;
    std::vector<NodeId> domain;
    SimTime discovery_timeout_us = 20000;
    SimTime oam_interval_us = 3333;
    std::uint32_t oam_k = 3;
    bool parallel_paths = true;
};

/// A port leading out of the domain to a core peer.
struct BorderPort {
    std::string peer;
    PortRef ref;
    ChannelId channel = 0;
    bool up = true;
};

/// One path of a protected pair in one direction.
struct LspLeg {
    std::vector<NodeId> nodes;
    std::vector<PortId> out_ports;    // out_ports[i] leaves nodes[i]
    std::vector<std::uint32_t> labels; // labels[i] is matched at nodes[i]; labels[0] unused
    std::uint32_t meg_id = 0;
    PortId source = 0; // OamSource at nodes.front()
    PortId sink = 0;   // OamSink at nodes.back()
};

struct ProtectedLsp {
    NodeId a = 0;
    NodeId b = 0;
    Path primary;
    Path backup;
    LspLeg legs[2][2]; // [0 primary, 1 backup][0 a->b, 1 b->a]
    std::vector<GroupId> head_groups;
};

/// Head-end group carrying one service toward `tail`.
struct Tunnel {
    NodeId head = 0;
    NodeId tail = 0;
    GroupId group = 0;
    bool protected_lsp = false;
    std::vector<Bucket> buckets;
    bool partitioned = false;
    bool active = true;
};

struct PwAttachment {
    NodeId node = 0;
    std::optional<PortId> port; // empty: the logical port itself is the attachment
    std::optional<std::uint16_t> vlan;
};

struct PwRecord {
    std::uint32_t id = 0;
    PwAttachment ac[2];
    std::uint32_t labels[2] = {0, 0}; // labels[i] is received at ac[i].node
    PortId endpoints[2] = {0, 0};     // PwEndpoint logical ports
    std::size_t tunnels[2] = {0, 0};
    bool protected_lsp = false;
    bool active = true;
};

struct PwOptions {
    Protection protection = Protection::Auto;
};

enum class E2eRole { Head, Tail, Transit };

struct E2eRequest {
    E2eRole role = E2eRole::Head;
    NodeId endpoint = 0;        // head or tail node
    std::string border;         // peer name of the domain exit
    std::string border_b;       // transit: second border
    std::uint32_t remote_label = 0;   // tail: label the peer wants to receive
    std::uint32_t remote_label_b = 0; // transit: label the second peer wants
};

struct E2eLsp {
    std::uint64_t id = 0;
    E2eRole role = E2eRole::Head;
    NodeId ingress = 0;
    NodeId egress = 0;
    std::string border;
    std::string border_b;
    std::uint32_t remote_label = 0;
    std::uint32_t remote_label_b = 0;
    std::uint32_t inbound_label = 0;   // matched at the border on core traffic
    std::uint32_t inbound_label_b = 0; // transit only
    std::uint32_t endpoint_label = 0;  // matched at the endpoint in table 1
    PortId endpoint_port = 0;          // PwEndpoint at the head or tail
    std::vector<std::size_t> tunnels;
    bool established = false;
    bool torn_down = false;
    std::vector<std::pair<NodeId, FlowMod>> entries;
};

struct Outgoing {
    NodeId node = 0;
    Message message;
};

class TransportController : public Actor, public TransportProvider {
public:
    explicit TransportController(TransportConfig cfg);

    std::string name() const override { return cfg_.name; }
    void on_start(Network& net) override;
    void on_message(Network& net, ChannelId ch, const Message& m) override;
    void on_timer(Network& net, std::uint64_t token) override;

    // Wiring, done by the harness before the run starts.
    void attach(ActorId self) { self_ = self; }
    ActorId self() const { return self_; }
    void add_switch_channel(NodeId node, ChannelId ch);
    void add_border(BorderPort border);

    bool discovered() const { return discovered_; }
    /// Runs now if discovery has completed, otherwise once it does.
    void when_ready(Network& net, std::function<void(Network&)> fn);
    /// Runs `fn` at simulated time `at`.
    void after(Network& net, SimTime at, std::function<void(Network&)> fn);

    const DomainGraph& graph() const { return graph_; }
    const std::map<NodeId, MergingTree>& trees() const { return trees_; }
    const std::vector<Tunnel>& tunnels() const { return tunnels_; }
    const std::vector<PwRecord>& pws() const { return pws_; }
    const std::map<std::pair<NodeId, NodeId>, ProtectedLsp>& protected_lsps() const
    {
        return protected_;
    }
    const std::map<std::uint64_t, E2eLsp>& e2e_lsps() const { return e2e_; }
    const std::vector<BorderPort>& borders() const { return borders_; }
    bool in_domain(NodeId n) const;
    bool processing(NodeId n) const;

    MergingTree compute_merging_tree(NodeId dst) const;
    std::vector<FlowMod> install_merging_tree(Network& net, MergingTree tree);
    void ensure_tree(Network& net, NodeId dst);
    ProtectedLsp& install_protected_lsp(Network& net, NodeId a, NodeId b);
    /// Updates trees and plain tunnels after `edge` went down; returns what
    /// was sent.
    std::vector<Outgoing> restore_on_failure(Network& net, EdgeId edge);

    const PwRecord& create_pw(Network& net, PwAttachment ac1, PwAttachment ac2, PwOptions opts = {});
    void remove_pw(Network& net, std::uint32_t pw);

    /// Head and transit requests complete asynchronously; `done` receives
    /// the record once the core peer has accepted.
    std::uint64_t setup_e2e_lsp(Network& net, const E2eRequest& req,
                                std::function<void(Network&, const E2eLsp&)> done = {});
    void teardown_e2e_lsp(Network& net, std::uint64_t id);
    msg::RouterAdvert advertise_domain() const;

    // TransportProvider
    std::optional<ActionList> transport_actions(NodeId from, NodeId to) const override;
    std::uint32_t allocate_label(NodeId node) override;

    // Abstraction module: one virtual switch per client channel.
    void add_client(ChannelId ch, VirtualSwitch vs);
    PortId add_client_port(Network& net, ChannelId ch, PortRef target, std::optional<PortId> vport = {});
    void remove_client_port(Network& net, ChannelId ch, PortId vport);
    const VirtualSwitch& client_view(ChannelId ch) const { return clients_.at(ch); }
    void drop_client_flows(Network& net, ChannelId ch);

    using PacketInHook = std::function<bool(Network&, NodeId, const msg::PacketIn&)>;
    void add_packet_in_hook(PacketInHook hook) { hooks_.push_back(std::move(hook)); }

    /// Latest completion time of anything sent so far.
    SimTime quiescent_at() const { return quiescent_at_; }
    std::uint64_t restorations() const { return restore_count_; }

    SimTime send_to(Network& net, NodeId node, Message m, const std::string& tag = {});

private:
    struct NodeInfo {
        ChannelId channel = 0;
        bool featured = false;
        bool processing = false;
        std::map<PortId, PortDesc> ports;
        std::uint32_t next_label = mpls::kFirstUnreserved;
        GroupId next_group = 1;
        PortId next_logical = kFirstLogicalPort;
        bool oam_demux = false;
    };

    void on_switch_message(Network& net, NodeId node, const Message& m);
    void on_client_message(Network& net, ChannelId ch, const Message& m);
    void on_core_message(Network& net, const BorderPort& border, const Message& m);
    void on_port_status(Network& net, NodeId node, const msg::PortStatus& ps);
    void finish_discovery(Network& net);
    void send_all(Network& net, const std::vector<Outgoing>& out, const std::string& tag);

    FlowEntry tree_entry(const MergingTree& t, NodeId n) const;
    std::vector<Bucket> plain_buckets(NodeId head, NodeId tail) const;
    std::size_t make_tunnel(Network& net, NodeId head, NodeId tail, bool protect);
    GroupId allocate_group(NodeId node);
    PortId allocate_logical(NodeId node);
    LspLeg install_leg(Network& net, const std::vector<NodeId>& nodes, const std::vector<EdgeId>& edges);
    void ensure_oam_demux(Network& net, NodeId node);
    bool has_disjoint_pair(NodeId a, NodeId b) const;
    const BorderPort& border(const std::string& peer) const;
    void install_e2e(Network& net, E2eLsp& lsp);

    TransportConfig cfg_;
    ActorId self_ = 0;
    std::map<NodeId, NodeInfo> nodes_;
    std::map<ChannelId, NodeId> channel_node_;
    std::vector<BorderPort> borders_;
    DomainGraph graph_;
    bool discovered_ = false;
    std::vector<std::function<void(Network&)>> pending_;
    std::map<std::uint64_t, std::function<void(Network&)>> timers_;
    std::uint64_t next_token_ = 1;

    std::map<NodeId, MergingTree> trees_;
    std::vector<Tunnel> tunnels_;
    std::map<std::pair<NodeId, NodeId>, ProtectedLsp> protected_;
    std::vector<PwRecord> pws_;
    std::map<std::uint64_t, E2eLsp> e2e_;
    std::map<std::uint64_t, std::function<void(Network&, const E2eLsp&)>> e2e_done_;
    std::uint64_t next_e2e_ = 1;
    std::uint32_t next_meg_ = 1;

    std::map<ChannelId, VirtualSwitch> clients_;
    std::vector<PacketInHook> hooks_;
    SimTime quiescent_at_ = 0;
    std::uint64_t restore_count_ = 0;
};

/// Scripted core router: accepts every LSP request and echoes IPv4 traffic
/// back along the LSP it arrived on.
class CorePeer : public Actor {
public:
    CorePeer(std::string name, MacAddr mac, Ipv4Addr ip);

    std::string name() const override { return name_; }
    void on_message(Network& net, ChannelId ch, const Message& m) override;
    void on_packet(Network& net, PortId port, const Packet& p) override;

    void attach(ActorId self, ChannelId controller)
    {
        self_ = self;
        channel_ = controller;
    }
    MacAddr mac() const { return mac_; }
    Ipv4Addr ip() const { return ip_; }
    bool reject_requests = false;

    std::uint64_t adverts_received = 0;
    std::optional<msg::RouterAdvert> last_advert;
    std::uint64_t echoed = 0;

private:
    struct Lsp {
        std::uint64_t e2e = 0;
        std::uint32_t send_label = 0;
    };
    std::string name_;
    MacAddr mac_;
    Ipv4Addr ip_;
    ActorId self_ = 0;
    ChannelId channel_ = 0;
    std::uint32_t next_label_ = 1001;
    std::map<std::uint32_t, Lsp> by_label_;
};

} // namespace splitarch

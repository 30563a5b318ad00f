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
#include "splitarch/dataplane.hpp"
#include "splitarch/simnet.hpp"
#include "splitarch/transportctl.hpp"

namespace splitarch {

enum class SessionState { Idle, PadoSent, SessionUp, LcpOpen, IpOpen, Closed };
std::string_view to_string(SessionState s);

struct SessionRecord {
    MacAddr customer_mac{};
    PortId access = 0; // virtual port the customer reaches the BRAS through
    std::uint16_t session_id = 0;
    SessionState state = SessionState::Idle;
    std::optional<Ipv4Addr> ip;
    PortId pppoe_port = 0; // termination port in the Ethernet layer, once routed

    bool operator==(const SessionRecord&) const = default;
};

Ipv4Prefix parse_prefix(std::string_view text);
std::string format_prefix(const Ipv4Prefix& p);

class AddressPool {
public:
    explicit AddressPool(Ipv4Prefix prefix);

    /// Lowest free host address; never the network or broadcast address.
    Ipv4Addr assign(std::uint16_t session);
    void release(Ipv4Addr ip);
    std::size_t capacity() const;
    std::size_t in_use() const { return used_.size(); }
    const Ipv4Prefix& prefix() const { return prefix_; }
    bool allocated(Ipv4Addr ip) const { return used_.contains(ip); }

private:
    Ipv4Prefix prefix_;
    std::map<Ipv4Addr, std::uint16_t> used_;
};

enum class PppoeEvent { Padi, Padr, Padt, LcpConfReq, IpcpConfReq, Timeout };
enum class EmissionKind { Pado, Pads, LcpConfAck, IpcpConfAck };
std::string_view to_string(PppoeEvent e);
std::string_view to_string(EmissionKind e);

struct Emission {
    EmissionKind kind{};
    std::uint16_t session_id = 0;
    std::optional<Ipv4Addr> ip;

    bool operator==(const Emission&) const = default;
};

struct FsmResult {
    SessionRecord session;
    std::vector<Emission> emissions;
    bool ignored = false;
};

/// Session ids come from `next_session_id`; addresses from `pool`.
FsmResult pppoe_fsm_step(SessionRecord s, PppoeEvent ev, AddressPool& pool,
                         const std::function<std::uint16_t()>& next_session_id);

struct BrasDescriptor {
    std::string id;
    NodeId host = 0;
    int priority = 0;
    bool enabled = false;
};

using SelectionPolicy = std::function<std::string(const std::vector<BrasDescriptor>&)>;

/// Highest priority among enabled descriptors, ties to the lowest id.
std::string select_bras(const std::vector<BrasDescriptor>& registry);

/// A rule written in one controller layer's own vocabulary; logical ports
/// of the layers below stand in for everything it cannot express.
struct IncompleteRule {
    std::string layer;
    int priority = 0;
    FieldMatch match;
    ActionList actions;

    bool operator==(const IncompleteRule&) const = default;
};

struct ChainLayer {
    std::string name;
    std::map<PortId, LogicalPort> ports; // offered to the layer above
    std::vector<IncompleteRule> rules;   // only the routing layer has any
};

/// Ordered from the rule-originating layer down to the fast path.
using LayerChain = std::vector<ChainLayer>;

std::pair<IncompleteRule, IncompleteRule> install_customer_route(const SessionRecord& s, PortId ipoe_port);
FlowMod complete_rule(const LayerChain& chain, const IncompleteRule& rule);

struct Forwarded {
    PortId port = 0;
    Packet packet;
};

/// The per-packet path through the controller chain that completed rules
/// bypass.
Forwarded slow_path_forward(const LayerChain& chain, PortId in_port, const Packet& p);

struct BrasConfig {
    std::string id;
    MacAddr mac{};
    Ipv4Prefix pool{};
    MacAddr gateway_mac{};
    SimTime session_timeout_us = 5'000'000;
    int rule_priority = 300;
};

/// One floating BRAS: the IP controller stacked on the Ethernet controller,
/// driving a virtual switch offered by the transport layer.
class BrasModule : public Actor {
public:
    static constexpr PortId kGatewayPort = 1;

    explicit BrasModule(BrasConfig cfg);

    std::string name() const override { return cfg_.id; }
    void on_message(Network& net, ChannelId ch, const Message& m) override;
    void on_timer(Network& net, std::uint64_t token) override;
    void attach(ActorId self, ChannelId ch)
    {
        self_ = self;
        channel_ = ch;
    }

    const BrasConfig& config() const { return cfg_; }
    const std::map<std::uint64_t, SessionRecord>& sessions() const { return sessions_; }
    std::vector<SessionRecord> open_sessions() const;
    const LayerChain& chain() const { return chain_; }
    const AddressPool& pool() const { return pool_; }
    bool gateway_up() const { return gateway_up_; }
    std::uint64_t slow_path_packets() const { return slow_path_; }

private:
    void on_frame(Network& net, PortId vport, const Packet& p);
    void handle_event(Network& net, std::uint64_t key, PppoeEvent ev, std::uint8_t ppp_id);
    void emit(Network& net, const SessionRecord& s, const Emission& e, std::uint8_t ppp_id);
    void route_session(Network& net, SessionRecord& s);
    void push_routes(Network& net, const SessionRecord& s);
    void unroute_session(Network& net, SessionRecord& s);
    void close(Network& net, SessionRecord& s, const std::string& why);
    void send(Network& net, Message m);
    std::uint16_t next_session_id() const;
    ChainLayer& ethernet() { return chain_[1]; }
    ChainLayer& ip() { return chain_[0]; }

    BrasConfig cfg_;
    ActorId self_ = 0;
    ChannelId channel_ = 0;
    AddressPool pool_;
    bool gateway_up_ = false;
    std::map<std::uint64_t, SessionRecord> sessions_; // keyed by (vport, customer mac)
    LayerChain chain_;
    PortId next_lp_ = kFirstLogicalPort + 1;
    std::map<std::uint64_t, std::uint64_t> timeouts_; // token -> session key
    std::uint64_t next_token_ = 1;
    std::uint64_t slow_path_ = 0;
};

struct SteeringBras {
    BrasDescriptor descriptor;
    ChannelId channel = 0;
    std::uint64_t gateway_lsp = 0;
};

/// The BRAS steering module inside the transport controller: traps PADI,
/// selects a BRAS and ties the customer to it with a pseudowire.
class SteeringModule {
public:
    SteeringModule(TransportController& tc, std::string gateway_peer);

    /// Registers a BRAS reached over `channel`; it starts disabled.
    void add_bras(Network& net, BrasDescriptor d, ChannelId channel);
    void enable_bras(Network& net, const std::string& id);
    void disable_bras(Network& net, const std::string& id);
    std::vector<BrasDescriptor> registry() const;

    void set_policy(SelectionPolicy policy) { policy_ = std::move(policy); }
    void set_allow_list(std::set<MacAddr> macs) { allow_ = std::move(macs); }

    /// Installs the PADI trap on every access node.
    void install_traps(Network& net, const std::vector<NodeId>& nodes);
    bool handle_padi(Network& net, NodeId node, const msg::PacketIn& in);

    std::size_t pw_creations() const { return pw_creations_; }
    const std::map<PortRef, std::uint32_t>& customer_pws() const { return pw_by_access_; }

private:
    SteeringBras& bras(const std::string& id);
    void map_customer(Network& net, SteeringBras& b, PortRef access, const PwRecord& pw);

    TransportController& tc_;
    std::string gateway_peer_;
    std::map<std::string, SteeringBras> bras_;
    SelectionPolicy policy_ = select_bras;
    std::optional<std::set<MacAddr>> allow_;
    std::map<PortRef, std::uint32_t> pw_by_access_;     // access port -> pw id
    std::map<std::uint32_t, std::string> pw_bras_;      // pw id -> bras id
    std::map<std::uint32_t, PortId> pw_vport_;          // pw id -> vport at that bras
    std::size_t pw_creations_ = 0;
};

/// A PPPoE subscriber: runs discovery and PPP setup, then echoes IPv4 probes
/// through the service.
class CustomerStub : public Actor {
public:
    CustomerStub(std::string name, MacAddr mac, Ipv4Addr echo_target);

    std::string name() const override { return name_; }
    void on_packet(Network& net, PortId port, const Packet& p) override;
    void on_timer(Network& net, std::uint64_t token) override;
    void attach(ActorId self, PortId port)
    {
        self_ = self;
        port_ = port;
    }

    void send_padi(Network& net);
    /// Sends an echo request every `period_us`, logging replies into the
    /// network probe `probe`.
    void start_echo(Network& net, std::size_t probe, SimTime period_us);
    void stop_echo();

    MacAddr mac() const { return mac_; }
    bool established() const { return ip_.has_value(); }
    std::optional<Ipv4Addr> ip() const { return ip_; }
    std::uint16_t session_id() const { return session_; }
    const std::string& bras() const { return bras_; }

private:
    void send_frame(Network& net, Packet p);

    std::string name_;
    MacAddr mac_;
    Ipv4Addr echo_target_;
    ActorId self_ = 0;
    PortId port_ = 0;
    MacAddr bras_mac_{};
    std::string bras_;
    std::uint16_t session_ = 0;
    std::optional<Ipv4Addr> ip_;
    std::uint8_t ppp_id_ = 0;
    std::optional<std::size_t> probe_;
    SimTime period_us_ = 1000;
    std::uint64_t epoch_ = 0;
};

/// AC-Name style tag carried in PADO payloads.
Bytes encode_ac_name(const std::string& name);
std::optional<std::string> decode_ac_name(const Bytes& payload);

} // namespace splitarch

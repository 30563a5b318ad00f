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

#include "splitarch/ctlproto.hpp"

namespace splitarch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string port_context(PortId p)
{
    return "virtual port " + std::to_string(p);
}

} // namespace

std::string_view message_name(const Message& m)
{
    return std::visit(overloaded{
                          [](const msg::Hello&) { return "Hello"; },
                          [](const msg::FeaturesRequest&) { return "FeaturesRequest"; },
                          [](const msg::FeaturesReply&) { return "FeaturesReply"; },
                          [](const msg::PacketIn&) { return "PacketIn"; },
                          [](const msg::PacketOut&) { return "PacketOut"; },
                          [](const FlowMod&) { return "FlowMod"; },
                          [](const GroupMod&) { return "GroupMod"; },
                          [](const msg::PortStatus&) { return "PortStatus"; },
                          [](const msg::PortMod&) { return "PortMod"; },
                          [](const msg::ErrorReport&) { return "Error"; },
                          [](const msg::RouterAdvert&) { return "RouterAdvert"; },
                          [](const msg::LspRequest&) { return "LspRequest"; },
                          [](const msg::LspAccept&) { return "LspAccept"; },
                          [](const msg::LspReject&) { return "LspReject"; },
                          [](const msg::LspTeardown&) { return "LspTeardown"; },
                      },
                      m);
}

std::set<MatchField> all_match_fields()
{
    return {MatchField::InPort,     MatchField::EthDst,       MatchField::Ethertype,
            MatchField::VlanVid,    MatchField::MplsLabel,    MatchField::MplsBos,
            MatchField::PppoeSession, MatchField::PppProto,   MatchField::Ipv4Dst};
}

std::optional<PortId> VirtualSwitch::virtual_port(PortRef at) const
{
    for (const auto& [vp, ref] : ports) {
        if (ref == at)
            return vp;
    }
    return std::nullopt;
}

PortRef VirtualSwitch::concrete(PortId vp) const
{
    auto it = ports.find(vp);
    if (it == ports.end() || !policy.allowed_ports.contains(vp))
        throw Error(ErrorCode::PermissionDenied, port_context(vp));
    return it->second;
}

std::optional<NodeId> VirtualSwitch::sole_node() const
{
    std::optional<NodeId> node;
    for (const auto& [vp, ref] : ports) {
        if (node && *node != ref.node)
            return std::nullopt;
        node = ref.node;
    }
    return node;
}

VirtualSwitch create_virtual_switch(const std::map<PortId, PortRef>& endpoints,
                                    std::uint64_t datapath_id, const ViewPolicy& policy)
{
    VirtualSwitch vs;
    vs.datapath_id = datapath_id;
    vs.client = policy.client;
    vs.policy = policy;
    for (PortId vp : policy.allowed_ports) {
        auto it = endpoints.find(vp);
        if (it == endpoints.end())
            throw Error(ErrorCode::UnknownPort, port_context(vp));
        vs.ports.emplace(vp, it->second);
    }
    if (vs.ports.empty())
        throw Error(ErrorCode::EmptyView, policy.client);
    return vs;
}

msg::FeaturesReply features_of(const VirtualSwitch& vs)
{
    msg::FeaturesReply reply;
    reply.datapath_id = vs.datapath_id;
    for (const auto& [vp, ref] : vs.ports) {
        if (vs.policy.allowed_ports.contains(vp))
            reply.ports.push_back(PortDesc{vp, true, 1});
    }
    return reply;
}

namespace {

void check_fields(const ViewPolicy& policy, const FieldMatch& m)
{
    auto need = [&](bool set, MatchField f, const char* name) {
        if (set && !policy.allowed_fields.contains(f))
            throw Error(ErrorCode::PermissionDenied, std::string("match field ") + name);
    };
    need(m.in_port.has_value(), MatchField::InPort, "in_port");
    need(m.eth_dst.has_value(), MatchField::EthDst, "eth_dst");
    need(m.ethertype.has_value(), MatchField::Ethertype, "ethertype");
    need(m.vlan_vid.has_value(), MatchField::VlanVid, "vlan_vid");
    need(m.mpls_label.has_value(), MatchField::MplsLabel, "mpls_label");
    need(m.mpls_bos.has_value(), MatchField::MplsBos, "mpls_bos");
    need(m.pppoe_session.has_value(), MatchField::PppoeSession, "pppoe_session");
    need(m.ppp_proto.has_value(), MatchField::PppProto, "ppp_proto");
    need(m.ipv4_dst.has_value(), MatchField::Ipv4Dst, "ipv4_dst");
}

NodeId ingress_node(const VirtualSwitch& vs, const FieldMatch& m)
{
    if (m.in_port)
        return vs.concrete(*m.in_port).node;
    if (auto node = vs.sole_node())
        return *node;
    throw Error(ErrorCode::PermissionDenied, "flow without in_port spans several nodes");
}

} // namespace

std::vector<ConcreteFlowMod> translate_virtual_flow_mod(const VirtualSwitch& vs, const FlowMod& fm,
                                                        TransportProvider* transport)
{
    check_fields(vs.policy, fm.entry.match);
    if (fm.entry.goto_table || fm.entry.table_id != 0)
        throw Error(ErrorCode::PermissionDenied, "virtual switches expose one table");

    const NodeId node = ingress_node(vs, fm.entry.match);
    FlowMod ingress = fm;
    ingress.entry.cookie = vs.datapath_id;
    if (fm.entry.match.in_port)
        ingress.entry.match.in_port = vs.concrete(*fm.entry.match.in_port).port;

    std::vector<ConcreteFlowMod> out;
    if (fm.command == ModCommand::Delete) {
        out.push_back({node, std::move(ingress)});
        return out;
    }

    ActionList actions;
    for (const Action& a : fm.entry.actions) {
        if (const auto* o = std::get_if<action::Output>(&a)) {
            const PortRef target = vs.concrete(o->port);
            if (target.node == node) {
                actions.push_back(action::Output{target.port});
                continue;
            }
            std::optional<ActionList> carry;
            if (transport)
                carry = transport->transport_actions(node, target.node);
            if (!carry)
                throw Error(ErrorCode::NoTransport, std::to_string(node) + "->" +
                                                        std::to_string(target.node));
            // An inner label tells the egress node which port to deliver to.
            const std::uint32_t service = transport->allocate_label(target.node);
            actions.push_back(action::PushMpls{service});
            actions.insert(actions.end(), carry->begin(), carry->end());

            FlowMod egress;
            egress.command = ModCommand::Add;
            egress.entry.table_id = 1;
            egress.entry.priority = fm.entry.priority;
            egress.entry.match.mpls_label = service;
            egress.entry.actions = {action::PopMpls{}, action::Output{target.port}};
            egress.entry.cookie = vs.datapath_id;
            out.push_back({target.node, std::move(egress)});
        } else if (std::holds_alternative<action::Group>(a)) {
            throw Error(ErrorCode::PermissionDenied, "groups are not virtualised");
        } else {
            actions.push_back(a);
        }
    }
    ingress.entry.actions = std::move(actions);
    out.insert(out.begin(), ConcreteFlowMod{node, std::move(ingress)});
    return out;
}

msg::PacketIn surface_packet_in(const VirtualSwitch& vs, PortRef at, const msg::PacketIn& in)
{
    const auto vp = vs.virtual_port(at);
    if (!vp || !vs.policy.allowed_ports.contains(*vp))
        throw Error(ErrorCode::UnmappedPort,
                    "node " + std::to_string(at.node) + " port " + std::to_string(at.port));
    msg::PacketIn out = in;
    out.in_port = *vp;
    return out;
}

ConcretePacketOut sink_packet_out(const VirtualSwitch& vs, const msg::PacketOut& out)
{
    ConcretePacketOut c;
    c.out.packet = out.packet;
    std::optional<NodeId> node;
    for (const Action& a : out.actions) {
        if (const auto* o = std::get_if<action::Output>(&a)) {
            const PortRef target = vs.concrete(o->port);
            if (node && *node != target.node)
                throw Error(ErrorCode::NoTransport, "packet-out spans several nodes");
            node = target.node;
            c.out.actions.push_back(action::Output{target.port});
        } else if (std::holds_alternative<action::Group>(a)) {
            throw Error(ErrorCode::PermissionDenied, "groups are not virtualised");
        } else {
            c.out.actions.push_back(a);
        }
    }
    if (!node)
        throw Error(ErrorCode::UnmappedPort, "packet-out without output");
    c.node = *node;
    c.out.in_port = 0;
    return c;
}

} // namespace splitarch

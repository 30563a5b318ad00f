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

#include "splitarch/dataplane.hpp"

#include <algorithm>

#include "splitarch/error.hpp"

namespace splitarch {

namespace {

constexpr int kMaxRecirculation = 8;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint16_t wire_ethertype(const Packet& p)
{
    return p.mpls.empty() ? p.eth.ethertype : ethertype::kMpls;
}

void validate_actions(const SwitchState& s, const ActionList& actions)
{
    for (const auto& a : actions) {
        if (const auto* out = std::get_if<action::Output>(&a)) {
            if (out->port != kLocalOamPort && !s.has_port(out->port))
                throw Error(ErrorCode::UnknownPort, std::to_string(out->port));
        } else if (const auto* g = std::get_if<action::Group>(&a)) {
            if (!s.groups.contains(g->group))
                throw Error(ErrorCode::UnknownGroup, std::to_string(g->group));
        } else if (is_processing_action(a) && !s.processing_capable) {
            throw Error(ErrorCode::ProcessingUnsupported, to_string(a));
        }
    }
}

// Executes flow entries against one packet and collects effects.
class Pipeline {
public:
    Pipeline(SwitchState& s, SimTime now, Effects& out) : s_(s), now_(now), out_(out) { }

    void run(PortId in_port, Packet p, std::uint8_t table, int depth)
    {
        for (;;) {
            const FlowEntry* hit = lookup(table, in_port, p);
            if (!hit) {
                if (table == 0)
                    out_.push_back(effect::PacketIn{PacketInReason::TableMiss, std::move(p), in_port});
                else
                    drop(DropReason::TableMiss, std::move(p));
                return;
            }
            const FlowEntry& entry = *hit;
            if (!apply(in_port, p, entry.actions, depth))
                return;
            if (!entry.goto_table)
                return;
            table = *entry.goto_table;
        }
    }

    bool apply(PortId in_port, Packet& p, const ActionList& actions, int depth)
    {
        for (const auto& a : actions) {
            bool ok = std::visit(
                overloaded{
                    [&](const action::Output& o) {
                        output(p, o.port, depth);
                        return true;
                    },
                    [&](const action::Group& g) { return group(in_port, p, g.group, depth); },
                    [&](const action::PushMpls& push) {
                        try {
                            p = push_mpls(std::move(p), push.label, push.tc, push.ttl);
                        } catch (const Error&) {
                            return invalid(p);
                        }
                        return true;
                    },
                    [&](const action::PopMpls&) {
                        if (p.mpls.empty())
                            return invalid(p);
                        p = pop_mpls(std::move(p));
                        return true;
                    },
                    [&](const action::SwapMpls& swap) {
                        if (p.mpls.empty())
                            return invalid(p);
                        p.mpls.front().label = swap.label;
                        return true;
                    },
                    [&](const action::SetField& set) { return set_field(p, set); },
                    [&](const action::PushPppoe& push) {
                        if (!s_.processing_capable || !p.ipv4 || p.pppoe || !p.mpls.empty() ||
                            push.session_id == 0)
                            return invalid(p);
                        p.eth.ethertype = ethertype::kPppoeSession;
                        p.ppp_proto = ppp::kIpv4;
                        p.pppoe = PppoeHeader{0x11, pppoe_code::kSession, push.session_id, 0};
                        p.pppoe->length = pppoe_content_length(p);
                        return true;
                    },
                    [&](const action::PopPppoe&) {
                        if (!s_.processing_capable || !p.pppoe || !p.mpls.empty() ||
                            p.ppp_proto != ppp::kIpv4)
                            return invalid(p);
                        p.pppoe.reset();
                        p.ppp_proto.reset();
                        p.eth.ethertype = ethertype::kIpv4;
                        return true;
                    },
                    [&](const action::ToController&) {
                        out_.push_back(effect::PacketIn{PacketInReason::Action, p, in_port});
                        return true;
                    },
                },
                a);
            if (!ok)
                return false;
        }
        return true;
    }

    void output(const Packet& p, PortId port, int depth)
    {
        if (port == kLocalOamPort) {
            local_oam(p);
            return;
        }
        if (auto it = s_.ports.find(port); it != s_.ports.end()) {
            if (!it->second.up) {
                drop(DropReason::PortDown, p);
                return;
            }
            ++it->second.tx_packets;
            out_.push_back(effect::Emit{port, p});
            return;
        }
        auto lit = s_.logical_ports.find(port);
        if (lit == s_.logical_ports.end()) {
            drop(DropReason::UnknownPort, p);
            return;
        }
        logical_output(lit->second, p, depth);
    }

private:
    const FlowEntry* lookup(std::uint8_t table, PortId in_port, const Packet& p) const
    {
        auto it = s_.tables.find(table);
        if (it == s_.tables.end())
            return nullptr;
        for (const auto& e : it->second) {
            if (e.match.matches(in_port, p))
                return &e;
        }
        return nullptr;
    }

    bool group(PortId in_port, const Packet& p, GroupId id, int depth)
    {
        auto it = s_.groups.find(id);
        if (it == s_.groups.end()) {
            drop(DropReason::UnknownGroup, p);
            return false;
        }
        const Group& g = it->second;
        std::size_t idx = 0;
        try {
            idx = select_ff_bucket(g, [this](PortId w) { return s_.port_live(w); });
        } catch (const Error&) {
            drop(DropReason::NoLiveBucket, p);
            return false;
        }
        Packet copy = p;
        apply(in_port, copy, g.buckets[idx].actions, depth);
        return true;
    }

    bool set_field(Packet& p, const action::SetField& set)
    {
        switch (set.field) {
        case Field::EthDst:
            p.eth.dst = mac_from_u64(set.value);
            return true;
        case Field::EthSrc:
            p.eth.src = mac_from_u64(set.value);
            return true;
        case Field::VlanVid:
            if (p.vlans.empty())
                return invalid(p);
            p.vlans.front().vid = static_cast<std::uint16_t>(set.value & 0x0fff);
            return true;
        case Field::MplsTc:
            if (p.mpls.empty())
                return invalid(p);
            p.mpls.front().tc = static_cast<std::uint8_t>(set.value & 0x7);
            return true;
        case Field::MplsTtl:
            if (p.mpls.empty())
                return invalid(p);
            p.mpls.front().ttl = static_cast<std::uint8_t>(set.value);
            return true;
        case Field::Ipv4Ttl:
            if (!p.ipv4)
                return invalid(p);
            p.ipv4->ttl = static_cast<std::uint8_t>(set.value);
            return true;
        case Field::OamSrcNode:
            if (!p.oam)
                return invalid(p);
            p.oam->src_node = static_cast<std::uint32_t>(set.value);
            return true;
        }
        return invalid(p);
    }

    void logical_output(LogicalPort& port, const Packet& p, int depth)
    {
        const PortId id = port.port_id;
        std::visit(
            overloaded{
                [&](lp::OamSink&) {
                    try {
                        auto fx = oam_on_receive(s_, id, p, now_);
                        out_.insert(out_.end(), fx.begin(), fx.end());
                    } catch (const Error&) {
                        drop(DropReason::MegMismatch, p);
                    }
                },
                [&](lp::OamSource&) { drop(DropReason::InvalidAction, p); },
                [&](lp::PwEndpoint& pw) {
                    if (pw.in_label != 0 && !p.mpls.empty() && p.mpls.front().label == pw.in_label) {
                        recirculate(id, pop_mpls(p), depth);
                        return;
                    }
                    Packet q = lp_transform(port, Direction::Egress, p);
                    group(id, q, pw.tunnel_group, depth);
                },
                [&](lp::PppoeTermination& term) {
                    if (p.pppoe) {
                        const bool data = p.pppoe->code == pppoe_code::kSession &&
                                          p.ppp_proto == ppp::kIpv4 && p.mpls.empty() &&
                                          term.sessions.contains(p.pppoe->session_id);
                        if (data)
                            recirculate(id, lp_transform(port, Direction::Ingress, p), depth);
                        else
                            out_.push_back(effect::PacketIn{PacketInReason::LogicalPort, p, id});
                        return;
                    }
                    try {
                        Packet q = lp_transform(port, Direction::Egress, p);
                        output(q, term.lower, depth);
                    } catch (const Error&) {
                        drop(DropReason::DecapMismatch, p);
                    }
                },
                [&](lp::IpOverEthernet& ipoe) {
                    try {
                        Packet q = lp_transform(port, Direction::Egress, p);
                        output(q, ipoe.lower, depth);
                    } catch (const Error&) {
                        drop(DropReason::DecapMismatch, p);
                    }
                },
            },
            port.kind);
    }

    void local_oam(const Packet& p)
    {
        if (p.oam) {
            for (const auto& [id, port] : s_.logical_ports) {
                const auto* sink = std::get_if<lp::OamSink>(&port.kind);
                if (sink && sink->meg_id == p.oam->meg_id) {
                    auto fx = oam_on_receive(s_, id, p, now_);
                    out_.insert(out_.end(), fx.begin(), fx.end());
                    return;
                }
            }
        }
        drop(DropReason::MegMismatch, p);
    }

    void recirculate(PortId from, Packet p, int depth)
    {
        if (depth + 1 >= kMaxRecirculation) {
            drop(DropReason::RecirculationLimit, std::move(p));
            return;
        }
        run(from, std::move(p), 0, depth + 1);
    }

    bool invalid(const Packet& p)
    {
        drop(DropReason::InvalidAction, p);
        return false;
    }

    void drop(DropReason reason, Packet p)
    {
        out_.push_back(effect::Drop{reason, std::move(p)});
    }

    SwitchState& s_;
    SimTime now_;
    Effects& out_;
};

} // namespace

bool Ipv4Prefix::contains(Ipv4Addr ip) const
{
    if (len == 0)
        return true;
    const std::uint32_t mask = len >= 32 ? 0xffffffffu : ~(0xffffffffu >> len);
    return (ip & mask) == (addr & mask);
}

bool FieldMatch::matches(PortId port, const Packet& p) const
{
    if (in_port && *in_port != port)
        return false;
    if (eth_dst && *eth_dst != p.eth.dst)
        return false;
    if (ethertype && *ethertype != wire_ethertype(p))
        return false;
    if (vlan_vid && (p.vlans.empty() || p.vlans.front().vid != *vlan_vid))
        return false;
    if (mpls_label && (p.mpls.empty() || p.mpls.front().label != *mpls_label))
        return false;
    if (mpls_bos && (p.mpls.empty() || p.mpls.front().bos != *mpls_bos))
        return false;
    const bool exposed = p.mpls.empty();
    if (pppoe_session && (!exposed || !p.pppoe || p.pppoe->session_id != *pppoe_session))
        return false;
    if (ppp_proto && (!exposed || !p.ppp_proto || *p.ppp_proto != *ppp_proto))
        return false;
    if (ipv4_dst && (wire_ethertype(p) != ethertype::kIpv4 || !p.ipv4 || !ipv4_dst->contains(p.ipv4->dst)))
        return false;
    return true;
}

bool FieldMatch::refines(const FieldMatch& pattern) const
{
    auto same = [](const auto& mine, const auto& theirs) { return !theirs || mine == theirs; };
    return same(in_port, pattern.in_port) && same(eth_dst, pattern.eth_dst) &&
           same(ethertype, pattern.ethertype) && same(vlan_vid, pattern.vlan_vid) &&
           same(mpls_label, pattern.mpls_label) && same(mpls_bos, pattern.mpls_bos) &&
           same(pppoe_session, pattern.pppoe_session) && same(ppp_proto, pattern.ppp_proto) &&
           same(ipv4_dst, pattern.ipv4_dst);
}

bool is_processing_action(const Action& a)
{
    return std::holds_alternative<action::PushPppoe>(a) || std::holds_alternative<action::PopPppoe>(a);
}

std::string to_string(const Action& a)
{
    return std::visit(
        overloaded{
            [](const action::Output& o) { return "output:" + std::to_string(o.port); },
            [](const action::Group& g) { return "group:" + std::to_string(g.group); },
            [](const action::PushMpls& p) { return "push_mpls:" + std::to_string(p.label); },
            [](const action::PopMpls&) { return std::string("pop_mpls"); },
            [](const action::SwapMpls& s) { return "swap_mpls:" + std::to_string(s.label); },
            [](const action::SetField& s) {
                return "set_field:" + std::to_string(static_cast<int>(s.field)) + "=" +
                       std::to_string(s.value);
            },
            [](const action::PushPppoe& p) { return "push_pppoe:" + std::to_string(p.session_id); },
            [](const action::PopPppoe&) { return std::string("pop_pppoe"); },
            [](const action::ToController&) { return std::string("controller"); },
        },
        a);
}

bool requires_processing(const LogicalPortKind& kind)
{
    return !std::holds_alternative<lp::IpOverEthernet>(kind);
}

bool SwitchState::has_port(PortId port) const
{
    return ports.contains(port) || logical_ports.contains(port);
}

bool SwitchState::port_live(PortId port) const
{
    if (auto it = ports.find(port); it != ports.end())
        return it->second.up;
    if (auto it = logical_ports.find(port); it != logical_ports.end())
        return it->second.live;
    return false;
}

std::size_t SwitchState::flow_count() const
{
    std::size_t n = 0;
    for (const auto& [id, entries] : tables)
        n += entries.size();
    return n;
}

std::string_view to_string(PacketInReason r)
{
    switch (r) {
    case PacketInReason::TableMiss: return "table-miss";
    case PacketInReason::Action: return "action";
    case PacketInReason::LogicalPort: return "logical-port";
    case PacketInReason::OamNotify: return "oam-notify";
    }
    return "?";
}

std::string_view to_string(DropReason r)
{
    switch (r) {
    case DropReason::PortDown: return "port-down";
    case DropReason::NoLiveBucket: return "no-live-bucket";
    case DropReason::UnknownGroup: return "unknown-group";
    case DropReason::UnknownPort: return "unknown-port";
    case DropReason::TableMiss: return "table-miss";
    case DropReason::DecapMismatch: return "decap-mismatch";
    case DropReason::MegMismatch: return "meg-mismatch";
    case DropReason::InvalidAction: return "invalid-action";
    case DropReason::RecirculationLimit: return "recirculation-limit";
    }
    return "?";
}

Effects process_packet(SwitchState& s, PortId in_port, Packet p, SimTime now_us)
{
    Effects out;
    if (auto it = s.ports.find(in_port); it != s.ports.end())
        ++it->second.rx_packets;
    Pipeline(s, now_us, out).run(in_port, std::move(p), 0, 0);
    return out;
}

Effects execute_actions(SwitchState& s, PortId in_port, Packet p, const ActionList& actions,
                        SimTime now_us)
{
    Effects out;
    Pipeline(s, now_us, out).apply(in_port, p, actions, 0);
    return out;
}

void apply_flow_mod(SwitchState& s, const FlowMod& mod)
{
    const FlowEntry& e = mod.entry;
    if (mod.command == ModCommand::Delete) {
        auto it = s.tables.find(e.table_id);
        if (it == s.tables.end())
            return;
        std::erase_if(it->second, [&](const FlowEntry& have) {
            const bool hit = mod.strict ? (have.priority == e.priority && have.match == e.match)
                                        : have.match.refines(e.match);
            return hit && (e.cookie == 0 || have.cookie == e.cookie);
        });
        if (it->second.empty())
            s.tables.erase(it);
        return;
    }

    if (e.match.in_port && !s.has_port(*e.match.in_port))
        throw Error(ErrorCode::UnknownPort, "match in_port " + std::to_string(*e.match.in_port));
    validate_actions(s, e.actions);
    if (e.goto_table && *e.goto_table <= e.table_id)
        throw Error(ErrorCode::ConfigError, "goto_table must increase");

    auto& table = s.tables[e.table_id];
    auto same = std::find_if(table.begin(), table.end(), [&](const FlowEntry& have) {
        return have.priority == e.priority && have.match == e.match;
    });
    if (same != table.end()) {
        *same = e;
        return;
    }
    auto pos = std::find_if(table.begin(), table.end(),
                            [&](const FlowEntry& have) { return have.priority < e.priority; });
    table.insert(pos, e);
}

void apply_group_mod(SwitchState& s, const GroupMod& mod)
{
    if (mod.command == ModCommand::Delete) {
        s.groups.erase(mod.group.group_id);
        return;
    }
    for (const auto& b : mod.group.buckets) {
        if (!s.has_port(b.watch))
            throw Error(ErrorCode::UnknownPort, "watch " + std::to_string(b.watch));
        validate_actions(s, b.actions);
    }
    s.groups[mod.group.group_id] = mod.group;
}

std::size_t select_ff_bucket(const Group& g, const std::function<bool(PortId)>& live)
{
    for (std::size_t i = 0; i < g.buckets.size(); ++i) {
        if (live(g.buckets[i].watch))
            return i;
    }
    throw Error(ErrorCode::NoLiveBucket, "group " + std::to_string(g.group_id));
}

PortId attach_logical_port(SwitchState& s, LogicalPort port)
{
    if (requires_processing(port.kind) && !s.processing_capable)
        throw Error(ErrorCode::ProcessingUnsupported, "node " + std::to_string(s.node_id));
    if (port.port_id == 0) {
        while (s.logical_ports.contains(s.next_logical_port))
            ++s.next_logical_port;
        port.port_id = s.next_logical_port++;
    } else if (!is_logical_port(port.port_id)) {
        throw Error(ErrorCode::UnknownPort, "logical port id below logical range");
    }
    const PortId id = port.port_id;
    s.logical_ports[id] = std::move(port);
    return id;
}

void detach_logical_port(SwitchState& s, PortId port)
{
    s.logical_ports.erase(port);
}

Packet lp_transform(const LogicalPort& port, Direction dir, Packet p)
{
    return std::visit(
        overloaded{
            [&](const lp::PppoeTermination& term) -> Packet {
                if (dir == Direction::Ingress) {
                    if (!p.pppoe || p.pppoe->code != pppoe_code::kSession ||
                        p.ppp_proto != ppp::kIpv4 || !term.sessions.contains(p.pppoe->session_id))
                        throw Error(ErrorCode::DecapMismatch, "pppoe session");
                    p.pppoe.reset();
                    p.ppp_proto.reset();
                    p.eth.ethertype = ethertype::kIpv4;
                    return p;
                }
                if (!p.ipv4 || p.pppoe)
                    throw Error(ErrorCode::DecapMismatch, "pppoe egress needs ipv4");
                for (const auto& [sid, bind] : term.sessions) {
                    if (bind.ip == p.ipv4->dst) {
                        p.eth.ethertype = ethertype::kPppoeSession;
                        p.eth.dst = bind.customer_mac;
                        p.eth.src = term.local_mac;
                        p.ppp_proto = ppp::kIpv4;
                        p.pppoe = PppoeHeader{0x11, pppoe_code::kSession, sid, 0};
                        p.pppoe->length = pppoe_content_length(p);
                        return p;
                    }
                }
                throw Error(ErrorCode::DecapMismatch, "no session for " + format_ipv4(p.ipv4->dst));
            },
            [&](const lp::IpOverEthernet& ipoe) -> Packet {
                if (!p.ipv4 || p.pppoe || !p.mpls.empty())
                    throw Error(ErrorCode::DecapMismatch, "ip-over-ethernet needs plain ipv4");
                if (dir == Direction::Egress) {
                    p.eth.dst = ipoe.next_hop_mac;
                    p.eth.src = ipoe.local_mac;
                }
                return p;
            },
            [&](const lp::PwEndpoint& pw) -> Packet {
                if (dir == Direction::Ingress) {
                    if (p.mpls.empty() || p.mpls.front().label != pw.in_label)
                        throw Error(ErrorCode::DecapMismatch, "pw label");
                    return pop_mpls(std::move(p));
                }
                return push_mpls(std::move(p), pw.pw_label, 0, 64);
            },
            [&](const lp::OamSource&) -> Packet {
                if (dir == Direction::Ingress)
                    throw Error(ErrorCode::DecapMismatch, "oam source has no ingress");
                return push_mpls(std::move(p), mpls::kOamLabel, 0, 64);
            },
            [&](const lp::OamSink& sink) -> Packet {
                if (dir == Direction::Egress)
                    throw Error(ErrorCode::DecapMismatch, "oam sink has no egress");
                if (!p.oam || p.oam->meg_id != sink.meg_id)
                    throw Error(ErrorCode::MegMismatch, "meg");
                return p;
            },
        },
        port.kind);
}

Packet lp_process(const SwitchState& s, PortId port, Direction dir, Packet p)
{
    auto it = s.logical_ports.find(port);
    if (it == s.logical_ports.end())
        throw Error(ErrorCode::UnknownPort, std::to_string(port));
    return lp_transform(it->second, dir, std::move(p));
}

Effects oam_emit_cc(SwitchState& s, PortId source, SimTime now_us)
{
    auto it = s.logical_ports.find(source);
    if (it == s.logical_ports.end())
        throw Error(ErrorCode::UnknownPort, std::to_string(source));
    auto& src = std::get<lp::OamSource>(it->second.kind);
    Packet cc = src.template_packet;
    if (!cc.oam)
        cc.oam = OamCcPayload{};
    cc.oam->meg_id = src.meg_id;
    cc.oam->seq = src.next_seq++;
    cc = lp_transform(it->second, Direction::Egress, std::move(cc));
    Effects out;
    Pipeline(s, now_us, out).run(source, std::move(cc), 0, 0);
    return out;
}

Effects oam_on_receive(SwitchState& s, PortId sink, const Packet& p, SimTime now_us)
{
    auto it = s.logical_ports.find(sink);
    if (it == s.logical_ports.end())
        throw Error(ErrorCode::UnknownPort, std::to_string(sink));
    auto& cfg = std::get<lp::OamSink>(it->second.kind);
    if (!p.oam || p.oam->meg_id != cfg.meg_id)
        throw Error(ErrorCode::MegMismatch, "sink meg " + std::to_string(cfg.meg_id));
    cfg.last_rx_us = now_us;
    it->second.live = true;
    return {effect::Deliver{sink, p}};
}

Effects oam_on_tick(SwitchState& s, PortId sink, SimTime now_us)
{
    auto it = s.logical_ports.find(sink);
    if (it == s.logical_ports.end())
        throw Error(ErrorCode::UnknownPort, std::to_string(sink));
    const auto& cfg = std::get<lp::OamSink>(it->second.kind);
    if (!it->second.live || now_us - cfg.last_rx_us <= SimTime(cfg.k_threshold) * cfg.interval_us)
        return {};
    it->second.live = false;
    Packet notice;
    notice.eth = EthernetHeader{{}, s.mac, ethertype::kOam};
    notice.oam = OamCcPayload{cfg.meg_id, 0, s.node_id};
    return {effect::LivenessDown{cfg.meg_id, sink},
            effect::PacketIn{PacketInReason::OamNotify, std::move(notice), sink}};
}

} // namespace splitarch

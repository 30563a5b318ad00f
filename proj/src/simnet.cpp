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

#include "splitarch/simnet.hpp"

#include <algorithm>
#include <sstream>

#include "splitarch/error.hpp"

namespace splitarch {

namespace ev {

struct Arrival {
    Attachment to;
    Packet packet;
    LinkId link = 0;
    std::uint64_t generation = 0;
};
struct Timer {
    ActorId actor = 0;
    std::uint64_t token = 0;
};
struct Deliver {
    ChannelId channel = 0;
    int dir = 0;
    Message message;
    std::size_t record = 0;
};
struct LinkChange {
    LinkId link = 0;
    bool up = false;
};
struct Action {
    std::string label;
    std::function<void(Network&)> fn;
};
struct OamEmit {
    NodeId node = 0;
    PortId port = 0;
    std::uint64_t epoch = 0;
};
struct OamCheck {
    NodeId node = 0;
    PortId port = 0;
    std::uint64_t epoch = 0;
};
struct ProbeTick {
    std::size_t probe = 0;
    std::uint64_t epoch = 0;
};

} // namespace ev

struct Network::Event {
    std::variant<ev::Arrival, ev::Timer, ev::Deliver, ev::LinkChange, ev::Action, ev::OamEmit,
                 ev::OamCheck, ev::ProbeTick>
        body;
};

struct Network::SwitchSlot {
    std::string name;
    SwitchState state;
    std::optional<ChannelId> controller;
    std::set<PortId> edge_ports;
};

struct Network::ActorSlot {
    std::unique_ptr<Actor> actor;
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void put_u32(Bytes& b, std::uint32_t v)
{
    for (int i = 3; i >= 0; --i)
        b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const Bytes& b, std::size_t at)
{
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i)
        v = v << 8 | b[at + i];
    return v;
}

} // namespace

MacAddr switch_mac(NodeId n)
{
    return mac_from_u64(0x020000000000ull | n);
}

Packet make_probe_packet(std::uint32_t probe, std::uint32_t seq, std::optional<std::uint16_t> vlan)
{
    Packet p;
    p.eth.dst = mac_from_u64(0x0a0000000000ull | probe);
    p.eth.src = mac_from_u64(0x0a0000010000ull | probe);
    p.eth.ethertype = ethertype::kProbe;
    if (vlan)
        p.vlans.push_back(VlanTag{*vlan, 0});
    put_u32(p.payload, probe);
    put_u32(p.payload, seq);
    return p;
}

std::optional<std::pair<std::uint32_t, std::uint32_t>> parse_probe_packet(const Packet& p)
{
    if (p.eth.ethertype != ethertype::kProbe || !p.mpls.empty() || p.payload.size() < 8)
        return std::nullopt;
    return std::pair{get_u32(p.payload, 0), get_u32(p.payload, 4)};
}

std::string describe(const Packet& p)
{
    std::ostringstream os;
    os << std::hex << "0x" << p.eth.ethertype << std::dec;
    if (!p.vlans.empty())
        os << " vlan=" << p.vlans.front().vid;
    if (!p.mpls.empty()) {
        os << " mpls=[";
        for (std::size_t i = 0; i < p.mpls.size(); ++i)
            os << (i ? "," : "") << p.mpls[i].label;
        os << "]";
    }
    if (p.pppoe)
        os << " pppoe=" << int(p.pppoe->code) << "/" << p.pppoe->session_id;
    if (p.ipv4)
        os << " ip=" << format_ipv4(p.ipv4->src) << ">" << format_ipv4(p.ipv4->dst);
    if (p.oam)
        os << " meg=" << p.oam->meg_id << " seq=" << p.oam->seq;
    if (auto probe = parse_probe_packet(p))
        os << " probe=" << probe->first << "/" << probe->second;
    return os.str();
}

SimTime measure_gap(const ProbeFlow& probe)
{
    if (probe.rx.size() < 2)
        throw Error(ErrorCode::NoTraffic, probe.id);
    bool missing = false;
    SimTime widest = 0;
    for (std::size_t i = 1; i < probe.rx.size(); ++i) {
        if (probe.rx[i].first != probe.rx[i - 1].first + 1)
            missing = true;
        widest = std::max(widest, probe.rx[i].second - probe.rx[i - 1].second);
    }
    if (!missing)
        return 0;
    return widest - probe.period_us;
}

Network::Network(std::uint64_t seed) : rng_(seed) { }

Network::~Network() = default;

NodeId Network::add_switch(const std::string& name, bool processing, std::vector<PortId> edge_ports)
{
    SwitchSlot slot;
    slot.name = name;
    slot.state.node_id = static_cast<NodeId>(switches_.size() + 1);
    slot.state.mac = switch_mac(slot.state.node_id);
    slot.state.processing_capable = processing;
    for (PortId p : edge_ports) {
        slot.state.ports[p] = PhysicalPort{p};
        slot.edge_ports.insert(p);
    }
    switches_.push_back(std::move(slot));
    return switches_.back().state.node_id;
}

ActorId Network::add_actor(std::unique_ptr<Actor> actor)
{
    actors_.push_back(ActorSlot{std::move(actor)});
    return static_cast<ActorId>(actors_.size() - 1);
}

LinkId Network::add_link(Link link)
{
    for (const Attachment* att : {&link.a, &link.b}) {
        if (link_index_.contains(*att))
            throw Error(ErrorCode::ConfigError, "port already linked: " + link.name);
        if (att->at.kind == Endpoint::Kind::Switch) {
            auto& st = switch_state(att->at.id);
            st.ports[att->port] = PhysicalPort{att->port};
        }
    }
    const LinkId id = links_.size();
    link_index_[link.a] = id;
    link_index_[link.b] = id;
    links_.push_back(std::move(link));
    return id;
}

ChannelId Network::connect(const std::string& name, Endpoint a, Endpoint b, SimTime latency_us,
                           SimTime per_message_proc_us, bool core_facing)
{
    Channel c;
    c.name = name;
    c.a = a;
    c.b = b;
    c.latency_us = latency_us;
    c.per_message_proc_us = per_message_proc_us;
    c.core_facing = core_facing;
    channels_.push_back(c);
    return static_cast<ChannelId>(channels_.size() - 1);
}

void Network::set_controller(NodeId sw, ChannelId ch)
{
    switches_.at(sw - 1).controller = ch;
}

std::optional<NodeId> Network::switch_id(const std::string& name) const
{
    for (const auto& s : switches_) {
        if (s.name == name)
            return s.state.node_id;
    }
    return std::nullopt;
}

std::optional<ActorId> Network::actor_id(const std::string& name) const
{
    for (std::size_t i = 0; i < actors_.size(); ++i) {
        if (actors_[i].actor->name() == name)
            return static_cast<ActorId>(i);
    }
    return std::nullopt;
}

const std::string& Network::switch_name(NodeId n) const
{
    return switches_.at(n - 1).name;
}

std::string Network::endpoint_name(Endpoint e) const
{
    return e.kind == Endpoint::Kind::Switch ? switch_name(e.id) : actors_.at(e.id).actor->name();
}

std::vector<NodeId> Network::switch_ids() const
{
    std::vector<NodeId> out;
    for (const auto& s : switches_)
        out.push_back(s.state.node_id);
    return out;
}

SwitchState& Network::switch_state(NodeId n)
{
    if (n == 0 || n > switches_.size())
        throw Error(ErrorCode::UnknownPort, "no switch " + std::to_string(n));
    return switches_[n - 1].state;
}

const SwitchState& Network::switch_state(NodeId n) const
{
    if (n == 0 || n > switches_.size())
        throw Error(ErrorCode::UnknownPort, "no switch " + std::to_string(n));
    return switches_[n - 1].state;
}

Actor& Network::actor(ActorId a)
{
    return *actors_.at(a).actor;
}

std::optional<LinkId> Network::link_at(Attachment att) const
{
    auto it = link_index_.find(att);
    if (it == link_index_.end())
        return std::nullopt;
    return it->second;
}

std::optional<LinkId> Network::link_by_name(const std::string& name) const
{
    for (LinkId i = 0; i < links_.size(); ++i) {
        if (links_[i].name == name)
            return i;
    }
    return std::nullopt;
}

void Network::push(SimTime at, Event e)
{
    if (at < now_)
        at = now_;
    queue_.emplace(std::pair{at, seq_++}, std::make_unique<Event>(std::move(e)));
}

SimTime Network::send(ChannelId ch, Endpoint from, Message m, std::string tag)
{
    Channel& c = channels_.at(ch);
    const int dir = from == c.a ? 0 : 1;
    const SimTime arrival = now_ + c.latency_us;
    const SimTime done = std::max(arrival, c.busy_until[dir]) + c.per_message_proc_us;
    c.busy_until[dir] = done;
    ++c.sent[dir];
    ControlRecord rec{now_, done, ch, from, dir == 0 ? c.b : c.a, std::string(message_name(m)), tag};
    control_.push_back(rec);
    if (!tag.empty())
        tag_done_[tag] = std::max(tag_done_[tag], done);
    push(done, Event{ev::Deliver{ch, dir, std::move(m), control_.size() - 1}});
    return done;
}

void Network::schedule_timer(ActorId actor, SimTime at_us, std::uint64_t token)
{
    push(at_us, Event{ev::Timer{actor, token}});
}

void Network::schedule_action(SimTime at_us, std::string label, std::function<void(Network&)> fn)
{
    push(at_us, Event{ev::Action{std::move(label), std::move(fn)}});
}

void Network::actor_transmit(ActorId actor, PortId port, Packet p)
{
    transmit(Attachment{Endpoint::of_actor(actor), port}, std::move(p));
}

void Network::inject(NodeId node, PortId port, Packet p)
{
    auto& st = switch_state(node);
    handle_effects(node, process_packet(st, port, std::move(p), now_));
}

void Network::transmit(Attachment from, Packet p)
{
    auto lid = link_at(from);
    if (!lid)
        return;
    const Link& l = links_[*lid];
    if (!l.up) {
        ++counters_.drops;
        trace("drop", endpoint_name(from.at), "link down " + l.name);
        return;
    }
    ++counters_.link_sent;
    const Attachment to = l.a == from ? l.b : l.a;
    push(now_ + l.delay_us, Event{ev::Arrival{to, std::move(p), *lid, l.generation}});
}

std::uint64_t Network::in_flight() const
{
    std::uint64_t n = 0;
    for (const auto& [key, e] : queue_)
        n += std::holds_alternative<ev::Arrival>(e->body) ? 1 : 0;
    return n;
}

void Network::fail_link(LinkId link, SimTime at_us)
{
    if (link >= links_.size())
        throw Error(ErrorCode::UnknownLink, std::to_string(link));
    push(at_us, Event{ev::LinkChange{link, false}});
}

void Network::restore_link(LinkId link, SimTime at_us)
{
    if (link >= links_.size())
        throw Error(ErrorCode::UnknownLink, std::to_string(link));
    push(at_us, Event{ev::LinkChange{link, true}});
}

void Network::set_link_state(LinkId id, bool up)
{
    Link& l = links_[id];
    if (l.up == up)
        return;
    l.up = up;
    ++l.generation;
    trace(up ? "link_up" : "link_down", l.name, "");
    for (const Attachment& att : {l.a, l.b}) {
        if (att.at.kind != Endpoint::Kind::Switch)
            continue;
        auto& slot = switches_[att.at.id - 1];
        slot.state.ports[att.port].up = up;
        if (slot.controller)
            send(*slot.controller, att.at, msg::PortStatus{att.port, up});
    }
}

std::size_t Network::add_probe(ProbeFlow probe)
{
    probes_.push_back(std::move(probe));
    probe_epoch_.push_back(0);
    return probes_.size() - 1;
}

std::optional<std::size_t> Network::probe_index(const std::string& id) const
{
    for (std::size_t i = 0; i < probes_.size(); ++i) {
        if (probes_[i].id == id)
            return i;
    }
    return std::nullopt;
}

void Network::start_probe(std::size_t probe, SimTime at_us)
{
    ProbeFlow& p = probes_.at(probe);
    p.start_us = at_us;
    push(at_us, Event{ev::ProbeTick{probe, ++probe_epoch_[probe]}});
}

void Network::stop_probe(std::size_t probe, SimTime at_us)
{
    probes_.at(probe).stop_us = at_us;
}

void Network::emit_probe(std::size_t i)
{
    ProbeFlow& p = probes_[i];
    if (p.stop_us >= 0 && now_ >= p.stop_us)
        return;
    const Packet pkt = make_probe_packet(static_cast<std::uint32_t>(i), p.next_seq++, p.vlan);
    if (p.src.at.kind == Endpoint::Kind::Switch)
        inject(p.src.at.id, p.src.port, pkt);
    else
        actor_transmit(p.src.at.id, p.src.port, pkt);
    push(now_ + p.period_us, Event{ev::ProbeTick{i, probe_epoch_[i]}});
}

void Network::record_probe_rx(NodeId node, PortId port, const Packet& pkt)
{
    auto probe = parse_probe_packet(pkt);
    if (!probe || probe->first >= probes_.size())
        return;
    ProbeFlow& p = probes_[probe->first];
    if (p.sink == Attachment{Endpoint::of_switch(node), port})
        p.rx.emplace_back(probe->second, now_);
}

void Network::trace(std::string kind, std::string node, std::string detail)
{
    trace_.push_back(TraceRecord{now_, std::move(kind), std::move(node), std::move(detail)});
}

void Network::mark(std::string metric, std::string subject, std::int64_t value)
{
    markers_.push_back(Marker{std::move(metric), std::move(subject), value, now_});
}

std::optional<SimTime> Network::tag_done(const std::string& tag) const
{
    auto it = tag_done_.find(tag);
    if (it == tag_done_.end())
        return std::nullopt;
    return it->second;
}

void Network::handle_effects(NodeId node, Effects fx)
{
    SwitchSlot& slot = switches_[node - 1];
    for (Effect& e : fx) {
        std::visit(
            overloaded{
                [&](effect::Emit& em) {
                    trace("emit", slot.name, "port=" + std::to_string(em.port) + " " + describe(em.packet));
                    if (auto port = slot.state.ports.find(em.port); port != slot.state.ports.end())
                        ++port->second.tx_packets;
                    const Attachment from{Endpoint::of_switch(node), em.port};
                    if (link_at(from)) {
                        transmit(from, std::move(em.packet));
                    } else {
                        ++counters_.edge_out;
                        record_probe_rx(node, em.port, em.packet);
                    }
                },
                [&](effect::PacketIn& in) {
                    trace("packet_in", slot.name,
                          std::string(to_string(in.reason)) + " in=" + std::to_string(in.in_port) +
                              " " + describe(in.packet));
                    if (slot.controller)
                        send(*slot.controller, Endpoint::of_switch(node),
                             msg::PacketIn{std::move(in.packet), in.in_port, in.reason});
                },
                [&](effect::Deliver& d) {
                    trace("deliver", slot.name,
                          "port=" + std::to_string(d.logical_port) + " " + describe(d.packet));
                },
                [&](effect::Drop& d) {
                    ++counters_.drops;
                    trace("drop", slot.name, std::string(to_string(d.reason)) + " " + describe(d.packet));
                },
                [&](effect::LivenessDown& l) {
                    trace("liveness_down", slot.name,
                          "meg=" + std::to_string(l.meg_id) + " port=" + std::to_string(l.sink));
                },
            },
            e);
    }
}

void Network::on_logical_attach(NodeId node, PortId port)
{
    SwitchState& st = switch_state(node);
    LogicalPort& lp = st.logical_ports.at(port);
    const std::uint64_t epoch = ++oam_epoch_[{node, port}];
    if (auto* src = std::get_if<lp::OamSource>(&lp.kind)) {
        src->activated_us = now_;
        push(now_, Event{ev::OamEmit{node, port, epoch}});
    } else if (auto* sink = std::get_if<lp::OamSink>(&lp.kind)) {
        sink->last_rx_us = now_;
        push(now_ + sink->k_threshold * sink->interval_us + 1, Event{ev::OamCheck{node, port, epoch}});
    }
}

void Network::handle_switch_message(NodeId node, ChannelId ch, const Message& m)
{
    SwitchSlot& slot = switches_[node - 1];
    SwitchState& st = slot.state;
    const Endpoint me = Endpoint::of_switch(node);
    try {
        std::visit(
            overloaded{
                [&](const msg::FeaturesRequest&) {
                    msg::FeaturesReply reply;
                    reply.datapath_id = node;
                    reply.processing = st.processing_capable;
                    for (const auto& [id, port] : st.ports) {
                        std::uint32_t cost = 1;
                        if (auto lid = link_at(Attachment{me, id}))
                            cost = links_[*lid].weight;
                        reply.ports.push_back(PortDesc{id, port.up, cost});
                    }
                    send(ch, me, reply);
                },
                [&](const FlowMod& fm) { apply_flow_mod(st, fm); },
                [&](const GroupMod& gm) { apply_group_mod(st, gm); },
                [&](const msg::PacketOut& po) {
                    handle_effects(node, execute_actions(st, po.in_port, po.packet, po.actions, now_));
                },
                [&](const msg::PortMod& pm) {
                    if (pm.attach) {
                        const PortId id = attach_logical_port(st, pm.port);
                        on_logical_attach(node, id);
                    } else {
                        detach_logical_port(st, pm.port.port_id);
                        ++oam_epoch_[{node, pm.port.port_id}];
                    }
                },
                [&](const auto&) { },
            },
            m);
    } catch (const Error& e) {
        trace("error", slot.name, std::string(message_name(m)) + ": " + e.what());
        send(ch, me, msg::ErrorReport{e.code(), e.context()});
    }
}

void Network::dispatch(Event& e)
{
    std::visit(
        overloaded{
            [&](ev::Arrival& a) {
                const Link& l = links_[a.link];
                if (!l.up || l.generation != a.generation) {
                    ++counters_.link_cut;
                    trace("drop", l.name, "cut " + describe(a.packet));
                    return;
                }
                ++counters_.link_arrived;
                if (a.to.at.kind == Endpoint::Kind::Switch) {
                    SwitchState& st = switch_state(a.to.at.id);
                    ++st.ports[a.to.port].rx_packets;
                    handle_effects(a.to.at.id, process_packet(st, a.to.port, std::move(a.packet), now_));
                } else {
                    actors_.at(a.to.at.id).actor->on_packet(*this, a.to.port, a.packet);
                }
            },
            [&](ev::Timer& t) { actors_.at(t.actor).actor->on_timer(*this, t.token); },
            [&](ev::Deliver& d) {
                const Channel& c = channels_[d.channel];
                const Endpoint to = d.dir == 0 ? c.b : c.a;
                const ControlRecord& rec = control_[d.record];
                trace("ctl", c.name,
                      endpoint_name(rec.from) + ">" + endpoint_name(to) + " " + rec.message +
                          (rec.tag.empty() ? "" : " " + rec.tag));
                if (to.kind == Endpoint::Kind::Switch)
                    handle_switch_message(to.id, d.channel, d.message);
                else
                    actors_.at(to.id).actor->on_message(*this, d.channel, d.message);
            },
            [&](ev::LinkChange& lc) { set_link_state(lc.link, lc.up); },
            [&](ev::Action& a) {
                trace("action", "harness", a.label);
                a.fn(*this);
            },
            [&](ev::OamEmit& o) {
                if (oam_epoch_[{o.node, o.port}] != o.epoch)
                    return;
                SwitchState& st = switch_state(o.node);
                auto it = st.logical_ports.find(o.port);
                if (it == st.logical_ports.end())
                    return;
                const auto interval = std::get<lp::OamSource>(it->second.kind).interval_us;
                handle_effects(o.node, oam_emit_cc(st, o.port, now_));
                push(now_ + interval, Event{o});
            },
            [&](ev::OamCheck& o) {
                if (oam_epoch_[{o.node, o.port}] != o.epoch)
                    return;
                SwitchState& st = switch_state(o.node);
                auto it = st.logical_ports.find(o.port);
                if (it == st.logical_ports.end())
                    return;
                handle_effects(o.node, oam_on_tick(st, o.port, now_));
                const auto& sink = std::get<lp::OamSink>(it->second.kind);
                SimTime next = sink.last_rx_us + sink.k_threshold * sink.interval_us + 1;
                if (!it->second.live || next <= now_)
                    next = now_ + sink.interval_us;
                push(next, Event{o});
            },
            [&](ev::ProbeTick& t) {
                if (probe_epoch_[t.probe] != t.epoch)
                    return;
                emit_probe(t.probe);
            },
        },
        e.body);
}

void Network::run_until(SimTime t_us)
{
    if (!started_) {
        started_ = true;
        for (std::size_t i = 0; i < actors_.size(); ++i)
            actors_[i].actor->on_start(*this);
    }
    while (!queue_.empty()) {
        auto it = queue_.begin();
        if (it->first.first > t_us)
            break;
        now_ = it->first.first;
        std::unique_ptr<Event> e = std::move(it->second);
        queue_.erase(it);
        dispatch(*e);
    }
    now_ = std::max(now_, t_us);
}

void build_network(Network& net, const TopologyConfig& cfg)
{
    std::set<std::string> seen;
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
        const NodeConfig& n = cfg.nodes[i];
        const std::string path = "nodes[" + std::to_string(i) + "].id";
        if (n.id.empty() || !seen.insert(n.id).second || net.actor_id(n.id))
            throw Error(ErrorCode::ConfigError, path);
        net.add_switch(n.id, n.processing, n.edge_ports);
    }

    // Explicit ports first, so automatic numbering can avoid them.
    // A link may attach at a declared edge port; automatic numbering skips them.
    std::map<Endpoint, std::set<PortId>> taken;
    std::map<Endpoint, std::set<PortId>> linked;
    for (NodeId id : net.switch_ids()) {
        for (const auto& [p, port] : net.switch_state(id).ports)
            taken[Endpoint::of_switch(id)].insert(p);
    }
    auto resolve = [&](const std::string& name, const std::string& path) {
        if (auto s = net.switch_id(name))
            return Endpoint::of_switch(*s);
        if (auto a = net.actor_id(name))
            return Endpoint::of_actor(*a);
        throw Error(ErrorCode::ConfigError, path);
    };
    struct Pending {
        Endpoint a, b;
        std::optional<PortId> pa, pb;
    };
    std::vector<Pending> pending;
    for (std::size_t i = 0; i < cfg.links.size(); ++i) {
        const LinkConfig& l = cfg.links[i];
        const std::string base = "links[" + std::to_string(i) + "]";
        Pending p{resolve(l.a, base + ".a"), resolve(l.b, base + ".b"), l.port_a, l.port_b};
        if (p.a == p.b)
            throw Error(ErrorCode::ConfigError, base + ".b");
        if (l.delay_us < 1)
            throw Error(ErrorCode::ConfigError, base + ".delay_us");
        if (l.weight < 1)
            throw Error(ErrorCode::ConfigError, base + ".weight");
        for (auto [ep, port, key] : {std::tuple{p.a, p.pa, ".port_a"}, std::tuple{p.b, p.pb, ".port_b"}}) {
            if (port && !linked[ep].insert(*port).second)
                throw Error(ErrorCode::ConfigError, base + key);
            if (port)
                taken[ep].insert(*port);
        }
        pending.push_back(p);
    }
    auto next_free = [&](Endpoint ep) {
        PortId p = 1;
        while (taken[ep].contains(p))
            ++p;
        taken[ep].insert(p);
        return p;
    };
    std::set<std::string> names;
    for (std::size_t i = 0; i < cfg.links.size(); ++i) {
        const LinkConfig& l = cfg.links[i];
        Pending& p = pending[i];
        Link link;
        link.name = l.id.empty() ? l.a + "-" + l.b : l.id;
        if (!names.insert(link.name).second)
            throw Error(ErrorCode::ConfigError, "links[" + std::to_string(i) + "].id");
        link.a = Attachment{p.a, p.pa ? *p.pa : next_free(p.a)};
        link.b = Attachment{p.b, p.pb ? *p.pb : next_free(p.b)};
        link.delay_us = l.delay_us;
        link.weight = l.weight;
        net.add_link(std::move(link));
    }
}

} // namespace splitarch

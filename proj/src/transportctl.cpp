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

#include "splitarch/transportctl.hpp"

#include <algorithm>

#include "splitarch/error.hpp"

namespace splitarch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr int kTreePriority = 100;
constexpr int kServicePriority = 150;
constexpr int kOamPriority = 200;
const MacAddr kDiscoveryMac = mac_from_u64(0x0180c200000e);

FlowMod add(FlowEntry e)
{
    return FlowMod{ModCommand::Add, std::move(e), false};
}

FlowMod strict_delete(FlowEntry e)
{
    e.actions.clear();
    e.goto_table.reset();
    return FlowMod{ModCommand::Delete, std::move(e), true};
}

FlowEntry entry(std::uint8_t table, int priority, FieldMatch m, ActionList actions)
{
    FlowEntry e;
    e.table_id = table;
    e.priority = priority;
    e.match = std::move(m);
    e.actions = std::move(actions);
    return e;
}

Packet discovery_frame(NodeId node, PortId port)
{
    Packet p;
    p.eth.dst = kDiscoveryMac;
    p.eth.src = switch_mac(node);
    p.eth.ethertype = ethertype::kDiscovery;
    for (std::uint32_t v : {node, port}) {
        for (int i = 3; i >= 0; --i)
            p.payload.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    return p;
}

std::optional<std::pair<NodeId, PortId>> parse_discovery(const Packet& p)
{
    if (p.eth.ethertype != ethertype::kDiscovery || p.payload.size() != 8 || !p.mpls.empty())
        return std::nullopt;
    std::uint32_t v[2] = {0, 0};
    for (std::size_t i = 0; i < 8; ++i)
        v[i / 4] = v[i / 4] << 8 | p.payload[i];
    return std::pair{v[0], v[1]};
}

} // namespace

TransportController::TransportController(TransportConfig cfg) : cfg_(std::move(cfg))
{
    for (NodeId n : cfg_.domain)
        graph_.add_node(n);
}

void TransportController::add_switch_channel(NodeId node, ChannelId ch)
{
    nodes_[node].channel = ch;
    channel_node_[ch] = node;
}

void TransportController::add_border(BorderPort border)
{
    borders_.push_back(std::move(border));
}

bool TransportController::in_domain(NodeId n) const
{
    return nodes_.contains(n);
}

bool TransportController::processing(NodeId n) const
{
    auto it = nodes_.find(n);
    return it != nodes_.end() && it->second.processing;
}

SimTime TransportController::send_to(Network& net, NodeId node, Message m, const std::string& tag)
{
    const SimTime done = net.send(nodes_.at(node).channel, Endpoint::of_actor(self_), std::move(m), tag);
    quiescent_at_ = std::max(quiescent_at_, done);
    return done;
}

void TransportController::send_all(Network& net, const std::vector<Outgoing>& out, const std::string& tag)
{
    for (const Outgoing& o : out)
        send_to(net, o.node, o.message, tag);
}

void TransportController::after(Network& net, SimTime at, std::function<void(Network&)> fn)
{
    const std::uint64_t token = next_token_++;
    timers_[token] = std::move(fn);
    net.schedule_timer(self_, at, token);
}

void TransportController::when_ready(Network& net, std::function<void(Network&)> fn)
{
    if (discovered_)
        fn(net);
    else
        pending_.push_back(std::move(fn));
}

void TransportController::on_timer(Network& net, std::uint64_t token)
{
    auto it = timers_.find(token);
    if (it == timers_.end())
        return;
    auto fn = std::move(it->second);
    timers_.erase(it);
    fn(net);
}

void TransportController::on_start(Network& net)
{
    for (const auto& [node, info] : nodes_)
        send_to(net, node, msg::FeaturesRequest{});
    after(net, cfg_.discovery_timeout_us, [this](Network& n) { finish_discovery(n); });
}

void TransportController::finish_discovery(Network& net)
{
    discovered_ = true;
    net.mark("discovery_complete", cfg_.name, net.now());
    std::size_t up = 0;
    for (const Edge& e : graph_.edges())
        up += e.up ? 1 : 0;
    net.trace("discovery", cfg_.name, std::to_string(graph_.nodes().size()) + " nodes " +
                                          std::to_string(up) + " links");
    const msg::RouterAdvert advert = advertise_domain();
    for (const BorderPort& b : borders_)
        net.send(b.channel, Endpoint::of_actor(self_), advert);
    auto pending = std::move(pending_);
    pending_.clear();
    for (auto& fn : pending) {
        try {
            fn(net);
        } catch (const Error& e) {
            net.trace("error", cfg_.name, e.what());
        }
    }
}

msg::RouterAdvert TransportController::advertise_domain() const
{
    msg::RouterAdvert advert;
    advert.router_id = cfg_.name;
    for (const BorderPort& b : borders_) {
        if (b.up)
            advert.interfaces.push_back(b.peer);
    }
    return advert;
}

void TransportController::on_message(Network& net, ChannelId ch, const Message& m)
{
    if (auto it = channel_node_.find(ch); it != channel_node_.end()) {
        on_switch_message(net, it->second, m);
        return;
    }
    if (clients_.contains(ch)) {
        on_client_message(net, ch, m);
        return;
    }
    for (const BorderPort& b : borders_) {
        if (b.channel == ch) {
            on_core_message(net, b, m);
            return;
        }
    }
}

void TransportController::on_switch_message(Network& net, NodeId node, const Message& m)
{
    NodeInfo& info = nodes_.at(node);
    std::visit(
        overloaded{
            [&](const msg::FeaturesReply& r) {
                info.featured = true;
                info.processing = r.processing;
                for (const PortDesc& d : r.ports) {
                    info.ports[d.port] = d;
                    send_to(net, node,
                            msg::PacketOut{discovery_frame(node, d.port), 0, {action::Output{d.port}}});
                }
            },
            [&](const msg::PacketIn& in) {
                if (auto from = parse_discovery(in.packet)) {
                    const auto [peer, peer_port] = *from;
                    if (!in_domain(peer) || graph_.edge_at(peer, peer_port) ||
                        graph_.edge_at(node, in.in_port))
                        return;
                    const auto& pp = nodes_.at(peer).ports;
                    const std::uint32_t w = pp.contains(peer_port) ? pp.at(peer_port).cost : 1;
                    const bool up = !pp.contains(peer_port) || pp.at(peer_port).up;
                    graph_.add_edge(Edge{peer, node, peer_port, in.in_port, w, up});
                    return;
                }
                if (in.reason == PacketInReason::OamNotify) {
                    net.trace("oam_notify", cfg_.name, net.switch_name(node));
                    return;
                }
                for (auto& [ch, vs] : clients_) {
                    if (vs.virtual_port(PortRef{node, in.in_port})) {
                        net.send(ch, Endpoint::of_actor(self_),
                                 surface_packet_in(vs, PortRef{node, in.in_port}, in));
                        return;
                    }
                }
                for (auto& hook : hooks_) {
                    if (hook(net, node, in))
                        return;
                }
                net.trace("unhandled", cfg_.name,
                          net.switch_name(node) + " in=" + std::to_string(in.in_port) + " " +
                              describe(in.packet));
            },
            [&](const msg::PortStatus& ps) { on_port_status(net, node, ps); },
            [&](const msg::ErrorReport& e) {
                net.trace("switch_error", cfg_.name,
                          net.switch_name(node) + " " + std::string(to_string(e.code)) + " " + e.context);
            },
            [&](const auto&) { },
        },
        m);
}

void TransportController::on_port_status(Network& net, NodeId node, const msg::PortStatus& ps)
{
    if (auto it = nodes_.at(node).ports.find(ps.port); it != nodes_.at(node).ports.end())
        it->second.up = ps.up;
    for (BorderPort& b : borders_) {
        if (b.ref == PortRef{node, ps.port}) {
            if (b.up == ps.up)
                return;
            b.up = ps.up;
            const msg::RouterAdvert advert = advertise_domain();
            for (const BorderPort& peer : borders_)
                net.send(peer.channel, Endpoint::of_actor(self_), advert);
            return;
        }
    }
    auto eid = graph_.edge_at(node, ps.port);
    if (!eid || graph_.edge(*eid).up == ps.up)
        return;
    graph_.edge(*eid).up = ps.up;
    if (!discovered_)
        return;
    const std::string tag = "restore:" + cfg_.name + "#" + std::to_string(restore_count_ + 1);
    net.mark("restore_begin", tag, net.now());
    const auto out = restore_on_failure(net, *eid);
    send_all(net, out, tag);
    net.trace("restore", cfg_.name, tag + " messages=" + std::to_string(out.size()));
}

MergingTree TransportController::compute_merging_tree(NodeId dst) const
{
    return ::splitarch::compute_merging_tree(graph_, dst);
}

FlowEntry TransportController::tree_entry(const MergingTree& t, NodeId n) const
{
    FieldMatch m;
    m.mpls_label = t.labels.at(n);
    if (n == t.dst) {
        FlowEntry e = entry(0, kTreePriority, m, {action::PopMpls{}});
        e.goto_table = 1;
        return e;
    }
    const TreeHop& h = t.parent.at(n);
    return entry(0, kTreePriority, m,
                 {action::SwapMpls{t.labels.at(h.next)}, action::Output{h.out_port}});
}

std::vector<FlowMod> TransportController::install_merging_tree(Network& net, MergingTree tree)
{
    std::vector<FlowMod> mods;
    for (NodeId n : graph_.nodes()) {
        if (!tree.reaches(n))
            continue;
        if (!tree.labels.contains(n))
            tree.labels[n] = allocate_label(n);
    }
    for (NodeId n : graph_.nodes()) {
        if (!tree.reaches(n))
            continue;
        FlowMod fm = add(tree_entry(tree, n));
        send_to(net, n, fm);
        mods.push_back(std::move(fm));
    }
    trees_[tree.dst] = std::move(tree);
    return mods;
}

void TransportController::ensure_tree(Network& net, NodeId dst)
{
    if (!trees_.contains(dst))
        install_merging_tree(net, compute_merging_tree(dst));
}

std::uint32_t TransportController::allocate_label(NodeId node)
{
    NodeInfo& info = nodes_.at(node);
    if (info.next_label >= mpls::kLabelLimit)
        throw Error(ErrorCode::ConfigError, "label space exhausted at node " + std::to_string(node));
    return info.next_label++;
}

GroupId TransportController::allocate_group(NodeId node)
{
    return nodes_.at(node).next_group++;
}

PortId TransportController::allocate_logical(NodeId node)
{
    return nodes_.at(node).next_logical++;
}

std::vector<Bucket> TransportController::plain_buckets(NodeId head, NodeId tail) const
{
    auto it = trees_.find(tail);
    if (it == trees_.end() || !it->second.parent.contains(head))
        return {};
    const TreeHop& h = it->second.parent.at(head);
    return {Bucket{h.out_port, {action::PushMpls{it->second.labels.at(h.next)}, action::Output{h.out_port}}}};
}

std::optional<ActionList> TransportController::transport_actions(NodeId from, NodeId to) const
{
    const auto buckets = plain_buckets(from, to);
    if (buckets.empty())
        return std::nullopt;
    return buckets.front().actions;
}

std::vector<Outgoing> TransportController::restore_on_failure(Network& net, EdgeId)
{
    ++restore_count_;
    std::vector<NodeId> dsts;
    for (const auto& [dst, t] : trees_)
        dsts.push_back(dst);
    const auto fresh = cfg_.parallel_paths ? compute_all_merging_trees_parallel(graph_, dsts)
                                           : compute_all_merging_trees(graph_, dsts);

    std::vector<Outgoing> out;
    bool partition = false;
    for (std::size_t i = 0; i < dsts.size(); ++i) {
        MergingTree& old = trees_.at(dsts[i]);
        MergingTree t = fresh[i];
        t.labels = old.labels;
        for (NodeId n : graph_.nodes()) {
            if (t.reaches(n) && !t.labels.contains(n))
                t.labels[n] = allocate_label(n);
        }
        for (NodeId n : graph_.nodes()) {
            if (n == t.dst)
                continue;
            const bool had = old.reaches(n);
            const bool has = t.reaches(n);
            if (has && (!had || !(old.parent.at(n) == t.parent.at(n))))
                out.push_back({n, add(tree_entry(t, n))});
            if (had && !has) {
                partition = true;
                out.push_back({n, strict_delete(tree_entry(old, n))});
            }
        }
        old = std::move(t);
    }
    // Services keep their own head-end group, so each one is repointed
    // individually.
    for (Tunnel& tun : tunnels_) {
        if (!tun.active || tun.protected_lsp)
            continue;
        auto buckets = plain_buckets(tun.head, tun.tail);
        tun.partitioned = buckets.empty();
        partition = partition || tun.partitioned;
        if (buckets == tun.buckets)
            continue;
        tun.buckets = buckets;
        out.push_back({tun.head, GroupMod{ModCommand::Modify, Group{tun.group, std::move(buckets)}}});
    }
    if (partition)
        net.trace("partition", cfg_.name, "unreachable destinations after restoration");
    return out;
}

void TransportController::ensure_oam_demux(Network& net, NodeId node)
{
    NodeInfo& info = nodes_.at(node);
    if (info.oam_demux)
        return;
    info.oam_demux = true;
    FieldMatch m;
    m.mpls_label = mpls::kOamLabel;
    send_to(net, node,
            add(entry(1, kOamPriority, m, {action::PopMpls{}, action::Output{kLocalOamPort}})));
}

LspLeg TransportController::install_leg(Network& net, const std::vector<NodeId>& nodes,
                                        const std::vector<EdgeId>& edges)
{
    LspLeg leg;
    leg.nodes = nodes;
    leg.labels.assign(nodes.size(), 0);
    for (std::size_t i = 1; i < nodes.size(); ++i)
        leg.labels[i] = allocate_label(nodes[i]);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        leg.out_ports.push_back(graph_.edge(edges[i]).port_at(nodes[i]));
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        FieldMatch m;
        m.mpls_label = leg.labels[i];
        if (i + 1 == nodes.size()) {
            FlowEntry e = entry(0, kTreePriority, m, {action::PopMpls{}});
            e.goto_table = 1;
            send_to(net, nodes[i], add(e));
        } else {
            send_to(net, nodes[i],
                    add(entry(0, kTreePriority, m,
                              {action::SwapMpls{leg.labels[i + 1]}, action::Output{leg.out_ports[i]}})));
        }
    }
    return leg;
}

bool TransportController::has_disjoint_pair(NodeId a, NodeId b) const
{
    try {
        compute_disjoint_pair(graph_, a, b);
        return true;
    } catch (const Error&) {
        return false;
    }
}

ProtectedLsp& TransportController::install_protected_lsp(Network& net, NodeId a, NodeId b)
{
    if (a > b)
        std::swap(a, b);
    if (auto it = protected_.find({a, b}); it != protected_.end())
        return it->second;
    if (!processing(a) || !processing(b))
        throw Error(ErrorCode::ProcessingUnsupported, "protected LSP endpoints must process OAM");
    auto [primary, backup] = compute_disjoint_pair(graph_, a, b);

    ProtectedLsp lsp;
    lsp.a = a;
    lsp.b = b;
    lsp.primary = primary;
    lsp.backup = backup;
    const Path* paths[2] = {&lsp.primary, &lsp.backup};
    for (int x = 0; x < 2; ++x) {
        for (int dir = 0; dir < 2; ++dir) {
            const Path p = dir == 0 ? *paths[x] : reversed(*paths[x]);
            LspLeg leg = install_leg(net, p.nodes, p.edges);
            leg.meg_id = next_meg_++;
            const NodeId head = leg.nodes.front();
            const NodeId tail = leg.nodes.back();
            ensure_oam_demux(net, tail);
            leg.sink = allocate_logical(tail);
            send_to(net, tail,
                    msg::PortMod{true, LogicalPort{leg.sink, lp::OamSink{leg.meg_id, cfg_.oam_interval_us,
                                                                         cfg_.oam_k, 0}}});
            leg.source = allocate_logical(head);
            lsp.legs[x][dir] = std::move(leg);
        }
    }
    // Sources start once every sink and label entry is in place.
    const SimTime start = quiescent_at_;
    for (int x = 0; x < 2; ++x) {
        for (int dir = 0; dir < 2; ++dir) {
            const LspLeg leg = lsp.legs[x][dir];
            after(net, start, [this, leg](Network& n) {
                const NodeId head = leg.nodes.front();
                Packet tmpl;
                tmpl.eth.dst = switch_mac(leg.nodes.back());
                tmpl.eth.src = switch_mac(head);
                tmpl.eth.ethertype = ethertype::kOam;
                tmpl.oam = OamCcPayload{leg.meg_id, 0, head};
                FieldMatch m;
                m.in_port = leg.source;
                send_to(n, head,
                        msg::PortMod{true, LogicalPort{leg.source, lp::OamSource{leg.meg_id, cfg_.oam_interval_us,
                                                                                 tmpl, 0, 0}}});
                send_to(n, head,
                        add(entry(0, kServicePriority, m,
                                  {action::PushMpls{leg.labels[1]}, action::Output{leg.out_ports[0]}})));
            });
        }
    }
    net.trace("protected_lsp", cfg_.name,
              std::to_string(a) + "-" + std::to_string(b) + " primary hops=" +
                  std::to_string(lsp.primary.edges.size()) + " backup hops=" +
                  std::to_string(lsp.backup.edges.size()));
    return protected_.emplace(std::pair{a, b}, std::move(lsp)).first->second;
}

std::size_t TransportController::make_tunnel(Network& net, NodeId head, NodeId tail, bool protect)
{
    Tunnel t;
    t.head = head;
    t.tail = tail;
    t.protected_lsp = protect;
    if (protect) {
        ProtectedLsp& lsp = install_protected_lsp(net, head, tail);
        const int dir = head == lsp.a ? 0 : 1;
        for (int x = 0; x < 2; ++x) {
            const LspLeg& fwd = lsp.legs[x][dir];
            const LspLeg& rev = lsp.legs[x][1 - dir];
            t.buckets.push_back(Bucket{rev.sink, {action::PushMpls{fwd.labels[1]}, action::Output{fwd.out_ports[0]}}});
        }
    } else {
        ensure_tree(net, tail);
        t.buckets = plain_buckets(head, tail);
        if (t.buckets.empty())
            throw Error(ErrorCode::Unreachable, std::to_string(head) + "->" + std::to_string(tail));
    }
    t.group = allocate_group(head);
    send_to(net, head, GroupMod{ModCommand::Add, Group{t.group, t.buckets}});
    if (protect)
        protected_.at({std::min(head, tail), std::max(head, tail)}).head_groups.push_back(t.group);
    tunnels_.push_back(std::move(t));
    return tunnels_.size() - 1;
}

const PwRecord& TransportController::create_pw(Network& net, PwAttachment ac1, PwAttachment ac2,
                                               PwOptions opts)
{
    for (const PwAttachment* ac : {&ac1, &ac2}) {
        if (!in_domain(ac->node))
            throw Error(ErrorCode::Unreachable, "node " + std::to_string(ac->node) + " outside domain");
        if (!processing(ac->node))
            throw Error(ErrorCode::ProcessingUnsupported, net.switch_name(ac->node));
    }
    if (ac1.node == ac2.node)
        throw Error(ErrorCode::Unreachable, "pseudowire endpoints on one node");
    if (!compute_merging_tree(ac2.node).reaches(ac1.node))
        throw Error(ErrorCode::Unreachable, net.switch_name(ac1.node) + "->" + net.switch_name(ac2.node));

    bool protect = false;
    switch (opts.protection) {
    case Protection::Auto:
        protect = has_disjoint_pair(ac1.node, ac2.node);
        break;
    case Protection::Protected:
        protect = true;
        break;
    case Protection::None:
        break;
    }

    PwRecord pw;
    pw.id = static_cast<std::uint32_t>(pws_.size() + 1);
    pw.ac[0] = ac1;
    pw.ac[1] = ac2;
    pw.protected_lsp = protect;
    for (int i = 0; i < 2; ++i)
        pw.labels[i] = allocate_label(pw.ac[i].node);
    pw.tunnels[0] = make_tunnel(net, ac1.node, ac2.node, protect);
    pw.tunnels[1] = make_tunnel(net, ac2.node, ac1.node, protect);
    for (int i = 0; i < 2; ++i) {
        const NodeId n = pw.ac[i].node;
        pw.endpoints[i] = allocate_logical(n);
        send_to(net, n,
                msg::PortMod{true, LogicalPort{pw.endpoints[i],
                                               lp::PwEndpoint{pw.labels[1 - i], pw.labels[i],
                                                              tunnels_[pw.tunnels[i]].group}}});
        FieldMatch demux;
        demux.mpls_label = pw.labels[i];
        send_to(net, n, add(entry(1, kServicePriority, demux, {action::Output{pw.endpoints[i]}})));
        if (pw.ac[i].port) {
            FieldMatch up;
            up.in_port = *pw.ac[i].port;
            up.vlan_vid = pw.ac[i].vlan;
            send_to(net, n, add(entry(0, kServicePriority, up, {action::Output{pw.endpoints[i]}})));
            FieldMatch down;
            down.in_port = pw.endpoints[i];
            send_to(net, n, add(entry(0, kServicePriority, down, {action::Output{*pw.ac[i].port}})));
        }
    }
    net.trace("pw", cfg_.name,
              "id=" + std::to_string(pw.id) + " " + net.switch_name(ac1.node) + "-" +
                  net.switch_name(ac2.node) + (protect ? " protected" : " plain"));
    pws_.push_back(pw);
    return pws_.back();
}

void TransportController::remove_pw(Network& net, std::uint32_t id)
{
    if (id == 0 || id > pws_.size() || !pws_[id - 1].active)
        return;
    PwRecord& pw = pws_[id - 1];
    pw.active = false;
    for (int i = 0; i < 2; ++i) {
        const NodeId n = pw.ac[i].node;
        if (pw.ac[i].port) {
            FieldMatch up;
            up.in_port = *pw.ac[i].port;
            up.vlan_vid = pw.ac[i].vlan;
            send_to(net, n, strict_delete(entry(0, kServicePriority, up, {})));
            FieldMatch down;
            down.in_port = pw.endpoints[i];
            send_to(net, n, strict_delete(entry(0, kServicePriority, down, {})));
        }
        FieldMatch demux;
        demux.mpls_label = pw.labels[i];
        send_to(net, n, strict_delete(entry(1, kServicePriority, demux, {})));
        LogicalPort gone;
        gone.port_id = pw.endpoints[i];
        send_to(net, n, msg::PortMod{false, gone});
        Tunnel& t = tunnels_[pw.tunnels[i]];
        t.active = false;
        send_to(net, t.head, GroupMod{ModCommand::Delete, Group{t.group, {}}});
    }
}

const BorderPort& TransportController::border(const std::string& peer) const
{
    for (const BorderPort& b : borders_) {
        if (b.peer == peer)
            return b;
    }
    throw Error(ErrorCode::Unreachable, "no border toward " + peer);
}

std::uint64_t TransportController::setup_e2e_lsp(Network& net, const E2eRequest& req,
                                                 std::function<void(Network&, const E2eLsp&)> done)
{
    E2eLsp lsp;
    lsp.id = next_e2e_++;
    lsp.role = req.role;
    lsp.border = req.border;
    const BorderPort& exit = border(req.border);
    lsp.egress = exit.ref.node;

    if (req.role == E2eRole::Transit) {
        const BorderPort& other = border(req.border_b);
        lsp.border_b = req.border_b;
        lsp.ingress = other.ref.node;
        lsp.remote_label = req.remote_label;
        lsp.remote_label_b = req.remote_label_b;
    } else {
        if (!in_domain(req.endpoint))
            throw Error(ErrorCode::Unreachable, "node " + std::to_string(req.endpoint) + " outside domain");
        if (!processing(req.endpoint))
            throw Error(ErrorCode::ProcessingUnsupported, net.switch_name(req.endpoint));
        lsp.ingress = req.endpoint;
    }
    if (lsp.ingress != lsp.egress && !compute_merging_tree(lsp.egress).reaches(lsp.ingress))
        throw Error(ErrorCode::Unreachable, net.switch_name(lsp.ingress) + "->" + lsp.border);

    // Step one: the domain ingress and egress are fixed; the core side only
    // ever sees the border.
    lsp.inbound_label = allocate_label(lsp.egress);
    const std::uint64_t id = lsp.id;
    if (done)
        e2e_done_[id] = std::move(done);

    switch (req.role) {
    case E2eRole::Head:
        e2e_.emplace(id, lsp);
        net.send(exit.channel, Endpoint::of_actor(self_),
                 msg::LspRequest{id, lsp.inbound_label, exit.peer});
        break;
    case E2eRole::Tail:
        lsp.remote_label = req.remote_label;
        e2e_.emplace(id, lsp);
        install_e2e(net, e2e_.at(id));
        net.send(exit.channel, Endpoint::of_actor(self_), msg::LspAccept{id, lsp.inbound_label});
        break;
    case E2eRole::Transit:
        lsp.inbound_label_b = allocate_label(lsp.ingress);
        e2e_.emplace(id, lsp);
        install_e2e(net, e2e_.at(id));
        break;
    }
    return id;
}

void TransportController::install_e2e(Network& net, E2eLsp& lsp)
{
    auto put = [&](NodeId n, FlowEntry e) {
        send_to(net, n, add(e));
        lsp.entries.emplace_back(n, FlowMod{ModCommand::Delete, e, true});
    };
    const BorderPort& exit = border(lsp.border);
    const NodeId x = lsp.egress;
    const PortId core = exit.ref.port;

    if (lsp.role == E2eRole::Transit) {
        const BorderPort& other = border(lsp.border_b);
        const NodeId y = lsp.ingress;
        const std::size_t xy = make_tunnel(net, x, y, false);
        const std::size_t yx = make_tunnel(net, y, x, false);
        lsp.tunnels = {xy, yx};
        const std::uint32_t to_y = allocate_label(y);
        const std::uint32_t to_x = allocate_label(x);
        FieldMatch in_x;
        in_x.in_port = core;
        in_x.mpls_label = lsp.inbound_label;
        put(x, entry(0, kServicePriority, in_x, {action::SwapMpls{to_y}, action::Group{tunnels_[xy].group}}));
        FieldMatch at_y;
        at_y.mpls_label = to_y;
        put(y, entry(1, kServicePriority, at_y,
                     {action::SwapMpls{lsp.remote_label_b}, action::Output{other.ref.port}}));
        FieldMatch in_y;
        in_y.in_port = other.ref.port;
        in_y.mpls_label = lsp.inbound_label_b;
        put(y, entry(0, kServicePriority, in_y, {action::SwapMpls{to_x}, action::Group{tunnels_[yx].group}}));
        FieldMatch at_x;
        at_x.mpls_label = to_x;
        put(x, entry(1, kServicePriority, at_x, {action::SwapMpls{lsp.remote_label}, action::Output{core}}));
        lsp.established = true;
        return;
    }

    const NodeId e = lsp.ingress;
    lsp.endpoint_port = allocate_logical(e);
    FieldMatch from_core;
    from_core.in_port = core;
    from_core.mpls_label = lsp.inbound_label;
    if (e == x) {
        // The endpoint sits on the border itself: no internal LSP needed.
        const GroupId g = allocate_group(e);
        tunnels_.push_back(Tunnel{e, e, g, false, {Bucket{core, {action::Output{core}}}}, false, true});
        lsp.tunnels = {tunnels_.size() - 1};
        send_to(net, e, GroupMod{ModCommand::Add, Group{g, tunnels_.back().buckets}});
        lsp.endpoint_label = lsp.inbound_label;
        send_to(net, e, msg::PortMod{true, LogicalPort{lsp.endpoint_port,
                                                       lp::PwEndpoint{lsp.remote_label, lsp.endpoint_label, g}}});
        put(e, entry(0, kServicePriority, from_core, {action::Output{lsp.endpoint_port}}));
        lsp.established = true;
        return;
    }
    // Step two: a co-routed pair of merging LSPs between endpoint and border.
    const std::size_t up = make_tunnel(net, e, x, false);
    const std::size_t down = make_tunnel(net, x, e, false);
    lsp.tunnels = {up, down};
    // Step three: nest the end-to-end label under the internal one.
    lsp.endpoint_label = allocate_label(e);
    send_to(net, e, msg::PortMod{true, LogicalPort{lsp.endpoint_port,
                                                   lp::PwEndpoint{lsp.remote_label, lsp.endpoint_label,
                                                                  tunnels_[up].group}}});
    FieldMatch at_e;
    at_e.mpls_label = lsp.endpoint_label;
    put(e, entry(1, kServicePriority, at_e, {action::Output{lsp.endpoint_port}}));
    FieldMatch at_x;
    at_x.mpls_label = lsp.remote_label;
    put(x, entry(1, kServicePriority, at_x, {action::Output{core}}));
    put(x, entry(0, kServicePriority, from_core,
                 {action::SwapMpls{lsp.endpoint_label}, action::Group{tunnels_[down].group}}));
    lsp.established = true;
}

void TransportController::teardown_e2e_lsp(Network& net, std::uint64_t id)
{
    auto it = e2e_.find(id);
    if (it == e2e_.end() || it->second.torn_down)
        return;
    E2eLsp& lsp = it->second;
    lsp.torn_down = true;
    lsp.established = false;
    for (auto& [node, del] : lsp.entries)
        send_to(net, node, del);
    if (lsp.endpoint_port) {
        LogicalPort gone;
        gone.port_id = lsp.endpoint_port;
        send_to(net, lsp.ingress, msg::PortMod{false, gone});
    }
    for (std::size_t t : lsp.tunnels) {
        tunnels_[t].active = false;
        send_to(net, tunnels_[t].head, GroupMod{ModCommand::Delete, Group{tunnels_[t].group, {}}});
    }
    const BorderPort& exit = border(lsp.border);
    net.send(exit.channel, Endpoint::of_actor(self_), msg::LspTeardown{id});
}

void TransportController::on_core_message(Network& net, const BorderPort& b, const Message& m)
{
    std::visit(overloaded{
                   [&](const msg::LspAccept& a) {
                       auto it = e2e_.find(a.e2e_id);
                       if (it == e2e_.end() || it->second.established || it->second.torn_down)
                           return;
                       it->second.remote_label = a.label;
                       install_e2e(net, it->second);
                       net.trace("e2e", cfg_.name, "id=" + std::to_string(a.e2e_id) + " established");
                       if (auto cb = e2e_done_.find(a.e2e_id); cb != e2e_done_.end())
                           cb->second(net, it->second);
                   },
                   [&](const msg::LspReject& r) {
                       net.trace("error", cfg_.name,
                                 std::string(to_string(ErrorCode::SignalingRejected)) + " e2e " +
                                     std::to_string(r.e2e_id));
                       e2e_.erase(r.e2e_id);
                   },
                   [&](const msg::LspRequest& r) {
                       auto target = net.switch_id(r.target_border);
                       if (!target || !in_domain(*target)) {
                           net.send(b.channel, Endpoint::of_actor(self_), msg::LspReject{r.e2e_id});
                           return;
                       }
                       E2eRequest req;
                       req.role = E2eRole::Tail;
                       req.endpoint = *target;
                       req.border = b.peer;
                       req.remote_label = r.label;
                       when_ready(net, [this, req](Network& n) { setup_e2e_lsp(n, req); });
                   },
                   [&](const auto&) { },
               },
               m);
}

void TransportController::add_client(ChannelId ch, VirtualSwitch vs)
{
    clients_[ch] = std::move(vs);
}

PortId TransportController::add_client_port(Network& net, ChannelId ch, PortRef target,
                                            std::optional<PortId> vport)
{
    VirtualSwitch& vs = clients_.at(ch);
    PortId vp = 0;
    if (vport) {
        vp = *vport;
    } else {
        vp = 2;
        while (vs.ports.contains(vp))
            ++vp;
    }
    vs.ports[vp] = target;
    vs.policy.allowed_ports.insert(vp);
    net.send(ch, Endpoint::of_actor(self_), msg::PortStatus{vp, true});
    return vp;
}

void TransportController::remove_client_port(Network& net, ChannelId ch, PortId vport)
{
    VirtualSwitch& vs = clients_.at(ch);
    if (!vs.ports.erase(vport))
        return;
    vs.policy.allowed_ports.erase(vport);
    net.send(ch, Endpoint::of_actor(self_), msg::PortStatus{vport, false});
}

void TransportController::drop_client_flows(Network& net, ChannelId ch)
{
    const VirtualSwitch& vs = clients_.at(ch);
    std::set<NodeId> touched;
    for (const auto& [vp, ref] : vs.ports)
        touched.insert(ref.node);
    for (NodeId n : touched) {
        for (std::uint8_t table : {0, 1}) {
            FlowMod del;
            del.command = ModCommand::Delete;
            del.entry.table_id = table;
            del.entry.cookie = vs.datapath_id;
            send_to(net, n, del);
        }
    }
}

void TransportController::on_client_message(Network& net, ChannelId ch, const Message& m)
{
    const VirtualSwitch& vs = clients_.at(ch);
    const Endpoint me = Endpoint::of_actor(self_);
    try {
        std::visit(overloaded{
                       [&](const msg::FeaturesRequest&) { net.send(ch, me, features_of(vs)); },
                       [&](const FlowMod& fm) {
                           for (auto& c : translate_virtual_flow_mod(vs, fm, this))
                               send_to(net, c.node, std::move(c.mod));
                       },
                       [&](const msg::PacketOut& po) {
                           auto c = sink_packet_out(vs, po);
                           send_to(net, c.node, std::move(c.out));
                       },
                       [&](const auto& other) {
                           throw Error(ErrorCode::PermissionDenied,
                                       std::string(message_name(Message{other})) + " from client");
                       },
                   },
                   m);
    } catch (const Error& e) {
        net.trace("client_error", cfg_.name, vs.client + " " + e.what());
        net.send(ch, me, msg::ErrorReport{e.code(), e.context()});
    }
}

CorePeer::CorePeer(std::string name, MacAddr mac, Ipv4Addr ip)
    : name_(std::move(name)), mac_(mac), ip_(ip)
{
}

void CorePeer::on_message(Network& net, ChannelId ch, const Message& m)
{
    const Endpoint me = Endpoint::of_actor(self_);
    std::visit(overloaded{
                   [&](const msg::LspRequest& r) {
                       if (reject_requests) {
                           net.send(ch, me, msg::LspReject{r.e2e_id});
                           return;
                       }
                       const std::uint32_t label = next_label_++;
                       by_label_[label] = Lsp{r.e2e_id, r.label};
                       net.send(ch, me, msg::LspAccept{r.e2e_id, label});
                   },
                   [&](const msg::LspTeardown& t) {
                       std::erase_if(by_label_, [&](const auto& kv) { return kv.second.e2e == t.e2e_id; });
                   },
                   [&](const msg::RouterAdvert& a) {
                       ++adverts_received;
                       last_advert = a;
                   },
                   [&](const auto&) { },
               },
               m);
}

void CorePeer::on_packet(Network& net, PortId port, const Packet& p)
{
    if (p.mpls.empty())
        return;
    auto it = by_label_.find(p.mpls.front().label);
    if (it == by_label_.end())
        return;
    Packet reply = pop_mpls(p);
    if (reply.ipv4)
        std::swap(reply.ipv4->src, reply.ipv4->dst);
    reply.eth.dst = p.eth.src;
    reply.eth.src = mac_;
    reply = push_mpls(reply, it->second.send_label, 0, 64);
    ++echoed;
    net.actor_transmit(self_, port, std::move(reply));
}

} // namespace splitarch

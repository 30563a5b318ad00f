#include "doctest.h"

#include "generators.hpp"
#include "splitarch/ctlproto.hpp"
#include "splitarch/graph.hpp"

using namespace splitarch;

namespace {

constexpr NodeId A = 1, B = 2, C = 3;

// Line A-B-C; link ports are 10 and 11, edge ports 1..3.
struct LineDomain : TransportProvider {
    DomainGraph g;
    std::map<NodeId, SwitchState> sw;
    std::map<NodeId, std::uint32_t> next_label;
    std::map<NodeId, MergingTree> trees;

    LineDomain()
    {
        for (NodeId n : {A, B, C}) {
            g.add_node(n);
            SwitchState s;
            s.node_id = n;
            for (PortId p : {1u, 2u, 3u, 10u, 11u})
                s.ports[p] = PhysicalPort{p};
            sw[n] = s;
            next_label[n] = 16;
        }
        g.add_edge(Edge{A, B, 11, 10, 1, true});
        g.add_edge(Edge{B, C, 11, 10, 1, true});
        // Hand-built merging trees: swap toward the parent, pop at the root.
        for (NodeId dst : {A, C}) {
            MergingTree t = compute_merging_tree(g, dst);
            for (NodeId n : g.nodes())
                t.labels[n] = allocate_label(n);
            for (NodeId n : g.nodes()) {
                FlowEntry e;
                e.priority = 100;
                e.match.mpls_label = t.labels[n];
                if (n == dst) {
                    e.actions = {action::PopMpls{}};
                    e.goto_table = 1;
                } else {
                    const TreeHop& h = t.parent.at(n);
                    e.actions = {action::SwapMpls{t.labels[h.next]}, action::Output{h.out_port}};
                }
                apply_flow_mod(sw[n], FlowMod{ModCommand::Add, e});
            }
            trees[dst] = t;
        }
    }

    std::optional<ActionList> transport_actions(NodeId from, NodeId to) const override
    {
        auto it = trees.find(to);
        if (it == trees.end() || !it->second.parent.count(from))
            return std::nullopt;
        const TreeHop& h = it->second.parent.at(from);
        return ActionList{action::PushMpls{it->second.labels.at(h.next)}, action::Output{h.out_port}};
    }

    std::uint32_t allocate_label(NodeId node) override { return next_label[node]++; }

    void install(const std::vector<ConcreteFlowMod>& mods)
    {
        for (const auto& m : mods)
            apply_flow_mod(sw[m.node], m.mod);
    }

    // Carries a packet hop by hop until it leaves on an edge port.
    std::vector<std::pair<PortRef, Packet>> inject(PortRef at, const Packet& p)
    {
        std::vector<std::pair<PortRef, Packet>> out;
        std::vector<std::pair<PortRef, Packet>> work{{at, p}};
        while (!work.empty()) {
            auto [ref, pkt] = work.back();
            work.pop_back();
            for (const Effect& fx : process_packet(sw[ref.node], ref.port, pkt, 0)) {
                const auto* e = std::get_if<effect::Emit>(&fx);
                if (!e)
                    continue;
                if (auto id = g.edge_at(ref.node, e->port)) {
                    const Edge& edge = g.edge(*id);
                    const NodeId next = edge.other(ref.node);
                    work.push_back({PortRef{next, edge.port_at(next)}, e->packet});
                } else {
                    out.push_back({PortRef{ref.node, e->port}, e->packet});
                }
            }
        }
        return out;
    }
};

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

const std::map<PortId, PortRef> kEndpoints{{1, {A, 3}}, {2, {C, 1}}, {3, {B, 2}}};

ViewPolicy policy(std::string client, std::set<PortId> ports)
{
    ViewPolicy p;
    p.client = std::move(client);
    p.allowed_ports = std::move(ports);
    return p;
}

FlowMod forward(PortId in, PortId out)
{
    FlowMod fm;
    fm.entry.priority = 10;
    fm.entry.match.in_port = in;
    fm.entry.actions = {action::Output{out}};
    return fm;
}

} // namespace

TEST_CASE("virtual switch exposes exactly the allowed ports")
{
    const VirtualSwitch vs = create_virtual_switch(kEndpoints, 1, policy("ip", {1, 2}));
    const auto reply = features_of(vs);
    CHECK(reply.ports.size() == 2);
    CHECK(reply.datapath_id == 1);

    CHECK(code_of([] { create_virtual_switch(kEndpoints, 1, policy("none", {})); }) ==
          ErrorCode::EmptyView);
    CHECK(code_of([] { create_virtual_switch(kEndpoints, 1, policy("x", {9})); }) ==
          ErrorCode::UnknownPort);

    const VirtualSwitch a = create_virtual_switch(kEndpoints, 1, policy("a", {1}));
    const VirtualSwitch b = create_virtual_switch(kEndpoints, 2, policy("b", {2}));
    CHECK(a.datapath_id != b.datapath_id);
}

TEST_CASE("virtual flow across the domain")
{
    LineDomain d;
    const VirtualSwitch vs = create_virtual_switch(kEndpoints, 7, policy("ip", {1, 2}));
    const auto mods = translate_virtual_flow_mod(vs, forward(1, 2), &d);
    REQUIRE(mods.size() == 2);

    // At A: match the concrete port, push the inner label, then the tree
    // label of the next hop toward C.
    CHECK(mods[0].node == A);
    CHECK(mods[0].mod.entry.match.in_port == 3u);
    const std::uint32_t tree_b = d.trees[C].labels[B];
    const auto& acts = mods[0].mod.entry.actions;
    REQUIRE(acts.size() == 3);
    CHECK(std::holds_alternative<action::PushMpls>(acts[0]));
    CHECK(acts[1] == Action{action::PushMpls{tree_b}});
    CHECK(acts[2] == Action{action::Output{11}});
    CHECK(mods[0].mod.entry.cookie == 7);

    CHECK(mods[1].node == C);
    CHECK(mods[1].mod.entry.table_id == 1);
    CHECK(mods[1].mod.entry.actions.back() == Action{action::Output{1}});

    d.install(mods);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        Packet p = testing::random_packet(rng);
        p.mpls.clear();
        if (p.eth.ethertype == ethertype::kMpls)
            p.eth.ethertype = ethertype::kProbe;
        const auto out = d.inject(PortRef{A, 3}, p);
        REQUIRE(out.size() == 1);
        CHECK(out[0].first == PortRef{C, 1});
        CHECK(encode_frame(out[0].second) == encode_frame(p));
    }
}

TEST_CASE("translation respects the view policy")
{
    LineDomain d;
    const VirtualSwitch vs = create_virtual_switch(kEndpoints, 7, policy("ip", {1, 2}));
    CHECK(code_of([&] { translate_virtual_flow_mod(vs, forward(1, 3), &d); }) ==
          ErrorCode::PermissionDenied);
    CHECK(code_of([&] { translate_virtual_flow_mod(vs, forward(3, 1), &d); }) ==
          ErrorCode::PermissionDenied);

    FlowMod grouped = forward(1, 2);
    grouped.entry.actions = {action::Group{1}};
    CHECK(code_of([&] { translate_virtual_flow_mod(vs, grouped, &d); }) ==
          ErrorCode::PermissionDenied);

    CHECK(code_of([&] { translate_virtual_flow_mod(vs, forward(1, 2), nullptr); }) ==
          ErrorCode::NoTransport);
}

TEST_CASE("isolation: no accepted translation reaches outside the policy")
{
    LineDomain d;
    const std::set<PortId> allowed{1, 2};
    ViewPolicy pol = policy("ip", allowed);
    pol.allowed_fields = {MatchField::InPort, MatchField::Ipv4Dst};
    const VirtualSwitch vs = create_virtual_switch(kEndpoints, 7, pol);
    const std::set<PortRef> reachable{kEndpoints.at(1), kEndpoints.at(2)};

    for (PortId in = 0; in <= 4; ++in) {
        for (PortId out = 1; out <= 4; ++out) {
            for (int field = 0; field < 3; ++field) {
                FlowMod fm = forward(in, out);
                if (in == 0)
                    fm.entry.match.in_port.reset();
                if (field == 1)
                    fm.entry.match.vlan_vid = 5;
                if (field == 2)
                    fm.entry.match.ipv4_dst = Ipv4Prefix{parse_ipv4("10.0.0.1"), 32};
                const bool legal = (in == 0 || allowed.contains(in)) && allowed.contains(out) &&
                                   field != 1 && in != 0;
                std::vector<ConcreteFlowMod> mods;
                try {
                    mods = translate_virtual_flow_mod(vs, fm, &d);
                } catch (const Error& e) {
                    CHECK_FALSE(legal);
                    CHECK((e.code() == ErrorCode::PermissionDenied ||
                           e.code() == ErrorCode::NoTransport));
                    continue;
                }
                CHECK(legal);
                for (const auto& m : mods) {
                    if (m.mod.entry.match.in_port)
                        CHECK(reachable.contains(PortRef{m.node, *m.mod.entry.match.in_port}));
                    for (const Action& a : m.mod.entry.actions) {
                        const auto* o = std::get_if<action::Output>(&a);
                        if (o && o->port < 10)
                            CHECK(reachable.contains(PortRef{m.node, o->port}));
                    }
                }
            }
        }
    }
}

TEST_CASE("packet-in and packet-out mapping")
{
    const VirtualSwitch vs = create_virtual_switch(kEndpoints, 7, policy("ip", {1, 2}));
    msg::PacketIn in;
    in.in_port = 3;
    CHECK(surface_packet_in(vs, PortRef{A, 3}, in).in_port == 1);
    CHECK(code_of([&] { surface_packet_in(vs, PortRef{A, 9}, in); }) == ErrorCode::UnmappedPort);
    CHECK(code_of([&] { surface_packet_in(vs, PortRef{B, 2}, in); }) == ErrorCode::UnmappedPort);

    msg::PacketOut out;
    out.actions = {action::Output{2}};
    const auto c = sink_packet_out(vs, out);
    CHECK(c.node == C);
    CHECK(c.out.actions == ActionList{action::Output{1}});
}

TEST_CASE("single-node views translate without transport")
{
    const std::map<PortId, PortRef> host{{1, {B, 0x10000}}, {2, {B, 0x10001}}};
    const VirtualSwitch vs = create_virtual_switch(host, 3, policy("bras", {1, 2}));
    FlowMod fm;
    fm.entry.priority = 5;
    fm.entry.match.ipv4_dst = Ipv4Prefix{parse_ipv4("10.1.0.42"), 32};
    fm.entry.actions = {action::PushPppoe{5}, action::Output{2}};
    const auto mods = translate_virtual_flow_mod(vs, fm, nullptr);
    REQUIRE(mods.size() == 1);
    CHECK(mods[0].node == B);
    CHECK(mods[0].mod.entry.match == fm.entry.match);
    CHECK(mods[0].mod.entry.actions.back() == Action{action::Output{0x10001}});
}

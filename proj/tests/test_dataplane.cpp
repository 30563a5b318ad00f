#include "doctest.h"

#include <algorithm>

#include "generators.hpp"
#include "splitarch/dataplane.hpp"
#include "splitarch/error.hpp"

using namespace splitarch;

namespace {

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

SwitchState make_switch(bool processing, std::initializer_list<PortId> ports = {1, 2, 3, 4})
{
    SwitchState s;
    s.node_id = 1;
    s.mac = mac_from_u64(0x020000000001);
    s.processing_capable = processing;
    for (PortId p : ports)
        s.ports[p] = PhysicalPort{p};
    return s;
}

Packet probe_frame()
{
    Packet p;
    p.eth.ethertype = ethertype::kProbe;
    p.payload = {1, 2, 3};
    return p;
}

FlowEntry entry(int priority, FieldMatch match, ActionList actions, std::uint8_t table = 0)
{
    FlowEntry e;
    e.table_id = table;
    e.priority = priority;
    e.match = std::move(match);
    e.actions = std::move(actions);
    return e;
}

void add(SwitchState& s, FlowEntry e)
{
    apply_flow_mod(s, FlowMod{ModCommand::Add, std::move(e)});
}

template <class T>
std::vector<T> only(const Effects& fx)
{
    std::vector<T> out;
    for (const auto& e : fx) {
        if (const auto* v = std::get_if<T>(&e))
            out.push_back(*v);
    }
    return out;
}

} // namespace

TEST_CASE("empty tables send the packet to the controller")
{
    SwitchState s = make_switch(false);
    const Effects fx = process_packet(s, 1, probe_frame(), 0);
    REQUIRE(fx.size() == 1);
    const auto& in = std::get<effect::PacketIn>(fx[0]);
    CHECK(in.reason == PacketInReason::TableMiss);
    CHECK(in.in_port == 1);
}

TEST_CASE("the highest-priority matching entry wins")
{
    SwitchState s = make_switch(false);
    add(s, entry(10, FieldMatch{.in_port = 1}, {action::Output{2}}));
    add(s, entry(20, FieldMatch{.ethertype = ethertype::kProbe}, {action::Output{3}}));
    const auto emits = only<effect::Emit>(process_packet(s, 1, probe_frame(), 0));
    REQUIRE(emits.size() == 1);
    CHECK(emits[0].port == 3);
}

TEST_CASE("fast-failover group uses the first live bucket")
{
    SwitchState s = make_switch(false);
    s.ports[3].up = false;
    apply_group_mod(s, GroupMod{ModCommand::Add,
                                Group{7,
                                      {Bucket{3, {action::PushMpls{20}, action::Output{3}}},
                                       Bucket{4, {action::PushMpls{21}, action::Output{4}}}}}});
    add(s, entry(1, FieldMatch{.in_port = 1}, {action::Group{7}}));
    const auto emits = only<effect::Emit>(process_packet(s, 1, probe_frame(), 0));
    REQUIRE(emits.size() == 1);
    CHECK(emits[0].port == 4);
    CHECK(emits[0].packet.mpls.at(0).label == 21);

    s.ports[4].up = false;
    const auto drops = only<effect::Drop>(process_packet(s, 1, probe_frame(), 0));
    REQUIRE(drops.size() == 1);
    CHECK(drops[0].reason == DropReason::NoLiveBucket);
}

TEST_CASE("select_ff_bucket")
{
    Group g{1, {Bucket{1, {}}, Bucket{2, {}}}};
    auto live = [](std::vector<bool> flags) {
        return [flags](PortId p) { return static_cast<bool>(flags[p - 1]); };
    };
    CHECK(select_ff_bucket(g, live({true, true})) == 0);
    CHECK(select_ff_bucket(g, live({false, true})) == 1);
    CHECK(code_of([&] { select_ff_bucket(g, live({false, false})); }) == ErrorCode::NoLiveBucket);
}

TEST_CASE("output to a down port drops")
{
    SwitchState s = make_switch(false);
    s.ports[2].up = false;
    add(s, entry(1, FieldMatch{.in_port = 1}, {action::Output{2}}));
    const auto drops = only<effect::Drop>(process_packet(s, 1, probe_frame(), 0));
    REQUIRE(drops.size() == 1);
    CHECK(drops[0].reason == DropReason::PortDown);
}

TEST_CASE("flow mod semantics")
{
    SwitchState s = make_switch(false);
    add(s, entry(5, FieldMatch{.in_port = 1}, {action::Output{2}}));
    add(s, entry(5, FieldMatch{.in_port = 1}, {action::Output{3}}));
    REQUIRE(s.flow_count() == 1);
    CHECK(s.tables[0][0].actions == ActionList{action::Output{3}});

    SwitchState empty = make_switch(false);
    apply_flow_mod(empty, FlowMod{ModCommand::Delete, entry(0, {}, {})});
    CHECK(empty.flow_count() == 0);

    CHECK(code_of([&] { add(s, entry(1, {}, {action::Group{99}})); }) == ErrorCode::UnknownGroup);
    CHECK(code_of([&] { add(s, entry(1, {}, {action::Output{42}})); }) == ErrorCode::UnknownPort);
    CHECK(code_of([&] { add(s, entry(1, {}, {action::PushPppoe{5}})); }) ==
          ErrorCode::ProcessingUnsupported);

    add(s, entry(6, FieldMatch{.in_port = 1, .vlan_vid = 100}, {action::Output{2}}));
    add(s, entry(6, FieldMatch{.in_port = 2}, {action::Output{1}}));
    apply_flow_mod(s, FlowMod{ModCommand::Delete, entry(0, FieldMatch{.in_port = 1}, {})});
    REQUIRE(s.flow_count() == 1);
    CHECK(s.tables[0][0].match.in_port == 2u);
}

TEST_CASE("delete by cookie leaves other entries alone")
{
    SwitchState s = make_switch(false);
    FlowEntry a = entry(1, FieldMatch{.in_port = 1}, {action::Output{2}});
    a.cookie = 7;
    FlowEntry b = entry(1, FieldMatch{.in_port = 2}, {action::Output{1}});
    b.cookie = 8;
    add(s, a);
    add(s, b);
    FlowEntry pattern;
    pattern.cookie = 7;
    apply_flow_mod(s, FlowMod{ModCommand::Delete, pattern});
    REQUIRE(s.flow_count() == 1);
    CHECK(s.tables[0][0].cookie == 8);
}

TEST_CASE("goto continues in a later table and misses there drop")
{
    SwitchState s = make_switch(false);
    FlowEntry pop = entry(1, FieldMatch{.mpls_label = 30}, {action::PopMpls{}});
    pop.goto_table = 1;
    add(s, pop);
    Packet p = push_mpls(probe_frame(), 30, 0, 64);
    auto drops = only<effect::Drop>(process_packet(s, 1, p, 0));
    REQUIRE(drops.size() == 1);
    CHECK(drops[0].reason == DropReason::TableMiss);

    add(s, entry(1, FieldMatch{.ethertype = ethertype::kProbe}, {action::Output{4}}, 1));
    auto emits = only<effect::Emit>(process_packet(s, 1, p, 0));
    REQUIRE(emits.size() == 1);
    CHECK(emits[0].packet == probe_frame());

    FlowEntry back = entry(1, {}, {});
    back.table_id = 1;
    back.goto_table = 0;
    CHECK(code_of([&] { add(s, back); }) == ErrorCode::ConfigError);
}

TEST_CASE("attach_logical_port checks processing capability")
{
    SwitchState plain = make_switch(false);
    LogicalPort src{0, lp::OamSource{1, 3333, {}, 0, 0}};
    CHECK(code_of([&] { attach_logical_port(plain, src); }) == ErrorCode::ProcessingUnsupported);
    CHECK(code_of([&] { attach_logical_port(plain, LogicalPort{0, lp::PwEndpoint{16, 17, 1}}); }) ==
          ErrorCode::ProcessingUnsupported);
    const PortId ipoe = attach_logical_port(plain, LogicalPort{0, lp::IpOverEthernet{}});
    CHECK(ipoe >= kFirstLogicalPort);

    SwitchState proc = make_switch(true);
    const PortId a = attach_logical_port(proc, src);
    const PortId b = attach_logical_port(proc, src);
    CHECK(a == kFirstLogicalPort);
    CHECK(b == kFirstLogicalPort + 1);
}

TEST_CASE("pw endpoint pushes the pw label beneath the tunnel label")
{
    SwitchState s = make_switch(true);
    apply_group_mod(s, GroupMod{ModCommand::Add,
                                Group{1, {Bucket{2, {action::PushMpls{17}, action::Output{2}}}}}});
    const PortId pw = attach_logical_port(s, LogicalPort{0, lp::PwEndpoint{16, 40, 1}});
    add(s, entry(1, FieldMatch{.in_port = 1}, {action::Output{pw}}));

    Packet frame;
    frame.eth.ethertype = ethertype::kIpv4;
    frame.ipv4 = Ipv4Header{1, 2, 64, 17};
    const auto emits = only<effect::Emit>(process_packet(s, 1, frame, 0));
    REQUIRE(emits.size() == 1);
    const auto& stack = emits[0].packet.mpls;
    REQUIRE(stack.size() == 2);
    CHECK(stack[0].label == 17);
    CHECK_FALSE(stack[0].bos);
    CHECK(stack[1].label == 16);
    CHECK(stack[1].bos);

    // Arriving with the in-label: popped and re-injected from the pw port.
    add(s, entry(1, FieldMatch{.in_port = pw}, {action::Output{3}}));
    add(s, entry(2, FieldMatch{.mpls_label = 40}, {action::Output{pw}}));
    const auto back = only<effect::Emit>(process_packet(s, 2, push_mpls(frame, 40, 0, 64), 0));
    REQUIRE(back.size() == 1);
    CHECK(back[0].port == 3);
    CHECK(back[0].packet == frame);
}

TEST_CASE("pppoe termination wraps and unwraps")
{
    SwitchState s = make_switch(true);
    const MacAddr cust = mac_from_u64(0x02000000aa01);
    lp::PppoeTermination term;
    term.local_mac = s.mac;
    term.lower = 2;
    term.sessions[5] = PppoeBinding{cust, parse_ipv4("10.1.0.42")};
    const PortId port = attach_logical_port(s, LogicalPort{0, term});

    Packet ip;
    ip.eth.ethertype = ethertype::kIpv4;
    ip.ipv4 = Ipv4Header{parse_ipv4("192.0.2.1"), parse_ipv4("10.1.0.42"), 64, 17};
    const Packet out = lp_process(s, port, Direction::Egress, ip);
    CHECK(out.eth.ethertype == ethertype::kPppoeSession);
    REQUIRE(out.pppoe);
    CHECK(out.pppoe->session_id == 5);
    CHECK(out.eth.dst == cust);
    CHECK_NOTHROW(validate(out));

    const Packet in = lp_process(s, port, Direction::Ingress, out);
    CHECK(in.eth.ethertype == ethertype::kIpv4);
    CHECK(in.ipv4 == ip.ipv4);

    Packet foreign = out;
    foreign.pppoe->session_id = 9;
    CHECK(code_of([&] { lp_process(s, port, Direction::Ingress, foreign); }) ==
          ErrorCode::DecapMismatch);

    // Control frames from below go to the controller with the logical port as in_port.
    add(s, entry(1, FieldMatch{.in_port = 1}, {action::Output{port}}));
    const Packet lcp = encap_pppoe(ppp::kLcp, {}, 5, s.mac, cust);
    const auto ins = only<effect::PacketIn>(process_packet(s, 1, lcp, 0));
    REQUIRE(ins.size() == 1);
    CHECK(ins[0].reason == PacketInReason::LogicalPort);
    CHECK(ins[0].in_port == port);
}

TEST_CASE("oam template is completed by the pipeline")
{
    SwitchState s = make_switch(true);
    Packet tmpl;
    tmpl.eth.ethertype = ethertype::kOam;
    tmpl.oam = OamCcPayload{0, 0, 1};
    const PortId src = attach_logical_port(s, LogicalPort{0, lp::OamSource{77, 3333, tmpl, 0, 0}});
    add(s, entry(1, FieldMatch{.in_port = src},
                 {action::SetField{Field::EthSrc, mac_to_u64(s.mac)}, action::PushMpls{17},
                  action::Output{2}}));

    const auto first = only<effect::Emit>(oam_emit_cc(s, src, 0));
    const auto second = only<effect::Emit>(oam_emit_cc(s, src, 3333));
    REQUIRE(first.size() == 1);
    REQUIRE(second.size() == 1);
    const Packet& cc = first[0].packet;
    REQUIRE(cc.mpls.size() == 2);
    CHECK(cc.mpls[0].label == 17);
    CHECK_FALSE(cc.mpls[0].bos);
    CHECK(cc.mpls[1].label == mpls::kOamLabel);
    CHECK(cc.mpls[1].bos);
    CHECK(cc.oam->meg_id == 77);
    CHECK(second[0].packet.oam->seq == cc.oam->seq + 1);

    // Only the fields the pipeline set differ from the template.
    Packet expected = tmpl;
    expected.eth.src = s.mac;
    expected.oam->meg_id = 77;
    expected.oam->seq = 0;
    expected = push_mpls(push_mpls(expected, 13, 0, 64), 17, 0, 64);
    CHECK(cc == expected);
}

TEST_CASE("oam sink liveness")
{
    SwitchState s = make_switch(true);
    const PortId sink = attach_logical_port(s, LogicalPort{0, lp::OamSink{5, 3333, 3, 0}});

    SUBCASE("silence past k intervals declares loss")
    {
        const Effects fx = oam_on_tick(s, sink, 10000);
        CHECK_FALSE(s.logical_ports[sink].live);
        REQUIRE(only<effect::LivenessDown>(fx).size() == 1);
        CHECK(only<effect::PacketIn>(fx).at(0).reason == PacketInReason::OamNotify);
    }
    SUBCASE("a recent reception keeps the sink live")
    {
        Packet cc;
        cc.eth.ethertype = ethertype::kOam;
        cc.oam = OamCcPayload{5, 0, 2};
        oam_on_receive(s, sink, cc, 9998);
        CHECK(oam_on_tick(s, sink, 10000).empty());
        CHECK(s.logical_ports[sink].live);
    }
    SUBCASE("notifications are edge triggered")
    {
        const auto a = oam_on_tick(s, sink, 10000);
        const auto b = oam_on_tick(s, sink, 20000);
        CHECK(only<effect::LivenessDown>(a).size() + only<effect::LivenessDown>(b).size() == 1);

        Packet cc;
        cc.eth.ethertype = ethertype::kOam;
        cc.oam = OamCcPayload{5, 1, 2};
        oam_on_receive(s, sink, cc, 21000);
        CHECK(s.logical_ports[sink].live);
        CHECK(only<effect::LivenessDown>(oam_on_tick(s, sink, 40000)).size() == 1);
    }
    SUBCASE("foreign meg is rejected")
    {
        Packet cc;
        cc.eth.ethertype = ethertype::kOam;
        cc.oam = OamCcPayload{6, 0, 2};
        CHECK(code_of([&] { oam_on_receive(s, sink, cc, 100); }) == ErrorCode::MegMismatch);
    }
}

TEST_CASE("loss of continuity switches the group without the controller")
{
    SwitchState s = make_switch(true);
    const PortId primary = attach_logical_port(s, LogicalPort{0, lp::OamSink{1, 3333, 3, 0}});
    const PortId backup = attach_logical_port(s, LogicalPort{0, lp::OamSink{2, 3333, 3, 0}});
    apply_group_mod(s, GroupMod{ModCommand::Add,
                                Group{1,
                                      {Bucket{primary, {action::PushMpls{20}, action::Output{2}}},
                                       Bucket{backup, {action::PushMpls{30}, action::Output{3}}}}}});
    add(s, entry(1, FieldMatch{.in_port = 1}, {action::Group{1}}));
    // CCs arriving from the far end, demultiplexed by the local OAM entity.
    add(s, entry(1, FieldMatch{.mpls_label = 13}, {action::PopMpls{}, action::Output{kLocalOamPort}}));

    auto cc = [](std::uint32_t meg, std::uint32_t seq) {
        Packet p;
        p.eth.ethertype = ethertype::kOam;
        p.oam = OamCcPayload{meg, seq, 9};
        return push_mpls(p, 13, 0, 64);
    };
    SimTime t = 0;
    for (std::uint32_t i = 0; t < 30000; ++i, t += 3333) {
        process_packet(s, 4, cc(2, i), t);
        if (t < 12000)
            process_packet(s, 4, cc(1, i), t);
        const auto fx = oam_on_tick(s, primary, t);
        const auto emits = only<effect::Emit>(process_packet(s, 1, probe_frame(), t));
        REQUIRE(emits.size() == 1);
        const bool lost = !s.logical_ports[primary].live;
        CHECK(emits[0].port == (lost ? 3u : 2u));
        // Packets after loss is declared never need a controller message.
        CHECK(only<effect::PacketIn>(process_packet(s, 1, probe_frame(), t)).empty());
    }
    CHECK_FALSE(s.logical_ports[primary].live);
}

TEST_CASE("pipeline is deterministic and applies the maximal priority")
{
    Rng rng(42);
    for (int round = 0; round < 200; ++round) {
        SwitchState s = make_switch(false);
        std::vector<FlowEntry> installed;
        for (int i = 0; i < 12; ++i) {
            FieldMatch m;
            if (rng.chance(1, 2))
                m.in_port = static_cast<PortId>(rng.uniform(1, 2));
            if (rng.chance(1, 3))
                m.ethertype = rng.chance(1, 2) ? ethertype::kProbe : ethertype::kIpv4;
            if (rng.chance(1, 3))
                m.vlan_vid = static_cast<std::uint16_t>(rng.uniform(1, 3));
            FlowEntry e = entry(static_cast<int>(rng.uniform(0, 1000)), m,
                                {action::Output{static_cast<PortId>(rng.uniform(3, 4))}});
            const bool clash = std::any_of(installed.begin(), installed.end(), [&](const auto& o) {
                return o.priority == e.priority;
            });
            if (clash)
                continue;
            add(s, e);
            installed.push_back(e);
        }
        Packet p = probe_frame();
        if (rng.chance(1, 2))
            p.vlans.push_back(VlanTag{static_cast<std::uint16_t>(rng.uniform(1, 3)), 0});
        const PortId in = static_cast<PortId>(rng.uniform(1, 2));

        // Oracle: linear scan for the best priority.
        const FlowEntry* best = nullptr;
        for (const auto& e : installed) {
            if (e.match.matches(in, p) && (!best || e.priority > best->priority))
                best = &e;
        }
        SwitchState copy = s;
        const Effects fx = process_packet(s, in, p, 5);
        const Effects again = process_packet(copy, in, p, 5);
        REQUIRE(fx.size() == again.size());
        if (!best) {
            CHECK(std::holds_alternative<effect::PacketIn>(fx.at(0)));
            continue;
        }
        const auto emits = only<effect::Emit>(fx);
        REQUIRE(emits.size() == 1);
        CHECK(emits[0].port == std::get<action::Output>(best->actions[0]).port);
        CHECK(only<effect::Emit>(again)[0].port == emits[0].port);
    }
}

TEST_CASE("pppoe push and pop actions")
{
    SwitchState s = make_switch(true);
    const MacAddr cust = mac_from_u64(0x02000000aa01);
    add(s, entry(1, FieldMatch{.ipv4_dst = Ipv4Prefix{parse_ipv4("10.1.0.42"), 32}},
                 {action::PushPppoe{5}, action::SetField{Field::EthDst, mac_to_u64(cust)},
                  action::Output{2}}));
    add(s, entry(1, FieldMatch{.in_port = 2, .pppoe_session = 5, .ppp_proto = ppp::kIpv4},
                 {action::PopPppoe{}, action::Output{1}}));
    Packet ip;
    ip.eth.ethertype = ethertype::kIpv4;
    ip.ipv4 = Ipv4Header{parse_ipv4("192.0.2.1"), parse_ipv4("10.1.0.42"), 64, 17};
    const auto down = only<effect::Emit>(process_packet(s, 1, ip, 0));
    REQUIRE(down.size() == 1);
    CHECK(down[0].packet.pppoe->session_id == 5);
    CHECK(down[0].packet.eth.dst == cust);
    CHECK_NOTHROW(validate(down[0].packet));

    const auto up = only<effect::Emit>(process_packet(s, 2, down[0].packet, 0));
    REQUIRE(up.size() == 1);
    CHECK(up[0].port == 1);
    CHECK(up[0].packet.eth.ethertype == ethertype::kIpv4);
    CHECK(up[0].packet.ipv4 == ip.ipv4);
}

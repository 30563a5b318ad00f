#include "doctest.h"

#include "splitarch/error.hpp"
#include "splitarch/simnet.hpp"

using namespace splitarch;

namespace {

struct Recorder : Actor {
    std::string id;
    std::vector<std::pair<SimTime, Message>> messages;
    std::vector<std::pair<SimTime, Packet>> packets;

    explicit Recorder(std::string n) : id(std::move(n)) { }
    std::string name() const override { return id; }
    void on_message(Network& net, ChannelId, const Message& m) override
    {
        messages.emplace_back(net.now(), m);
    }
    void on_packet(Network& net, PortId, const Packet& p) override
    {
        packets.emplace_back(net.now(), p);
    }
};

TopologyConfig two_nodes(SimTime delay = 500)
{
    TopologyConfig cfg;
    cfg.nodes = {{"A", false, {7}}, {"B", false, {8}}};
    cfg.links = {{"", "A", "B", std::nullopt, std::nullopt, delay, 1}};
    return cfg;
}

std::string config_error(const TopologyConfig& cfg)
{
    Network net;
    try {
        build_network(net, cfg);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        return e.context();
    }
    return "";
}

FlowMod forward(PortId in, PortId out)
{
    FlowMod fm;
    fm.entry.priority = 1;
    fm.entry.match.in_port = in;
    fm.entry.actions = {action::Output{out}};
    return fm;
}

} // namespace

TEST_CASE("build_network")
{
    Network net;
    build_network(net, two_nodes());
    CHECK(net.switch_ids().size() == 2);
    REQUIRE(net.links().size() == 1);
    CHECK(net.links()[0].a.port == 1);
    CHECK(net.links()[0].b.port == 1);
    CHECK(net.switch_state(1).ports.size() == 2);

    TopologyConfig bad = two_nodes();
    bad.links[0].b = "X";
    CHECK(config_error(bad) == "links[0].b");

    TopologyConfig dup = two_nodes();
    dup.nodes[1].id = "A";
    CHECK(config_error(dup) == "nodes[1].id");

    TopologyConfig zero = two_nodes();
    zero.links[0].delay_us = 0;
    CHECK(config_error(zero) == "links[0].delay_us");

    TopologyConfig clash = two_nodes();
    clash.links.push_back({"second", "A", "B", 1, std::nullopt, 10, 1});
    clash.links[0].port_a = 1;
    CHECK(config_error(clash) == "links[1].port_a");
}

TEST_CASE("link delay and run_until idempotence")
{
    Network net;
    build_network(net, two_nodes(500));
    apply_flow_mod(net.switch_state(1), forward(7, 1));
    apply_flow_mod(net.switch_state(2), forward(1, 8));
    const auto probe = net.add_probe(ProbeFlow{"p", {Endpoint::of_switch(1), 7},
                                               {Endpoint::of_switch(2), 8}, 1000});
    net.schedule_action(100, "send", [&](Network& n) { n.inject(1, 7, make_probe_packet(0, 0, {})); });
    net.run_until(1000);
    REQUIRE(net.probes()[probe].rx.size() == 1);
    CHECK(net.probes()[probe].rx[0].second == 600);

    const auto before = net.trace_records().size();
    net.run_until(1000);
    CHECK(net.trace_records().size() == before);
    CHECK(net.now() == 1000);
}

TEST_CASE("fiber cut drops in-flight packets and reports port status")
{
    Network net;
    build_network(net, two_nodes(200));
    auto rec = std::make_unique<Recorder>("ctl");
    Recorder* ctl = rec.get();
    const ActorId id = net.add_actor(std::move(rec));
    for (NodeId n : {1u, 2u})
        net.set_controller(n, net.connect("c" + std::to_string(n), Endpoint::of_actor(id),
                                          Endpoint::of_switch(n), 1000, 100));
    apply_flow_mod(net.switch_state(1), forward(7, 1));
    apply_flow_mod(net.switch_state(2), forward(1, 8));
    net.add_probe(ProbeFlow{"p", {Endpoint::of_switch(1), 7}, {Endpoint::of_switch(2), 8}, 1000});

    // In flight from 49900, due at 50100.
    net.schedule_action(49900, "send", [](Network& n) { n.inject(1, 7, make_probe_packet(0, 0, {})); });
    net.fail_link(0, 50000);
    net.run_until(60000);
    CHECK(net.probes()[0].rx.empty());
    CHECK(net.counters().link_cut == 1);
    CHECK_FALSE(net.switch_state(1).ports.at(1).up);

    REQUIRE(ctl->messages.size() == 2);
    for (const auto& [at, m] : ctl->messages) {
        CHECK(at == 50000 + 1000 + 100);
        CHECK_FALSE(std::get<msg::PortStatus>(m).up);
    }
    CHECK_THROWS_AS(net.fail_link(5, 1), Error);
}

TEST_CASE("channel completes back-to-back messages at send + latency + n*proc")
{
    Network net;
    build_network(net, two_nodes());
    const ActorId a = net.add_actor(std::make_unique<Recorder>("a"));
    auto rec = std::make_unique<Recorder>("b");
    Recorder* b = rec.get();
    const ActorId bid = net.add_actor(std::move(rec));
    const ChannelId ch = net.connect("ab", Endpoint::of_actor(a), Endpoint::of_actor(bid), 1000, 100);
    net.schedule_action(5000, "burst", [&](Network& n) {
        for (int i = 0; i < 10; ++i)
            n.send(ch, Endpoint::of_actor(a), msg::Hello{}, "burst");
    });
    net.run_until(100000);
    REQUIRE(b->messages.size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(b->messages[i].first == 5000 + 1000 + static_cast<SimTime>(i + 1) * 100);
    CHECK(net.tag_done("burst") == 5000 + 1000 + 1000);
    CHECK(net.channel(ch).sent[0] == 10);
}

TEST_CASE("measure_gap")
{
    ProbeFlow p;
    p.period_us = 1000;
    for (std::uint32_t s = 0; s <= 41; ++s)
        p.rx.emplace_back(s, s * 1000);
    p.rx.emplace_back(56, 56000);
    p.rx.emplace_back(57, 57000);
    CHECK(measure_gap(p) == 14000);

    ProbeFlow steady;
    steady.period_us = 1000;
    for (std::uint32_t s = 0; s < 10; ++s)
        steady.rx.emplace_back(s, s * 1000 + 3);
    CHECK(measure_gap(steady) == 0);

    ProbeFlow single;
    single.rx.emplace_back(0, 10);
    CHECK_THROWS_AS(measure_gap(single), Error);
}

TEST_CASE("oam continuity over a simulated link")
{
    TopologyConfig cfg;
    cfg.nodes = {{"A", true, {}}, {"B", true, {}}};
    cfg.links = {{"", "A", "B", std::nullopt, std::nullopt, 100, 1}};
    Network net;
    build_network(net, cfg);
    const ActorId id = net.add_actor(std::make_unique<Recorder>("ctl"));
    const ChannelId ca = net.connect("ca", Endpoint::of_actor(id), Endpoint::of_switch(1), 1000, 100);
    const ChannelId cb = net.connect("cb", Endpoint::of_actor(id), Endpoint::of_switch(2), 1000, 100);
    net.set_controller(1, ca);
    net.set_controller(2, cb);

    Packet tmpl;
    tmpl.eth.ethertype = ethertype::kOam;
    tmpl.oam = OamCcPayload{9, 0, 1};
    FlowMod src_fwd = forward(kFirstLogicalPort, 1);
    src_fwd.entry.actions.insert(src_fwd.entry.actions.begin(), action::PushMpls{20});
    FlowMod demux;
    demux.entry.priority = 1;
    demux.entry.match.mpls_label = 20;
    demux.entry.actions = {action::PopMpls{}};
    demux.entry.goto_table = 1;
    FlowMod local;
    local.entry.table_id = 1;
    local.entry.priority = 1;
    local.entry.match.mpls_label = mpls::kOamLabel;
    local.entry.actions = {action::PopMpls{}, action::Output{kLocalOamPort}};

    const Endpoint ctl = Endpoint::of_actor(id);
    net.send(ca, ctl, msg::PortMod{true, LogicalPort{kFirstLogicalPort, lp::OamSource{9, 3333, tmpl, 0, 0}}});
    net.send(ca, ctl, src_fwd);
    net.send(cb, ctl, msg::PortMod{true, LogicalPort{kFirstLogicalPort, lp::OamSink{9, 3333, 3, 0}}});
    net.send(cb, ctl, demux);
    net.send(cb, ctl, local);
    net.run_until(50000);
    CHECK(net.switch_state(2).logical_ports.at(kFirstLogicalPort).live);

    net.fail_link(0, 50000);
    net.run_until(80000);
    CHECK_FALSE(net.switch_state(2).logical_ports.at(kFirstLogicalPort).live);
    std::optional<SimTime> down;
    SimTime last_rx = 0;
    for (const auto& r : net.trace_records()) {
        if (r.kind == "deliver" && r.node == "B")
            last_rx = r.at_us;
        if (r.kind == "liveness_down")
            down = r.at_us;
    }
    REQUIRE(down);
    CHECK(*down == last_rx + 3 * 3333 + 1);
}

TEST_CASE("determinism, causality and conservation")
{
    auto run = [] {
        Network net(3);
        TopologyConfig cfg = two_nodes(300);
        cfg.links.push_back({"back", "B", "A", std::nullopt, std::nullopt, 250, 1});
        build_network(net, cfg);
        apply_flow_mod(net.switch_state(1), forward(7, 1));
        apply_flow_mod(net.switch_state(2), forward(1, 2));
        apply_flow_mod(net.switch_state(1), forward(2, 7));
        net.add_probe(ProbeFlow{"p", {Endpoint::of_switch(1), 7}, {Endpoint::of_switch(1), 7}, 100});
        net.start_probe(0, 0);
        net.fail_link(0, 3333);
        net.restore_link(0, 7777);
        net.run_until(10000);
        return std::pair{std::move(net.trace_records()), net.counters().link_sent -
                                                             net.counters().link_arrived -
                                                             net.counters().link_cut - net.in_flight()};
    };
    const auto [first, balance] = run();
    const auto [second, balance2] = run();
    CHECK(balance == 0);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].at_us == second[i].at_us);
        CHECK(first[i].detail == second[i].detail);
        if (i)
            CHECK(first[i].at_us >= first[i - 1].at_us);
    }
}

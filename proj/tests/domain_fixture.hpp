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

#include <memory>
#include <string>
#include <vector>

#include "splitarch/simnet.hpp"
#include "splitarch/transportctl.hpp"

namespace splitarch::testing {

struct PeerSpec {
    std::string name;
    std::string border_node;
    std::uint64_t mac = 0x0c0000000001;
};

/// One transport domain covering every switch of `topo`, with optional core
/// peers hanging off border switches.
struct Domain {
    Network net;
    TransportController* ctl = nullptr;
    ActorId ctl_id = 0;
    std::vector<CorePeer*> peers;

    explicit Domain(const TopologyConfig& topo, std::vector<PeerSpec> peer_specs = {},
                    TransportConfig cfg = {})
    {
        std::vector<ActorId> peer_ids;
        for (const PeerSpec& ps : peer_specs) {
            auto peer = std::make_unique<CorePeer>(ps.name, mac_from_u64(ps.mac), Ipv4Addr{0x0a640001});
            peers.push_back(peer.get());
            peer_ids.push_back(net.add_actor(std::move(peer)));
        }
        TopologyConfig full = topo;
        for (const PeerSpec& ps : peer_specs)
            full.links.push_back(LinkConfig{ps.border_node + "-" + ps.name, ps.border_node, ps.name,
                                            std::nullopt, std::nullopt, 100, 1});
        build_network(net, full);

        if (cfg.name.empty())
            cfg.name = "tc";
        cfg.domain = net.switch_ids();
        auto ctl_owned = std::make_unique<TransportController>(cfg);
        ctl = ctl_owned.get();
        ctl_id = net.add_actor(std::move(ctl_owned));
        ctl->attach(ctl_id);
        for (NodeId n : net.switch_ids()) {
            const ChannelId ch = net.connect("tc-" + net.switch_name(n), Endpoint::of_actor(ctl_id),
                                             Endpoint::of_switch(n), 1000, 100);
            net.set_controller(n, ch);
            ctl->add_switch_channel(n, ch);
        }
        for (std::size_t i = 0; i < peer_specs.size(); ++i) {
            const PeerSpec& ps = peer_specs[i];
            const ChannelId ch = net.connect("tc-" + ps.name, Endpoint::of_actor(ctl_id),
                                             Endpoint::of_actor(peer_ids[i]), 1000, 100, true);
            peers[i]->attach(peer_ids[i], ch);
            const Link& l = net.links().at(*net.link_by_name(ps.border_node + "-" + ps.name));
            ctl->add_border(BorderPort{ps.name, PortRef{id(ps.border_node), l.a.port}, ch, true});
        }
    }

    NodeId id(const std::string& name) const { return *net.switch_id(name); }

    PortId port_toward(const std::string& from, const std::string& to) const
    {
        for (const Link& l : net.links()) {
            if (l.a.at == Endpoint::of_switch(id(from)) && l.b.at == Endpoint::of_switch(id(to)))
                return l.a.port;
            if (l.b.at == Endpoint::of_switch(id(from)) && l.a.at == Endpoint::of_switch(id(to)))
                return l.b.port;
        }
        return 0;
    }

    /// Runs past discovery.
    void discover(SimTime t = 25000) { net.run_until(t); }
};

inline TopologyConfig line_topology(int n, bool processing = true, SimTime delay = 100)
{
    TopologyConfig t;
    for (int i = 1; i <= n; ++i)
        t.nodes.push_back({"n" + std::to_string(i), processing, {100}});
    for (int i = 1; i < n; ++i)
        t.links.push_back({"", "n" + std::to_string(i), "n" + std::to_string(i + 1), std::nullopt,
                           std::nullopt, delay, 1});
    return t;
}

inline TopologyConfig ring_topology(int n, bool processing = true, SimTime delay = 100)
{
    TopologyConfig t = line_topology(n, processing, delay);
    t.links.push_back({"", "n" + std::to_string(n), "n1", std::nullopt, std::nullopt, delay, 1});
    return t;
}

} // namespace splitarch::testing

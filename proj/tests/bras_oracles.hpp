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

#include <set>
#include <string>

#include "splitarch/brasctl.hpp"
#include "splitarch/error.hpp"
#include "splitarch/rng.hpp"

namespace splitarch::testing {

struct EquivalenceReport {
    int sessions = 0;
    int frames = 0;
    int mismatches = 0;
    std::string first_mismatch;
};

/// Builds a BRAS chain with `sessions` random open sessions, installs the
/// completed rules on a fast-path switch and compares both paths byte for
/// byte in both directions.
inline EquivalenceReport check_fast_slow_equivalence(std::uint64_t seed, int sessions, int frames_each)
{
    Rng rng(seed);
    const MacAddr bras_mac = mac_from_u64(0x02bb00000001);
    const MacAddr gw_mac = mac_from_u64(0x0c0000000001);
    const PortId ipoe = kFirstLogicalPort;

    LayerChain chain{ChainLayer{"ip", {}, {}}, ChainLayer{"ethernet", {}, {}}};
    LogicalPort up_port;
    up_port.port_id = ipoe;
    up_port.kind = lp::IpOverEthernet{gw_mac, bras_mac, 1};
    chain[1].ports[ipoe] = up_port;

    SwitchState fast;
    fast.node_id = 1;
    fast.processing_capable = true;
    for (PortId p = 1; p <= 9; ++p)
        fast.ports[p] = PhysicalPort{p, true, 0, 0};

    std::vector<SessionRecord> open;
    std::set<std::uint16_t> sids;
    std::set<Ipv4Addr> ips;
    for (int i = 0; i < sessions; ++i) {
        SessionRecord s;
        do {
            s.session_id = static_cast<std::uint16_t>(rng.uniform(1, 0xfffe));
        } while (!sids.insert(s.session_id).second);
        Ipv4Addr ip;
        do {
            ip = 0x0a010000 | static_cast<Ipv4Addr>(rng.uniform(1, 0xfffe));
        } while (!ips.insert(ip).second);
        s.ip = ip;
        s.customer_mac = mac_from_u64(0x020000000000 | rng.uniform(0, 0xffffffffff));
        s.access = static_cast<PortId>(rng.uniform(2, 9));
        s.state = SessionState::IpOpen;
        s.pppoe_port = ipoe + 1 + static_cast<PortId>(i);
        LogicalPort term;
        term.port_id = s.pppoe_port;
        term.kind = lp::PppoeTermination{{{s.session_id, PppoeBinding{s.customer_mac, ip}}}, bras_mac, s.access};
        chain[1].ports[s.pppoe_port] = term;
        auto [down, up] = install_customer_route(s, ipoe);
        chain[0].rules.push_back(down);
        chain[0].rules.push_back(up);
        apply_flow_mod(fast, complete_rule(chain, down));
        apply_flow_mod(fast, complete_rule(chain, up));
        open.push_back(s);
    }

    EquivalenceReport rep;
    rep.sessions = sessions;
    auto compare = [&](PortId in, const Packet& p) {
        ++rep.frames;
        std::string problem;
        try {
            const Forwarded slow = slow_path_forward(chain, in, p);
            SwitchState copy = fast;
            const Effects fx = process_packet(copy, in, p, 0);
            const effect::Emit* emit = nullptr;
            for (const Effect& e : fx) {
                if (auto* em = std::get_if<effect::Emit>(&e))
                    emit = em;
            }
            if (!emit || fx.size() != 1)
                problem = "fast path did not emit exactly once";
            else if (emit->port != slow.port)
                problem = "port " + std::to_string(emit->port) + " vs " + std::to_string(slow.port);
            else if (encode_frame(emit->packet) != encode_frame(slow.packet))
                problem = "bytes differ";
        } catch (const Error& e) {
            problem = e.what();
        }
        if (!problem.empty()) {
            if (rep.mismatches == 0)
                rep.first_mismatch = problem;
            ++rep.mismatches;
        }
    };

    for (const SessionRecord& s : open) {
        for (int f = 0; f < frames_each; ++f) {
            Bytes payload(rng.uniform(0, 200));
            for (auto& b : payload)
                b = static_cast<std::uint8_t>(rng.uniform(0, 255));
            Packet down;
            down.eth = EthernetHeader{bras_mac, gw_mac, ethertype::kIpv4};
            down.ipv4 = Ipv4Header{static_cast<Ipv4Addr>(rng.uniform(0, 0xffffffff)), *s.ip,
                                   static_cast<std::uint8_t>(rng.uniform(1, 255)),
                                   static_cast<std::uint8_t>(rng.uniform(0, 255))};
            down.payload = payload;
            compare(1, down);

            const Ipv4Header up_hdr{*s.ip, static_cast<Ipv4Addr>(rng.uniform(0, 0xffffffff)),
                                    static_cast<std::uint8_t>(rng.uniform(1, 255)),
                                    static_cast<std::uint8_t>(rng.uniform(0, 255))};
            compare(s.access,
                    encap_pppoe(ppp::kIpv4, PppPayload{up_hdr, payload}, s.session_id, bras_mac, s.customer_mac));
        }
    }
    return rep;
}

} // namespace splitarch::testing

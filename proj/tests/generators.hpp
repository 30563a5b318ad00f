// Hand-rolled generators shared by the property-style tests.
#pragma once

#include "splitarch/packet.hpp"
#include "splitarch/rng.hpp"

namespace splitarch::testing {

inline MacAddr random_mac(Rng& rng)
{
    return mac_from_u64(rng.uniform(0, (1ull << 48) - 1));
}

inline Bytes random_bytes(Rng& rng, std::size_t max_len)
{
    Bytes b(rng.uniform(0, max_len));
    for (auto& x : b)
        x = static_cast<std::uint8_t>(rng.uniform(0, 255));
    return b;
}

/// A well-formed packet drawn from every header combination the model allows.
inline Packet random_packet(Rng& rng)
{
    Packet p;
    p.eth.dst = random_mac(rng);
    p.eth.src = random_mac(rng);
    const auto vlans = rng.uniform(0, 2);
    for (std::uint64_t i = 0; i < vlans; ++i)
        p.vlans.push_back(VlanTag{static_cast<std::uint16_t>(rng.uniform(0, 4095)),
                                  static_cast<std::uint8_t>(rng.uniform(0, 7))});
    const auto labels = rng.uniform(0, 3);
    for (std::uint64_t i = 0; i < labels; ++i) {
        MplsLabelEntry e;
        e.label = static_cast<std::uint32_t>(rng.uniform(16, mpls::kLabelLimit - 1));
        e.tc = static_cast<std::uint8_t>(rng.uniform(0, 7));
        e.ttl = static_cast<std::uint8_t>(rng.uniform(0, 255));
        e.bos = i + 1 == labels;
        p.mpls.push_back(e);
    }
    p.payload = random_bytes(rng, 64);
    switch (rng.uniform(0, 5)) {
    case 0:
        p.eth.ethertype = ethertype::kProbe;
        break;
    case 1:
        p.eth.ethertype = ethertype::kIpv4;
        p.ipv4 = Ipv4Header{static_cast<Ipv4Addr>(rng.next()), static_cast<Ipv4Addr>(rng.next()),
                            static_cast<std::uint8_t>(rng.uniform(0, 255)),
                            static_cast<std::uint8_t>(rng.uniform(0, 255))};
        break;
    case 2: {
        static constexpr std::uint8_t codes[] = {pppoe_code::kPadi, pppoe_code::kPado,
                                                 pppoe_code::kPadr, pppoe_code::kPads,
                                                 pppoe_code::kPadt};
        p.eth.ethertype = ethertype::kPppoeDiscovery;
        p.pppoe = PppoeHeader{0x11, codes[rng.uniform(0, 4)],
                              static_cast<std::uint16_t>(rng.uniform(0, 0xffff)), 0};
        p.pppoe->length = pppoe_content_length(p);
        break;
    }
    case 3: {
        p.eth.ethertype = ethertype::kPppoeSession;
        static constexpr std::uint16_t protos[] = {ppp::kIpv4, ppp::kLcp, ppp::kIpcp};
        p.ppp_proto = protos[rng.uniform(0, 2)];
        if (*p.ppp_proto == ppp::kIpv4)
            p.ipv4 = Ipv4Header{static_cast<Ipv4Addr>(rng.next()),
                                static_cast<Ipv4Addr>(rng.next()), 64, 17};
        p.pppoe = PppoeHeader{0x11, pppoe_code::kSession,
                              static_cast<std::uint16_t>(rng.uniform(1, 0xffff)), 0};
        p.pppoe->length = pppoe_content_length(p);
        break;
    }
    case 4:
        p.eth.ethertype = ethertype::kOam;
        p.oam = OamCcPayload{static_cast<std::uint32_t>(rng.next()),
                             static_cast<std::uint32_t>(rng.next()),
                             static_cast<std::uint32_t>(rng.next())};
        break;
    default:
        p.eth.ethertype = static_cast<std::uint16_t>(rng.uniform(0x0600, 0x07ff));
        break;
    }
    return p;
}

} // namespace splitarch::testing

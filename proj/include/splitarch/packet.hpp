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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace splitarch {

using MacAddr = std::array<std::uint8_t, 6>;
using Ipv4Addr = std::uint32_t;
using Bytes = std::vector<std::uint8_t>;

inline constexpr MacAddr kBroadcastMac{0xff, 0xff, 0xff, 0xff, 0xff, 0xff};

namespace ethertype {
inline constexpr std::uint16_t kIpv4 = 0x0800;
inline constexpr std::uint16_t kVlan = 0x8100;
inline constexpr std::uint16_t kMpls = 0x8847;
inline constexpr std::uint16_t kPppoeDiscovery = 0x8863;
inline constexpr std::uint16_t kPppoeSession = 0x8864;
inline constexpr std::uint16_t kProbe = 0x88b5;     // local experimental, used by traffic probes
inline constexpr std::uint16_t kDiscovery = 0x88cc; // topology discovery frames
inline constexpr std::uint16_t kOam = 0x8902;
} // namespace ethertype

namespace ppp {
inline constexpr std::uint16_t kIpv4 = 0x0021;
inline constexpr std::uint16_t kIpcp = 0x8021;
inline constexpr std::uint16_t kLcp = 0xc021;
} // namespace ppp

namespace pppoe_code {
inline constexpr std::uint8_t kSession = 0x00;
inline constexpr std::uint8_t kPado = 0x07;
inline constexpr std::uint8_t kPadi = 0x09;
inline constexpr std::uint8_t kPadr = 0x19;
inline constexpr std::uint8_t kPads = 0x65;
inline constexpr std::uint8_t kPadt = 0xa7;
} // namespace pppoe_code

namespace mpls {
inline constexpr std::uint32_t kOamLabel = 13;
inline constexpr std::uint32_t kFirstUnreserved = 16;
inline constexpr std::uint32_t kLabelLimit = 1u << 20;
} // namespace mpls

struct EthernetHeader {
    MacAddr dst{};
    MacAddr src{};
    std::uint16_t ethertype = 0;

    bool operator==(const EthernetHeader&) const = default;
};

struct VlanTag {
    std::uint16_t vid = 0; // 12 bit
    std::uint8_t pcp = 0;  // 3 bit

    bool operator==(const VlanTag&) const = default;
};

struct MplsLabelEntry {
    std::uint32_t label = 0; // 20 bit
    std::uint8_t tc = 0;     // 3 bit
    bool bos = false;
    std::uint8_t ttl = 64;

    bool operator==(const MplsLabelEntry&) const = default;
};

struct PppoeHeader {
    std::uint8_t ver_type = 0x11;
    std::uint8_t code = 0;
    std::uint16_t session_id = 0;
    std::uint16_t length = 0;

    bool operator==(const PppoeHeader&) const = default;
};

/// Reduced IPv4 header: no checksum, no options. Total length is derived
/// on encode and is not part of the structured form.
struct Ipv4Header {
    Ipv4Addr src = 0;
    Ipv4Addr dst = 0;
    std::uint8_t ttl = 64;
    std::uint8_t proto = 17;

    bool operator==(const Ipv4Header&) const = default;
};

struct OamCcPayload {
    std::uint32_t meg_id = 0;
    std::uint32_t seq = 0;
    std::uint32_t src_node = 0;

    bool operator==(const OamCcPayload&) const = default;
};

/// A layered header stack. `eth.ethertype` always names the protocol that
/// follows the VLAN tags and MPLS stack; the MPLS ethertype is implied by a
/// non-empty stack and never stored.
struct Packet {
    EthernetHeader eth;
    std::vector<VlanTag> vlans;          // outer first, at most two
    std::vector<MplsLabelEntry> mpls;    // top of stack first
    std::optional<PppoeHeader> pppoe;
    std::optional<std::uint16_t> ppp_proto;
    std::optional<Ipv4Header> ipv4;
    std::optional<OamCcPayload> oam;
    Bytes payload;

    bool operator==(const Packet&) const = default;
};

/// Throws MalformedPacket when a type invariant does not hold.
void validate(const Packet& p);

/// Canonical byte layout, big-endian throughout:
///   dst(6) src(6) [0x8100 TCI(2)]{0,2} type(2)
///   if MPLS: type = 0x8847, entries(4 each, label<<12|tc<<9|bos<<8|ttl),
///            then the inner ethertype(2)
///   PPPoE(6): ver_type code session length; PPP protocol(2) on 0x8864
///   IPv4(12): src dst ttl proto total_length(2)
///   OAM CC(12): meg_id seq src_node
///   payload
Bytes encode_frame(const Packet& p);
Packet decode_frame(std::span<const std::uint8_t> bytes);

Packet push_mpls(Packet p, std::uint32_t label, std::uint8_t tc, std::uint8_t ttl);
Packet pop_mpls(Packet p);

/// Bytes covered by the PPPoE length field: PPP protocol plus everything after it.
std::uint16_t pppoe_content_length(const Packet& p);

struct PppPayload {
    std::optional<Ipv4Header> ipv4;
    Bytes bytes;

    bool operator==(const PppPayload&) const = default;
};

struct PppoeData {
    std::uint16_t session_id = 0;
    std::uint16_t ppp_proto = 0;
    PppPayload payload;

    bool operator==(const PppoeData&) const = default;
};

Packet encap_pppoe(std::uint16_t ppp_proto, PppPayload payload, std::uint16_t session_id,
                   const MacAddr& dst, const MacAddr& src);
PppoeData decap_pppoe(const Packet& p);

/// Discovery-stage frame (PADI, PADO, PADR, PADS, PADT); tags are not modelled.
Packet make_pppoe_discovery(std::uint8_t code, std::uint16_t session_id, const MacAddr& dst,
                            const MacAddr& src);

std::string format_mac(const MacAddr& mac);
MacAddr parse_mac(std::string_view text);
MacAddr mac_from_u64(std::uint64_t value);
std::uint64_t mac_to_u64(const MacAddr& mac);
std::string format_ipv4(Ipv4Addr addr);
Ipv4Addr parse_ipv4(std::string_view text);

} // namespace splitarch

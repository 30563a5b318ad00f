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

#include "splitarch/packet.hpp"

#include <charconv>
#include <cstdio>

#include "splitarch/error.hpp"

namespace splitarch {

namespace {

bool is_discovery_code(std::uint8_t code)
{
    using namespace pppoe_code;
    return code == kPadi || code == kPado || code == kPadr || code == kPads || code == kPadt;
}

void malformed(const char* what)
{
    throw Error(ErrorCode::MalformedPacket, what);
}

class Writer {
public:
    explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v)
    {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v)
    {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void mac(const MacAddr& m) { out_.insert(out_.end(), m.begin(), m.end()); }
    void bytes(const Bytes& b) { out_.insert(out_.end(), b.begin(), b.end()); }

    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) { }

    void need(std::size_t n, const char* what) const
    {
        if (in_.size() - pos_ < n)
            throw Error(ErrorCode::TruncatedFrame, what);
    }
    std::uint8_t u8()
    {
        return in_[pos_++];
    }
    std::uint16_t u16()
    {
        std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] << 8 | in_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        std::uint32_t hi = u16();
        return hi << 16 | u16();
    }
    MacAddr mac()
    {
        MacAddr m;
        for (auto& b : m)
            b = in_[pos_++];
        return m;
    }
    Bytes rest()
    {
        Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.end());
        pos_ = in_.size();
        return out;
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

void validate(const Packet& p)
{
    if (p.vlans.size() > 2)
        malformed("more than two vlan tags");
    for (const auto& tag : p.vlans) {
        if (tag.vid >= 4096 || tag.pcp >= 8)
            malformed("vlan field out of range");
    }
    for (std::size_t i = 0; i < p.mpls.size(); ++i) {
        const auto& e = p.mpls[i];
        if (e.label >= mpls::kLabelLimit || e.tc >= 8)
            malformed("mpls field out of range");
        if (e.bos != (i + 1 == p.mpls.size()))
            malformed("bottom-of-stack flag not on last entry");
    }

    const std::uint16_t type = p.eth.ethertype;
    if (type == ethertype::kVlan || type == ethertype::kMpls)
        malformed("ethertype reserved for tags");

    const bool pppoe_type =
        type == ethertype::kPppoeDiscovery || type == ethertype::kPppoeSession;
    if (pppoe_type != p.pppoe.has_value())
        malformed("pppoe header and ethertype disagree");
    if (p.pppoe) {
        if (p.pppoe->ver_type != 0x11)
            malformed("pppoe ver_type");
        if (type == ethertype::kPppoeDiscovery) {
            if (!is_discovery_code(p.pppoe->code))
                malformed("discovery frame with non-discovery code");
            if (p.ppp_proto)
                malformed("discovery frame carries ppp protocol");
        } else {
            if (p.pppoe->code != pppoe_code::kSession)
                malformed("session frame with discovery code");
            if (!p.ppp_proto)
                malformed("session frame without ppp protocol");
        }
    } else if (p.ppp_proto) {
        malformed("ppp protocol without pppoe");
    }

    const bool wants_ipv4 =
        type == ethertype::kIpv4 || (p.ppp_proto && *p.ppp_proto == ppp::kIpv4);
    if (wants_ipv4 != p.ipv4.has_value())
        malformed("ipv4 header and protocol disagree");
    if (p.ipv4 && p.payload.size() + 12 > 0xffff)
        malformed("ipv4 total length overflow");
    if ((type == ethertype::kOam) != p.oam.has_value())
        malformed("oam payload and ethertype disagree");
}

Bytes encode_frame(const Packet& p)
{
    validate(p);
    Writer w(14 + 4 * (p.vlans.size() + p.mpls.size()) + 32 + p.payload.size());
    w.mac(p.eth.dst);
    w.mac(p.eth.src);
    for (const auto& tag : p.vlans) {
        w.u16(ethertype::kVlan);
        w.u16(static_cast<std::uint16_t>(tag.pcp << 13 | tag.vid));
    }
    if (!p.mpls.empty()) {
        w.u16(ethertype::kMpls);
        for (const auto& e : p.mpls)
            w.u32(e.label << 12 | std::uint32_t(e.tc) << 9 | std::uint32_t(e.bos) << 8 | e.ttl);
    }
    w.u16(p.eth.ethertype);
    if (p.pppoe) {
        w.u8(p.pppoe->ver_type);
        w.u8(p.pppoe->code);
        w.u16(p.pppoe->session_id);
        w.u16(p.pppoe->length);
    }
    if (p.ppp_proto)
        w.u16(*p.ppp_proto);
    if (p.ipv4) {
        w.u32(p.ipv4->src);
        w.u32(p.ipv4->dst);
        w.u8(p.ipv4->ttl);
        w.u8(p.ipv4->proto);
        w.u16(static_cast<std::uint16_t>(12 + p.payload.size()));
    }
    if (p.oam) {
        w.u32(p.oam->meg_id);
        w.u32(p.oam->seq);
        w.u32(p.oam->src_node);
    }
    w.bytes(p.payload);
    return w.take();
}

Packet decode_frame(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    r.need(14, "ethernet header");
    Packet p;
    p.eth.dst = r.mac();
    p.eth.src = r.mac();
    std::uint16_t type = r.u16();
    while (type == ethertype::kVlan && p.vlans.size() < 2) {
        r.need(4, "vlan tag");
        const std::uint16_t tci = r.u16();
        p.vlans.push_back(VlanTag{static_cast<std::uint16_t>(tci & 0x0fff),
                                  static_cast<std::uint8_t>(tci >> 13)});
        type = r.u16();
    }
    if (type == ethertype::kMpls) {
        for (;;) {
            r.need(4, "mpls entry");
            const std::uint32_t word = r.u32();
            MplsLabelEntry e;
            e.label = word >> 12;
            e.tc = static_cast<std::uint8_t>(word >> 9 & 0x7);
            e.bos = (word >> 8 & 0x1) != 0;
            e.ttl = static_cast<std::uint8_t>(word);
            p.mpls.push_back(e);
            if (e.bos)
                break;
        }
        r.need(2, "inner ethertype");
        type = r.u16();
        if (type == ethertype::kMpls || type == ethertype::kVlan)
            malformed("tag ethertype below mpls stack");
    }
    p.eth.ethertype = type;

    if (type == ethertype::kPppoeDiscovery || type == ethertype::kPppoeSession) {
        r.need(6, "pppoe header");
        PppoeHeader h;
        h.ver_type = r.u8();
        h.code = r.u8();
        h.session_id = r.u16();
        h.length = r.u16();
        p.pppoe = h;
        if (type == ethertype::kPppoeSession) {
            r.need(2, "ppp protocol");
            p.ppp_proto = r.u16();
        }
    }
    if (type == ethertype::kIpv4 || (p.ppp_proto && *p.ppp_proto == ppp::kIpv4)) {
        r.need(12, "ipv4 header");
        Ipv4Header h;
        h.src = r.u32();
        h.dst = r.u32();
        h.ttl = r.u8();
        h.proto = r.u8();
        const std::uint16_t total = r.u16();
        if (total < 12)
            malformed("ipv4 total length");
        r.need(total - 12u, "ipv4 payload");
        p.ipv4 = h;
    } else if (type == ethertype::kOam) {
        r.need(12, "oam payload");
        OamCcPayload cc;
        cc.meg_id = r.u32();
        cc.seq = r.u32();
        cc.src_node = r.u32();
        p.oam = cc;
    }
    p.payload = r.rest();
    return p;
}

Packet push_mpls(Packet p, std::uint32_t label, std::uint8_t tc, std::uint8_t ttl)
{
    if (label < mpls::kFirstUnreserved && label != mpls::kOamLabel)
        throw Error(ErrorCode::ReservedLabel, std::to_string(label));
    if (label >= mpls::kLabelLimit)
        throw Error(ErrorCode::MalformedPacket, "label exceeds 20 bits");
    MplsLabelEntry e;
    e.label = label;
    e.tc = static_cast<std::uint8_t>(tc & 0x7);
    e.ttl = ttl;
    e.bos = p.mpls.empty();
    p.mpls.insert(p.mpls.begin(), e);
    return p;
}

Packet pop_mpls(Packet p)
{
    if (p.mpls.empty())
        throw Error(ErrorCode::EmptyStack, "pop");
    p.mpls.erase(p.mpls.begin());
    return p;
}

std::uint16_t pppoe_content_length(const Packet& p)
{
    std::size_t n = p.payload.size();
    if (p.ppp_proto)
        n += 2;
    if (p.ipv4)
        n += 12;
    return static_cast<std::uint16_t>(n);
}

Packet encap_pppoe(std::uint16_t ppp_proto, PppPayload payload, std::uint16_t session_id,
                   const MacAddr& dst, const MacAddr& src)
{
    if (session_id == 0)
        throw Error(ErrorCode::MalformedPacket, "session id 0 on data frame");
    if ((ppp_proto == ppp::kIpv4) != payload.ipv4.has_value())
        throw Error(ErrorCode::MalformedPacket, "ipv4 header and ppp protocol disagree");
    Packet p;
    p.eth = EthernetHeader{dst, src, ethertype::kPppoeSession};
    p.ppp_proto = ppp_proto;
    p.ipv4 = payload.ipv4;
    p.payload = std::move(payload.bytes);
    p.pppoe = PppoeHeader{0x11, pppoe_code::kSession, session_id, 0};
    p.pppoe->length = pppoe_content_length(p);
    return p;
}

PppoeData decap_pppoe(const Packet& p)
{
    if (!p.pppoe || p.pppoe->code != pppoe_code::kSession || !p.ppp_proto)
        throw Error(ErrorCode::NotPppoeData, "not a pppoe session frame");
    return PppoeData{p.pppoe->session_id, *p.ppp_proto, PppPayload{p.ipv4, p.payload}};
}

Packet make_pppoe_discovery(std::uint8_t code, std::uint16_t session_id, const MacAddr& dst,
                            const MacAddr& src)
{
    if (!is_discovery_code(code))
        throw Error(ErrorCode::MalformedPacket, "not a discovery code");
    Packet p;
    p.eth = EthernetHeader{dst, src, ethertype::kPppoeDiscovery};
    p.pppoe = PppoeHeader{0x11, code, session_id, 0};
    return p;
}

std::string format_mac(const MacAddr& mac)
{
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", mac[0], mac[1], mac[2],
                  mac[3], mac[4], mac[5]);
    return buf;
}

MacAddr parse_mac(std::string_view text)
{
    MacAddr mac{};
    if (text.size() != 17)
        throw Error(ErrorCode::ConfigError, "mac address: " + std::string(text));
    for (std::size_t i = 0; i < 6; ++i) {
        const char* first = text.data() + i * 3;
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(first, first + 2, value, 16);
        if (ec != std::errc{} || ptr != first + 2 || (i < 5 && text[i * 3 + 2] != ':'))
            throw Error(ErrorCode::ConfigError, "mac address: " + std::string(text));
        mac[i] = static_cast<std::uint8_t>(value);
    }
    return mac;
}

MacAddr mac_from_u64(std::uint64_t value)
{
    MacAddr mac;
    for (int i = 5; i >= 0; --i) {
        mac[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value);
        value >>= 8;
    }
    return mac;
}

std::uint64_t mac_to_u64(const MacAddr& mac)
{
    std::uint64_t v = 0;
    for (auto b : mac)
        v = v << 8 | b;
    return v;
}

std::string format_ipv4(Ipv4Addr addr)
{
    return std::to_string(addr >> 24) + "." + std::to_string(addr >> 16 & 0xff) + "." +
           std::to_string(addr >> 8 & 0xff) + "." + std::to_string(addr & 0xff);
}

Ipv4Addr parse_ipv4(std::string_view text)
{
    Ipv4Addr addr = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(p, end, value);
        if (ec != std::errc{} || value > 255)
            throw Error(ErrorCode::ConfigError, "ipv4 address: " + std::string(text));
        addr = addr << 8 | value;
        p = ptr;
        if (octet < 3) {
            if (p == end || *p != '.')
                throw Error(ErrorCode::ConfigError, "ipv4 address: " + std::string(text));
            ++p;
        }
    }
    if (p != end)
        throw Error(ErrorCode::ConfigError, "ipv4 address: " + std::string(text));
    return addr;
}

} // namespace splitarch

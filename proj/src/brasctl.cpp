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

#include "splitarch/brasctl.hpp"

#include <algorithm>
#include <charconv>

#include "splitarch/error.hpp"

namespace splitarch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::uint8_t kConfReq = 1;
constexpr std::uint8_t kConfAck = 2;
constexpr std::uint16_t kAcNameTag = 0x0102;

std::uint64_t session_key(PortId vport, const MacAddr& mac)
{
    return static_cast<std::uint64_t>(vport) << 48 | mac_to_u64(mac);
}

SessionRecord fresh_session(const MacAddr& mac, PortId access)
{
    SessionRecord s;
    s.customer_mac = mac;
    s.access = access;
    return s;
}

void put_u32(Bytes& b, std::uint32_t v)
{
    for (int i = 3; i >= 0; --i)
        b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const Bytes& b, std::size_t at)
{
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i)
        v = v << 8 | b.at(at + i);
    return v;
}

} // namespace

std::string_view to_string(SessionState s)
{
    switch (s) {
    case SessionState::Idle: return "Idle";
    case SessionState::PadoSent: return "PadoSent";
    case SessionState::SessionUp: return "SessionUp";
    case SessionState::LcpOpen: return "LcpOpen";
    case SessionState::IpOpen: return "IpOpen";
    case SessionState::Closed: return "Closed";
    }
    return "?";
}

std::string_view to_string(PppoeEvent e)
{
    switch (e) {
    case PppoeEvent::Padi: return "PADI";
    case PppoeEvent::Padr: return "PADR";
    case PppoeEvent::Padt: return "PADT";
    case PppoeEvent::LcpConfReq: return "LcpConfReq";
    case PppoeEvent::IpcpConfReq: return "IpcpConfReq";
    case PppoeEvent::Timeout: return "Timeout";
    }
    return "?";
}

std::string_view to_string(EmissionKind e)
{
    switch (e) {
    case EmissionKind::Pado: return "PADO";
    case EmissionKind::Pads: return "PADS";
    case EmissionKind::LcpConfAck: return "LcpConfAck";
    case EmissionKind::IpcpConfAck: return "IpcpConfAck";
    }
    return "?";
}

Ipv4Prefix parse_prefix(std::string_view text)
{
    const auto slash = text.find('/');
    if (slash == std::string_view::npos)
        throw Error(ErrorCode::ConfigError, "prefix without length: " + std::string(text));
    Ipv4Prefix p;
    p.addr = parse_ipv4(text.substr(0, slash));
    unsigned len = 0;
    const auto digits = text.substr(slash + 1);
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
    if (ec != std::errc{} || end != digits.data() + digits.size() || len > 32)
        throw Error(ErrorCode::ConfigError, "bad prefix length: " + std::string(text));
    p.len = static_cast<std::uint8_t>(len);
    const Ipv4Addr mask = len == 0 ? 0 : ~Ipv4Addr{0} << (32 - len);
    p.addr &= mask;
    return p;
}

std::string format_prefix(const Ipv4Prefix& p)
{
    return format_ipv4(p.addr) + "/" + std::to_string(p.len);
}

AddressPool::AddressPool(Ipv4Prefix prefix) : prefix_(prefix) { }

std::size_t AddressPool::capacity() const
{
    if (prefix_.len >= 31)
        return 0;
    return (std::size_t{1} << (32 - prefix_.len)) - 2;
}

Ipv4Addr AddressPool::assign(std::uint16_t session)
{
    const std::size_t n = capacity();
    for (std::size_t i = 1; i <= n; ++i) {
        const Ipv4Addr ip = prefix_.addr + static_cast<Ipv4Addr>(i);
        if (!used_.contains(ip)) {
            used_[ip] = session;
            return ip;
        }
    }
    throw Error(ErrorCode::PoolExhausted, format_prefix(prefix_));
}

void AddressPool::release(Ipv4Addr ip)
{
    used_.erase(ip);
}

FsmResult pppoe_fsm_step(SessionRecord s, PppoeEvent ev, AddressPool& pool,
                         const std::function<std::uint16_t()>& next_session_id)
{
    FsmResult r;
    auto ignore = [&] {
        r.session = s;
        r.ignored = true;
        return r;
    };
    auto close = [&] {
        if (s.ip)
            pool.release(*s.ip);
        s.ip.reset();
        s.state = SessionState::Closed;
        r.session = s;
        return r;
    };

    switch (ev) {
    case PppoeEvent::Padi:
        if (s.state == SessionState::Closed)
            s = fresh_session(s.customer_mac, s.access);
        if (s.state != SessionState::Idle && s.state != SessionState::PadoSent)
            return ignore();
        s.state = SessionState::PadoSent;
        r.emissions.push_back({EmissionKind::Pado, 0, std::nullopt});
        break;
    case PppoeEvent::Padr:
        if (s.state != SessionState::PadoSent)
            return ignore();
        s.session_id = next_session_id();
        s.state = SessionState::SessionUp;
        r.emissions.push_back({EmissionKind::Pads, s.session_id, std::nullopt});
        break;
    case PppoeEvent::LcpConfReq:
        if (s.state != SessionState::SessionUp)
            return ignore();
        s.state = SessionState::LcpOpen;
        r.emissions.push_back({EmissionKind::LcpConfAck, s.session_id, std::nullopt});
        break;
    case PppoeEvent::IpcpConfReq:
        if (s.state != SessionState::LcpOpen)
            return ignore();
        s.ip = pool.assign(s.session_id);
        s.state = SessionState::IpOpen;
        r.emissions.push_back({EmissionKind::IpcpConfAck, s.session_id, s.ip});
        break;
    case PppoeEvent::Padt:
        if (s.state == SessionState::Idle || s.state == SessionState::Closed)
            return ignore();
        return close();
    case PppoeEvent::Timeout:
        if (s.state == SessionState::IpOpen || s.state == SessionState::Closed ||
            s.state == SessionState::Idle)
            return ignore();
        return close();
    }
    r.session = s;
    return r;
}

std::string select_bras(const std::vector<BrasDescriptor>& registry)
{
    const BrasDescriptor* best = nullptr;
    for (const BrasDescriptor& d : registry) {
        if (!d.enabled)
            continue;
        if (!best || d.priority > best->priority || (d.priority == best->priority && d.id < best->id))
            best = &d;
    }
    if (!best)
        throw Error(ErrorCode::NoBrasAvailable, "no enabled BRAS");
    return best->id;
}

std::pair<IncompleteRule, IncompleteRule> install_customer_route(const SessionRecord& s, PortId ipoe_port)
{
    if (s.state != SessionState::IpOpen || !s.ip)
        throw Error(ErrorCode::SessionNotOpen,
                    "session " + std::to_string(s.session_id) + " is " + std::string(to_string(s.state)));
    IncompleteRule down;
    down.layer = "ip";
    down.priority = 300;
    down.match.ipv4_dst = Ipv4Prefix{*s.ip, 32};
    down.actions = {action::Output{s.pppoe_port}};
    IncompleteRule up;
    up.layer = "ip";
    up.priority = 301;
    up.match.in_port = s.pppoe_port;
    up.actions = {action::Output{ipoe_port}};
    return {down, up};
}

namespace {

const PppoeBinding* binding_for(const lp::PppoeTermination& t, const FieldMatch& m)
{
    if (t.sessions.size() == 1)
        return &t.sessions.begin()->second;
    if (m.ipv4_dst && m.ipv4_dst->len == 32) {
        for (const auto& [sid, b] : t.sessions) {
            if (b.ip == m.ipv4_dst->addr)
                return &b;
        }
    }
    return nullptr;
}

std::uint16_t session_for(const lp::PppoeTermination& t, const PppoeBinding* b)
{
    for (const auto& [sid, bind] : t.sessions) {
        if (&bind == b)
            return sid;
    }
    return 0;
}

bool references(const FieldMatch& m, const ActionList& actions, PortId port)
{
    if (m.in_port == port)
        return true;
    return std::any_of(actions.begin(), actions.end(), [&](const Action& a) {
        const auto* o = std::get_if<action::Output>(&a);
        return o && o->port == port;
    });
}

std::vector<PortId> logical_refs(const FieldMatch& m, const ActionList& actions)
{
    std::vector<PortId> out;
    if (m.in_port && is_logical_port(*m.in_port))
        out.push_back(*m.in_port);
    for (const Action& a : actions) {
        if (const auto* o = std::get_if<action::Output>(&a); o && is_logical_port(o->port))
            out.push_back(o->port);
    }
    return out;
}

} // namespace

FlowMod complete_rule(const LayerChain& chain, const IncompleteRule& rule)
{
    FlowMod fm;
    fm.command = ModCommand::Add;
    fm.entry.priority = rule.priority;
    fm.entry.match = rule.match;
    fm.entry.actions = rule.actions;
    if (chain.empty())
        return fm;

    std::size_t origin = chain.size();
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (chain[i].name == rule.layer)
            origin = i;
    }
    if (origin == chain.size())
        throw Error(ErrorCode::DanglingLayer, "no layer named " + rule.layer);

    FieldMatch& m = fm.entry.match;
    ActionList& acts = fm.entry.actions;
    for (std::size_t j = origin + 1; j < chain.size(); ++j) {
        const ChainLayer& layer = chain[j];
        for (PortId ref : logical_refs(m, acts)) {
            if (!layer.ports.contains(ref))
                throw Error(j == origin + 1 ? ErrorCode::UnknownLogicalPort : ErrorCode::DanglingLayer,
                            layer.name + " has no port " + std::to_string(ref));
        }
        if (m.in_port && layer.ports.contains(*m.in_port)) {
            const LogicalPort& lp = layer.ports.at(*m.in_port);
            std::visit(overloaded{
                           [&](const lp::PppoeTermination& t) {
                               if (t.sessions.size() != 1)
                                   throw Error(ErrorCode::DecapMismatch, "termination port needs one session");
                               m.in_port = t.lower;
                               m.pppoe_session = t.sessions.begin()->first;
                               m.ppp_proto = ppp::kIpv4;
                               acts.insert(acts.begin(), action::PopPppoe{});
                           },
                           [&](const lp::IpOverEthernet& e) {
                               m.in_port = e.lower;
                               m.ethertype = ethertype::kIpv4;
                           },
                           [&](const auto&) {
                               throw Error(ErrorCode::UnknownLogicalPort,
                                           std::to_string(lp.port_id) + " is not a layer port");
                           },
                       },
                       lp.kind);
        }
        ActionList expanded;
        for (const Action& a : acts) {
            const auto* o = std::get_if<action::Output>(&a);
            if (!o || !layer.ports.contains(o->port)) {
                expanded.push_back(a);
                continue;
            }
            const LogicalPort& lp = layer.ports.at(o->port);
            std::visit(overloaded{
                           [&](const lp::PppoeTermination& t) {
                               const PppoeBinding* b = binding_for(t, rule.match);
                               if (!b)
                                   throw Error(ErrorCode::DecapMismatch, "no session for rule");
                               expanded.push_back(action::PushPppoe{session_for(t, b)});
                               expanded.push_back(action::SetField{Field::EthDst, mac_to_u64(b->customer_mac)});
                               expanded.push_back(action::SetField{Field::EthSrc, mac_to_u64(t.local_mac)});
                               expanded.push_back(action::Output{t.lower});
                           },
                           [&](const lp::IpOverEthernet& e) {
                               expanded.push_back(action::SetField{Field::EthDst, mac_to_u64(e.next_hop_mac)});
                               expanded.push_back(action::SetField{Field::EthSrc, mac_to_u64(e.local_mac)});
                               expanded.push_back(action::Output{e.lower});
                           },
                           [&](const auto&) {
                               throw Error(ErrorCode::UnknownLogicalPort,
                                           std::to_string(lp.port_id) + " is not a layer port");
                           },
                       },
                       lp.kind);
        }
        acts = std::move(expanded);
    }
    if (auto left = logical_refs(m, acts); !left.empty())
        throw Error(ErrorCode::DanglingLayer, "port " + std::to_string(left.front()) + " below the last layer");
    return fm;
}

Forwarded slow_path_forward(const LayerChain& chain, PortId in_port, const Packet& p)
{
    if (chain.empty())
        throw Error(ErrorCode::NoRoute, "empty chain");
    PortId port = in_port;
    Packet q = p;
    for (std::size_t j = chain.size() - 1; j >= 1; --j) {
        bool claimed = false;
        bool decapped = false;
        for (const auto& [id, lp] : chain[j].ports) {
            const auto* t = std::get_if<lp::PppoeTermination>(&lp.kind);
            const auto* e = std::get_if<lp::IpOverEthernet>(&lp.kind);
            const PortId lower = t ? t->lower : e ? e->lower : 0;
            if (lower != port)
                continue;
            claimed = true;
            try {
                q = lp_transform(lp, Direction::Ingress, q);
                port = id;
                decapped = true;
                break;
            } catch (const Error&) {
            }
        }
        if (!claimed)
            throw Error(ErrorCode::NoRoute, "nothing listens on port " + std::to_string(port));
        if (!decapped)
            throw Error(ErrorCode::DecapMismatch, chain[j].name + " port " + std::to_string(port));
    }

    std::vector<const IncompleteRule*> rules;
    for (const IncompleteRule& r : chain[0].rules)
        rules.push_back(&r);
    std::stable_sort(rules.begin(), rules.end(),
                     [](const auto* a, const auto* b) { return a->priority > b->priority; });
    std::optional<PortId> out;
    for (const IncompleteRule* r : rules) {
        if (!r->match.matches(port, q))
            continue;
        for (const Action& a : r->actions) {
            if (const auto* o = std::get_if<action::Output>(&a))
                out = o->port;
        }
        break;
    }
    if (!out)
        throw Error(ErrorCode::NoRoute, q.ipv4 ? format_ipv4(q.ipv4->dst) : describe(q));

    for (std::size_t j = 1; j < chain.size(); ++j) {
        auto it = chain[j].ports.find(*out);
        if (it == chain[j].ports.end())
            throw Error(ErrorCode::UnknownLogicalPort, std::to_string(*out));
        q = lp_transform(it->second, Direction::Egress, q);
        const auto* t = std::get_if<lp::PppoeTermination>(&it->second.kind);
        const auto* e = std::get_if<lp::IpOverEthernet>(&it->second.kind);
        out = t ? t->lower : e ? e->lower : *out;
    }
    return Forwarded{*out, q};
}

Bytes encode_ac_name(const std::string& name)
{
    Bytes b{static_cast<std::uint8_t>(kAcNameTag >> 8), static_cast<std::uint8_t>(kAcNameTag & 0xff),
            static_cast<std::uint8_t>(name.size() >> 8), static_cast<std::uint8_t>(name.size() & 0xff)};
    b.insert(b.end(), name.begin(), name.end());
    return b;
}

std::optional<std::string> decode_ac_name(const Bytes& payload)
{
    std::size_t at = 0;
    while (at + 4 <= payload.size()) {
        const std::uint16_t type = static_cast<std::uint16_t>(payload[at] << 8 | payload[at + 1]);
        const std::size_t len = static_cast<std::size_t>(payload[at + 2] << 8 | payload[at + 3]);
        if (at + 4 + len > payload.size())
            return std::nullopt;
        if (type == kAcNameTag)
            return std::string(payload.begin() + static_cast<std::ptrdiff_t>(at + 4),
                               payload.begin() + static_cast<std::ptrdiff_t>(at + 4 + len));
        at += 4 + len;
    }
    return std::nullopt;
}

BrasModule::BrasModule(BrasConfig cfg) : cfg_(std::move(cfg)), pool_(cfg_.pool)
{
    chain_.push_back(ChainLayer{"ip", {}, {}});
    chain_.push_back(ChainLayer{"ethernet", {}, {}});
    LogicalPort ipoe;
    ipoe.port_id = kFirstLogicalPort;
    ipoe.kind = lp::IpOverEthernet{cfg_.gateway_mac, cfg_.mac, kGatewayPort};
    ethernet().ports[kFirstLogicalPort] = ipoe;
}

std::vector<SessionRecord> BrasModule::open_sessions() const
{
    std::vector<SessionRecord> out;
    for (const auto& [k, s] : sessions_) {
        if (s.state != SessionState::Closed && s.state != SessionState::Idle)
            out.push_back(s);
    }
    return out;
}

void BrasModule::send(Network& net, Message m)
{
    net.send(channel_, Endpoint::of_actor(self_), std::move(m));
}

std::uint16_t BrasModule::next_session_id() const
{
    std::set<std::uint16_t> taken;
    for (const auto& [k, s] : sessions_) {
        if (s.state != SessionState::Closed && s.session_id)
            taken.insert(s.session_id);
    }
    for (std::uint32_t id = 1; id < 0xffff; ++id) {
        if (!taken.contains(static_cast<std::uint16_t>(id)))
            return static_cast<std::uint16_t>(id);
    }
    throw Error(ErrorCode::PoolExhausted, "session ids");
}

void BrasModule::on_message(Network& net, ChannelId, const Message& m)
{
    std::visit(overloaded{
                   [&](const msg::PacketIn& in) { on_frame(net, in.in_port, in.packet); },
                   [&](const msg::PortStatus& ps) {
                       if (ps.port == kGatewayPort) {
                           const bool was_up = gateway_up_;
                           gateway_up_ = ps.up;
                           net.trace("gateway", cfg_.id, ps.up ? "up" : "down");
                           if (ps.up && !was_up) {
                               for (auto& [k, s] : sessions_) {
                                   if (s.state == SessionState::IpOpen && s.pppoe_port)
                                       push_routes(net, s);
                               }
                           }
                           if (!ps.up) {
                               for (auto& [k, s] : sessions_)
                                   close(net, s, "gateway down");
                           }
                           return;
                       }
                       if (!ps.up) {
                           for (auto& [k, s] : sessions_) {
                               if (s.access == ps.port)
                                   close(net, s, "access port down");
                           }
                       }
                   },
                   [&](const msg::ErrorReport& e) {
                       net.trace("bras_error", cfg_.id, std::string(to_string(e.code)) + " " + e.context);
                   },
                   [&](const auto&) { },
               },
               m);
}

void BrasModule::on_frame(Network& net, PortId vport, const Packet& p)
{
    if (!p.pppoe || !p.mpls.empty())
        return;
    const std::uint64_t key = session_key(vport, p.eth.src);
    if (p.eth.ethertype == ethertype::kPppoeDiscovery) {
        std::optional<PppoeEvent> ev;
        switch (p.pppoe->code) {
        case pppoe_code::kPadi: ev = PppoeEvent::Padi; break;
        case pppoe_code::kPadr: ev = PppoeEvent::Padr; break;
        case pppoe_code::kPadt: ev = PppoeEvent::Padt; break;
        default: break;
        }
        if (!ev)
            return;
        if (!sessions_.contains(key)) {
            if (*ev != PppoeEvent::Padi)
                return;
            sessions_[key] = fresh_session(p.eth.src, vport);
        }
        handle_event(net, key, *ev, 0);
        return;
    }
    auto it = sessions_.find(key);
    if (it == sessions_.end() || it->second.session_id != p.pppoe->session_id)
        return;
    if (p.ppp_proto == ppp::kIpv4) {
        if (it->second.state != SessionState::IpOpen)
            return;
        try {
            Forwarded f = slow_path_forward(chain_, vport, p);
            ++slow_path_;
            send(net, msg::PacketOut{f.packet, 0, {action::Output{f.port}}});
        } catch (const Error& e) {
            net.trace("slow_path", cfg_.id, e.what());
        }
        return;
    }
    if (p.payload.size() < 2 || p.payload[0] != kConfReq)
        return;
    if (p.ppp_proto == ppp::kLcp)
        handle_event(net, key, PppoeEvent::LcpConfReq, p.payload[1]);
    else if (p.ppp_proto == ppp::kIpcp)
        handle_event(net, key, PppoeEvent::IpcpConfReq, p.payload[1]);
}

void BrasModule::handle_event(Network& net, std::uint64_t key, PppoeEvent ev, std::uint8_t ppp_id)
{
    SessionRecord& s = sessions_.at(key);
    const SessionState before = s.state;
    FsmResult r;
    try {
        r = pppoe_fsm_step(s, ev, pool_, [this] { return next_session_id(); });
    } catch (const Error& e) {
        net.trace("bras_error", cfg_.id, e.what());
        return;
    }
    if (r.ignored) {
        net.trace("fsm_ignored", cfg_.id,
                  format_mac(s.customer_mac) + " " + std::string(to_string(ev)) + " in " +
                      std::string(to_string(s.state)));
        return;
    }
    const bool was_routed = s.pppoe_port != 0;
    if (r.session.state == SessionState::Closed && was_routed)
        unroute_session(net, s);
    s = r.session;
    if (s.state != before)
        net.trace("fsm", cfg_.id,
                  format_mac(s.customer_mac) + " " + std::string(to_string(before)) + "->" +
                      std::string(to_string(s.state)));
    for (const Emission& e : r.emissions)
        emit(net, s, e, ppp_id);
    if (before == SessionState::Idle && s.state == SessionState::PadoSent) {
        const std::uint64_t token = next_token_++;
        timeouts_[token] = key;
        net.schedule_timer(self_, net.now() + cfg_.session_timeout_us, token);
    }
    if (s.state == SessionState::IpOpen && before != SessionState::IpOpen) {
        route_session(net, s);
        net.mark("session_open", format_mac(s.customer_mac) + "@" + cfg_.id, s.session_id);
    }
}

void BrasModule::on_timer(Network& net, std::uint64_t token)
{
    auto it = timeouts_.find(token);
    if (it == timeouts_.end())
        return;
    const std::uint64_t key = it->second;
    timeouts_.erase(it);
    if (sessions_.contains(key) && sessions_.at(key).state != SessionState::IpOpen &&
        sessions_.at(key).state != SessionState::Closed)
        handle_event(net, key, PppoeEvent::Timeout, 0);
}

void BrasModule::emit(Network& net, const SessionRecord& s, const Emission& e, std::uint8_t ppp_id)
{
    Packet out;
    switch (e.kind) {
    case EmissionKind::Pado:
        out = make_pppoe_discovery(pppoe_code::kPado, 0, s.customer_mac, cfg_.mac);
        out.payload = encode_ac_name(cfg_.id);
        out.pppoe->length = pppoe_content_length(out);
        break;
    case EmissionKind::Pads:
        out = make_pppoe_discovery(pppoe_code::kPads, e.session_id, s.customer_mac, cfg_.mac);
        break;
    case EmissionKind::LcpConfAck:
        out = encap_pppoe(ppp::kLcp, PppPayload{std::nullopt, {kConfAck, ppp_id}}, e.session_id,
                          s.customer_mac, cfg_.mac);
        break;
    case EmissionKind::IpcpConfAck: {
        Bytes body{kConfAck, ppp_id};
        put_u32(body, *e.ip);
        out = encap_pppoe(ppp::kIpcp, PppPayload{std::nullopt, body}, e.session_id, s.customer_mac, cfg_.mac);
        break;
    }
    }
    send(net, msg::PacketOut{out, 0, {action::Output{s.access}}});
}

void BrasModule::route_session(Network& net, SessionRecord& s)
{
    const PortId lp_id = next_lp_++;
    LogicalPort term;
    term.port_id = lp_id;
    term.kind = lp::PppoeTermination{{{s.session_id, PppoeBinding{s.customer_mac, *s.ip}}}, cfg_.mac, s.access};
    ethernet().ports[lp_id] = term;
    s.pppoe_port = lp_id;
    auto [down, up] = install_customer_route(s, kFirstLogicalPort);
    down.priority = cfg_.rule_priority;
    up.priority = cfg_.rule_priority + 1;
    ip().rules.push_back(down);
    ip().rules.push_back(up);
    if (gateway_up_)
        push_routes(net, s);
    else
        net.trace("bras", cfg_.id, "routes for " + format_mac(s.customer_mac) + " wait for the gateway");
}

void BrasModule::push_routes(Network& net, const SessionRecord& s)
{
    for (const IncompleteRule& r : ip().rules) {
        if (references(r.match, r.actions, s.pppoe_port))
            send(net, complete_rule(chain_, r));
    }
}

void BrasModule::unroute_session(Network& net, SessionRecord& s)
{
    const PortId lp_id = s.pppoe_port;
    std::erase_if(ip().rules, [&](const IncompleteRule& r) {
        return references(r.match, r.actions, lp_id);
    });
    ethernet().ports.erase(lp_id);
    s.pppoe_port = 0;
    if (!s.ip)
        return;
    FlowMod del_down;
    del_down.command = ModCommand::Delete;
    del_down.entry.match.ipv4_dst = Ipv4Prefix{*s.ip, 32};
    FlowMod del_up;
    del_up.command = ModCommand::Delete;
    del_up.entry.match.pppoe_session = s.session_id;
    del_up.entry.match.ppp_proto = ppp::kIpv4;
    send(net, del_down);
    send(net, del_up);
}

void BrasModule::close(Network& net, SessionRecord& s, const std::string& why)
{
    if (s.state == SessionState::Closed || s.state == SessionState::Idle)
        return;
    if (s.pppoe_port)
        unroute_session(net, s);
    if (s.ip)
        pool_.release(*s.ip);
    s.ip.reset();
    s.state = SessionState::Closed;
    net.trace("fsm", cfg_.id, format_mac(s.customer_mac) + " closed: " + why);
}

SteeringModule::SteeringModule(TransportController& tc, std::string gateway_peer)
    : tc_(tc), gateway_peer_(std::move(gateway_peer))
{
    tc_.add_packet_in_hook(
        [this](Network& net, NodeId node, const msg::PacketIn& in) { return handle_padi(net, node, in); });
}

void SteeringModule::add_bras(Network&, BrasDescriptor d, ChannelId channel)
{
    d.enabled = false;
    VirtualSwitch vs;
    vs.datapath_id = 0xb000 + bras_.size() + 1;
    vs.client = d.id;
    vs.policy.client = d.id;
    const std::string id = d.id;
    tc_.add_client(channel, vs);
    bras_[id] = SteeringBras{std::move(d), channel, 0};
}

SteeringBras& SteeringModule::bras(const std::string& id)
{
    auto it = bras_.find(id);
    if (it == bras_.end())
        throw Error(ErrorCode::UnknownBras, id);
    return it->second;
}

std::vector<BrasDescriptor> SteeringModule::registry() const
{
    std::vector<BrasDescriptor> out;
    for (const auto& [id, b] : bras_)
        out.push_back(b.descriptor);
    return out;
}

void SteeringModule::enable_bras(Network& net, const std::string& id)
{
    SteeringBras& b = bras(id);
    if (b.descriptor.enabled)
        return;
    b.descriptor.enabled = true;
    net.trace("nms", "steering", "enable " + id);
    tc_.when_ready(net, [this, id](Network& n) {
        SteeringBras& sb = bras(id);
        E2eRequest req;
        req.role = E2eRole::Head;
        req.endpoint = sb.descriptor.host;
        req.border = gateway_peer_;
        sb.gateway_lsp = tc_.setup_e2e_lsp(n, req, [this, id](Network& n2, const E2eLsp& lsp) {
            SteeringBras& ready = bras(id);
            if (!ready.descriptor.enabled || ready.gateway_lsp != lsp.id)
                return;
            tc_.add_client_port(n2, ready.channel, PortRef{lsp.ingress, lsp.endpoint_port},
                                BrasModule::kGatewayPort);
            n2.mark("gateway_ready", id, static_cast<std::int64_t>(lsp.id));
        });
    });
}

void SteeringModule::disable_bras(Network& net, const std::string& id)
{
    SteeringBras& b = bras(id);
    if (!b.descriptor.enabled)
        return;
    b.descriptor.enabled = false;
    net.trace("nms", "steering", "disable " + id);
    if (b.gateway_lsp)
        tc_.teardown_e2e_lsp(net, b.gateway_lsp);
    b.gateway_lsp = 0;
    tc_.drop_client_flows(net, b.channel);
    tc_.remove_client_port(net, b.channel, BrasModule::kGatewayPort);
}

void SteeringModule::install_traps(Network& net, const std::vector<NodeId>& nodes)
{
    for (NodeId n : nodes) {
        FlowMod fm;
        fm.entry.priority = 1000;
        fm.entry.match.eth_dst = kBroadcastMac;
        fm.entry.match.ethertype = ethertype::kPppoeDiscovery;
        fm.entry.actions = {action::ToController{}};
        tc_.send_to(net, n, fm);
    }
}

bool SteeringModule::handle_padi(Network& net, NodeId node, const msg::PacketIn& in)
{
    const Packet& p = in.packet;
    if (p.eth.ethertype != ethertype::kPppoeDiscovery || !p.pppoe || p.pppoe->code != pppoe_code::kPadi ||
        !p.mpls.empty())
        return false;
    const PortRef access{node, in.in_port};
    const std::string where = net.switch_name(node) + ":" + std::to_string(in.in_port);
    try {
        if (allow_ && !allow_->contains(p.eth.src))
            throw Error(ErrorCode::AuthDenied, format_mac(p.eth.src));
        const std::string chosen = policy_(registry());
        SteeringBras& b = bras(chosen);

        std::optional<std::uint32_t> pw_id;
        if (auto it = pw_by_access_.find(access); it != pw_by_access_.end()) {
            const std::uint32_t old = it->second;
            if (pw_bras_.at(old) == chosen) {
                pw_id = old;
            } else {
                SteeringBras& prev = bras(pw_bras_.at(old));
                tc_.remove_client_port(net, prev.channel, pw_vport_.at(old));
                tc_.remove_pw(net, old);
                pw_bras_.erase(old);
                pw_vport_.erase(old);
                pw_by_access_.erase(it);
                net.trace("steering", "steering", "pw " + std::to_string(old) + " released for " + where);
            }
        }
        if (!pw_id) {
            const PwRecord& pw = tc_.create_pw(net, PwAttachment{node, in.in_port, std::nullopt},
                                               PwAttachment{b.descriptor.host, std::nullopt, std::nullopt});
            ++pw_creations_;
            pw_id = pw.id;
            pw_by_access_[access] = pw.id;
            pw_bras_[pw.id] = chosen;
            pw_vport_[pw.id] = tc_.add_client_port(net, b.channel, PortRef{pw.ac[1].node, pw.endpoints[1]});
            net.trace("steering", "steering",
                      where + " -> " + chosen + " pw " + std::to_string(pw.id) +
                          (pw.protected_lsp ? " protected" : " plain"));
        }
        msg::PacketIn fwd = in;
        fwd.in_port = pw_vport_.at(*pw_id);
        const ChannelId ch = b.channel;
        const ActorId me = tc_.self();
        tc_.after(net, std::max(net.now(), tc_.quiescent_at()),
                  [ch, me, fwd](Network& n) { n.send(ch, Endpoint::of_actor(me), fwd); });
    } catch (const Error& e) {
        net.trace("steering_error", "steering", where + " " + e.what());
    }
    return true;
}

CustomerStub::CustomerStub(std::string name, MacAddr mac, Ipv4Addr echo_target)
    : name_(std::move(name)), mac_(mac), echo_target_(echo_target)
{
}

void CustomerStub::send_frame(Network& net, Packet p)
{
    net.actor_transmit(self_, port_, std::move(p));
}

void CustomerStub::send_padi(Network& net)
{
    session_ = 0;
    ip_.reset();
    bras_.clear();
    bras_mac_ = MacAddr{};
    net.trace("customer", name_, "PADI");
    send_frame(net, make_pppoe_discovery(pppoe_code::kPadi, 0, kBroadcastMac, mac_));
}

void CustomerStub::on_packet(Network& net, PortId, const Packet& p)
{
    if (!p.pppoe || p.eth.dst != mac_ || !p.mpls.empty())
        return;
    if (p.eth.ethertype == ethertype::kPppoeDiscovery) {
        switch (p.pppoe->code) {
        case pppoe_code::kPado:
            if (session_ != 0 || bras_mac_ != MacAddr{})
                return;
            bras_mac_ = p.eth.src;
            bras_ = decode_ac_name(p.payload).value_or(format_mac(p.eth.src));
            send_frame(net, make_pppoe_discovery(pppoe_code::kPadr, 0, bras_mac_, mac_));
            break;
        case pppoe_code::kPads:
            if (p.eth.src != bras_mac_)
                return;
            session_ = p.pppoe->session_id;
            send_frame(net, encap_pppoe(ppp::kLcp, PppPayload{std::nullopt, {kConfReq, ++ppp_id_}}, session_,
                                        bras_mac_, mac_));
            break;
        case pppoe_code::kPadt:
            session_ = 0;
            ip_.reset();
            break;
        default:
            break;
        }
        return;
    }
    if (p.pppoe->session_id != session_ || session_ == 0)
        return;
    if (p.ppp_proto == ppp::kLcp && p.payload.size() >= 2 && p.payload[0] == kConfAck) {
        Bytes body{kConfReq, ++ppp_id_, 0, 0, 0, 0};
        send_frame(net, encap_pppoe(ppp::kIpcp, PppPayload{std::nullopt, body}, session_, bras_mac_, mac_));
    } else if (p.ppp_proto == ppp::kIpcp && p.payload.size() >= 6 && p.payload[0] == kConfAck) {
        ip_ = get_u32(p.payload, 2);
        net.trace("customer", name_, "ip " + format_ipv4(*ip_) + " via " + bras_);
        net.mark("service_established", name_ + "@" + bras_, *ip_);
    } else if (p.ppp_proto == ppp::kIpv4 && p.ipv4 && probe_ && p.payload.size() >= 8) {
        if (get_u32(p.payload, 0) == *probe_ && p.ipv4->dst == ip_)
            net.probe(*probe_).rx.emplace_back(get_u32(p.payload, 4), net.now());
    }
}

void CustomerStub::start_echo(Network& net, std::size_t probe, SimTime period_us)
{
    probe_ = probe;
    period_us_ = period_us;
    ++epoch_;
    net.schedule_timer(self_, net.now(), epoch_);
}

void CustomerStub::stop_echo()
{
    ++epoch_;
}

void CustomerStub::on_timer(Network& net, std::uint64_t token)
{
    if (token != epoch_ || !probe_)
        return;
    if (ip_ && session_) {
        ProbeFlow& pf = net.probe(*probe_);
        Bytes payload;
        put_u32(payload, static_cast<std::uint32_t>(*probe_));
        put_u32(payload, pf.next_seq++);
        send_frame(net, encap_pppoe(ppp::kIpv4, PppPayload{Ipv4Header{*ip_, echo_target_, 64, 17}, payload},
                                    session_, bras_mac_, mac_));
    }
    net.schedule_timer(self_, net.now() + period_us_, epoch_);
}

} // namespace splitarch

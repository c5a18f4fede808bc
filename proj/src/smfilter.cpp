#include "greenguard/smfilter.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "greenguard/ioutil.hpp"

namespace greenguard {

namespace {

std::optional<std::uint16_t> parse_port(const std::string& s) {
    unsigned value = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    if (value < 1 || value > 65535) return std::nullopt;
    return static_cast<std::uint16_t>(value);
}

bool rule_matches(const FilterRule& rule, const PacketMeta& pkt) {
    const bool transport_ok = (rule.transport == Transport::Tcp && pkt.is_tcp()) ||
                              (rule.transport == Transport::Udp && pkt.is_udp());
    if (!transport_ok) return false;
    return std::find(rule.ports.begin(), rule.ports.end(), pkt.src_port) != rule.ports.end() ||
           std::find(rule.ports.begin(), rule.ports.end(), pkt.dst_port) != rule.ports.end();
}

}  // namespace

bool Cidr::contains(std::uint32_t ip) const {
    if (prefix_len == 0) return true;
    const std::uint32_t mask = prefix_len >= 32 ? 0xffffffffu : ~(0xffffffffu >> prefix_len);
    return (ip & mask) == (address & mask);
}

Cidr parse_cidr(const std::string& text) {
    const std::size_t slash = text.find('/');
    const std::string addr = text.substr(0, slash);
    Cidr cidr;
    cidr.prefix_len = 32;
    if (slash != std::string::npos) {
        const std::string len = text.substr(slash + 1);
        unsigned value = 100;
        const auto res = std::from_chars(len.data(), len.data() + len.size(), value);
        if (res.ec != std::errc() || res.ptr != len.data() + len.size() || value > 32) {
            throw std::invalid_argument("bad prefix length: " + text);
        }
        cidr.prefix_len = static_cast<std::uint8_t>(value);
    }
    std::uint32_t ip = 0;
    std::size_t start = 0;
    for (int octet = 0; octet < 4; ++octet) {
        const std::size_t dot = addr.find('.', start);
        const bool last = octet == 3;
        if (last != (dot == std::string::npos)) throw std::invalid_argument("bad address: " + text);
        const std::string part = addr.substr(start, last ? std::string::npos : dot - start);
        unsigned value = 300;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), value);
        if (res.ec != std::errc() || res.ptr != part.data() + part.size() || value > 255) {
            throw std::invalid_argument("bad address: " + text);
        }
        ip = (ip << 8) | value;
        start = dot + 1;
    }
    cidr.address = ip;
    return cidr;
}

const std::string& to_string(Direction d) {
    static const std::string names[] = {"inbound", "outbound", "internal", "external"};
    return names[static_cast<std::size_t>(d)];
}

FilterStats& FilterStats::operator+=(const FilterStats& other) {
    for (const auto& [name, count] : other.kept_by_protocol) kept_by_protocol[name] += count;
    kept += other.kept;
    dropped += other.dropped;
    return *this;
}

std::vector<FilterRule> default_rules() {
    return {
        {"AMQP", Transport::Tcp, {5671, 5672}},
        {"CoAP", Transport::Udp, {5683}},
        {"LWM2M", Transport::Udp, {5783, 5784}},
        {"MQTT", Transport::Tcp, {1883, 8883}},
        {"XMPP", Transport::Tcp, {5269, 5280}},
    };
}

std::vector<FilterRule> parse_rules(const std::string& text) {
    std::vector<FilterRule> rules;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        std::string name, transport, ports;
        if (!(fields >> name)) continue;  // blank or comment-only line
        if (!(fields >> transport >> ports)) {
            throw BadRuleLine(lineno, "expected `NAME TCP|UDP port[,port...]`");
        }
        std::string extra;
        if (fields >> extra) throw BadRuleLine(lineno, "trailing text: " + extra);

        FilterRule rule;
        rule.protocol_name = name;
        const std::string tl = to_lower(transport);
        if (tl == "tcp") {
            rule.transport = Transport::Tcp;
        } else if (tl == "udp") {
            rule.transport = Transport::Udp;
        } else {
            throw BadRuleLine(lineno, "unknown transport: " + transport);
        }
        std::size_t start = 0;
        while (start <= ports.size()) {
            const std::size_t comma = ports.find(',', start);
            const std::string part =
                ports.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            const auto port = parse_port(part);
            if (!port) throw BadRuleLine(lineno, "bad port: " + part);
            rule.ports.push_back(*port);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<FilterRule> load_rules(const std::string& path) {
    return parse_rules(read_file(path));
}

std::string format_rules(const std::vector<FilterRule>& rules) {
    std::ostringstream out;
    for (const auto& rule : rules) {
        out << rule.protocol_name << ' '
            << (rule.transport == Transport::Tcp ? "TCP" : "UDP") << ' ';
        for (std::size_t i = 0; i < rule.ports.size(); ++i) {
            if (i) out << ',';
            out << rule.ports[i];
        }
        out << '\n';
    }
    return out.str();
}

FilterDecision classify_packet(const PacketMeta& pkt, const MonitorConfig& cfg) {
    FilterDecision decision;
    const auto monitored = [&cfg](std::uint32_t ip) {
        for (const auto& cidr : cfg.monitored_cidrs) {
            if (cidr.contains(ip)) return true;
        }
        return false;
    };
    const bool src_in = monitored(pkt.src_ip);
    const bool dst_in = monitored(pkt.dst_ip);
    if (src_in && dst_in) {
        decision.direction = Direction::Internal;
    } else if (src_in) {
        decision.direction = Direction::Outbound;
    } else if (dst_in) {
        decision.direction = Direction::Inbound;
    } else {
        decision.direction = Direction::External;
    }
    for (const auto& rule : cfg.rules) {
        if (rule_matches(rule, pkt)) {
            decision.keep = true;
            decision.protocol_name = rule.protocol_name;
            return decision;
        }
    }
    return decision;
}

std::pair<std::vector<PacketMeta>, FilterStats> filter_stream(
    const std::vector<PacketMeta>& packets, const MonitorConfig& cfg) {
    std::vector<PacketMeta> kept;
    FilterStats stats;
    for (const auto& pkt : packets) {
        const FilterDecision d = classify_packet(pkt, cfg);
        if (d.keep) {
            kept.push_back(pkt);
            ++stats.kept;
            ++stats.kept_by_protocol[d.protocol_name];
        } else if (cfg.promiscuous) {
            ++stats.dropped;
        }
    }
    return {std::move(kept), stats};
}

}  // namespace greenguard

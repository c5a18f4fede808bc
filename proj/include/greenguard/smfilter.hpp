#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "greenguard/flowmeter.hpp"

namespace greenguard {

enum class Transport : std::uint8_t { Tcp, Udp };

// One application protocol the signal monitor keeps: name, transport, and
// the well-known ports it listens on.
struct FilterRule {
    std::string protocol_name;
    Transport transport = Transport::Tcp;
    std::vector<std::uint16_t> ports;
};

// IPv4 prefix in host byte order; prefix_len 0 matches everything.
struct Cidr {
    std::uint32_t address = 0;
    std::uint8_t prefix_len = 0;

    bool contains(std::uint32_t ip) const;
};

// Parses "a.b.c.d" or "a.b.c.d/len".
Cidr parse_cidr(const std::string& text);

enum class Direction : std::uint8_t { Inbound, Outbound, Internal, External };
const std::string& to_string(Direction d);

struct MonitorConfig {
    std::vector<Cidr> monitored_cidrs;
    std::vector<FilterRule> rules;
    // When true, dropped packets are still counted in the statistics; when
    // false they pass unobserved.
    bool promiscuous = true;
};

struct FilterDecision {
    bool keep = false;
    std::string protocol_name;  // rule that matched, empty on drop
    Direction direction = Direction::External;
};

struct FilterStats {
    std::map<std::string, std::uint64_t> kept_by_protocol;
    std::uint64_t kept = 0;
    std::uint64_t dropped = 0;

    FilterStats& operator+=(const FilterStats& other);
};

struct BadRuleLine : std::runtime_error {
    BadRuleLine(std::size_t line, const std::string& what)
        : std::runtime_error("rule file line " + std::to_string(line) + ": " + what),
          line(line) {}
    std::size_t line;
};

// The stock IoT application-protocol rule set the monitor ships with.
std::vector<FilterRule> default_rules();

// Parses a rule table, one rule per line: `NAME TCP|UDP port[,port...]`.
// '#' starts a comment; blank lines are ignored.
std::vector<FilterRule> parse_rules(const std::string& text);
std::vector<FilterRule> load_rules(const std::string& path);

// Renders rules in the same format parse_rules accepts.
std::string format_rules(const std::vector<FilterRule>& rules);

// Keep iff the packet's transport matches a rule and either port is in the
// rule's port set. Direction is judged against the monitored prefixes.
FilterDecision classify_packet(const PacketMeta& pkt, const MonitorConfig& cfg);

// Order-preserving filter over a finished capture.
std::pair<std::vector<PacketMeta>, FilterStats> filter_stream(
    const std::vector<PacketMeta>& packets, const MonitorConfig& cfg);

}  // namespace greenguard

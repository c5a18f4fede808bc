#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace greenguard {

// One flow observation: fixed-order numeric feature values.
using FeatureVector = std::vector<double>;

inline constexpr std::size_t kFeatureCount = 28;

// Canonical feature order. Every CSV column layout, wire payload and model
// input follows this order.
inline const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "flow_duration", "header_length", "protocol_type", "duration",
        "rate",          "srate",         "drate",         "flag_number",
        "ack_count",     "syn_count",     "fin_count",     "urg_count",
        "rst_count",     "http",          "https",         "dns",
        "telnet",        "smtp",          "ssh",           "irc",
        "tcp",           "udp",           "dhcp",          "arp",
        "icmp",          "ipv",           "llc",           "tot_sum",
    };
    return names;
}

inline std::vector<std::string> feature_schema() {
    const auto& n = feature_names();
    return std::vector<std::string>(n.begin(), n.end());
}

// Indices into a FeatureVector, matching feature_names() order.
namespace feat {
inline constexpr std::size_t flow_duration = 0;
inline constexpr std::size_t header_length = 1;
inline constexpr std::size_t protocol_type = 2;
inline constexpr std::size_t duration = 3;
inline constexpr std::size_t rate = 4;
inline constexpr std::size_t srate = 5;
inline constexpr std::size_t drate = 6;
inline constexpr std::size_t flag_number = 7;
inline constexpr std::size_t ack_count = 8;
inline constexpr std::size_t syn_count = 9;
inline constexpr std::size_t fin_count = 10;
inline constexpr std::size_t urg_count = 11;
inline constexpr std::size_t rst_count = 12;
inline constexpr std::size_t http = 13;
inline constexpr std::size_t https = 14;
inline constexpr std::size_t dns = 15;
inline constexpr std::size_t telnet = 16;
inline constexpr std::size_t smtp = 17;
inline constexpr std::size_t ssh = 18;
inline constexpr std::size_t irc = 19;
inline constexpr std::size_t tcp = 20;
inline constexpr std::size_t udp = 21;
inline constexpr std::size_t dhcp = 22;
inline constexpr std::size_t arp = 23;
inline constexpr std::size_t icmp = 24;
inline constexpr std::size_t ipv = 25;
inline constexpr std::size_t llc = 26;
inline constexpr std::size_t tot_sum = 27;
}  // namespace feat

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace greenguard

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "greenguard/features.hpp"

namespace greenguard {

// TCP flag bits as they appear in the TCP header flags byte.
namespace tcpflag {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
inline constexpr std::uint8_t kUrg = 0x20;
// Mask covering the six flags the flow meter accounts for.
inline constexpr std::uint8_t kMask = 0x3f;
}  // namespace tcpflag

// Well-known ethertypes used for the non-IP indicators.
inline constexpr std::uint16_t kEtherIpv4 = 0x0800;
inline constexpr std::uint16_t kEtherArp = 0x0806;
inline constexpr std::uint16_t kEtherVlan = 0x8100;

// One decoded link-layer frame, reduced to what flow assembly needs.
// Addresses and ports are host byte order. Non-IP frames carry ip_proto 0
// and zero ports; ARP frames use the sender/target protocol addresses when
// the payload is long enough to hold them.
struct PacketMeta {
    double timestamp = 0.0;  // seconds since epoch
    std::uint32_t src_ip = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t ip_proto = 0;   // 6 TCP, 17 UDP, 1 ICMP, 0 non-IP
    std::uint8_t tcp_flags = 0;  // tcpflag:: bits, 0 for non-TCP
    std::uint8_t ttl = 0;        // 0 for non-IP
    std::uint16_t ethertype = 0;  // raw ethertype; < 0x0600 means 802.3 LLC
    std::uint32_t header_len = 0;   // link + network + transport header bytes
    std::uint32_t payload_len = 0;  // application payload bytes
    bool malformed = false;  // header truncated or inconsistent; skip on assembly

    bool is_ipv4() const { return ethertype == kEtherIpv4 && !malformed; }
    bool is_arp() const { return ethertype == kEtherArp; }
    bool is_llc() const { return ethertype < 0x0600; }
    bool is_tcp() const { return is_ipv4() && ip_proto == 6; }
    bool is_udp() const { return is_ipv4() && ip_proto == 17; }
    bool is_icmp() const { return is_ipv4() && ip_proto == 1; }
};

// Canonical bidirectional flow key: the lexicographically smaller
// (ip, port) endpoint is stored first, so key(a->b) == key(b->a).
struct FlowKey {
    std::uint32_t ip_a = 0;
    std::uint16_t port_a = 0;
    std::uint32_t ip_b = 0;
    std::uint16_t port_b = 0;
    std::uint8_t proto = 0;

    static FlowKey from_packet(const PacketMeta& pkt);
    bool operator==(const FlowKey&) const = default;
    bool operator<(const FlowKey& o) const;
};

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const;
};

// Accumulated state of one bidirectional flow.
struct FlowRecord {
    FlowKey key;
    std::uint32_t initiator_ip = 0;  // endpoint that sent the first packet
    std::uint16_t initiator_port = 0;
    double first_ts = 0.0;
    double last_ts = 0.0;
    std::uint64_t fwd_packets = 0;  // initiator -> responder
    std::uint64_t bwd_packets = 0;
    std::uint64_t fwd_bytes = 0;  // header + payload
    std::uint64_t bwd_bytes = 0;
    std::uint64_t header_bytes = 0;
    std::uint64_t payload_bytes = 0;
    std::uint64_t flag_bits = 0;  // set TCP flag bits summed over packets
    std::uint64_t ack_packets = 0;
    std::uint64_t syn_packets = 0;
    std::uint64_t fin_packets = 0;
    std::uint64_t urg_packets = 0;
    std::uint64_t rst_packets = 0;
    std::uint64_t ttl_sum = 0;
    std::uint64_t ip_packets = 0;  // packets contributing a TTL
    bool saw_tcp = false;
    bool saw_udp = false;
    bool saw_icmp = false;
    bool saw_arp = false;
    bool saw_ipv4 = false;
    bool saw_llc = false;

    std::uint64_t packets() const { return fwd_packets + bwd_packets; }
};

struct AssemblyStats {
    std::uint64_t packets_seen = 0;
    std::uint64_t packets_skipped = 0;  // malformed, not assembled
    std::uint64_t flows_emitted = 0;
};

struct BadMagic : std::runtime_error {
    BadMagic() : std::runtime_error("not a classic pcap file (bad magic)") {}
};
struct UnsupportedLinkType : std::runtime_error {
    explicit UnsupportedLinkType(std::uint32_t lt)
        : std::runtime_error("unsupported pcap link type " + std::to_string(lt)) {}
};
struct TruncatedPacket : std::runtime_error {
    explicit TruncatedPacket(std::size_t index)
        : std::runtime_error("pcap record " + std::to_string(index) +
                             " is truncated or corrupt"),
          index(index) {}
    std::size_t index;  // 1-based record ordinal
};
struct EmptyFlow : std::invalid_argument {
    EmptyFlow() : std::invalid_argument("flow record holds no packets") {}
};

// Streaming classic-pcap decoder (both endiannesses, Ethernet link type).
// The stream must outlive the reader.
class PcapReader {
public:
    explicit PcapReader(std::istream& in);

    // Next packet in capture order, or nullopt at clean end of file.
    std::optional<PacketMeta> next();

    std::size_t packets_read() const { return count_; }

private:
    std::istream& in_;
    bool swap_ = false;
    std::size_t count_ = 0;

    std::uint32_t read_u32();
    std::uint16_t read_u16();
};

// Reads a whole capture file ("-" means stdin).
std::vector<PacketMeta> read_pcap(const std::string& path);

// Groups packets into bidirectional flows. A per-flow gap larger than the
// idle timeout closes the record and a later packet with the same key
// starts a fresh one.
class FlowAssembler {
public:
    explicit FlowAssembler(double idle_timeout = 60.0);

    // Feeds one packet; returns any flow closed by it (same key, expired).
    std::vector<FlowRecord> add(const PacketMeta& pkt);

    // Closes and returns every flow idle past the timeout at time `now`.
    std::vector<FlowRecord> poll(double now);

    // Closes and returns all remaining flows, ordered by first timestamp.
    std::vector<FlowRecord> flush();

    const AssemblyStats& stats() const { return stats_; }
    std::size_t open_flows() const { return table_.size(); }

private:
    double idle_timeout_;
    AssemblyStats stats_;
    std::unordered_map<FlowKey, FlowRecord, FlowKeyHash> table_;

    void merge(FlowRecord& rec, const PacketMeta& pkt) const;
};

// One-shot assembly of a finished capture. Output is ordered by
// (first_ts, key) so runs are reproducible.
std::vector<FlowRecord> assemble_flows(const std::vector<PacketMeta>& packets,
                                       double idle_timeout = 60.0,
                                       AssemblyStats* stats = nullptr);

// Computes the 28-entry feature vector for a closed flow. Rates divide by
// max(flow duration, 1 microsecond) so single-packet flows stay finite.
FeatureVector extract_features(const FlowRecord& flow);

}  // namespace greenguard

#include "greenguard/flowmeter.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>
#include <tuple>

namespace greenguard {

namespace {

constexpr std::uint32_t kMagicNative = 0xa1b2c3d4u;
constexpr std::uint32_t kMagicSwapped = 0xd4c3b2a1u;
constexpr std::uint32_t kLinkEthernet = 1;
// Upper bound on a sane snapshot length; larger record lengths indicate a
// corrupt capture rather than a real jumbo frame.
constexpr std::uint32_t kMaxRecordLen = 1u << 18;

std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0x000000ffu) << 24) | ((v & 0x0000ff00u) << 8) |
           ((v & 0x00ff0000u) >> 8) | ((v & 0xff000000u) >> 24);
}

std::uint16_t be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

// Decodes one Ethernet frame into PacketMeta. Never throws: header problems
// set the malformed flag so assembly can count and skip the packet.
PacketMeta decode_frame(double ts, const std::uint8_t* data, std::size_t len) {
    PacketMeta pkt;
    pkt.timestamp = ts;
    if (len < 14) {
        pkt.malformed = true;
        return pkt;
    }
    std::size_t off = 14;
    std::uint16_t ethertype = be16(data + 12);
    while (ethertype == kEtherVlan) {
        if (len < off + 4) {
            pkt.malformed = true;
            return pkt;
        }
        ethertype = be16(data + off + 2);
        off += 4;
    }
    pkt.ethertype = ethertype;
    pkt.header_len = static_cast<std::uint32_t>(off);

    if (ethertype == kEtherArp) {
        // Sender/target protocol addresses give ARP frames a usable flow key.
        if (len >= off + 28) {
            pkt.src_ip = be32(data + off + 14);
            pkt.dst_ip = be32(data + off + 24);
        }
        pkt.payload_len = static_cast<std::uint32_t>(len - off);
        return pkt;
    }
    if (ethertype != kEtherIpv4) {
        // LLC (802.3 length field) or another network protocol; no IP fields.
        pkt.payload_len = static_cast<std::uint32_t>(len - off);
        return pkt;
    }

    if (len < off + 20) {
        pkt.malformed = true;
        return pkt;
    }
    const std::uint8_t* ip = data + off;
    const std::uint8_t version = ip[0] >> 4;
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
    if (version != 4 || ihl < 20 || len < off + ihl) {
        pkt.malformed = true;
        return pkt;
    }
    const std::size_t captured_ip = len - off;
    // Ethernet padding can make the frame longer than the datagram; snaplen
    // truncation can make it shorter. Trust the smaller of the two.
    const std::size_t total_len = std::min<std::size_t>(be16(ip + 2), captured_ip);
    pkt.ttl = ip[8];
    pkt.ip_proto = ip[9];
    pkt.src_ip = be32(ip + 12);
    pkt.dst_ip = be32(ip + 16);
    pkt.header_len += static_cast<std::uint32_t>(ihl);
    const std::size_t ip_payload = total_len > ihl ? total_len - ihl : 0;
    const std::uint8_t* tp = ip + ihl;

    if (pkt.ip_proto == 6) {
        if (ip_payload < 20) {
            pkt.malformed = true;
            return pkt;
        }
        const std::size_t doff = static_cast<std::size_t>(tp[12] >> 4) * 4;
        if (doff < 20 || doff > ip_payload) {
            pkt.malformed = true;
            return pkt;
        }
        pkt.src_port = be16(tp);
        pkt.dst_port = be16(tp + 2);
        pkt.tcp_flags = tp[13] & tcpflag::kMask;
        pkt.header_len += static_cast<std::uint32_t>(doff);
        pkt.payload_len = static_cast<std::uint32_t>(ip_payload - doff);
    } else if (pkt.ip_proto == 17) {
        if (ip_payload < 8) {
            pkt.malformed = true;
            return pkt;
        }
        pkt.src_port = be16(tp);
        pkt.dst_port = be16(tp + 2);
        pkt.header_len += 8;
        pkt.payload_len = static_cast<std::uint32_t>(ip_payload - 8);
    } else if (pkt.ip_proto == 1) {
        if (ip_payload < 8) {
            pkt.malformed = true;
            return pkt;
        }
        pkt.header_len += 8;
        pkt.payload_len = static_cast<std::uint32_t>(ip_payload - 8);
    } else {
        pkt.payload_len = static_cast<std::uint32_t>(ip_payload);
    }
    return pkt;
}

}  // namespace

FlowKey FlowKey::from_packet(const PacketMeta& pkt) {
    FlowKey k;
    k.proto = pkt.ip_proto;
    const auto src = std::make_pair(pkt.src_ip, pkt.src_port);
    const auto dst = std::make_pair(pkt.dst_ip, pkt.dst_port);
    if (src <= dst) {
        k.ip_a = src.first;
        k.port_a = src.second;
        k.ip_b = dst.first;
        k.port_b = dst.second;
    } else {
        k.ip_a = dst.first;
        k.port_a = dst.second;
        k.ip_b = src.first;
        k.port_b = src.second;
    }
    return k;
}

bool FlowKey::operator<(const FlowKey& o) const {
    return std::tie(ip_a, port_a, ip_b, port_b, proto) <
           std::tie(o.ip_a, o.port_a, o.ip_b, o.port_b, o.proto);
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ull;
    };
    mix(k.ip_a);
    mix(k.port_a);
    mix(k.ip_b);
    mix(k.port_b);
    mix(k.proto);
    return static_cast<std::size_t>(h);
}

PcapReader::PcapReader(std::istream& in) : in_(in) {
    std::uint8_t hdr[24];
    in_.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    if (in_.gcount() != sizeof hdr) throw BadMagic();
    std::uint32_t magic;
    std::memcpy(&magic, hdr, 4);
    if (magic == kMagicNative) {
        swap_ = false;
    } else if (magic == kMagicSwapped) {
        swap_ = true;
    } else {
        throw BadMagic();
    }
    std::uint32_t link;
    std::memcpy(&link, hdr + 20, 4);
    if (swap_) link = bswap32(link);
    if (link != kLinkEthernet) throw UnsupportedLinkType(link);
}

std::optional<PacketMeta> PcapReader::next() {
    std::uint8_t rec[16];
    in_.read(reinterpret_cast<char*>(rec), sizeof rec);
    if (in_.gcount() == 0) return std::nullopt;
    if (in_.gcount() != sizeof rec) throw TruncatedPacket(count_ + 1);
    std::uint32_t ts_sec, ts_usec, incl_len;
    std::memcpy(&ts_sec, rec, 4);
    std::memcpy(&ts_usec, rec + 4, 4);
    std::memcpy(&incl_len, rec + 8, 4);
    if (swap_) {
        ts_sec = bswap32(ts_sec);
        ts_usec = bswap32(ts_usec);
        incl_len = bswap32(incl_len);
    }
    if (incl_len > kMaxRecordLen) throw TruncatedPacket(count_ + 1);
    std::vector<std::uint8_t> data(incl_len);
    in_.read(reinterpret_cast<char*>(data.data()), incl_len);
    if (in_.gcount() != static_cast<std::streamsize>(incl_len)) {
        throw TruncatedPacket(count_ + 1);
    }
    ++count_;
    const double ts = static_cast<double>(ts_sec) + static_cast<double>(ts_usec) * 1e-6;
    return decode_frame(ts, data.data(), data.size());
}

std::vector<PacketMeta> read_pcap(const std::string& path) {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (path != "-") {
        file.open(path, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open: " + path);
        in = &file;
    }
    PcapReader reader(*in);
    std::vector<PacketMeta> out;
    while (auto pkt = reader.next()) out.push_back(*pkt);
    return out;
}

FlowAssembler::FlowAssembler(double idle_timeout) : idle_timeout_(idle_timeout) {
    if (!(idle_timeout > 0.0)) throw std::invalid_argument("idle timeout must be positive");
}

void FlowAssembler::merge(FlowRecord& rec, const PacketMeta& pkt) const {
    const bool forward = pkt.src_ip == rec.initiator_ip && pkt.src_port == rec.initiator_port;
    const std::uint64_t bytes = static_cast<std::uint64_t>(pkt.header_len) + pkt.payload_len;
    (forward ? rec.fwd_packets : rec.bwd_packets) += 1;
    (forward ? rec.fwd_bytes : rec.bwd_bytes) += bytes;
    rec.last_ts = std::max(rec.last_ts, pkt.timestamp);
    rec.header_bytes += pkt.header_len;
    rec.payload_bytes += pkt.payload_len;
    if (pkt.is_tcp()) {
        rec.flag_bits += static_cast<std::uint64_t>(std::popcount(pkt.tcp_flags));
        if (pkt.tcp_flags & tcpflag::kAck) ++rec.ack_packets;
        if (pkt.tcp_flags & tcpflag::kSyn) ++rec.syn_packets;
        if (pkt.tcp_flags & tcpflag::kFin) ++rec.fin_packets;
        if (pkt.tcp_flags & tcpflag::kUrg) ++rec.urg_packets;
        if (pkt.tcp_flags & tcpflag::kRst) ++rec.rst_packets;
    }
    if (pkt.is_ipv4()) {
        rec.saw_ipv4 = true;
        rec.ttl_sum += pkt.ttl;
        rec.ip_packets += 1;
    }
    rec.saw_tcp |= pkt.is_tcp();
    rec.saw_udp |= pkt.is_udp();
    rec.saw_icmp |= pkt.is_icmp();
    rec.saw_arp |= pkt.is_arp();
    rec.saw_llc |= pkt.is_llc();
}

std::vector<FlowRecord> FlowAssembler::add(const PacketMeta& pkt) {
    ++stats_.packets_seen;
    if (pkt.malformed) {
        ++stats_.packets_skipped;
        return {};
    }
    std::vector<FlowRecord> closed;
    const FlowKey key = FlowKey::from_packet(pkt);
    auto it = table_.find(key);
    if (it != table_.end() && pkt.timestamp - it->second.last_ts > idle_timeout_) {
        closed.push_back(std::move(it->second));
        ++stats_.flows_emitted;
        table_.erase(it);
        it = table_.end();
    }
    if (it == table_.end()) {
        FlowRecord rec;
        rec.key = key;
        rec.initiator_ip = pkt.src_ip;
        rec.initiator_port = pkt.src_port;
        rec.first_ts = pkt.timestamp;
        rec.last_ts = pkt.timestamp;
        merge(rec, pkt);
        table_.emplace(key, std::move(rec));
    } else {
        merge(it->second, pkt);
    }
    return closed;
}

std::vector<FlowRecord> FlowAssembler::poll(double now) {
    std::vector<FlowRecord> closed;
    for (auto it = table_.begin(); it != table_.end();) {
        if (now - it->second.last_ts > idle_timeout_) {
            closed.push_back(std::move(it->second));
            it = table_.erase(it);
        } else {
            ++it;
        }
    }
    stats_.flows_emitted += closed.size();
    std::sort(closed.begin(), closed.end(), [](const FlowRecord& a, const FlowRecord& b) {
        return a.first_ts != b.first_ts ? a.first_ts < b.first_ts : a.key < b.key;
    });
    return closed;
}

std::vector<FlowRecord> FlowAssembler::flush() {
    std::vector<FlowRecord> closed;
    closed.reserve(table_.size());
    for (auto& [key, rec] : table_) closed.push_back(std::move(rec));
    table_.clear();
    stats_.flows_emitted += closed.size();
    std::sort(closed.begin(), closed.end(), [](const FlowRecord& a, const FlowRecord& b) {
        return a.first_ts != b.first_ts ? a.first_ts < b.first_ts : a.key < b.key;
    });
    return closed;
}

std::vector<FlowRecord> assemble_flows(const std::vector<PacketMeta>& packets,
                                       double idle_timeout, AssemblyStats* stats) {
    FlowAssembler assembler(idle_timeout);
    std::vector<FlowRecord> flows;
    for (const auto& pkt : packets) {
        for (auto& rec : assembler.add(pkt)) flows.push_back(std::move(rec));
    }
    for (auto& rec : assembler.flush()) flows.push_back(std::move(rec));
    std::sort(flows.begin(), flows.end(), [](const FlowRecord& a, const FlowRecord& b) {
        return a.first_ts != b.first_ts ? a.first_ts < b.first_ts : a.key < b.key;
    });
    if (stats) *stats = assembler.stats();
    return flows;
}

FeatureVector extract_features(const FlowRecord& flow) {
    if (flow.packets() == 0) throw EmptyFlow();
    constexpr double kEps = 1e-6;  // one microsecond rate floor
    const double span = flow.last_ts - flow.first_ts;
    const double denom = std::max(span, kEps);
    const auto port_hit = [&flow](std::uint16_t port) {
        return flow.key.port_a == port || flow.key.port_b == port ? 1.0 : 0.0;
    };

    FeatureVector v(kFeatureCount, 0.0);
    v[feat::flow_duration] = span;
    v[feat::header_length] = static_cast<double>(flow.header_bytes);
    v[feat::protocol_type] = static_cast<double>(flow.key.proto);
    v[feat::duration] =
        flow.ip_packets ? static_cast<double>(flow.ttl_sum) / static_cast<double>(flow.ip_packets)
                        : 0.0;
    v[feat::rate] = static_cast<double>(flow.packets()) / denom;
    v[feat::srate] = static_cast<double>(flow.fwd_packets) / denom;
    v[feat::drate] = static_cast<double>(flow.bwd_packets) / denom;
    v[feat::flag_number] = static_cast<double>(flow.flag_bits);
    v[feat::ack_count] = static_cast<double>(flow.ack_packets);
    v[feat::syn_count] = static_cast<double>(flow.syn_packets);
    v[feat::fin_count] = static_cast<double>(flow.fin_packets);
    v[feat::urg_count] = static_cast<double>(flow.urg_packets);
    v[feat::rst_count] = static_cast<double>(flow.rst_packets);
    v[feat::http] = port_hit(80);
    v[feat::https] = port_hit(443);
    v[feat::dns] = port_hit(53);
    v[feat::telnet] = port_hit(23);
    v[feat::smtp] = port_hit(25);
    v[feat::ssh] = port_hit(22);
    v[feat::irc] = port_hit(6667);
    v[feat::tcp] = flow.saw_tcp ? 1.0 : 0.0;
    v[feat::udp] = flow.saw_udp ? 1.0 : 0.0;
    v[feat::dhcp] = port_hit(67) != 0.0 || port_hit(68) != 0.0 ? 1.0 : 0.0;
    v[feat::arp] = flow.saw_arp ? 1.0 : 0.0;
    v[feat::icmp] = flow.saw_icmp ? 1.0 : 0.0;
    v[feat::ipv] = flow.saw_ipv4 ? 1.0 : 0.0;
    v[feat::llc] = flow.saw_llc ? 1.0 : 0.0;
    v[feat::tot_sum] = static_cast<double>(flow.payload_bytes);
    return v;
}

}  // namespace greenguard

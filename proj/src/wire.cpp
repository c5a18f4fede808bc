#include "greenguard/wire.hpp"

#include <bit>
#include <cstring>

namespace greenguard {

namespace {

void put_u16_le(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
}

void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u32_be(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f32_le(std::string& out, float v) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

void put_f64_le(std::string& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

std::uint16_t get_u16_le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

float get_f32_le(const std::uint8_t* p) { return std::bit_cast<float>(get_u32_le(p)); }

double get_f64_le(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

FlowFeaturesPayload parse_flow_payload(const std::uint8_t* p, std::size_t len) {
    if (len < 14) throw PayloadMismatch("flow payload shorter than its fixed fields");
    FlowFeaturesPayload flow;
    flow.sensor_id = get_u32_le(p);
    flow.first_ts = get_f64_le(p + 4);
    const std::uint16_t name_len = get_u16_le(p + 12);
    std::size_t off = 14;
    if (off + name_len + 2 > len) throw PayloadMismatch("protocol name overruns the payload");
    flow.protocol_name.assign(reinterpret_cast<const char*>(p + off), name_len);
    off += name_len;
    const std::uint16_t count = get_u16_le(p + off);
    off += 2;
    if (off + static_cast<std::size_t>(count) * 4 != len) {
        throw PayloadMismatch("feature count does not match the payload length");
    }
    flow.features.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        flow.features.push_back(get_f32_le(p + off));
        off += 4;
    }
    return flow;
}

}  // namespace

std::string encode_frame(const WireMessage& msg) {
    std::string payload;
    if (msg.type == MsgType::FlowFeatures) {
        const FlowFeaturesPayload& flow = msg.flow;
        if (flow.protocol_name.size() > 0xffff) {
            throw PayloadMismatch("protocol name longer than its length prefix allows");
        }
        if (flow.features.size() > 0xffff) {
            throw PayloadMismatch("feature count larger than its length prefix allows");
        }
        put_u32_le(payload, flow.sensor_id);
        put_f64_le(payload, flow.first_ts);
        put_u16_le(payload, static_cast<std::uint16_t>(flow.protocol_name.size()));
        payload += flow.protocol_name;
        put_u16_le(payload, static_cast<std::uint16_t>(flow.features.size()));
        for (const float f : flow.features) put_f32_le(payload, f);
    }
    if (payload.size() > kMaxPayload) {
        throw LengthOverflow(static_cast<std::uint32_t>(payload.size()));
    }

    std::string frame(kFrameMagic, sizeof kFrameMagic);
    frame += static_cast<char>(kWireVersion);
    frame += static_cast<char>(msg.type);
    put_u32_be(frame, static_cast<std::uint32_t>(payload.size()));
    frame += payload;
    return frame;
}

void FrameDecoder::feed(const char* data, std::size_t len) {
    // Compact lazily so long streams do not grow the buffer without bound.
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    } else if (pos_ > 4096) {
        buf_.erase(0, pos_);
        pos_ = 0;
    }
    buf_.append(data, len);
}

std::optional<WireMessage> FrameDecoder::next() {
    if (buf_.size() - pos_ < kFrameHeaderSize) return std::nullopt;
    const auto* p = reinterpret_cast<const std::uint8_t*>(buf_.data()) + pos_;
    if (std::memcmp(p, kFrameMagic, sizeof kFrameMagic) != 0) throw FrameBadMagic();
    if (p[4] != kWireVersion) throw UnknownVersion(p[4]);
    const std::uint8_t type = p[5];
    if (type < 1 || type > 3) throw UnknownMsgType(type);
    const std::uint32_t payload_len = get_u32_be(p + 6);
    if (payload_len > kMaxPayload) throw LengthOverflow(payload_len);
    if (buf_.size() - pos_ < kFrameHeaderSize + payload_len) return std::nullopt;

    WireMessage msg;
    msg.type = static_cast<MsgType>(type);
    if (msg.type == MsgType::FlowFeatures) {
        msg.flow = parse_flow_payload(p + kFrameHeaderSize, payload_len);
    } else if (payload_len != 0) {
        throw PayloadMismatch("heartbeat and ack frames carry no payload");
    }
    pos_ += kFrameHeaderSize + payload_len;
    return msg;
}

}  // namespace greenguard

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace greenguard {

// Sensor-to-hub framing: magic "ZRZ1", version u8, msg_type u8, payload
// length u32 big-endian, then the payload. Heartbeat and Ack carry none.
enum class MsgType : std::uint8_t { FlowFeatures = 1, Heartbeat = 2, Ack = 3 };

inline constexpr char kFrameMagic[4] = {'Z', 'R', 'Z', '1'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint32_t kMaxPayload = 1u << 20;
inline constexpr std::size_t kFrameHeaderSize = 10;

// Payload of a FlowFeatures frame. Integers and floats are little-endian
// on the wire; the protocol name is u16-length-prefixed.
struct FlowFeaturesPayload {
    std::uint32_t sensor_id = 0;
    double first_ts = 0.0;
    std::string protocol_name;
    std::vector<float> features;

    bool operator==(const FlowFeaturesPayload&) const = default;
};

struct WireMessage {
    MsgType type = MsgType::Heartbeat;
    FlowFeaturesPayload flow;  // meaningful only for FlowFeatures

    bool operator==(const WireMessage&) const = default;
};

struct FrameBadMagic : std::runtime_error {
    FrameBadMagic() : std::runtime_error("frame does not start with the protocol magic") {}
};
struct UnknownVersion : std::runtime_error {
    explicit UnknownVersion(unsigned got)
        : std::runtime_error("unknown protocol version " + std::to_string(got)) {}
};
struct UnknownMsgType : std::runtime_error {
    explicit UnknownMsgType(unsigned got)
        : std::runtime_error("unknown message type " + std::to_string(got)) {}
};
struct LengthOverflow : std::runtime_error {
    explicit LengthOverflow(std::uint32_t len)
        : std::runtime_error("payload length " + std::to_string(len) + " exceeds the 1 MiB cap") {}
};
struct PayloadMismatch : std::runtime_error {
    explicit PayloadMismatch(const std::string& what)
        : std::runtime_error("inconsistent payload: " + what) {}
};

// Pure function of the message; byte output is platform-independent.
std::string encode_frame(const WireMessage& msg);

// Incremental decoder over an arbitrarily fragmented byte stream. Protocol
// errors are fatal for the stream: the caller must drop the connection.
class FrameDecoder {
public:
    void feed(const char* data, std::size_t len);
    void feed(const std::string& bytes) { feed(bytes.data(), bytes.size()); }

    // Next complete message, or nullopt until more bytes arrive.
    std::optional<WireMessage> next();

    std::size_t buffered() const { return buf_.size() - pos_; }

private:
    std::string buf_;
    std::size_t pos_ = 0;
};

}  // namespace greenguard

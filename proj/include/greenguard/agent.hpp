#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "greenguard/autoenc.hpp"
#include "greenguard/detector.hpp"
#include "greenguard/smfilter.hpp"
#include "greenguard/wire.hpp"

namespace greenguard {

struct HubUnreachable : std::runtime_error {
    explicit HubUnreachable(const std::string& addr)
        : std::runtime_error("hub at " + addr + " unreachable after all retries") {}
};
struct CaptureError : std::runtime_error {
    explicit CaptureError(const std::string& what)
        : std::runtime_error("capture failed: " + what) {}
};
struct BindFailure : std::runtime_error {
    explicit BindFailure(const std::string& addr)
        : std::runtime_error("cannot bind to " + addr) {}
};
struct ModelSchemaMismatch : std::runtime_error {
    explicit ModelSchemaMismatch(std::size_t got, std::size_t want)
        : std::runtime_error("model expects " + std::to_string(want) +
                             " features but the wire schema carries " + std::to_string(got)) {}
};

struct SensorConfig {
    std::uint32_t sensor_id = 1;
    std::string hub_host = "127.0.0.1";
    std::uint16_t hub_port = 0;
    MonitorConfig monitor;
    NormalizationParams normalization;  // shipped sidecar parameters
    double idle_timeout = 60.0;
    double heartbeat_interval_s = 5.0;
    double backoff_base_s = 1.0;
    double backoff_cap_s = 60.0;
    std::size_t max_connect_attempts = 5;
    double ack_wait_s = 5.0;  // grace period for trailing acks after replay
};

struct SensorStats {
    std::uint64_t packets_decoded = 0;
    std::uint64_t packets_kept = 0;
    std::uint64_t flows_sent = 0;
    std::uint64_t heartbeats_sent = 0;
    std::uint64_t acks_received = 0;
    std::uint64_t reconnects = 0;
    FilterStats filter;
};

// Replays a capture ("-" reads stdin) through the filter and flow meter,
// normalizes each closed flow, and ships it to the hub. Blocks until the
// capture is drained and trailing acks arrive or the grace period ends.
SensorStats run_sensor(const std::string& pcap_path, const SensorConfig& cfg);

struct HubConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks an ephemeral port
    std::string alert_path = "alerts.log";
    bool verbose_alerts = false;  // also log normal verdicts
};

struct SensorCounters {
    std::uint64_t frames = 0;
    std::uint64_t heartbeats = 0;
    std::uint64_t alerts = 0;
};

struct HubStats {
    std::map<std::uint32_t, SensorCounters> per_sensor;
    std::uint64_t connections_accepted = 0;
    std::uint64_t connections_failed = 0;  // closed on protocol error
    std::uint64_t frames_total = 0;
    std::uint64_t alerts_total = 0;
};

// Accepts sensor connections, classifies every FlowFeatures frame with the
// shared model, acknowledges it, and appends zero-day verdicts to the
// alert log. One faulty connection never affects the others.
class Hub {
public:
    Hub(AutoencoderModel model, DetectorConfig detector, HubConfig cfg);
    ~Hub();

    Hub(const Hub&) = delete;
    Hub& operator=(const Hub&) = delete;

    void start();  // binds, listens, spawns the accept loop
    void stop();   // closes the listener and every live connection

    std::uint16_t port() const { return port_; }
    HubStats stats() const;
    std::string status_text() const;

private:
    AutoencoderModel model_;
    DetectorConfig detector_;
    HubConfig cfg_;

    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::vector<std::thread> workers_;

    mutable std::mutex state_mutex_;  // guards stats_, conn_fds_, workers_
    HubStats stats_;
    std::vector<int> conn_fds_;

    std::mutex alert_mutex_;  // serializes alert-log appends

    void accept_loop();
    void serve_connection(int fd);
    void handle_message(const WireMessage& msg, int fd);
    void append_alert(const FlowFeaturesPayload& flow, const DetectionVerdict& verdict);
};

}  // namespace greenguard

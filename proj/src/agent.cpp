#include "greenguard/agent.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "greenguard/flowmeter.hpp"
#include "greenguard/ioutil.hpp"

namespace greenguard {

namespace {

int connect_once(const std::string& host, std::uint16_t port) {
    const std::string numeric = host == "localhost" ? "127.0.0.1" : host;
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return -1;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, numeric.c_str(), &addr.sin_addr) != 1 ||
        ::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        return -1;
    }
    return fd;
}

bool send_all(int fd, const char* data, std::size_t len) {
    while (len > 0) {
        const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n <= 0) return false;
        data += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

void sleep_s(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

// Resolves the rule a closed flow matched; port-based like the filter.
std::string protocol_for_flow(const FlowRecord& flow, const std::vector<FilterRule>& rules) {
    for (const auto& rule : rules) {
        const bool transport_ok = (rule.transport == Transport::Tcp && flow.key.proto == 6) ||
                                  (rule.transport == Transport::Udp && flow.key.proto == 17);
        if (!transport_ok) continue;
        for (const std::uint16_t port : rule.ports) {
            if (flow.key.port_a == port || flow.key.port_b == port) return rule.protocol_name;
        }
    }
    return "other";
}

// Everything one sensor session shares between its pipeline, heartbeat,
// and ack-reader threads.
struct SensorSession {
    const SensorConfig& cfg;
    SensorStats stats;
    int fd = -1;
    std::mutex send_mutex;
    std::atomic<std::uint64_t> acks{0};
    std::atomic<bool> stopping{false};
    std::thread reader;

    explicit SensorSession(const SensorConfig& c) : cfg(c) {}

    void start_reader() {
        reader = std::thread([this, fd = fd] {
            FrameDecoder decoder;
            char buf[4096];
            for (;;) {
                const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
                if (n <= 0) return;
                decoder.feed(buf, static_cast<std::size_t>(n));
                try {
                    while (const auto msg = decoder.next()) {
                        if (msg->type == MsgType::Ack) acks.fetch_add(1);
                    }
                } catch (const std::exception&) {
                    return;  // protocol error from the hub side; drop the link
                }
            }
        });
    }

    void close_link() {
        if (fd >= 0) {
            ::shutdown(fd, SHUT_RDWR);
            if (reader.joinable()) reader.join();
            ::close(fd);
            fd = -1;
        } else if (reader.joinable()) {
            reader.join();
        }
    }

    void connect_with_backoff(bool is_reconnect) {
        double backoff = cfg.backoff_base_s;
        for (std::size_t attempt = 0; attempt < cfg.max_connect_attempts; ++attempt) {
            if (attempt > 0) {
                sleep_s(backoff);
                backoff = std::min(backoff * 2.0, cfg.backoff_cap_s);
            }
            fd = connect_once(cfg.hub_host, cfg.hub_port);
            if (fd >= 0) {
                if (is_reconnect || attempt > 0) ++stats.reconnects;
                start_reader();
                return;
            }
        }
        throw HubUnreachable(cfg.hub_host + ":" + std::to_string(cfg.hub_port));
    }

    // Sends one frame, reconnecting once with backoff if the link died.
    void send_frame(const std::string& frame) {
        std::lock_guard lock(send_mutex);
        if (fd >= 0 && send_all(fd, frame.data(), frame.size())) return;
        close_link();
        connect_with_backoff(true);
        if (!send_all(fd, frame.data(), frame.size())) {
            throw HubUnreachable(cfg.hub_host + ":" + std::to_string(cfg.hub_port));
        }
    }

    // Best-effort heartbeat; a dead link is healed by the next flow send.
    void send_heartbeat() {
        std::lock_guard lock(send_mutex);
        if (fd >= 0 && send_all(fd, encode_frame({MsgType::Heartbeat, {}}).data(),
                                kFrameHeaderSize)) {
            ++stats.heartbeats_sent;
        }
    }
};

}  // namespace

SensorStats run_sensor(const std::string& pcap_path, const SensorConfig& cfg) {
    if (cfg.normalization.dims() != 0 && cfg.normalization.dims() != kFeatureCount) {
        throw DimensionMismatch("normalization sidecar width does not match the feature schema");
    }
    std::vector<PacketMeta> packets;
    try {
        packets = read_pcap(pcap_path);
    } catch (const std::exception& e) {
        throw CaptureError(e.what());
    }

    SensorSession session(cfg);
    session.connect_with_backoff(false);

    // First beat goes out before the replay so even an empty one shows life.
    session.send_heartbeat();
    std::thread heartbeat([&session] {
        while (!session.stopping.load()) {
            const auto interval = session.cfg.heartbeat_interval_s;
            for (double waited = 0.0; waited < interval && !session.stopping.load();
                 waited += 0.01) {
                sleep_s(0.01);
            }
            if (!session.stopping.load()) session.send_heartbeat();
        }
    });

    const auto ship = [&](const FlowRecord& flow) {
        FeatureVector features = extract_features(flow);
        if (cfg.normalization.dims() != 0) features = apply_normalizer(cfg.normalization, features);
        WireMessage msg;
        msg.type = MsgType::FlowFeatures;
        msg.flow.sensor_id = cfg.sensor_id;
        msg.flow.first_ts = flow.first_ts;
        msg.flow.protocol_name = protocol_for_flow(flow, cfg.monitor.rules);
        msg.flow.features.assign(features.begin(), features.end());
        session.send_frame(encode_frame(msg));
        ++session.stats.flows_sent;
    };

    try {
        FlowAssembler assembler(cfg.idle_timeout);
        std::size_t since_poll = 0;
        for (const auto& pkt : packets) {
            ++session.stats.packets_decoded;
            const FilterDecision decision = classify_packet(pkt, cfg.monitor);
            if (!decision.keep) {
                if (cfg.monitor.promiscuous) ++session.stats.filter.dropped;
                continue;
            }
            ++session.stats.packets_kept;
            ++session.stats.filter.kept;
            ++session.stats.filter.kept_by_protocol[decision.protocol_name];
            for (const auto& flow : assembler.add(pkt)) ship(flow);
            if (++since_poll >= 256) {
                since_poll = 0;
                for (const auto& flow : assembler.poll(pkt.timestamp)) ship(flow);
            }
        }
        for (const auto& flow : assembler.flush()) ship(flow);

        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::duration<double>(cfg.ack_wait_s);
        while (session.acks.load() < session.stats.flows_sent &&
               std::chrono::steady_clock::now() < deadline) {
            sleep_s(0.005);
        }
    } catch (...) {
        session.stopping.store(true);
        heartbeat.join();
        session.close_link();
        throw;
    }

    session.stopping.store(true);
    heartbeat.join();
    session.close_link();
    session.stats.acks_received = session.acks.load();
    return session.stats;
}

Hub::Hub(AutoencoderModel model, DetectorConfig detector, HubConfig cfg)
    : model_(std::move(model)), detector_(detector), cfg_(std::move(cfg)) {
    detector_.validate();
    const std::size_t width = model_.layers.empty() ? 0 : model_.layers.front().in_width;
    if (width != kFeatureCount) throw ModelSchemaMismatch(kFeatureCount, width);
}

Hub::~Hub() { stop(); }

void Hub::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw BindFailure(cfg_.bind_address);
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(cfg_.port);
    const std::string numeric =
        cfg_.bind_address == "localhost" ? "127.0.0.1" : cfg_.bind_address;
    if (::inet_pton(AF_INET, numeric.c_str(), &addr.sin_addr) != 1 ||
        ::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 64) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw BindFailure(cfg_.bind_address + ":" + std::to_string(cfg_.port));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    running_.store(true);
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void Hub::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (accept_thread_.joinable()) accept_thread_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;
    {
        std::lock_guard lock(state_mutex_);
        for (const int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& worker : workers_) {
        if (worker.joinable()) worker.join();
    }
    workers_.clear();
}

void Hub::accept_loop() {
    while (running_.load()) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_.load()) break;
            continue;
        }
        std::lock_guard lock(state_mutex_);
        conn_fds_.push_back(fd);
        ++stats_.connections_accepted;
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void Hub::serve_connection(int fd) {
    FrameDecoder decoder;
    std::uint32_t conn_sensor = 0;  // 0 until the first flow frame names one
    bool failed = false;
    bool open = true;
    char buf[4096];
    while (open) {
        const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        if (n <= 0) break;
        decoder.feed(buf, static_cast<std::size_t>(n));
        try {
            while (open) {
                const auto msg = decoder.next();
                if (!msg) break;
                if (msg->type == MsgType::FlowFeatures) {
                    const FlowFeaturesPayload& flow = msg->flow;
                    if (flow.features.size() != model_.layers.front().in_width) {
                        throw PayloadMismatch("feature count " +
                                              std::to_string(flow.features.size()));
                    }
                    conn_sensor = flow.sensor_id;
                    const FeatureVector x(flow.features.begin(), flow.features.end());
                    const DetectionVerdict verdict = classify(model_, detector_, x);
                    const bool alert = verdict.decision == Decision::ZeroDay;
                    if (alert || cfg_.verbose_alerts) append_alert(flow, verdict);
                    {
                        std::lock_guard lock(state_mutex_);
                        SensorCounters& c = stats_.per_sensor[flow.sensor_id];
                        ++c.frames;
                        ++stats_.frames_total;
                        if (alert) {
                            ++c.alerts;
                            ++stats_.alerts_total;
                        }
                    }
                    const std::string ack = encode_frame({MsgType::Ack, {}});
                    if (!send_all(fd, ack.data(), ack.size())) open = false;
                } else if (msg->type == MsgType::Heartbeat) {
                    std::lock_guard lock(state_mutex_);
                    ++stats_.per_sensor[conn_sensor].heartbeats;
                }
                // Acks from a peer are tolerated and ignored.
            }
        } catch (const std::exception&) {
            failed = true;
            break;
        }
    }
    std::lock_guard lock(state_mutex_);
    if (failed) ++stats_.connections_failed;
    conn_fds_.erase(std::remove(conn_fds_.begin(), conn_fds_.end(), fd), conn_fds_.end());
    ::close(fd);
}

void Hub::append_alert(const FlowFeaturesPayload& flow, const DetectionVerdict& verdict) {
    std::ostringstream line;
    line << "ts=" << iso8601_now() << " sensor=" << flow.sensor_id
         << " flow_ts=" << fmt_double(flow.first_ts) << " proto=" << flow.protocol_name
         << " error=" << fmt_double(verdict.error) << " theta=" << fmt_double(verdict.threshold)
         << " decision=" << to_string(verdict.decision) << '\n';
    std::lock_guard lock(alert_mutex_);
    std::ofstream out(cfg_.alert_path, std::ios::app);
    out << line.str();
}

HubStats Hub::stats() const {
    std::lock_guard lock(state_mutex_);
    return stats_;
}

std::string Hub::status_text() const {
    const HubStats snapshot = stats();
    std::ostringstream out;
    out << "listen=" << cfg_.bind_address << ':' << port_ << '\n';
    out << "connections_accepted=" << snapshot.connections_accepted << '\n';
    out << "connections_failed=" << snapshot.connections_failed << '\n';
    out << "frames_total=" << snapshot.frames_total << '\n';
    out << "alerts_total=" << snapshot.alerts_total << '\n';
    for (const auto& [id, c] : snapshot.per_sensor) {
        out << "sensor." << id << ".frames=" << c.frames << '\n';
        out << "sensor." << id << ".heartbeats=" << c.heartbeats << '\n';
        out << "sensor." << id << ".alerts=" << c.alerts << '\n';
    }
    return out.str();
}

}  // namespace greenguard

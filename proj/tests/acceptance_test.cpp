// Release acceptance gate: ten independent checks, one PASS/FAIL line
// each, nonzero exit when any check fails. argv[1] names the CLI binary
// driven by the end-to-end checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "greenguard/agent.hpp"
#include "greenguard/autoenc.hpp"
#include "greenguard/benchdata.hpp"
#include "greenguard/detector.hpp"
#include "greenguard/flowmeter.hpp"
#include "greenguard/greenmetrics.hpp"
#include "greenguard/rng.hpp"
#include "greenguard/smfilter.hpp"
#include "greenguard/wire.hpp"
#include "support/pcap_builder.hpp"
#include "support/proc.hpp"

using namespace greenguard;
using testproc::TempDir;
using testproc::run_proc;
using testproc::slurp;

namespace {

std::string g_cli;

std::string q(const std::string& s) { return "'" + s + "'"; }

// Check bodies return "" on success, a short reason otherwise.
using Check = std::function<std::string()>;

bool run_check(int num, const std::string& what, double limit_s, const Check& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string reason;
    try {
        reason = fn();
    } catch (const std::exception& e) {
        reason = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (reason.empty() && limit_s > 0.0 && elapsed > limit_s) {
        std::ostringstream os;
        os << "took " << elapsed << " s, limit " << limit_s << " s";
        reason = os.str();
    }
    std::ostringstream line;
    line << (reason.empty() ? "PASS" : "FAIL") << ": criterion " << num << ": " << what;
    char timing[32];
    std::snprintf(timing, sizeof timing, " [%.2fs]", elapsed);
    line << timing;
    if (!reason.empty()) line << " -- " << reason;
    std::cout << line.str() << std::endl;
    return reason.empty();
}

std::string fail(const std::string& reason) { return reason; }

template <typename T>
std::string expect_eq(const T& got, const T& want, const std::string& label) {
    if (got == want) return "";
    std::ostringstream os;
    os << label << ": got " << got << ", want " << want;
    return os.str();
}

// ---- 1: gradient oracle ------------------------------------------------

std::string check_gradients() {
    Rng rng(2024);
    const Activation acts[] = {Activation::ReLU, Activation::Sigmoid, Activation::Identity};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t input = 3 + rng.index(4);  // 3..6
        auto width = [&rng] { return 1 + rng.index(8); };
        auto act = [&]() { return acts[rng.index(3)]; };

        ArchitectureSpec spec;
        spec.input_dim = input;
        if (rng.index(2) == 1) spec.encoder_layers.push_back({width(), act()});
        spec.encoder_layers.push_back({1 + rng.index(input - 1), act()});  // bottleneck
        if (rng.index(2) == 1) spec.decoder_layers.push_back({width(), act()});
        spec.decoder_layers.push_back({input, act()});

        AutoencoderModel model = init_model(spec, rng.next_u64());
        // Stock init zeroes the biases, which can park a relu preactivation
        // exactly on its hinge (a dead layer feeds the next one 0 * w + 0).
        // The check wants a generic point, so move the biases off zero.
        for (auto& layer : model.layers) {
            for (auto& b : layer.bias) b = rng.uniform(0.05, 0.3) * (rng.index(2) ? 1.0 : -1.0);
        }
        const std::size_t n_rows = 1 + rng.index(8);
        std::vector<FeatureVector> rows(n_rows, FeatureVector(input));
        for (auto& row : rows) {
            for (auto& v : row) v = rng.uniform(-1.0, 1.0);
        }

        const auto [loss, grad] = loss_and_gradient(model, rows);
        if (!std::isfinite(loss)) return fail("non-finite loss on trial " + std::to_string(trial));

        const std::vector<double> params = flatten_params(model);
        if (grad.size() != params.size()) return fail("gradient length mismatch");
        auto central_diff = [&](std::size_t i, double h) {
            AutoencoderModel probe = model;
            std::vector<double> p = params;
            p[i] = params[i] + h;
            unflatten_params(probe, p);
            const double up = loss_and_gradient(probe, rows).first;
            p[i] = params[i] - h;
            unflatten_params(probe, p);
            const double down = loss_and_gradient(probe, rows).first;
            return (up - down) / (2.0 * h);
        };
        auto rel_err = [&](std::size_t i, double h) {
            const double numeric = central_diff(i, h);
            const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
            return std::abs(numeric - grad[i]) / scale;
        };
        for (std::size_t i = 0; i < params.size(); ++i) {
            double err = rel_err(i, 1e-5);
            // A probe that straddles a relu hinge makes the difference
            // quotient meaningless; a narrower step settles whether the
            // analytic value is actually wrong.
            if (err >= 1e-4) err = rel_err(i, 1e-7);
            worst = std::max(worst, err);
        }
    }
    if (worst >= 1e-4) {
        std::ostringstream os;
        os << "worst relative error " << worst;
        return os.str();
    }
    return "";
}

// ---- 2: memorization convergence ---------------------------------------

std::string check_memorization() {
    Rng rng(7);
    FeatureVector proto(kFeatureCount);
    for (auto& v : proto) v = rng.uniform(0.0, 1.0);
    const std::vector<FeatureVector> rows(32, proto);

    Hyperparams hp;
    hp.learning_rate = 0.5;
    hp.epochs = 50;
    hp.batch_size = 4;
    hp.seed = 1;
    const auto [model, history] = train(rows, hp);
    (void)model;
    if (history.train_loss.size() != 50) return fail("expected 50 epoch losses");
    const double final_mse = history.train_loss.back();
    if (!(final_mse < 1e-3)) {
        std::ostringstream os;
        os << "final train mse " << final_mse << " not below 1e-3";
        return os.str();
    }
    return "";
}

// ---- 3: feature extraction oracle --------------------------------------

std::string check_feature_oracle() {
    // Six TCP packets, one bidirectional flow between 10.0.0.2:50000 (the
    // initiator) and 10.0.1.1:1883, half a second apart, TTL 64 each.
    // Expected values, all derived by hand from the packet list below:
    //   span 2.5 s; rate 6/2.5; srate = drate = 3/2.5; mean ttl 64
    //   headers 6 * (14 + 20 + 20) = 324; payloads 10+20+30 = 60
    //   flag bits 1+2+1+2+1+2 = 9; ack in 5 packets, syn 2, fin 1
    const std::uint32_t a = testpcap::ip(10, 0, 0, 2);
    const std::uint32_t b = testpcap::ip(10, 0, 1, 1);
    const std::vector<std::string> records = {
        testpcap::tcp_packet(0.0, a, 50000, b, 1883, 0x02, 64, 0),   // syn
        testpcap::tcp_packet(0.5, b, 1883, a, 50000, 0x12, 64, 0),   // syn|ack
        testpcap::tcp_packet(1.0, a, 50000, b, 1883, 0x10, 64, 10),  // ack
        testpcap::tcp_packet(1.5, b, 1883, a, 50000, 0x18, 64, 20),  // ack|psh
        testpcap::tcp_packet(2.0, a, 50000, b, 1883, 0x10, 64, 30),  // ack
        testpcap::tcp_packet(2.5, b, 1883, a, 50000, 0x11, 64, 0),   // ack|fin
    };
    TempDir dir;
    const std::string path = dir.file("oracle.pcap");
    testpcap::write_file(path, testpcap::make_pcap(records));

    const std::vector<PacketMeta> packets = read_pcap(path);
    if (packets.size() != 6) return fail("decoded " + std::to_string(packets.size()) + " packets");

    const PacketMeta& first = packets[0];
    if (first.timestamp != 0.0) return fail("first packet timestamp");
    if (first.src_ip != a || first.dst_ip != b) return fail("first packet addresses");
    if (first.src_port != 50000 || first.dst_port != 1883) return fail("first packet ports");
    if (first.ip_proto != 6 || first.tcp_flags != 0x02) return fail("first packet protocol bits");
    if (first.ttl != 64) return fail("first packet ttl");
    if (first.header_len != 54 || first.payload_len != 0) return fail("first packet lengths");
    if (!first.is_tcp() || first.malformed) return fail("first packet flags");

    const PacketMeta& fourth = packets[3];
    if (fourth.timestamp != 1.5) return fail("fourth packet timestamp");
    if (fourth.src_port != 1883 || fourth.dst_port != 50000) return fail("fourth packet ports");
    if (fourth.tcp_flags != 0x18 || fourth.payload_len != 20) return fail("fourth packet body");

    const std::vector<FlowRecord> flows = assemble_flows(packets);
    if (flows.size() != 1) return fail("expected one flow, got " + std::to_string(flows.size()));
    if (flows[0].initiator_ip != a || flows[0].initiator_port != 50000) {
        return fail("initiator endpoint");
    }

    const FeatureVector got = extract_features(flows[0]);
    FeatureVector want(kFeatureCount, 0.0);
    want[feat::flow_duration] = 2.5;
    want[feat::header_length] = 324.0;
    want[feat::protocol_type] = 6.0;
    want[feat::duration] = 64.0;
    want[feat::rate] = 6.0 / 2.5;
    want[feat::srate] = 3.0 / 2.5;
    want[feat::drate] = 3.0 / 2.5;
    want[feat::flag_number] = 9.0;
    want[feat::ack_count] = 5.0;
    want[feat::syn_count] = 2.0;
    want[feat::fin_count] = 1.0;
    want[feat::tcp] = 1.0;
    want[feat::ipv] = 1.0;
    want[feat::tot_sum] = 60.0;

    const auto& names = feature_names();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (got[i] != want[i]) {
            std::ostringstream os;
            os << names[i] << ": got " << got[i] << ", want " << want[i];
            return os.str();
        }
    }
    return "";
}

// ---- 4: default rules match the golden fixture --------------------------

std::string check_rules_golden() {
    const std::string golden = slurp(std::string(GG_GOLDEN_DIR) + "/sm_rules_default.txt");
    if (golden.empty()) return fail("golden fixture missing or empty");
    const std::string rendered = format_rules(default_rules());
    if (rendered != golden) return fail("rendered rules differ from the golden fixture");
    return "";
}

// ---- 5: threshold boundary semantics ------------------------------------

std::string check_threshold_semantics() {
    // A zero-weight model reconstructs everything to zero, so the absolute
    // error of a constant row equals that constant exactly.
    AutoencoderModel model;
    model.spec.input_dim = 2;
    model.spec.encoder_layers = {{1, Activation::ReLU}};
    model.spec.decoder_layers = {{2, Activation::ReLU}};
    LayerParams enc;
    enc.in_width = 2;
    enc.out_width = 1;
    enc.weights.assign(2, 0.0);
    enc.bias.assign(1, 0.0);
    LayerParams dec;
    dec.in_width = 1;
    dec.out_width = 2;
    dec.weights.assign(2, 0.0);
    dec.bias.assign(2, 0.0);
    model.layers = {enc, dec};

    const DetectorConfig cfg{0.15, ErrorMetric::MAE};
    const DetectionVerdict at = classify(model, cfg, FeatureVector{0.15, 0.15});
    if (at.error != 0.15) return fail("error at the boundary is not exact");
    if (at.decision != Decision::Normal) return fail("boundary error must stay normal");

    const double above = 0.15 + 1e-12;
    const DetectionVerdict over = classify(model, cfg, FeatureVector{above, above});
    if (over.error != above) return fail("error just above the boundary is not exact");
    if (over.decision != Decision::ZeroDay) return fail("error above the boundary must alert");
    return "";
}

// ---- 6: calibration against a brute force sweep --------------------------

std::string check_calibration_oracle() {
    Rng rng(1234);
    std::vector<double> benign(1000), attack(1000);
    for (auto& e : benign) e = rng.uniform(0.0, 0.1);
    for (auto& e : attack) e = rng.uniform(0.2, 0.3);

    const SweepRange range;
    const CalibrationResult result = calibrate_from_errors(benign, attack, range);

    // Independent recount straight from the error lists.
    const std::vector<double> grid = range.grid();
    double best_ba = -1.0;
    double best_theta = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double theta = grid[i];
        std::size_t tp = 0, tn = 0;
        for (double e : attack) tp += e > theta ? 1 : 0;
        for (double e : benign) tn += e > theta ? 0 : 1;
        const double tpr = static_cast<double>(tp) / static_cast<double>(attack.size());
        const double tnr = static_cast<double>(tn) / static_cast<double>(benign.size());
        const double ba = 0.5 * (tpr + tnr);
        if (ba > best_ba) {
            best_ba = ba;
            best_theta = theta;
        }
        if (i >= result.table.size()) return fail("sweep table shorter than the grid");
        const SweepPoint& pt = result.table[i];
        if (pt.threshold != theta || pt.tpr != tpr || pt.tnr != tnr ||
            pt.balanced_accuracy != ba) {
            std::ostringstream os;
            os << "sweep row at theta " << theta << " disagrees with the recount";
            return os.str();
        }
    }
    if (result.table.size() != grid.size()) return fail("sweep table longer than the grid");
    if (result.theta_star != best_theta) {
        std::ostringstream os;
        os << "theta* " << result.theta_star << ", brute force says " << best_theta;
        return os.str();
    }
    if (best_ba != 1.0) return fail("separable data must reach balanced accuracy 1.0");
    if (std::abs(result.theta_star - 0.10) > 1e-9) {
        std::ostringstream os;
        os << "tie-break should land on 0.10, got " << result.theta_star;
        return os.str();
    }
    return "";
}

// ---- 7: wire protocol round trips ----------------------------------------

bool same_message(const WireMessage& x, const WireMessage& y) {
    if (x.type != y.type) return false;
    if (x.type != MsgType::FlowFeatures) return true;
    return x.flow.sensor_id == y.flow.sensor_id && x.flow.first_ts == y.flow.first_ts &&
           x.flow.protocol_name == y.flow.protocol_name && x.flow.features == y.flow.features;
}

std::string check_wire_protocol() {
    const std::string heartbeat = encode_frame({MsgType::Heartbeat, {}});
    if (heartbeat.size() != 10) return fail("heartbeat frame is not 10 bytes");

    Rng rng(99);
    std::vector<WireMessage> sent;
    std::string stream;
    for (int i = 0; i < 1000; ++i) {
        WireMessage msg;
        const auto pick = rng.uniform_int(0, 2);
        if (pick == 0) {
            msg.type = MsgType::Heartbeat;
        } else if (pick == 1) {
            msg.type = MsgType::Ack;
        } else {
            msg.type = MsgType::FlowFeatures;
            msg.flow.sensor_id = static_cast<std::uint32_t>(rng.next_u64());
            msg.flow.first_ts = rng.uniform(0.0, 2e9);
            const auto name_len = rng.uniform_int(0, 10);
            for (std::uint64_t j = 0; j < name_len; ++j) {
                msg.flow.protocol_name += static_cast<char>('A' + rng.uniform_int(0, 25));
            }
            const auto feat_count = rng.uniform_int(0, 40);
            for (std::uint64_t j = 0; j < feat_count; ++j) {
                msg.flow.features.push_back(static_cast<float>(rng.uniform(-1e6, 1e6)));
            }
        }
        stream += encode_frame(msg);
        sent.push_back(std::move(msg));
    }

    auto drain = [](FrameDecoder& dec) {
        std::vector<WireMessage> out;
        while (auto msg = dec.next()) out.push_back(*msg);
        return out;
    };
    auto compare = [&sent](const std::vector<WireMessage>& got, const char* label) {
        if (got.size() != sent.size()) return std::string(label) + ": message count differs";
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (!same_message(got[i], sent[i])) {
                return std::string(label) + ": message " + std::to_string(i) + " differs";
            }
        }
        return std::string();
    };

    FrameDecoder whole;
    whole.feed(stream);
    std::string err = compare(drain(whole), "single feed");
    if (!err.empty()) return err;
    if (whole.buffered() != 0) return fail("bytes left over after a clean stream");

    FrameDecoder trickle;
    std::vector<WireMessage> got;
    for (char c : stream) {
        trickle.feed(std::string(1, c));
        for (auto& m : drain(trickle)) got.push_back(std::move(m));
    }
    err = compare(got, "byte-by-byte feed");
    if (!err.empty()) return err;

    FrameDecoder chunked;
    got.clear();
    std::size_t pos = 0;
    while (pos < stream.size()) {
        const std::size_t n = std::min<std::size_t>(1 + rng.index(37), stream.size() - pos);
        chunked.feed(stream.substr(pos, n));
        pos += n;
        for (auto& m : drain(chunked)) got.push_back(std::move(m));
    }
    return compare(got, "random chunk feed");
}

// ---- 8: sensor to hub loopback -------------------------------------------

std::string check_loopback() {
    TempDir dir;
    const std::string pcap = dir.file("mqtt.pcap");
    std::vector<std::string> records;
    for (int i = 0; i < 10; ++i) {
        records.push_back(testpcap::tcp_packet(0.01 * i, testpcap::ip(10, 0, 0, 2),
                                               static_cast<std::uint16_t>(40000 + i),
                                               testpcap::ip(10, 0, 1, 1), 1883, 0x18, 64, 16));
    }
    testpcap::write_file(pcap, testpcap::make_pcap(records));

    // Small trained model; replayed features are raw, so their packet rates
    // dwarf the training range and every flow scores far above 0.05.
    Rng rng(21);
    std::vector<FeatureVector> rows(64, FeatureVector(kFeatureCount));
    for (auto& row : rows) {
        for (auto& v : row) v = rng.uniform(0.0, 1.0);
    }
    Hyperparams hp;
    hp.spec = parse_architecture("28-8-28");
    hp.learning_rate = 0.05;
    hp.epochs = 3;
    hp.batch_size = 16;
    hp.seed = 5;
    const AutoencoderModel model = train(rows, hp).first;
    const DetectorConfig detector{0.05, ErrorMetric::MSE};

    auto one_run = [&](const std::string& alert_path, std::uint64_t* alerts) -> std::string {
        HubConfig hub_cfg;
        hub_cfg.alert_path = alert_path;
        Hub hub(model, detector, hub_cfg);
        hub.start();

        SensorConfig cfg;
        cfg.sensor_id = 3;
        cfg.hub_host = "127.0.0.1";
        cfg.hub_port = hub.port();
        cfg.monitor.rules = default_rules();
        cfg.heartbeat_interval_s = 0.05;
        cfg.backoff_base_s = 0.01;
        cfg.backoff_cap_s = 0.05;
        cfg.ack_wait_s = 5.0;
        const SensorStats stats = run_sensor(pcap, cfg);
        hub.stop();

        if (stats.flows_sent != 10) {
            return "flows sent: " + std::to_string(stats.flows_sent);
        }
        if (stats.acks_received != stats.flows_sent) {
            return "acks " + std::to_string(stats.acks_received) + " for " +
                   std::to_string(stats.flows_sent) + " flows";
        }
        const HubStats after = hub.stats();
        if (after.frames_total != 10) {
            return "hub saw " + std::to_string(after.frames_total) + " frames";
        }
        *alerts = after.alerts_total;
        return "";
    };

    std::uint64_t alerts_a = 0, alerts_b = 0;
    std::string err = one_run(dir.file("alerts_a.log"), &alerts_a);
    if (!err.empty()) return "first run: " + err;
    err = one_run(dir.file("alerts_b.log"), &alerts_b);
    if (!err.empty()) return "second run: " + err;
    if (alerts_a != alerts_b) {
        return "alert counts differ across runs: " + std::to_string(alerts_a) + " vs " +
               std::to_string(alerts_b);
    }
    if (alerts_a != 10) {
        return "raw replay should alert on every flow, got " + std::to_string(alerts_a);
    }
    return "";
}

// ---- 9: evaluation harness -------------------------------------------------

std::string parse_kv(const std::string& text, const std::string& key, double* out) {
    const std::string needle = key + "=";
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(needle, 0) == 0) {
            *out = std::stod(line.substr(needle.size()));
            return "";
        }
    }
    return "missing key " + key;
}

std::string check_eval_harness() {
    // (a) A 20500-row labeled sample driven through the CLI end to end.
    TempDir dir;
    SyntheticSpec big;
    big.benign_rows = 10000;
    big.attack_rows_per_class = 1500;
    big.seed = 11;
    const LabeledDataset sample = synthetic_benchmark(big);
    if (sample.size() < 20000) return fail("sample smaller than 20k rows");
    const std::string csv = dir.file("sample.csv");
    save_csv(sample, csv);

    const std::string model = dir.file("model.gg");
    const auto train_run = run_proc(q(g_cli) + " train --data " + q(csv) + " --model-out " +
                                    q(model) + " --epochs 5 --seed 3");
    if (train_run.exit_code != 0) return fail("train exited " + std::to_string(train_run.exit_code));
    if (train_run.out.find("rows=20500\n") == std::string::npos) {
        return fail("train did not report the full sample");
    }

    const auto cal_run =
        run_proc(q(g_cli) + " calibrate --model " + q(model) + " --data " + q(csv) + " --seed 3");
    if (cal_run.exit_code != 0) return fail("calibrate exited " + std::to_string(cal_run.exit_code));
    double theta = 0.0;
    std::string err = parse_kv(cal_run.out, "theta", &theta);
    if (!err.empty()) return "calibrate: " + err;
    if (theta < 0.05 || theta > 0.95) return fail("calibrated threshold outside the sweep");

    // (b) The per-class report covers every class with a consistent summary.
    const std::string report_path = dir.file("report.kv");
    const auto eval_run = run_proc(q(g_cli) + " eval --model " + q(model) + " --data " + q(csv) +
                                   " --seed 3 --on test --report-out " + q(report_path));
    if (eval_run.exit_code != 0) return fail("eval exited " + std::to_string(eval_run.exit_code));
    const std::string report = slurp(report_path);
    std::vector<double> class_acc;
    for (std::size_t c = 0; c < kAttackClassCount; ++c) {
        double acc = 0.0;
        err = parse_kv(report, "accuracy." + to_string(static_cast<AttackClass>(c)), &acc);
        if (!err.empty()) return "eval report: " + err;
        class_acc.push_back(acc);
    }
    double mean = 0.0, worst = 0.0;
    err = parse_kv(report, "mean_accuracy", &mean);
    if (!err.empty()) return "eval report: " + err;
    err = parse_kv(report, "worst_accuracy", &worst);
    if (!err.empty()) return "eval report: " + err;
    double sum = 0.0, lowest = 1.0;
    for (double acc : class_acc) {
        sum += acc;
        lowest = std::min(lowest, acc);
    }
    if (std::abs(mean - sum / static_cast<double>(class_acc.size())) > 1e-9) {
        return fail("mean accuracy disagrees with the per-class table");
    }
    if (std::abs(worst - lowest) > 1e-9) {
        return fail("worst accuracy disagrees with the per-class table");
    }

    // (c) The built-in benchmark clears its margins.
    SyntheticSpec spec;  // stock sizes, stock seed
    Hyperparams hp;
    hp.learning_rate = 0.1;
    hp.epochs = 50;
    hp.batch_size = 32;
    hp.seed = 1;
    const BenchmarkResult result = run_synthetic_benchmark(spec, hp);
    if (result.detection_rate < 0.95) {
        std::ostringstream os;
        os << "detection rate " << result.detection_rate << " below 0.95";
        return os.str();
    }
    if (result.false_positive_rate > 0.05) {
        std::ostringstream os;
        os << "false positive rate " << result.false_positive_rate << " above 0.05";
        return os.str();
    }
    return "";
}

// ---- 10: green accounting ---------------------------------------------------

std::string check_green_accounting() {
    PowerProfile stock;
    if (energy_wh(3600.0, stock) != 7.5) return fail("one hour at stock wattage must be 7.5 Wh");

    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const double wh = rng.uniform(0.0, 100.0);
        const double other = rng.uniform(0.0, 100.0);
        const double intensity = rng.uniform(1.0, 1000.0);
        const double k = rng.uniform(0.1, 10.0);
        const double base = co2_mg(wh, intensity);
        auto close = [](double x, double y) {
            return std::abs(x - y) <= 1e-9 * std::max({std::abs(x), std::abs(y), 1.0});
        };
        if (!close(co2_mg(k * wh, intensity), k * base)) return fail("not linear in energy");
        if (!close(co2_mg(wh, k * intensity), k * base)) return fail("not linear in intensity");
        if (!close(co2_mg(wh + other, intensity), base + co2_mg(other, intensity))) {
            return fail("not additive in energy");
        }
    }

    if (kReferenceEdgeCo2Mg != 4.7 || kReferenceServerCo2Mg != 725.9) {
        return fail("reference emission constants changed");
    }
    PowerProfile device;
    device.watts = 10.0;
    PowerProfile baseline;
    baseline.device_name = "rack";
    baseline.watts = 100.0;
    const GreenReport report = run_report(1800.0, 3600, device, baseline);
    const std::string text = to_text(report);
    if (text.find("published reference: 4.7 mgCO2 (edge hub) vs 725.9 mgCO2 (server), 154.4x") ==
        std::string::npos) {
        return fail("reference line missing or altered");
    }
    if (text.find("measured ratio: 10.0x") == std::string::npos) {
        return fail("measured ratio must be reported separately from the reference");
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance_test <cli-binary>\n";
        return 2;
    }
    g_cli = argv[1];

    int failures = 0;
    const auto run = [&failures](int num, const std::string& what, double limit_s,
                                 const Check& fn) {
        if (!run_check(num, what, limit_s, fn)) ++failures;
    };

    run(1, "analytic gradients match finite differences on 50 random nets", 30.0,
        check_gradients);
    run(2, "training memorizes a repeated vector to mse below 1e-3", 10.0, check_memorization);
    run(3, "six packet capture decodes byte-exact and matches the feature oracle", 1.0,
        check_feature_oracle);
    run(4, "default protocol rules equal the golden fixture", 0.0, check_rules_golden);
    run(5, "errors at the threshold stay normal and just above it alert", 0.0,
        check_threshold_semantics);
    run(6, "calibration matches a brute force sweep and breaks ties downward", 5.0,
        check_calibration_oracle);
    run(7, "wire frames survive round trips and arbitrary fragmentation", 0.0,
        check_wire_protocol);
    run(8, "sensor to hub loopback acks every flow with repeatable alerts", 10.0,
        check_loopback);
    run(9, "evaluation harness handles a 20k row sample and clears benchmark margins", 120.0,
        check_eval_harness);
    run(10, "energy figures are exact and linear and the reference ratio is untouched", 0.0,
        check_green_accounting);

    if (failures != 0) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}

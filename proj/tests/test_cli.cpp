#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "greenguard/autoenc.hpp"
#include "greenguard/benchdata.hpp"
#include "greenguard/datasets.hpp"
#include "support/pcap_builder.hpp"
#include "support/proc.hpp"

using namespace greenguard;
using testproc::run_proc;
using testproc::slurp;
using testproc::TempDir;

namespace {

const std::string kCli = GG_CLI_PATH;

std::string q(const std::string& s) { return "'" + s + "'"; }

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n' ? 1 : 0;
    return n;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

void write_sample_csv(const std::string& path, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.benign_rows = 120;
    spec.attack_rows_per_class = 12;
    spec.seed = seed;
    save_csv(synthetic_benchmark(spec), path);
}

bool wait_for_contents(const std::string& path, const std::string& needle,
                       double timeout_s) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_s);
    while (std::chrono::steady_clock::now() < deadline) {
        if (slurp(path).find(needle) != std::string::npos) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return slurp(path).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("a bare invocation is a usage error") {
    const auto r = run_proc(q(kCli));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("subcommand") != std::string::npos);
}

TEST_CASE("the version banner is a single line") {
    const auto r = run_proc(q(kCli) + " --version");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "greenguard 1.0.0\n");
}

TEST_CASE("top level help names every subcommand") {
    const auto r = run_proc(q(kCli) + " --help");
    CHECK(r.exit_code == 0);
    for (const char* name : {"extract", "train", "calibrate", "eval", "detect",
                             "sm-agent", "idh-serve", "green-report"}) {
        CHECK(r.out.find(name) != std::string::npos);
    }
}

TEST_CASE("subcommand help matches the golden copies") {
    for (const std::string name : {"extract", "train", "calibrate", "eval", "detect",
                                   "sm-agent", "idh-serve", "green-report"}) {
        const auto r = run_proc(q(kCli) + " " + name + " --help");
        CHECK(r.exit_code == 0);
        const std::string golden = slurp(std::string(GG_GOLDEN_DIR) + "/help_" + name + ".txt");
        REQUIRE_MESSAGE(!golden.empty(), "missing golden help for " << name);
        CHECK_MESSAGE(r.out == golden, "help drift for " << name);
    }
}

TEST_CASE("unknown flags and missing requirements exit two") {
    CHECK(run_proc(q(kCli) + " extract --wat").exit_code == 2);
    const auto r = run_proc(q(kCli) + " train");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("--data") != std::string::npos);
}

TEST_CASE("green report prints the fixed reference and measured figures") {
    TempDir dir;
    const std::string kv_path = dir.file("run.kv");
    const auto r = run_proc(q(kCli) + " green-report --duration 1800 --watts 10 --frames 3600" +
                            " --kv-out " + q(kv_path));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("published reference: 4.7 mgCO2 (edge hub) vs 725.9 mgCO2 (server), "
                     "154.4x\n") == 0);
    CHECK(r.out.find("measured run: 1800.000 s, 3600 frames\n") != std::string::npos);
    CHECK(r.out.find("edge-hub: 5.000000 Wh, 2375.000 mgCO2\n") != std::string::npos);
    CHECK(r.out.find("server: 375.000000 Wh, 178125.000 mgCO2\n") != std::string::npos);
    CHECK(r.out.find("measured ratio: 75.0x\n") != std::string::npos);
    CHECK(r.out.find("energy per frame: 0.001388889 Wh\n") != std::string::npos);

    const std::string kv = slurp(kv_path);
    CHECK(kv.find("device_wh=5\n") != std::string::npos);
    CHECK(kv.find("frames=3600\n") != std::string::npos);
    CHECK(kv.find("measured_ratio=75\n") != std::string::npos);

    CHECK(run_proc(q(kCli) + " green-report --duration -5").exit_code == 1);
}

TEST_CASE("extract writes a csv the trainer can load back") {
    TempDir dir;
    const std::string pcap = dir.file("mixed.pcap");
    std::vector<std::string> records;
    for (int i = 0; i < 3; ++i) {
        records.push_back(testpcap::tcp_packet(0.1 * i, testpcap::ip(10, 0, 0, 2),
                                               static_cast<std::uint16_t>(40001 + i),
                                               testpcap::ip(10, 0, 1, 1), 1883, 0x18, 64, 32));
    }
    records.push_back(testpcap::udp_packet(0.5, testpcap::ip(10, 0, 0, 3), 41000,
                                           testpcap::ip(10, 0, 1, 1), 5683, 64, 24));
    records.push_back(testpcap::udp_packet(0.6, testpcap::ip(10, 0, 1, 1), 5683,
                                           testpcap::ip(10, 0, 0, 3), 41000, 64, 40));
    records.push_back(testpcap::tcp_packet(0.7, testpcap::ip(10, 0, 0, 4), 50000,
                                           testpcap::ip(10, 0, 1, 1), 443, 0x18, 64, 100));
    testpcap::write_file(pcap, testpcap::make_pcap(records));

    const std::string csv = dir.file("flows.csv");
    const auto r = run_proc(q(kCli) + " extract --pcap " + q(pcap) + " --out " + q(csv) +
                            " --label Benign");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("packets_decoded=6\n") != std::string::npos);
    CHECK(r.out.find("packets_kept=5\n") != std::string::npos);
    CHECK(r.out.find("packets_dropped=1\n") != std::string::npos);
    CHECK(r.out.find("kept.MQTT=3\n") != std::string::npos);
    CHECK(r.out.find("kept.CoAP=2\n") != std::string::npos);
    CHECK(r.out.find("packets_skipped=0\n") != std::string::npos);
    CHECK(r.out.find("flows=4\n") != std::string::npos);

    const LabeledDataset back = load_csv(csv, feature_schema());
    REQUIRE(back.size() == 4);
    for (const AttackClass c : back.labels) CHECK(c == AttackClass::Benign);
}

TEST_CASE("a missing capture exits one and leaves no partial csv") {
    TempDir dir;
    const std::string csv = dir.file("never.csv");
    const auto r = run_proc(q(kCli) + " extract --pcap " + q(dir.file("no.pcap")) +
                            " --out " + q(csv));
    CHECK(r.exit_code == 1);
    CHECK(r.err.rfind("error: ", 0) == 0);
    CHECK(!std::filesystem::exists(csv));
}

TEST_CASE("train, calibrate, eval, and detect chain through shared files") {
    TempDir dir;
    const std::string data = dir.file("sample.csv");
    write_sample_csv(data, 5);

    const std::string model = dir.file("detector.bin");
    const auto train_run = run_proc(q(kCli) + " train --data " + q(data) + " --model-out " +
                                    q(model) + " --epochs 8 --seed 3");
    REQUIRE_MESSAGE(train_run.exit_code == 0, train_run.err);
    CHECK(train_run.out.find("rows=204\n") != std::string::npos);
    CHECK(train_run.out.find("arch=28-24-16-8-16-24-28\n") != std::string::npos);
    CHECK(train_run.out.find("final_train_mse=") != std::string::npos);
    CHECK(train_run.out.find("final_val_mse=") != std::string::npos);

    REQUIRE(std::filesystem::exists(model));
    REQUIRE(std::filesystem::exists(model + ".norm"));
    REQUIRE(std::filesystem::exists(model + ".history.csv"));
    const std::string history = slurp(model + ".history.csv");
    CHECK(history.rfind("epoch,train_mse,val_mse\n", 0) == 0);
    CHECK(line_count(history) == 9);  // header plus eight epochs

    const AutoencoderModel first = load_model(model);
    CHECK(first.input_dim() == kFeatureCount);
    CHECK(first.trained_epochs == 8);
    CHECK(!first.threshold.has_value());
    CHECK(first.feature_names == feature_schema());

    // Same data, same seed: the model file is reproduced byte for byte.
    const std::string twin = dir.file("twin.bin");
    const auto twin_run = run_proc(q(kCli) + " train --data " + q(data) + " --model-out " +
                                   q(twin) + " --epochs 8 --seed 3");
    REQUIRE(twin_run.exit_code == 0);
    CHECK(slurp(model) == slurp(twin));
    CHECK(slurp(model + ".norm") == slurp(twin + ".norm"));

    const std::string sweep = dir.file("sweep.csv");
    const auto cal_run = run_proc(q(kCli) + " calibrate --model " + q(model) + " --data " +
                                  q(data) + " --seed 3 --sweep-out " + q(sweep));
    REQUIRE_MESSAGE(cal_run.exit_code == 0, cal_run.err);
    CHECK(cal_run.out.find("theta=") != std::string::npos);
    CHECK(cal_run.out.find("metric=mse\n") != std::string::npos);
    CHECK(slurp(sweep).rfind("threshold,tpr,tnr,balanced_accuracy\n", 0) == 0);
    CHECK(line_count(slurp(sweep)) == 20);

    const AutoencoderModel calibrated = load_model(model);
    REQUIRE(calibrated.threshold.has_value());
    CHECK(*calibrated.threshold >= 0.05);
    CHECK(*calibrated.threshold <= 0.95);

    const std::string report = dir.file("eval.kv");
    const auto eval_run = run_proc(q(kCli) + " eval --model " + q(model) + " --data " + q(data) +
                                   " --seed 3 --on test --report-out " + q(report));
    REQUIRE_MESSAGE(eval_run.exit_code == 0, eval_run.err);
    CHECK(eval_run.out.find("on=test\n") != std::string::npos);
    CHECK(eval_run.out.find("class        rows    accuracy\n") != std::string::npos);
    CHECK(eval_run.out.find("mean_accuracy=") != std::string::npos);
    CHECK(slurp(report).find("worst_accuracy=") != std::string::npos);

    // Feed three labeled rows back through single-row detection.
    SyntheticSpec tiny;
    tiny.benign_rows = 2;
    tiny.attack_rows_per_class = 2;
    tiny.seed = 5;
    LabeledDataset probe = synthetic_benchmark(tiny);
    probe.rows.resize(3);
    probe.labels.resize(3);
    const std::string probe_csv = dir.file("probe.csv");
    save_csv(probe, probe_csv);

    const auto detect_run =
        run_proc(q(kCli) + " detect --model " + q(model) + " --input " + q(probe_csv));
    REQUIRE_MESSAGE(detect_run.exit_code == 0, detect_run.err);
    CHECK(detect_run.out.find("row=1 error=") != std::string::npos);
    CHECK(detect_run.out.find("row=3 error=") != std::string::npos);
    CHECK(detect_run.out.find("rows=3\n") != std::string::npos);
    CHECK(detect_run.out.find("zero_days=") != std::string::npos);
    CHECK(detect_run.out.find("decision=") != std::string::npos);
}

TEST_CASE("flags beat environment variables and both beat the config file") {
    TempDir dir;
    const std::string data = dir.file("sample.csv");
    write_sample_csv(data, 5);
    const std::string config = dir.file("settings.ini");
    write_text(config, "[train]\nepochs=3\n");

    const auto epochs_of = [&](const std::string& model) {
        return load_model(model).trained_epochs;
    };

    const std::string from_config = dir.file("a.bin");
    REQUIRE(run_proc(q(kCli) + " --config " + q(config) + " train --data " + q(data) +
                     " --model-out " + q(from_config) + " --seed 3")
                .exit_code == 0);
    CHECK(epochs_of(from_config) == 3);

    const std::string from_env = dir.file("b.bin");
    REQUIRE(run_proc("GREENGUARD_TRAIN_EPOCHS=2 " + q(kCli) + " --config " + q(config) +
                     " train --data " + q(data) + " --model-out " + q(from_env) + " --seed 3")
                .exit_code == 0);
    CHECK(epochs_of(from_env) == 2);

    const std::string from_flag = dir.file("c.bin");
    REQUIRE(run_proc("GREENGUARD_TRAIN_EPOCHS=2 " + q(kCli) + " --config " + q(config) +
                     " train --data " + q(data) + " --model-out " + q(from_flag) +
                     " --seed 3 --epochs 4")
                .exit_code == 0);
    CHECK(epochs_of(from_flag) == 4);
}

TEST_CASE("synthetic evaluation runs without any input files") {
    const auto r = run_proc(q(kCli) + " eval --synthetic --synthetic-benign 80" +
                            " --synthetic-attack 12 --epochs 5 --seed 7");
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(r.out.find("theta=") != std::string::npos);
    CHECK(r.out.find("detection_rate=") != std::string::npos);
    CHECK(r.out.find("benign_error_mean=") != std::string::npos);
    CHECK(r.out.find("attack_error_mean=") != std::string::npos);
    CHECK(r.out.find("mean_accuracy=") != std::string::npos);

    // Without the synthetic flag, eval insists on a model and data.
    CHECK(run_proc(q(kCli) + " eval").exit_code == 2);
}

TEST_CASE("hub service and sensor agent talk over the loopback") {
    TempDir dir;

    // A quickly trained model with its normalization baked in.
    const std::string data = dir.file("sample.csv");
    write_sample_csv(data, 5);
    const std::string model = dir.file("hub.bin");
    REQUIRE(run_proc(q(kCli) + " train --data " + q(data) + " --model-out " + q(model) +
                     " --epochs 4 --seed 3")
                .exit_code == 0);

    const std::string pcap = dir.file("replay.pcap");
    std::vector<std::string> records;
    for (int i = 0; i < 3; ++i) {
        records.push_back(testpcap::tcp_packet(0.1 * i, testpcap::ip(10, 0, 0, 2),
                                               static_cast<std::uint16_t>(42000 + i),
                                               testpcap::ip(10, 0, 1, 1), 1883, 0x18, 64, 16));
    }
    testpcap::write_file(pcap, testpcap::make_pcap(records));

    const std::string serve_out = dir.file("serve.out");
    const std::string alerts = dir.file("alerts.log");
    const std::string launch = q(kCli) + " idh-serve --model " + q(model) +
                               " --listen 127.0.0.1:0 --alerts " + q(alerts) +
                               " --theta 0.95 --max-seconds 15 > " + q(serve_out) +
                               " 2>&1 &";
    REQUIRE(std::system(launch.c_str()) == 0);
    REQUIRE_MESSAGE(wait_for_contents(serve_out, "ready=1", 10.0), slurp(serve_out));

    const std::string banner = slurp(serve_out);
    const std::size_t at = banner.find("listen=127.0.0.1:");
    REQUIRE(at != std::string::npos);
    const std::string port =
        banner.substr(at + 17, banner.find('\n', at) - (at + 17));
    REQUIRE(!port.empty());

    const auto agent = run_proc(q(kCli) + " sm-agent --pcap " + q(pcap) +
                                " --hub 127.0.0.1:" + port + " --norm " + q(model + ".norm") +
                                " --heartbeat 0.05 --ack-wait 3");
    REQUIRE_MESSAGE(agent.exit_code == 0, agent.err);
    CHECK(agent.out.find("packets_decoded=3\n") != std::string::npos);
    CHECK(agent.out.find("flows_sent=3\n") != std::string::npos);
    CHECK(agent.out.find("acks_received=3\n") != std::string::npos);
    CHECK(agent.out.find("kept.MQTT=3\n") != std::string::npos);

    // The service prints its final counters when the time box expires.
    REQUIRE_MESSAGE(wait_for_contents(serve_out, "frames_total=", 20.0), slurp(serve_out));
    const std::string final_status = slurp(serve_out);
    CHECK(final_status.find("frames_total=3") != std::string::npos);
    CHECK(final_status.find("sensor.1.frames=3") != std::string::npos);
}

TEST_CASE("sensor agent gives up on a dead hub with exit one") {
    TempDir dir;
    const std::string pcap = dir.file("one.pcap");
    testpcap::write_file(
        pcap, testpcap::make_pcap({testpcap::tcp_packet(0.0, testpcap::ip(10, 0, 0, 2), 42000,
                                                        testpcap::ip(10, 0, 1, 1), 1883, 0x18,
                                                        64, 16)}));
    const auto r = run_proc(q(kCli) + " sm-agent --pcap " + q(pcap) +
                            " --hub 127.0.0.1:1 --max-retries 2 --backoff-base 0.01");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("error: hub at 127.0.0.1:1 unreachable") != std::string::npos);
}

TEST_CASE("malformed service addresses are rejected") {
    TempDir dir;
    const std::string data = dir.file("sample.csv");
    write_sample_csv(data, 5);
    const std::string model = dir.file("m.bin");
    REQUIRE(run_proc(q(kCli) + " train --data " + q(data) + " --model-out " + q(model) +
                     " --epochs 2 --seed 3")
                .exit_code == 0);
    const auto r = run_proc(q(kCli) + " idh-serve --model " + q(model) + " --listen nocolon");
    CHECK(r.exit_code == 1);
    CHECK(r.err.rfind("error: ", 0) == 0);
}

// greenguard: zero-trust IoT network monitoring toolkit.
//
// One binary, eight subcommands: extract features from captures, train and
// calibrate the anomaly detector, evaluate it, classify rows, run the
// sensor agent and the detection hub, and account for energy use.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "greenguard/agent.hpp"
#include "greenguard/autoenc.hpp"
#include "greenguard/benchdata.hpp"
#include "greenguard/datasets.hpp"
#include "greenguard/detector.hpp"
#include "greenguard/flowmeter.hpp"
#include "greenguard/greenmetrics.hpp"
#include "greenguard/ioutil.hpp"
#include "greenguard/rng.hpp"
#include "greenguard/smfilter.hpp"
#include "greenguard/wire.hpp"

namespace gg = greenguard;

namespace {

// Benign rows of the (optionally outlier-filtered) training side, carved
// into autoencoder fit rows and a held-out validation quarter, plus every
// attack row for threshold calibration. train, calibrate, and eval all
// derive the same carve from the same seed.
struct TrainCarve {
    std::vector<gg::FeatureVector> fit_rows;
    std::vector<gg::FeatureVector> val_benign;
    std::vector<gg::FeatureVector> val_attack;
};

TrainCarve carve_training(const gg::LabeledDataset& train_side, bool filter_outliers,
                          std::uint64_t seed) {
    const gg::LabeledDataset clean =
        filter_outliers ? gg::filter_outliers(train_side) : train_side;
    gg::LabeledDataset benign;
    benign.feature_names = clean.feature_names;
    TrainCarve carve;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (clean.labels[i] == gg::AttackClass::Benign) {
            benign.rows.push_back(clean.rows[i]);
            benign.labels.push_back(gg::AttackClass::Benign);
        } else {
            carve.val_attack.push_back(clean.rows[i]);
        }
    }
    if (benign.size() < 2) {
        throw std::runtime_error("training side has fewer than 2 benign rows");
    }
    const auto [fit, val] = gg::split(benign, 0.75, gg::Rng::derive_seed(seed, 100));
    carve.fit_rows = fit.rows;
    carve.val_benign = val.rows;
    return carve;
}

gg::MonitorConfig build_monitor(const std::string& rules_path,
                                const std::vector<std::string>& cidrs, bool promiscuous) {
    gg::MonitorConfig cfg;
    cfg.rules = rules_path.empty() ? gg::default_rules() : gg::load_rules(rules_path);
    for (const auto& text : cidrs) cfg.monitored_cidrs.push_back(gg::parse_cidr(text));
    cfg.promiscuous = promiscuous;
    return cfg;
}

std::pair<std::string, std::uint16_t> parse_host_port(const std::string& text) {
    const std::size_t colon = text.rfind(':');
    if (colon == std::string::npos || colon + 1 == text.size()) {
        throw std::invalid_argument("expected host:port, got " + text);
    }
    const unsigned long port = std::stoul(text.substr(colon + 1));
    if (port > 65535) throw std::invalid_argument("port out of range in " + text);
    return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

double resolve_threshold(const gg::AutoencoderModel& model, double flag_value,
                         bool flag_given) {
    if (flag_given) return flag_value;
    if (model.threshold) return *model.threshold;
    return 0.15;
}

std::string history_csv(const gg::TrainHistory& history) {
    std::ostringstream out;
    out << "epoch,train_mse" << (history.val_loss.empty() ? "" : ",val_mse") << '\n';
    for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
        out << (i + 1) << ',' << gg::fmt_double(history.train_loss[i]);
        if (!history.val_loss.empty()) out << ',' << gg::fmt_double(history.val_loss[i]);
        out << '\n';
    }
    return out.str();
}

std::string leaderboard_csv(const std::vector<gg::TrialResult>& board) {
    std::ostringstream out;
    out << "rank,trial,val_mse,params,arch,learning_rate,epochs,batch_size\n";
    for (std::size_t i = 0; i < board.size(); ++i) {
        const gg::TrialResult& r = board[i];
        out << (i + 1) << ',' << r.trial_index << ',' << gg::fmt_double(r.val_mse) << ','
            << r.param_count << ',' << r.hp.spec.to_string() << ','
            << gg::fmt_double(r.hp.learning_rate) << ',' << r.hp.epochs << ','
            << r.hp.batch_size << '\n';
    }
    return out.str();
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) out.push_back(std::stod(part));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) out.push_back(std::stoul(part));
    return out;
}

volatile std::sig_atomic_t g_stop_requested = 0;
volatile std::sig_atomic_t g_status_requested = 0;

void handle_stop(int) { g_stop_requested = 1; }
void handle_status(int) { g_status_requested = 1; }

// ---- extract ----------------------------------------------------------

struct ExtractOpts {
    std::string pcap;
    std::string rules;
    std::string out;
    std::vector<std::string> monitored;
    double timeout = 60.0;
    bool promiscuous = true;
    std::string label = "Benign";
};

int run_extract(const ExtractOpts& o) {
    const gg::MonitorConfig monitor = build_monitor(o.rules, o.monitored, o.promiscuous);
    const std::vector<gg::PacketMeta> packets = gg::read_pcap(o.pcap);
    const auto [kept, filter_stats] = gg::filter_stream(packets, monitor);
    gg::AssemblyStats assembly;
    const std::vector<gg::FlowRecord> flows = gg::assemble_flows(kept, o.timeout, &assembly);

    const auto label = gg::parse_attack_class(o.label);
    if (!label) throw std::runtime_error("unknown label: " + o.label);
    gg::LabeledDataset ds;
    ds.feature_names = gg::feature_schema();
    for (const auto& flow : flows) {
        ds.rows.push_back(gg::extract_features(flow));
        ds.labels.push_back(*label);
    }
    gg::save_csv(ds, o.out);

    std::cout << "packets_decoded=" << packets.size() << '\n';
    std::cout << "packets_kept=" << filter_stats.kept << '\n';
    std::cout << "packets_dropped=" << filter_stats.dropped << '\n';
    for (const auto& [name, count] : filter_stats.kept_by_protocol) {
        std::cout << "kept." << name << '=' << count << '\n';
    }
    std::cout << "packets_skipped=" << assembly.packets_skipped << '\n';
    std::cout << "flows=" << flows.size() << '\n';
    std::cout << "out=" << o.out << '\n';
    return 0;
}

// ---- train ------------------------------------------------------------

struct TrainOpts {
    std::string data;
    std::string model_out;
    std::string history_out;
    std::string norm_out;
    std::string arch = gg::default_architecture().to_string();
    double learning_rate = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    double split_fraction = 0.75;
    bool no_filter = false;
    double shrink = 0.0;
    bool search = false;
    std::size_t trials = 10;
    std::string search_lrs = "0.01,0.05,0.1,0.3";
    std::string search_epochs;  // defaults to --epochs
    std::string search_batches = "16,32,64";
    std::string search_archs;  // defaults to --arch and its 20% shrink
    std::string leaderboard_out;
};

int run_train(const TrainOpts& o) {
    const gg::LabeledDataset ds = gg::load_csv(o.data, gg::feature_schema());
    const auto [train_side, test_side] = gg::split(ds, o.split_fraction, o.seed);
    const TrainCarve carve = carve_training(train_side, !o.no_filter, o.seed);

    const gg::NormalizationParams norm = gg::fit_normalizer(carve.fit_rows);
    const auto fit_rows = gg::apply_normalizer(norm, carve.fit_rows);
    const auto val_rows = gg::apply_normalizer(norm, carve.val_benign);

    gg::ArchitectureSpec arch = gg::parse_architecture(o.arch);
    if (o.shrink > 0.0) arch = gg::shrink_architecture(arch, o.shrink);

    gg::AutoencoderModel model;
    gg::TrainHistory history;
    if (o.search) {
        gg::HyperparamSpace space;
        space.learning_rates = parse_double_list(o.search_lrs);
        space.epoch_choices = o.search_epochs.empty() ? std::vector<std::size_t>{o.epochs}
                                                      : parse_size_list(o.search_epochs);
        space.batch_sizes = parse_size_list(o.search_batches);
        if (o.search_archs.empty()) {
            space.architectures = {arch, gg::shrink_architecture(arch, 0.20)};
        } else {
            std::istringstream in(o.search_archs);
            std::string part;
            while (std::getline(in, part, ',')) {
                space.architectures.push_back(gg::parse_architecture(part));
            }
        }
        const gg::SearchResult result =
            gg::random_search(space, o.trials, fit_rows, val_rows, o.seed);
        auto trained = gg::train(fit_rows, result.best, val_rows);
        model = std::move(trained.first);
        history = std::move(trained.second);
        const std::string board_path =
            o.leaderboard_out.empty() ? o.model_out + ".leaderboard.csv" : o.leaderboard_out;
        gg::atomic_write(board_path, leaderboard_csv(result.leaderboard));
        std::cout << "trials=" << o.trials << '\n';
        std::cout << "best_arch=" << result.best.spec.to_string() << '\n';
        std::cout << "best_lr=" << gg::fmt_double(result.best.learning_rate) << '\n';
        std::cout << "best_epochs=" << result.best.epochs << '\n';
        std::cout << "best_batch=" << result.best.batch_size << '\n';
        std::cout << "leaderboard=" << board_path << '\n';
    } else {
        gg::Hyperparams hp;
        hp.learning_rate = o.learning_rate;
        hp.epochs = o.epochs;
        hp.batch_size = o.batch_size;
        hp.spec = arch;
        hp.seed = o.seed;
        auto trained = gg::train(fit_rows, hp, val_rows);
        model = std::move(trained.first);
        history = std::move(trained.second);
    }

    model.feature_names = gg::feature_schema();
    model.normalization = norm;
    gg::save_model(model, o.model_out);
    const std::string norm_path = o.norm_out.empty() ? o.model_out + ".norm" : o.norm_out;
    gg::save_normalizer(norm_path, gg::feature_schema(), norm);
    const std::string hist_path =
        o.history_out.empty() ? o.model_out + ".history.csv" : o.history_out;
    gg::atomic_write(hist_path, history_csv(history));

    std::cout << "rows=" << ds.size() << '\n';
    std::cout << "train_rows=" << train_side.size() << '\n';
    std::cout << "test_rows=" << test_side.size() << '\n';
    std::cout << "fit_rows=" << fit_rows.size() << '\n';
    std::cout << "val_rows=" << val_rows.size() << '\n';
    std::cout << "arch=" << model.spec.to_string() << '\n';
    std::cout << "params=" << model.spec.param_count() << '\n';
    std::cout << "final_train_mse=" << gg::fmt_double(history.train_loss.back()) << '\n';
    if (!history.val_loss.empty()) {
        std::cout << "final_val_mse=" << gg::fmt_double(history.val_loss.back()) << '\n';
    }
    std::cout << "model=" << o.model_out << '\n';
    std::cout << "norm=" << norm_path << '\n';
    std::cout << "history=" << hist_path << '\n';
    return 0;
}

// ---- calibrate --------------------------------------------------------

struct CalibrateOpts {
    std::string model;
    std::string data;
    std::string model_out;
    std::string sweep_out;
    std::string metric = "mse";
    double split_fraction = 0.75;
    std::uint64_t seed = 1;
    bool no_filter = false;
};

int run_calibrate(const CalibrateOpts& o) {
    gg::AutoencoderModel model = gg::load_model(o.model);
    const auto metric = gg::parse_error_metric(o.metric);
    if (!metric) throw std::runtime_error("unknown metric: " + o.metric);

    const gg::LabeledDataset ds = gg::load_csv(o.data, gg::feature_schema());
    const auto [train_side, test_side] = gg::split(ds, o.split_fraction, o.seed);
    const TrainCarve carve = carve_training(train_side, !o.no_filter, o.seed);
    const auto val_benign = gg::apply_normalizer(model.normalization, carve.val_benign);
    const auto val_attack = gg::apply_normalizer(model.normalization, carve.val_attack);

    const gg::CalibrationResult result =
        gg::calibrate_threshold(model, val_benign, val_attack, {}, *metric);
    model.threshold = result.theta_star;
    model.threshold_metric = *metric;
    const std::string out_path = o.model_out.empty() ? o.model : o.model_out;
    gg::save_model(model, out_path);
    const std::string sweep_path =
        o.sweep_out.empty() ? out_path + ".sweep.csv" : o.sweep_out;
    gg::atomic_write(sweep_path, gg::sweep_to_csv(result.table));

    std::cout << "theta=" << gg::fmt_double(result.theta_star) << '\n';
    std::cout << "metric=" << gg::to_string(*metric) << '\n';
    std::cout << "val_benign=" << val_benign.size() << '\n';
    std::cout << "val_attack=" << val_attack.size() << '\n';
    std::cout << "sweep=" << sweep_path << '\n';
    std::cout << "model=" << out_path << '\n';
    return 0;
}

// ---- eval -------------------------------------------------------------

struct EvalOpts {
    std::string model;
    std::string data;
    std::string on = "test";
    std::string metric;
    std::string report_out;
    double split_fraction = 0.75;
    std::uint64_t seed = 1;
    double theta = 0.15;
    bool theta_given = false;
    bool synthetic = false;
    std::size_t synthetic_benign = 3000;
    std::size_t synthetic_attack = 300;
    std::size_t epochs = 50;
};

void print_report(const gg::EvalReport& report) {
    std::cout << gg::to_table(report);
    std::cout << gg::to_kv(report);
}

int run_eval(const EvalOpts& o) {
    if (o.synthetic) {
        gg::SyntheticSpec spec;
        spec.benign_rows = o.synthetic_benign;
        spec.attack_rows_per_class = o.synthetic_attack;
        spec.seed = o.seed;
        gg::Hyperparams hp;
        hp.learning_rate = 0.1;
        hp.epochs = o.epochs;
        hp.batch_size = 32;
        hp.seed = o.seed;
        const gg::BenchmarkResult result = gg::run_synthetic_benchmark(spec, hp);
        print_report(result.report);
        std::cout << "theta=" << gg::fmt_double(result.theta_star) << '\n';
        std::cout << "detection_rate=" << gg::fmt_double(result.detection_rate) << '\n';
        std::cout << "benign_error_mean=" << gg::fmt_double(result.benign_error_mean) << '\n';
        std::cout << "attack_error_mean=" << gg::fmt_double(result.attack_error_mean) << '\n';
        if (!o.report_out.empty()) gg::atomic_write(o.report_out, gg::to_kv(result.report));
        return 0;
    }

    const gg::AutoencoderModel model = gg::load_model(o.model);
    gg::DetectorConfig cfg;
    cfg.threshold = resolve_threshold(model, o.theta, o.theta_given);
    cfg.metric = o.metric.empty()
                     ? model.threshold_metric
                     : gg::parse_error_metric(o.metric).value_or(gg::ErrorMetric::MSE);
    cfg.validate();

    const gg::LabeledDataset ds = gg::load_csv(o.data, gg::feature_schema());
    gg::LabeledDataset chosen;
    if (o.on == "all") {
        chosen = ds;
    } else {
        auto [train_side, test_side] = gg::split(ds, o.split_fraction, o.seed);
        if (o.on == "train") {
            chosen = std::move(train_side);
        } else if (o.on == "test") {
            chosen = std::move(test_side);
        } else {
            throw std::runtime_error("--on must be train, test, or all");
        }
    }
    chosen.rows = gg::apply_normalizer(model.normalization, chosen.rows);
    const gg::EvalReport report = gg::evaluate(model, cfg, chosen);
    std::cout << "theta=" << gg::fmt_double(cfg.threshold) << '\n';
    std::cout << "metric=" << gg::to_string(cfg.metric) << '\n';
    std::cout << "on=" << o.on << '\n';
    print_report(report);
    if (!o.report_out.empty()) gg::atomic_write(o.report_out, gg::to_kv(report));
    return 0;
}

// ---- detect -----------------------------------------------------------

struct DetectOpts {
    std::string model;
    std::string input;
    std::string metric;
    double theta = 0.15;
    bool theta_given = false;
    bool pre_normalized = false;
};

int run_detect(const DetectOpts& o) {
    const gg::AutoencoderModel model = gg::load_model(o.model);
    gg::DetectorConfig cfg;
    cfg.threshold = resolve_threshold(model, o.theta, o.theta_given);
    cfg.metric = o.metric.empty()
                     ? model.threshold_metric
                     : gg::parse_error_metric(o.metric).value_or(gg::ErrorMetric::MSE);
    cfg.validate();

    const auto rows = gg::load_feature_csv(o.input, gg::feature_schema());
    std::size_t zero_days = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const gg::FeatureVector x =
            o.pre_normalized ? rows[i] : gg::apply_normalizer(model.normalization, rows[i]);
        const gg::DetectionVerdict v = gg::classify(model, cfg, x);
        if (v.decision == gg::Decision::ZeroDay) ++zero_days;
        std::cout << "row=" << (i + 1) << " error=" << gg::fmt_double(v.error)
                  << " theta=" << gg::fmt_double(v.threshold)
                  << " decision=" << gg::to_string(v.decision) << '\n';
    }
    std::cout << "rows=" << rows.size() << '\n';
    std::cout << "zero_days=" << zero_days << '\n';
    return 0;
}

// ---- sm-agent ---------------------------------------------------------

struct AgentOpts {
    std::string pcap;
    std::string hub = "127.0.0.1:7700";
    std::string rules;
    std::string norm;
    std::vector<std::string> monitored;
    std::uint32_t sensor_id = 1;
    double timeout = 60.0;
    double heartbeat = 5.0;
    double backoff_base = 1.0;
    double backoff_cap = 60.0;
    std::size_t max_retries = 5;
    double ack_wait = 5.0;
    bool promiscuous = true;
};

int run_agent(const AgentOpts& o) {
    gg::SensorConfig cfg;
    cfg.sensor_id = o.sensor_id;
    std::tie(cfg.hub_host, cfg.hub_port) = parse_host_port(o.hub);
    cfg.monitor = build_monitor(o.rules, o.monitored, o.promiscuous);
    if (!o.norm.empty()) {
        const auto [names, params] = gg::load_normalizer(o.norm);
        cfg.normalization = params;
    }
    cfg.idle_timeout = o.timeout;
    cfg.heartbeat_interval_s = o.heartbeat;
    cfg.backoff_base_s = o.backoff_base;
    cfg.backoff_cap_s = o.backoff_cap;
    cfg.max_connect_attempts = o.max_retries;
    cfg.ack_wait_s = o.ack_wait;

    const gg::SensorStats stats = gg::run_sensor(o.pcap, cfg);
    std::cout << "packets_decoded=" << stats.packets_decoded << '\n';
    std::cout << "packets_kept=" << stats.packets_kept << '\n';
    std::cout << "flows_sent=" << stats.flows_sent << '\n';
    std::cout << "heartbeats_sent=" << stats.heartbeats_sent << '\n';
    std::cout << "acks_received=" << stats.acks_received << '\n';
    std::cout << "reconnects=" << stats.reconnects << '\n';
    for (const auto& [name, count] : stats.filter.kept_by_protocol) {
        std::cout << "kept." << name << '=' << count << '\n';
    }
    return 0;
}

// ---- idh-serve --------------------------------------------------------

struct ServeOpts {
    std::string listen = "127.0.0.1:7700";
    std::string model;
    std::string alerts = "alerts.log";
    std::string metric;
    double theta = 0.15;
    bool theta_given = false;
    bool verbose_alerts = false;
    double max_seconds = 0.0;  // 0 = run until a stop signal
};

int run_serve(const ServeOpts& o) {
    gg::AutoencoderModel model = gg::load_model(o.model);
    gg::DetectorConfig detector;
    detector.threshold = resolve_threshold(model, o.theta, o.theta_given);
    detector.metric = o.metric.empty()
                          ? model.threshold_metric
                          : gg::parse_error_metric(o.metric).value_or(gg::ErrorMetric::MSE);
    detector.validate();

    gg::HubConfig cfg;
    std::tie(cfg.bind_address, cfg.port) = parse_host_port(o.listen);
    cfg.alert_path = o.alerts;
    cfg.verbose_alerts = o.verbose_alerts;

    gg::Hub hub(std::move(model), detector, cfg);
    hub.start();
    std::cout << "listen=" << cfg.bind_address << ':' << hub.port() << '\n';
    std::cout << "theta=" << gg::fmt_double(detector.threshold) << '\n';
    std::cout << "alerts=" << cfg.alert_path << '\n';
    std::cout << "ready=1" << std::endl;

    std::signal(SIGINT, handle_stop);
    std::signal(SIGTERM, handle_stop);
    std::signal(SIGUSR1, handle_status);
    const auto started = std::chrono::steady_clock::now();
    while (!g_stop_requested) {
        if (g_status_requested) {
            g_status_requested = 0;
            std::cout << hub.status_text() << std::flush;
        }
        if (o.max_seconds > 0.0) {
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - started;
            if (elapsed.count() >= o.max_seconds) break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    hub.stop();
    std::cout << hub.status_text() << std::flush;
    return 0;
}

// ---- green-report -----------------------------------------------------

struct GreenOpts {
    double duration = 0.0;
    std::uint64_t frames = 0;
    std::string profile_path;
    std::string baseline_path;
    double watts = 7.5;
    double intensity = 475.0;
    std::string device_name = "edge-hub";
    double baseline_watts = 750.0;
    double baseline_intensity = 475.0;
    std::string baseline_name = "server";
    std::string kv_out;
};

int run_green(const GreenOpts& o) {
    gg::PowerProfile device{o.device_name, o.watts, o.intensity};
    gg::PowerProfile baseline{o.baseline_name, o.baseline_watts, o.baseline_intensity};
    if (!o.profile_path.empty()) device = gg::load_profile(o.profile_path);
    if (!o.baseline_path.empty()) baseline = gg::load_profile(o.baseline_path);
    const gg::GreenReport report = gg::run_report(o.duration, o.frames, device, baseline);
    std::cout << gg::to_text(report);
    if (!o.kv_out.empty()) gg::atomic_write(o.kv_out, gg::to_kv(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-trust IoT network monitoring toolkit"};
    app.set_version_flag("--version", "greenguard 1.0.0");
    app.set_config("--config", "", "key=value config file with [subcommand] sections");
    app.require_subcommand(1);

    ExtractOpts extract_opts;
    auto* extract = app.add_subcommand("extract", "Filter a capture and write flow features");
    extract->add_option("--pcap", extract_opts.pcap, "capture file, or - for standard input")
        ->required()
        ->envname("GREENGUARD_EXTRACT_PCAP");
    extract->add_option("--rules", extract_opts.rules, "protocol rule file (default: built-in)")
        ->envname("GREENGUARD_EXTRACT_RULES");
    extract->add_option("--out", extract_opts.out, "feature CSV to write")
        ->required()
        ->envname("GREENGUARD_EXTRACT_OUT");
    extract->add_option("--monitored", extract_opts.monitored,
                        "monitored CIDR prefix (repeatable)");
    extract->add_option("--timeout", extract_opts.timeout, "flow idle timeout in seconds")
        ->envname("GREENGUARD_EXTRACT_TIMEOUT");
    extract->add_option("--label", extract_opts.label, "class label for the extracted rows")
        ->envname("GREENGUARD_EXTRACT_LABEL");
    extract->add_flag("!--no-promiscuous", extract_opts.promiscuous,
                      "do not count non-matching packets");
    extract->callback([&] { run_extract(extract_opts); });

    TrainOpts train_opts;
    auto* train = app.add_subcommand("train", "Train the anomaly detector on benign flows");
    train->add_option("--data", train_opts.data, "labeled feature CSV")
        ->required()
        ->envname("GREENGUARD_TRAIN_DATA");
    train->add_option("--model-out", train_opts.model_out, "model file to write")
        ->required()
        ->envname("GREENGUARD_TRAIN_MODEL_OUT");
    train->add_option("--arch", train_opts.arch, "dash-separated layer widths")
        ->envname("GREENGUARD_TRAIN_ARCH");
    train->add_option("--lr", train_opts.learning_rate, "learning rate")
        ->envname("GREENGUARD_TRAIN_LR");
    train->add_option("--epochs", train_opts.epochs, "training epochs")
        ->envname("GREENGUARD_TRAIN_EPOCHS");
    train->add_option("--batch", train_opts.batch_size, "mini-batch size")
        ->envname("GREENGUARD_TRAIN_BATCH");
    train->add_option("--seed", train_opts.seed, "random seed")
        ->envname("GREENGUARD_TRAIN_SEED");
    train->add_option("--split", train_opts.split_fraction, "training split fraction")
        ->envname("GREENGUARD_TRAIN_SPLIT");
    train->add_flag("--no-filter", train_opts.no_filter, "skip benign outlier filtering");
    train->add_option("--shrink", train_opts.shrink, "shrink hidden widths by this fraction");
    train->add_option("--history-out", train_opts.history_out, "loss history CSV path");
    train->add_option("--norm-out", train_opts.norm_out, "normalization sidecar path");
    train->add_flag("--search", train_opts.search, "random hyperparameter search");
    train->add_option("--trials", train_opts.trials, "search trial count");
    train->add_option("--search-lrs", train_opts.search_lrs, "candidate learning rates");
    train->add_option("--search-epochs", train_opts.search_epochs, "candidate epoch counts");
    train->add_option("--search-batches", train_opts.search_batches, "candidate batch sizes");
    train->add_option("--search-archs", train_opts.search_archs,
                      "candidate architectures, comma separated");
    train->add_option("--leaderboard-out", train_opts.leaderboard_out, "leaderboard CSV path");
    train->callback([&] { run_train(train_opts); });

    CalibrateOpts cal_opts;
    auto* calibrate = app.add_subcommand("calibrate", "Sweep the detection threshold");
    calibrate->add_option("--model", cal_opts.model, "trained model file")
        ->required()
        ->envname("GREENGUARD_CALIBRATE_MODEL");
    calibrate->add_option("--data", cal_opts.data, "labeled feature CSV")
        ->required()
        ->envname("GREENGUARD_CALIBRATE_DATA");
    calibrate->add_option("--model-out", cal_opts.model_out,
                          "where to write the calibrated model (default: in place)");
    calibrate->add_option("--sweep-out", cal_opts.sweep_out, "sweep table CSV path");
    calibrate->add_option("--metric", cal_opts.metric, "error metric: mse or mae")
        ->envname("GREENGUARD_CALIBRATE_METRIC");
    calibrate->add_option("--split", cal_opts.split_fraction, "training split fraction");
    calibrate->add_option("--seed", cal_opts.seed, "split seed (must match training)")
        ->envname("GREENGUARD_CALIBRATE_SEED");
    calibrate->add_flag("--no-filter", cal_opts.no_filter, "skip benign outlier filtering");
    calibrate->callback([&] { run_calibrate(cal_opts); });

    EvalOpts eval_opts;
    auto* eval = app.add_subcommand("eval", "Score detection accuracy per attack class");
    eval->add_option("--model", eval_opts.model, "trained model file")
        ->envname("GREENGUARD_EVAL_MODEL");
    eval->add_option("--data", eval_opts.data, "labeled feature CSV")
        ->envname("GREENGUARD_EVAL_DATA");
    eval->add_option("--on", eval_opts.on, "evaluate on: train, test, or all")
        ->envname("GREENGUARD_EVAL_ON");
    eval->add_option("--split", eval_opts.split_fraction, "training split fraction");
    eval->add_option("--seed", eval_opts.seed, "split seed (must match training)")
        ->envname("GREENGUARD_EVAL_SEED");
    eval->add_option("--theta", eval_opts.theta, "detection threshold override")
        ->envname("GREENGUARD_EVAL_THETA");
    eval->add_option("--metric", eval_opts.metric, "error metric: mse or mae");
    eval->add_option("--report-out", eval_opts.report_out, "key=value report path");
    eval->add_flag("--synthetic", eval_opts.synthetic,
                   "run the built-in synthetic benchmark end to end");
    eval->add_option("--synthetic-benign", eval_opts.synthetic_benign,
                     "benign rows for the synthetic benchmark");
    eval->add_option("--synthetic-attack", eval_opts.synthetic_attack,
                     "attack rows per class for the synthetic benchmark");
    eval->add_option("--epochs", eval_opts.epochs, "training epochs for the synthetic benchmark");
    eval->callback([&] {
        eval_opts.theta_given = eval->count("--theta") > 0;
        if (!eval_opts.synthetic && (eval_opts.model.empty() || eval_opts.data.empty())) {
            throw CLI::ValidationError("eval", "--model and --data are required without --synthetic");
        }
        run_eval(eval_opts);
    });

    DetectOpts detect_opts;
    auto* detect = app.add_subcommand("detect", "Classify feature rows from a CSV");
    detect->add_option("--model", detect_opts.model, "trained model file")
        ->required()
        ->envname("GREENGUARD_DETECT_MODEL");
    detect->add_option("--input", detect_opts.input, "feature CSV (label column optional)")
        ->required()
        ->envname("GREENGUARD_DETECT_INPUT");
    detect->add_option("--theta", detect_opts.theta, "detection threshold override")
        ->envname("GREENGUARD_DETECT_THETA");
    detect->add_option("--metric", detect_opts.metric, "error metric: mse or mae");
    detect->add_flag("--pre-normalized", detect_opts.pre_normalized,
                     "rows are already normalized");
    detect->callback([&] {
        detect_opts.theta_given = detect->count("--theta") > 0;
        run_detect(detect_opts);
    });

    AgentOpts agent_opts;
    auto* agent = app.add_subcommand("sm-agent", "Replay a capture into the detection hub");
    agent->add_option("--pcap", agent_opts.pcap, "capture file, or - for standard input")
        ->required()
        ->envname("GREENGUARD_SM_AGENT_PCAP");
    agent->add_option("--hub", agent_opts.hub, "hub address as host:port")
        ->envname("GREENGUARD_SM_AGENT_HUB");
    agent->add_option("--sensor-id", agent_opts.sensor_id, "numeric sensor identity")
        ->envname("GREENGUARD_SM_AGENT_SENSOR_ID");
    agent->add_option("--rules", agent_opts.rules, "protocol rule file (default: built-in)")
        ->envname("GREENGUARD_SM_AGENT_RULES");
    agent->add_option("--norm", agent_opts.norm, "normalization sidecar from training")
        ->envname("GREENGUARD_SM_AGENT_NORM");
    agent->add_option("--monitored", agent_opts.monitored, "monitored CIDR prefix (repeatable)");
    agent->add_option("--timeout", agent_opts.timeout, "flow idle timeout in seconds");
    agent->add_option("--heartbeat", agent_opts.heartbeat, "heartbeat interval in seconds");
    agent->add_option("--backoff-base", agent_opts.backoff_base, "reconnect backoff base");
    agent->add_option("--backoff-cap", agent_opts.backoff_cap, "reconnect backoff cap");
    agent->add_option("--max-retries", agent_opts.max_retries, "connection attempts before giving up");
    agent->add_option("--ack-wait", agent_opts.ack_wait, "grace period for trailing acks");
    agent->add_flag("!--no-promiscuous", agent_opts.promiscuous,
                    "do not count non-matching packets");
    agent->callback([&] { run_agent(agent_opts); });

    ServeOpts serve_opts;
    auto* serve = app.add_subcommand("idh-serve", "Run the detection hub service");
    serve->add_option("--listen", serve_opts.listen, "bind address as host:port (port 0 = any)")
        ->envname("GREENGUARD_IDH_SERVE_LISTEN");
    serve->add_option("--model", serve_opts.model, "trained model file")
        ->required()
        ->envname("GREENGUARD_IDH_SERVE_MODEL");
    serve->add_option("--alerts", serve_opts.alerts, "append-only alert log path")
        ->envname("GREENGUARD_IDH_SERVE_ALERTS");
    serve->add_option("--theta", serve_opts.theta, "detection threshold override")
        ->envname("GREENGUARD_IDH_SERVE_THETA");
    serve->add_option("--metric", serve_opts.metric, "error metric: mse or mae");
    serve->add_flag("--verbose-alerts", serve_opts.verbose_alerts, "log normal verdicts too");
    serve->add_option("--max-seconds", serve_opts.max_seconds,
                      "shut down after this many seconds (0 = on signal)");
    serve->callback([&] {
        serve_opts.theta_given = serve->count("--theta") > 0;
        run_serve(serve_opts);
    });

    GreenOpts green_opts;
    auto* green = app.add_subcommand("green-report", "Energy and CO2 accounting for a run");
    green->add_option("--duration", green_opts.duration, "run duration in seconds")
        ->required()
        ->envname("GREENGUARD_GREEN_REPORT_DURATION");
    green->add_option("--frames", green_opts.frames, "frames processed during the run")
        ->envname("GREENGUARD_GREEN_REPORT_FRAMES");
    green->add_option("--profile", green_opts.profile_path, "device power profile file");
    green->add_option("--baseline-profile", green_opts.baseline_path,
                      "baseline power profile file");
    green->add_option("--watts", green_opts.watts, "device draw in watts");
    green->add_option("--intensity", green_opts.intensity, "grid carbon intensity in gCO2/kWh");
    green->add_option("--device-name", green_opts.device_name, "device label");
    green->add_option("--baseline-watts", green_opts.baseline_watts, "baseline draw in watts");
    green->add_option("--baseline-intensity", green_opts.baseline_intensity,
                      "baseline carbon intensity in gCO2/kWh");
    green->add_option("--baseline-name", green_opts.baseline_name, "baseline label");
    green->add_option("--kv-out", green_opts.kv_out, "key=value report path");
    green->callback([&] { run_green(green_opts); });

    // Layered configuration, weakest first: defaults, config file,
    // environment, flags. CLI11 applies config entries over environment
    // values, so environment overrides are promoted to synthetic trailing
    // flags unless the real flag is already present.
    std::vector<std::string> args(argv + 1, argv + argc);
    CLI::App* invoked = nullptr;
    for (const auto& token : args) {
        if (CLI::App* sub = app.get_subcommand_no_throw(token)) {
            invoked = sub;
            break;
        }
    }
    if (invoked != nullptr) {
        for (const CLI::Option* opt : invoked->get_options()) {
            const std::string env_name = opt->get_envname();
            if (env_name.empty() || opt->get_lnames().empty()) continue;
            const char* value = std::getenv(env_name.c_str());
            if (value == nullptr || *value == '\0') continue;
            bool given = false;
            for (const auto& token : args) {
                if (token.rfind("--", 0) != 0) continue;
                const std::string name = token.substr(2, token.find('=') - 2);
                for (const auto& lname : opt->get_lnames()) {
                    if (name == lname) given = true;
                }
            }
            if (!given) args.push_back("--" + opt->get_lnames().front() + "=" + value);
        }
    }
    std::reverse(args.begin(), args.end());  // the vector overload wants them reversed

    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include "greenguard/greenmetrics.hpp"

#include <cstdio>
#include <sstream>

#include "greenguard/ioutil.hpp"

namespace greenguard {

void PowerProfile::validate() const {
    if (!(watts > 0.0)) throw std::invalid_argument("wattage must be positive");
    if (!(carbon_intensity > 0.0)) {
        throw std::invalid_argument("carbon intensity must be positive");
    }
}

double energy_wh(double duration_s, const PowerProfile& profile) {
    profile.validate();
    if (duration_s < 0.0) throw NegativeDuration();
    return profile.watts * duration_s / 3600.0;
}

double co2_mg(double wh, double intensity) {
    if (wh < 0.0) throw std::invalid_argument("energy must be non-negative");
    return wh * intensity;
}

GreenReport run_report(double wall_clock_s, std::uint64_t frames_processed,
                       const PowerProfile& device, const PowerProfile& baseline) {
    GreenReport r;
    r.device_name = device.device_name;
    r.baseline_name = baseline.device_name;
    r.duration_s = wall_clock_s;
    r.frames = frames_processed;
    r.device_wh = energy_wh(wall_clock_s, device);
    r.device_co2_mg = co2_mg(r.device_wh, device.carbon_intensity);
    r.baseline_wh = energy_wh(wall_clock_s, baseline);
    r.baseline_co2_mg = co2_mg(r.baseline_wh, baseline.carbon_intensity);
    r.measured_ratio = r.device_co2_mg > 0.0 ? r.baseline_co2_mg / r.device_co2_mg : 0.0;
    if (frames_processed > 0) {
        r.wh_per_frame = r.device_wh / static_cast<double>(frames_processed);
    }
    return r;
}

std::string to_text(const GreenReport& report) {
    char buf[256];
    std::ostringstream out;
    std::snprintf(buf, sizeof buf,
                  "published reference: %.1f mgCO2 (edge hub) vs %.1f mgCO2 (server), %.1fx\n",
                  kReferenceEdgeCo2Mg, kReferenceServerCo2Mg,
                  kReferenceServerCo2Mg / kReferenceEdgeCo2Mg);
    out << buf;
    std::snprintf(buf, sizeof buf, "measured run: %.3f s, %llu frames\n", report.duration_s,
                  static_cast<unsigned long long>(report.frames));
    out << buf;
    std::snprintf(buf, sizeof buf, "%s: %.6f Wh, %.3f mgCO2\n", report.device_name.c_str(),
                  report.device_wh, report.device_co2_mg);
    out << buf;
    std::snprintf(buf, sizeof buf, "%s: %.6f Wh, %.3f mgCO2\n", report.baseline_name.c_str(),
                  report.baseline_wh, report.baseline_co2_mg);
    out << buf;
    std::snprintf(buf, sizeof buf, "measured ratio: %.1fx\n", report.measured_ratio);
    out << buf;
    if (report.wh_per_frame) {
        std::snprintf(buf, sizeof buf, "energy per frame: %.9f Wh\n", *report.wh_per_frame);
        out << buf;
    } else {
        out << "energy per frame: n/a (no frames processed)\n";
    }
    return out.str();
}

std::string to_kv(const GreenReport& report) {
    std::ostringstream out;
    out << "reference_edge_co2_mg=" << fmt_double(kReferenceEdgeCo2Mg) << '\n';
    out << "reference_server_co2_mg=" << fmt_double(kReferenceServerCo2Mg) << '\n';
    out << "reference_ratio=" << fmt_double(kReferenceServerCo2Mg / kReferenceEdgeCo2Mg) << '\n';
    out << "device=" << report.device_name << '\n';
    out << "baseline=" << report.baseline_name << '\n';
    out << "duration_s=" << fmt_double(report.duration_s) << '\n';
    out << "frames=" << report.frames << '\n';
    out << "device_wh=" << fmt_double(report.device_wh) << '\n';
    out << "device_co2_mg=" << fmt_double(report.device_co2_mg) << '\n';
    out << "baseline_wh=" << fmt_double(report.baseline_wh) << '\n';
    out << "baseline_co2_mg=" << fmt_double(report.baseline_co2_mg) << '\n';
    out << "measured_ratio=" << fmt_double(report.measured_ratio) << '\n';
    if (report.wh_per_frame) {
        out << "wh_per_frame=" << fmt_double(*report.wh_per_frame) << '\n';
    } else {
        out << "wh_per_frame=n/a\n";
    }
    return out.str();
}

PowerProfile load_profile(const std::string& path) {
    PowerProfile profile;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        std::string key;
        if (!(fields >> key)) continue;
        if (key == "name") {
            fields >> profile.device_name;
        } else if (key == "watts") {
            fields >> profile.watts;
        } else if (key == "carbon_intensity") {
            fields >> profile.carbon_intensity;
        } else {
            throw std::runtime_error("unknown profile key: " + key);
        }
    }
    profile.validate();
    return profile;
}

}  // namespace greenguard

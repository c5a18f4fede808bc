#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace greenguard {

struct PowerProfile {
    std::string device_name = "edge-hub";
    double watts = 7.5;
    double carbon_intensity = 475.0;  // gCO2 per kWh; a modeling default

    void validate() const;
};

struct NegativeDuration : std::invalid_argument {
    NegativeDuration() : std::invalid_argument("duration must be non-negative") {}
};

// Published reference comparison shipped with the tool: the deployment this
// design follows reported these per-run emissions for its edge hub versus a
// conventional server. Displayed verbatim in reports, never recomputed.
inline constexpr double kReferenceEdgeCo2Mg = 4.7;
inline constexpr double kReferenceServerCo2Mg = 725.9;

double energy_wh(double duration_s, const PowerProfile& profile);

// g/kWh equals mg/Wh, so watt-hours times intensity is already milligrams.
double co2_mg(double wh, double intensity);

struct GreenReport {
    std::string device_name;
    std::string baseline_name;
    double duration_s = 0.0;
    std::uint64_t frames = 0;
    double device_wh = 0.0;
    double device_co2_mg = 0.0;
    double baseline_wh = 0.0;
    double baseline_co2_mg = 0.0;
    double measured_ratio = 0.0;  // baseline CO2 / device CO2
    std::optional<double> wh_per_frame;  // unset when no frames ran
};

// Compares one measured run on the device profile against the same run on
// a baseline profile.
GreenReport run_report(double wall_clock_s, std::uint64_t frames_processed,
                       const PowerProfile& device, const PowerProfile& baseline);

std::string to_text(const GreenReport& report);
std::string to_kv(const GreenReport& report);

// Profile file: `name <text>`, `watts <number>`, `carbon_intensity <number>`.
PowerProfile load_profile(const std::string& path);

}  // namespace greenguard

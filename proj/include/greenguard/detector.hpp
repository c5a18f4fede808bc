#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "greenguard/autoenc.hpp"
#include "greenguard/datasets.hpp"

namespace greenguard {

// The threshold sweep the calibrator walks, inclusive of both ends.
struct SweepRange {
    double lo = 0.05;
    double hi = 0.95;
    double step = 0.05;

    void validate() const;
    std::vector<double> grid() const;
};

struct DetectorConfig {
    double threshold = 0.15;
    ErrorMetric metric = ErrorMetric::MSE;

    void validate() const;  // threshold must sit inside the sweep range
};

enum class Decision : std::uint8_t { Normal, ZeroDay };
const std::string& to_string(Decision d);

struct DetectionVerdict {
    Decision decision = Decision::Normal;
    double error = 0.0;
    double threshold = 0.0;
};

struct SweepPoint {
    double threshold = 0.0;
    double tpr = 0.0;  // attacks flagged
    double tnr = 0.0;  // benign passed
    double balanced_accuracy = 0.0;
};

struct CalibrationResult {
    double theta_star = 0.0;
    std::vector<SweepPoint> table;
};

struct EvalReport {
    std::map<AttackClass, double> per_class_accuracy;
    std::map<AttackClass, std::size_t> per_class_count;
    double mean_accuracy = 0.0;   // unweighted over classes present
    double worst_accuracy = 0.0;  // min over classes present
    double false_positive_rate = 0.0;
    // Confusion counts: actual benign/attack x decided normal/zero-day.
    std::size_t benign_normal = 0;
    std::size_t benign_zeroday = 0;
    std::size_t attack_normal = 0;
    std::size_t attack_zeroday = 0;

    std::size_t total() const {
        return benign_normal + benign_zeroday + attack_normal + attack_zeroday;
    }
};

struct EmptyValidationSet : std::invalid_argument {
    EmptyValidationSet() : std::invalid_argument("validation set is empty") {}
};
struct EmptyTestSet : std::invalid_argument {
    EmptyTestSet() : std::invalid_argument("test set is empty") {}
};

// Flags x as a zero-day iff its reconstruction error strictly exceeds the
// threshold. x must already be normalized with the model's parameters.
DetectionVerdict classify(const AutoencoderModel& model, const DetectorConfig& cfg,
                          const FeatureVector& x);

// Grid-search core over precomputed reconstruction errors: maximizes
// balanced accuracy (TPR + TNR) / 2; ties resolve to the smaller threshold.
CalibrationResult calibrate_from_errors(const std::vector<double>& benign_errors,
                                        const std::vector<double>& attack_errors,
                                        const SweepRange& sweep = {});

// Convenience wrapper that runs both row sets through the model first.
// Rows must already be normalized.
CalibrationResult calibrate_threshold(const AutoencoderModel& model,
                                      const std::vector<FeatureVector>& val_benign,
                                      const std::vector<FeatureVector>& val_attack,
                                      const SweepRange& sweep = {},
                                      ErrorMetric metric = ErrorMetric::MSE);

// Per-class detection accuracy on a labeled, already-normalized test set.
// Benign rows are correct when decided Normal, attack rows when decided
// ZeroDay.
EvalReport evaluate(const AutoencoderModel& model, const DetectorConfig& cfg,
                    const LabeledDataset& test);

std::string to_table(const EvalReport& report);
std::string to_kv(const EvalReport& report);
std::string sweep_to_csv(const std::vector<SweepPoint>& table);

}  // namespace greenguard

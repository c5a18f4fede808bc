#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "greenguard/features.hpp"

namespace greenguard {

// CICIoT2023 traffic categories: benign plus the seven attack families.
enum class AttackClass : std::uint8_t {
    Benign = 0,
    DDoS,
    DoS,
    Recon,
    WebBased,
    BruteForce,
    Spoofing,
    Mirai,
};

inline constexpr std::size_t kAttackClassCount = 8;

const std::string& to_string(AttackClass c);

// Case-insensitive on the canonical names; spaces, dashes and underscores are
// ignored, and dataset-style labels that extend a canonical name ("DDoS-ICMP_Flood",
// "BenignTraffic") resolve to their category.
std::optional<AttackClass> parse_attack_class(const std::string& label);

struct LabeledDataset {
    std::vector<std::string> feature_names;
    std::vector<FeatureVector> rows;
    std::vector<AttackClass> labels;

    std::size_t size() const { return rows.size(); }
    std::size_t dims() const { return feature_names.size(); }
};

// Per-feature min/max fitted on training rows.
struct NormalizationParams {
    std::vector<double> mins;
    std::vector<double> maxs;

    std::size_t dims() const { return mins.size(); }
};

struct MissingColumn : std::runtime_error {
    explicit MissingColumn(const std::string& name)
        : std::runtime_error("missing column: " + name), column(name) {}
    std::string column;
};

struct NonNumericCell : std::runtime_error {
    NonNumericCell(std::size_t row, const std::string& col)
        : std::runtime_error("non-numeric cell at data row " + std::to_string(row) +
                             ", column " + col),
          row(row),
          column(col) {}
    std::size_t row;  // 1-based data row index (header excluded)
    std::string column;
};

struct EmptyFile : std::runtime_error {
    explicit EmptyFile(const std::string& path) : std::runtime_error("empty file: " + path) {}
};

struct UnknownLabel : std::runtime_error {
    UnknownLabel(std::size_t row, const std::string& label)
        : std::runtime_error("unknown attack class '" + label + "' at data row " +
                             std::to_string(row)) {}
};

struct EmptyAfterFilter : std::runtime_error {
    EmptyAfterFilter() : std::runtime_error("outlier filter removed every benign row") {}
};

struct ClassTooSmall : std::runtime_error {
    explicit ClassTooSmall(AttackClass c)
        : std::runtime_error("class " + to_string(c) + " has fewer than 2 rows") {}
};

// Loads a labeled CSV. The header must contain every schema name plus the
// label column; extra columns are ignored and the output follows schema
// order, not file order. Column names are matched case-insensitively with
// spaces and dashes treated as underscores.
LabeledDataset load_csv(const std::string& path, const std::vector<std::string>& schema,
                        const std::string& label_column = "label");

// Same header handling, but the label column is optional; rows parse into
// bare feature vectors (for `detect` on unlabeled input).
std::vector<FeatureVector> load_feature_csv(const std::string& path,
                                            const std::vector<std::string>& schema);

// Writes a dataset as UTF-8 comma-separated text with a header row. Values
// carry enough digits to reload bit-exactly.
void save_csv(const LabeledDataset& ds, const std::string& path,
              const std::string& label_column = "label");

// Per-feature Tukey fencing computed over benign rows: a benign row is
// dropped when any feature falls outside [Q1 - k*IQR, Q3 + k*IQR]. Attack
// rows always survive. Fences are re-applied until a fixed point, making the
// filter idempotent. Quartiles use linear interpolation over the sorted
// sample.
LabeledDataset filter_outliers(const LabeledDataset& ds, double k = 1.5);

// Min-max parameters over the given rows (call with the rows the model will
// train on).
NormalizationParams fit_normalizer(const LabeledDataset& ds);
NormalizationParams fit_normalizer(const std::vector<FeatureVector>& rows);

// Maps each feature to [0,1] on the fit range; constant features map to 0.
FeatureVector apply_normalizer(const NormalizationParams& params, const FeatureVector& v);
std::vector<FeatureVector> apply_normalizer(const NormalizationParams& params,
                                            const std::vector<FeatureVector>& rows);

// Deterministic stratified split. Every class must have at least 2 rows;
// each class contributes at least one row to each side.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                double train_fraction, std::uint64_t seed);

// Normalization sidecar file, shipped to sensor agents so they scale
// features the same way the hub's model does.
void save_normalizer(const std::string& path, const std::vector<std::string>& names,
                     const NormalizationParams& params);
std::pair<std::vector<std::string>, NormalizationParams> load_normalizer(
    const std::string& path);

}  // namespace greenguard

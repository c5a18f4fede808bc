#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "greenguard/datasets.hpp"
#include "greenguard/features.hpp"

namespace greenguard {

enum class Activation : std::uint8_t { ReLU, Sigmoid, Identity };
const std::string& to_string(Activation a);

enum class ErrorMetric : std::uint8_t { MSE, MAE };
const std::string& to_string(ErrorMetric m);
std::optional<ErrorMetric> parse_error_metric(const std::string& name);

struct LayerSpec {
    std::size_t width = 1;
    Activation activation = Activation::ReLU;

    bool operator==(const LayerSpec&) const = default;
};

// Encoder narrows input_dim down to the bottleneck (its last layer);
// the decoder widens back out and must end at input_dim.
struct ArchitectureSpec {
    std::size_t input_dim = kFeatureCount;
    std::vector<LayerSpec> encoder_layers;
    std::vector<LayerSpec> decoder_layers;

    void validate() const;  // throws std::invalid_argument on a bad chain
    std::size_t param_count() const;
    std::string to_string() const;  // e.g. "28-24-16-8-16-24-28"
    bool operator==(const ArchitectureSpec&) const = default;
};

// The stock topology used when hyperparameter search is skipped.
ArchitectureSpec default_architecture();

// Parses a dash-separated width list such as "28-24-16-8-16-24-28". The
// first and last entries are the input/output width; the narrowest inner
// entry marks the bottleneck. Hidden layers get ReLU, the output Sigmoid.
ArchitectureSpec parse_architecture(const std::string& text);

struct LayerParams {
    // Row-major weight matrix, out_width x in_width, then one bias per row.
    std::size_t in_width = 0;
    std::size_t out_width = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::ReLU;

    double& w(std::size_t r, std::size_t c) { return weights[r * in_width + c]; }
    double w(std::size_t r, std::size_t c) const { return weights[r * in_width + c]; }
};

struct AutoencoderModel {
    ArchitectureSpec spec;
    std::vector<LayerParams> layers;  // encoder layers then decoder layers
    std::vector<std::string> feature_names;
    NormalizationParams normalization;
    std::size_t trained_epochs = 0;
    std::optional<double> threshold;  // set once calibrated
    ErrorMetric threshold_metric = ErrorMetric::MSE;

    std::size_t input_dim() const { return spec.input_dim; }
    std::size_t code_dim() const;
};

struct Hyperparams {
    double learning_rate = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    ArchitectureSpec spec = default_architecture();
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;    // empty when no validation rows given
};

struct EmptyTrainingSet : std::invalid_argument {
    EmptyTrainingSet() : std::invalid_argument("training set is empty") {}
};
struct DivergedLoss : std::runtime_error {
    explicit DivergedLoss(std::size_t epoch)
        : std::runtime_error("loss became non-finite at epoch " + std::to_string(epoch)),
          epoch(epoch) {}
    std::size_t epoch;
};
struct EmptySpace : std::invalid_argument {
    EmptySpace() : std::invalid_argument("hyperparameter space has an empty dimension") {}
};
struct ModelBadMagic : std::runtime_error {
    ModelBadMagic() : std::runtime_error("not a model file (bad magic)") {}
};
struct ModelVersionMismatch : std::runtime_error {
    explicit ModelVersionMismatch(unsigned got)
        : std::runtime_error("unsupported model format version " + std::to_string(got)) {}
};
struct CorruptModel : std::runtime_error {
    explicit CorruptModel(const std::string& what)
        : std::runtime_error("corrupt model file: " + what) {}
};

// Fresh model with seeded uniform Glorot weights and zero biases.
AutoencoderModel init_model(const ArchitectureSpec& spec, std::uint64_t seed);

// Runs x through encoder and decoder; returns (code, reconstruction).
std::pair<std::vector<double>, FeatureVector> forward(const AutoencoderModel& model,
                                                      const FeatureVector& x);

// Mean squared / mean absolute error averaged over the d components.
double reconstruction_error(const FeatureVector& x, const FeatureVector& x_hat,
                            ErrorMetric metric);

// Reconstruction error of each row under the model.
std::vector<double> reconstruction_errors(const AutoencoderModel& model,
                                          const std::vector<FeatureVector>& rows,
                                          ErrorMetric metric);

// Mini-batch gradient descent on mean squared reconstruction error.
// Deterministic for a fixed seed: initialization and per-epoch shuffles
// come from one seeded generator. History has one loss entry per epoch,
// measured after that epoch's updates.
std::pair<AutoencoderModel, TrainHistory> train(const std::vector<FeatureVector>& train_rows,
                                                const Hyperparams& hp,
                                                const std::vector<FeatureVector>& val_rows = {});

// Flat parameter view in layer order, weights row-major then bias. Used by
// the finite-difference tests and the model file writer.
std::vector<double> flatten_params(const AutoencoderModel& model);
void unflatten_params(AutoencoderModel& model, const std::vector<double>& flat);

// Mean squared error over rows plus its gradient w.r.t. the flat
// parameter vector.
std::pair<double, std::vector<double>> loss_and_gradient(const AutoencoderModel& model,
                                                         const std::vector<FeatureVector>& rows);

// Candidate grids for random search; every dimension must be non-empty.
struct HyperparamSpace {
    std::vector<double> learning_rates;
    std::vector<std::size_t> epoch_choices;
    std::vector<std::size_t> batch_sizes;
    std::vector<ArchitectureSpec> architectures;
};

struct TrialResult {
    std::size_t trial_index = 0;
    Hyperparams hp;
    double val_mse = 0.0;  // +inf when training diverged
    std::size_t param_count = 0;
};

struct SearchResult {
    Hyperparams best;
    std::vector<TrialResult> leaderboard;  // ascending val_mse
};

// Samples `trials` configurations uniformly from the space, trains each on
// train_rows, ranks by validation MSE (ties: fewer parameters, then lower
// trial index). Deterministic for a fixed seed.
SearchResult random_search(const HyperparamSpace& space, std::size_t trials,
                           const std::vector<FeatureVector>& train_rows,
                           const std::vector<FeatureVector>& val_rows, std::uint64_t seed);

// Scales every hidden width to max(1, floor(width * (1 - fraction))).
// Input and output widths never change. With drop_widest_pair, the widest
// symmetric encoder/decoder layer pair is removed as well.
ArchitectureSpec shrink_architecture(const ArchitectureSpec& spec, double fraction = 0.20,
                                     bool drop_widest_pair = false);

// Binary model container with a checksum; parameters round-trip bit-exact.
void save_model(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_model(const std::string& path);

}  // namespace greenguard

#include "greenguard/benchdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "greenguard/rng.hpp"

namespace greenguard {

LabeledDataset synthetic_benchmark(const SyntheticSpec& spec) {
    if (spec.benign_rows < 2 || spec.attack_rows_per_class < 2) {
        throw std::invalid_argument("benchmark needs at least 2 rows per class");
    }
    if (spec.shifted_dims == 0 || spec.shifted_dims > kFeatureCount) {
        throw std::invalid_argument("shifted dimension count out of range");
    }
    const std::size_t d = kFeatureCount;

    // Correlation structure and per-dimension offsets. Separate derived
    // streams keep the structure independent of the row counts.
    Rng structure_rng(Rng::derive_seed(spec.seed, 0));
    std::vector<double> mu(d);
    for (double& m : mu) m = structure_rng.uniform(2.0, 10.0);
    std::vector<std::vector<double>> loadings(d, std::vector<double>(spec.factor_rank));
    for (auto& row : loadings) {
        for (double& l : row) l = structure_rng.uniform(-1.0, 1.0);
    }

    const auto draw_row = [&](Rng& rng) {
        std::vector<double> factors(spec.factor_rank);
        for (double& f : factors) f = rng.normal(0.0, 1.0);
        FeatureVector x(d);
        for (std::size_t j = 0; j < d; ++j) {
            double value = mu[j] + rng.normal(0.0, spec.noise_sigma);
            for (std::size_t k = 0; k < spec.factor_rank; ++k) {
                value += loadings[j][k] * factors[k];
            }
            x[j] = value;
        }
        return x;
    };

    LabeledDataset ds;
    ds.feature_names = feature_schema();
    Rng benign_rng(Rng::derive_seed(spec.seed, 1));
    for (std::size_t i = 0; i < spec.benign_rows; ++i) {
        ds.rows.push_back(draw_row(benign_rng));
        ds.labels.push_back(AttackClass::Benign);
    }

    // Per-dimension sample deviation of the benign population defines the
    // attack shift scale.
    std::vector<double> sigma(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < spec.benign_rows; ++i) mean += ds.rows[i][j];
        mean /= static_cast<double>(spec.benign_rows);
        double ss = 0.0;
        for (std::size_t i = 0; i < spec.benign_rows; ++i) {
            const double diff = ds.rows[i][j] - mean;
            ss += diff * diff;
        }
        sigma[j] = std::sqrt(ss / static_cast<double>(spec.benign_rows - 1));
    }

    Rng dims_rng(Rng::derive_seed(spec.seed, 2));
    std::vector<std::size_t> all_dims(d);
    std::iota(all_dims.begin(), all_dims.end(), 0);
    dims_rng.shuffle(all_dims);
    std::vector<std::size_t> shifted(all_dims.begin(),
                                     all_dims.begin() + static_cast<std::ptrdiff_t>(spec.shifted_dims));
    std::sort(shifted.begin(), shifted.end());

    for (std::size_t c = 1; c < kAttackClassCount; ++c) {
        Rng attack_rng(Rng::derive_seed(spec.seed, 10 + c));
        for (std::size_t i = 0; i < spec.attack_rows_per_class; ++i) {
            FeatureVector x = draw_row(attack_rng);
            for (const std::size_t j : shifted) x[j] += spec.shift_sigmas * sigma[j];
            ds.rows.push_back(std::move(x));
            ds.labels.push_back(static_cast<AttackClass>(c));
        }
    }
    return ds;
}

BenchmarkResult run_synthetic_benchmark(const SyntheticSpec& spec, const Hyperparams& hp) {
    const LabeledDataset ds = synthetic_benchmark(spec);
    const auto [train_ds, test_ds] = split(ds, 0.75, spec.seed);
    const LabeledDataset train_clean = filter_outliers(train_ds);

    LabeledDataset benign_only;
    benign_only.feature_names = train_clean.feature_names;
    std::vector<FeatureVector> attack_rows;
    for (std::size_t i = 0; i < train_clean.size(); ++i) {
        if (train_clean.labels[i] == AttackClass::Benign) {
            benign_only.rows.push_back(train_clean.rows[i]);
            benign_only.labels.push_back(AttackClass::Benign);
        } else {
            attack_rows.push_back(train_clean.rows[i]);
        }
    }
    const auto [fit_ds, val_ds] = split(benign_only, 0.75, Rng::derive_seed(spec.seed, 100));

    const NormalizationParams norm = fit_normalizer(fit_ds);
    const auto fit_rows = apply_normalizer(norm, fit_ds.rows);
    const auto val_benign = apply_normalizer(norm, val_ds.rows);
    const auto val_attack = apply_normalizer(norm, attack_rows);

    auto [model, history] = train(fit_rows, hp, val_benign);
    model.feature_names = feature_schema();
    model.normalization = norm;

    const CalibrationResult calib = calibrate_threshold(model, val_benign, val_attack);
    model.threshold = calib.theta_star;

    DetectorConfig cfg;
    cfg.threshold = calib.theta_star;
    cfg.metric = ErrorMetric::MSE;

    LabeledDataset test_norm;
    test_norm.feature_names = test_ds.feature_names;
    test_norm.rows = apply_normalizer(norm, test_ds.rows);
    test_norm.labels = test_ds.labels;

    BenchmarkResult result;
    result.report = evaluate(model, cfg, test_norm);
    result.theta_star = calib.theta_star;
    const std::size_t attacks =
        result.report.attack_zeroday + result.report.attack_normal;
    result.detection_rate =
        attacks ? static_cast<double>(result.report.attack_zeroday) /
                      static_cast<double>(attacks)
                : 0.0;
    result.false_positive_rate = result.report.false_positive_rate;
    result.test_rows = test_norm.size();

    double benign_sum = 0.0, attack_sum = 0.0;
    std::size_t benign_n = 0, attack_n = 0;
    for (std::size_t i = 0; i < test_norm.size(); ++i) {
        const DetectionVerdict v = classify(model, cfg, test_norm.rows[i]);
        if (test_norm.labels[i] == AttackClass::Benign) {
            benign_sum += v.error;
            ++benign_n;
        } else {
            attack_sum += v.error;
            ++attack_n;
        }
    }
    if (benign_n) result.benign_error_mean = benign_sum / static_cast<double>(benign_n);
    if (attack_n) result.attack_error_mean = attack_sum / static_cast<double>(attack_n);
    return result;
}

}  // namespace greenguard

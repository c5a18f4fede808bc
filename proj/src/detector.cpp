#include "greenguard/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "greenguard/ioutil.hpp"

namespace greenguard {

void SweepRange::validate() const {
    if (!(step > 0.0) || !(lo <= hi)) {
        throw std::invalid_argument("sweep range needs lo <= hi and a positive step");
    }
}

std::vector<double> SweepRange::grid() const {
    validate();
    std::vector<double> points;
    const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step));
    points.reserve(count + 1);
    for (std::size_t i = 0; i <= count; ++i) {
        const double theta = lo + static_cast<double>(i) * step;
        if (theta > hi + step * 1e-9) break;
        points.push_back(theta);
    }
    return points;
}

void DetectorConfig::validate() const {
    const SweepRange range;
    if (!(threshold >= range.lo) || !(threshold <= range.hi)) {
        throw std::invalid_argument("threshold must lie in [" + fmt_double(range.lo) + ", " +
                                    fmt_double(range.hi) + "]");
    }
}

const std::string& to_string(Decision d) {
    static const std::string names[] = {"normal", "zero-day"};
    return names[static_cast<std::size_t>(d)];
}

DetectionVerdict classify(const AutoencoderModel& model, const DetectorConfig& cfg,
                          const FeatureVector& x) {
    const auto [code, x_hat] = forward(model, x);
    DetectionVerdict v;
    v.error = reconstruction_error(x, x_hat, cfg.metric);
    v.threshold = cfg.threshold;
    v.decision = v.error > cfg.threshold ? Decision::ZeroDay : Decision::Normal;
    return v;
}

CalibrationResult calibrate_from_errors(const std::vector<double>& benign_errors,
                                        const std::vector<double>& attack_errors,
                                        const SweepRange& sweep) {
    if (benign_errors.empty() || attack_errors.empty()) throw EmptyValidationSet();
    CalibrationResult result;
    std::size_t best = 0;
    for (const double theta : sweep.grid()) {
        SweepPoint point;
        point.threshold = theta;
        std::size_t tp = 0, tn = 0;
        for (const double e : attack_errors) tp += e > theta ? 1 : 0;
        for (const double e : benign_errors) tn += e <= theta ? 1 : 0;
        point.tpr = static_cast<double>(tp) / static_cast<double>(attack_errors.size());
        point.tnr = static_cast<double>(tn) / static_cast<double>(benign_errors.size());
        point.balanced_accuracy = (point.tpr + point.tnr) / 2.0;
        result.table.push_back(point);
        if (point.balanced_accuracy > result.table[best].balanced_accuracy) {
            best = result.table.size() - 1;
        }
    }
    result.theta_star = result.table[best].threshold;
    return result;
}

CalibrationResult calibrate_threshold(const AutoencoderModel& model,
                                      const std::vector<FeatureVector>& val_benign,
                                      const std::vector<FeatureVector>& val_attack,
                                      const SweepRange& sweep, ErrorMetric metric) {
    if (val_benign.empty() || val_attack.empty()) throw EmptyValidationSet();
    return calibrate_from_errors(reconstruction_errors(model, val_benign, metric),
                                 reconstruction_errors(model, val_attack, metric), sweep);
}

EvalReport evaluate(const AutoencoderModel& model, const DetectorConfig& cfg,
                    const LabeledDataset& test) {
    if (test.size() == 0) throw EmptyTestSet();
    EvalReport report;
    std::map<AttackClass, std::size_t> correct;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const AttackClass cls = test.labels[i];
        const DetectionVerdict v = classify(model, cfg, test.rows[i]);
        const bool flagged = v.decision == Decision::ZeroDay;
        const bool is_benign = cls == AttackClass::Benign;
        ++report.per_class_count[cls];
        if (is_benign) {
            ++(flagged ? report.benign_zeroday : report.benign_normal);
        } else {
            ++(flagged ? report.attack_zeroday : report.attack_normal);
        }
        if (flagged != is_benign) ++correct[cls];
    }
    double sum = 0.0;
    report.worst_accuracy = 1.0;
    for (const auto& [cls, count] : report.per_class_count) {
        const double acc = static_cast<double>(correct[cls]) / static_cast<double>(count);
        report.per_class_accuracy[cls] = acc;
        sum += acc;
        report.worst_accuracy = std::min(report.worst_accuracy, acc);
    }
    report.mean_accuracy = sum / static_cast<double>(report.per_class_accuracy.size());
    const std::size_t benign_total = report.benign_normal + report.benign_zeroday;
    report.false_positive_rate =
        benign_total ? static_cast<double>(report.benign_zeroday) /
                           static_cast<double>(benign_total)
                     : 0.0;
    return report;
}

std::string to_table(const EvalReport& report) {
    std::ostringstream out;
    char buf[128];
    out << "class        rows    accuracy\n";
    for (const auto& [cls, acc] : report.per_class_accuracy) {
        std::snprintf(buf, sizeof buf, "%-12s %-7zu %.4f\n", to_string(cls).c_str(),
                      report.per_class_count.at(cls), acc);
        out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "mean accuracy  %.4f\nworst accuracy %.4f\nfalse positive rate %.4f\n",
                  report.mean_accuracy, report.worst_accuracy, report.false_positive_rate);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "confusion: benign->normal %zu, benign->zero-day %zu, "
                  "attack->normal %zu, attack->zero-day %zu\n",
                  report.benign_normal, report.benign_zeroday, report.attack_normal,
                  report.attack_zeroday);
    out << buf;
    return out.str();
}

std::string to_kv(const EvalReport& report) {
    std::ostringstream out;
    for (const auto& [cls, acc] : report.per_class_accuracy) {
        out << "accuracy." << to_string(cls) << '=' << fmt_double(acc) << '\n';
        out << "rows." << to_string(cls) << '=' << report.per_class_count.at(cls) << '\n';
    }
    out << "mean_accuracy=" << fmt_double(report.mean_accuracy) << '\n';
    out << "worst_accuracy=" << fmt_double(report.worst_accuracy) << '\n';
    out << "false_positive_rate=" << fmt_double(report.false_positive_rate) << '\n';
    out << "confusion.benign_normal=" << report.benign_normal << '\n';
    out << "confusion.benign_zeroday=" << report.benign_zeroday << '\n';
    out << "confusion.attack_normal=" << report.attack_normal << '\n';
    out << "confusion.attack_zeroday=" << report.attack_zeroday << '\n';
    return out.str();
}

std::string sweep_to_csv(const std::vector<SweepPoint>& table) {
    std::ostringstream out;
    out << "threshold,tpr,tnr,balanced_accuracy\n";
    for (const auto& p : table) {
        out << fmt_double(p.threshold) << ',' << fmt_double(p.tpr) << ',' << fmt_double(p.tnr)
            << ',' << fmt_double(p.balanced_accuracy) << '\n';
    }
    return out.str();
}

}  // namespace greenguard

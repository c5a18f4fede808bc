#include "greenguard/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "greenguard/ioutil.hpp"
#include "greenguard/rng.hpp"

namespace greenguard {

namespace {

const std::array<std::string, kAttackClassCount>& class_names() {
    static const std::array<std::string, kAttackClassCount> names = {
        "Benign", "DDoS", "DoS", "Recon", "WebBased", "BruteForce", "Spoofing", "Mirai"};
    return names;
}

std::string squash_label(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == ' ' || c == '-' || c == '_') continue;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_cell(const std::string& raw, double& out) {
    const std::string cell = trim(raw);
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;  // from_chars rejects a leading plus
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last) return false;
    return std::isfinite(out);
}

struct HeaderMap {
    std::vector<std::size_t> feature_cols;  // schema order -> file column
    std::size_t label_col = SIZE_MAX;
};

// Reads the header line and resolves schema names (and optionally the label)
// to file column indexes.
HeaderMap resolve_header(const std::string& header_line,
                         const std::vector<std::string>& schema,
                         const std::string& label_column, bool label_required) {
    const std::vector<std::string> cells = split_line(header_line);
    std::map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        by_name.emplace(normalize_column_name(cells[i]), i);
    }
    HeaderMap map;
    map.feature_cols.reserve(schema.size());
    for (const auto& name : schema) {
        const auto it = by_name.find(normalize_column_name(name));
        if (it == by_name.end()) throw MissingColumn(name);
        map.feature_cols.push_back(it->second);
    }
    const auto lit = by_name.find(normalize_column_name(label_column));
    if (lit != by_name.end()) {
        map.label_col = lit->second;
    } else if (label_required) {
        throw MissingColumn(label_column);
    }
    return map;
}

// Quantile with linear interpolation over a sorted sample (numpy's default).
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

const std::string& to_string(AttackClass c) {
    return class_names()[static_cast<std::size_t>(c)];
}

std::optional<AttackClass> parse_attack_class(const std::string& label) {
    const std::string squashed = squash_label(label);
    if (squashed.empty()) return std::nullopt;
    // Longest canonical name first so "ddos..." never resolves as DoS.
    static const std::vector<std::pair<std::string, AttackClass>> ordered = {
        {"bruteforce", AttackClass::BruteForce},
        {"webbased", AttackClass::WebBased},
        {"spoofing", AttackClass::Spoofing},
        {"benign", AttackClass::Benign},
        {"recon", AttackClass::Recon},
        {"mirai", AttackClass::Mirai},
        {"ddos", AttackClass::DDoS},
        {"dos", AttackClass::DoS},
    };
    for (const auto& [name, cls] : ordered) {
        if (squashed.compare(0, name.size(), name) == 0) return cls;
    }
    return std::nullopt;
}

namespace {

LabeledDataset load_csv_impl(const std::string& path, const std::vector<std::string>& schema,
                             const std::string& label_column, bool label_required) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header) || trim(header).empty()) throw EmptyFile(path);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const HeaderMap map = resolve_header(header, schema, label_column, label_required);

    LabeledDataset ds;
    ds.feature_names = schema;
    std::string line;
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++row_index;
        const std::vector<std::string> cells = split_line(line);
        FeatureVector row(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const std::size_t col = map.feature_cols[j];
            if (col >= cells.size() || !parse_cell(cells[col], row[j])) {
                throw NonNumericCell(row_index, schema[j]);
            }
        }
        if (map.label_col != SIZE_MAX) {
            if (map.label_col >= cells.size()) throw UnknownLabel(row_index, "");
            const std::string raw = trim(cells[map.label_col]);
            const auto cls = parse_attack_class(raw);
            if (!cls) throw UnknownLabel(row_index, raw);
            ds.labels.push_back(*cls);
        } else {
            ds.labels.push_back(AttackClass::Benign);
        }
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

}  // namespace

LabeledDataset load_csv(const std::string& path, const std::vector<std::string>& schema,
                        const std::string& label_column) {
    return load_csv_impl(path, schema, label_column, true);
}

std::vector<FeatureVector> load_feature_csv(const std::string& path,
                                            const std::vector<std::string>& schema) {
    return load_csv_impl(path, schema, "label", false).rows;
}

void save_csv(const LabeledDataset& ds, const std::string& path,
              const std::string& label_column) {
    std::ostringstream out;
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
        if (j) out << ',';
        out << ds.feature_names[j];
    }
    out << ',' << label_column << '\n';
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        for (std::size_t j = 0; j < ds.rows[i].size(); ++j) {
            if (j) out << ',';
            out << fmt_double(ds.rows[i][j]);
        }
        out << ',' << to_string(ds.labels[i]) << '\n';
    }
    atomic_write(path, out.str());
}

LabeledDataset filter_outliers(const LabeledDataset& ds, double k) {
    if (k <= 0.0) throw std::invalid_argument("outlier fence factor must be positive");
    const std::size_t d = ds.dims();

    std::vector<std::size_t> benign;
    std::vector<std::size_t> keep_order;
    keep_order.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        keep_order.push_back(i);
        if (ds.labels[i] == AttackClass::Benign) benign.push_back(i);
    }
    const bool had_benign = !benign.empty();

    // Re-fence until no benign row falls outside; each pass drops at least
    // one row or stops, so the loop terminates and the result is a fixed
    // point of the filter.
    std::vector<bool> dropped(ds.size(), false);
    while (!benign.empty()) {
        std::vector<double> lo(d), hi(d);
        std::vector<double> column(benign.size());
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t b = 0; b < benign.size(); ++b) column[b] = ds.rows[benign[b]][j];
            std::sort(column.begin(), column.end());
            const double q1 = quantile_sorted(column, 0.25);
            const double q3 = quantile_sorted(column, 0.75);
            const double iqr = q3 - q1;
            lo[j] = q1 - k * iqr;
            hi[j] = q3 + k * iqr;
        }
        std::vector<std::size_t> survivors;
        survivors.reserve(benign.size());
        for (const std::size_t i : benign) {
            bool out_of_fence = false;
            for (std::size_t j = 0; j < d; ++j) {
                if (ds.rows[i][j] < lo[j] || ds.rows[i][j] > hi[j]) {
                    out_of_fence = true;
                    break;
                }
            }
            if (out_of_fence) {
                dropped[i] = true;
            } else {
                survivors.push_back(i);
            }
        }
        if (survivors.size() == benign.size()) break;
        benign = std::move(survivors);
    }
    if (had_benign && benign.empty()) throw EmptyAfterFilter();

    LabeledDataset out;
    out.feature_names = ds.feature_names;
    for (const std::size_t i : keep_order) {
        if (dropped[i]) continue;
        out.rows.push_back(ds.rows[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

NormalizationParams fit_normalizer(const std::vector<FeatureVector>& rows) {
    if (rows.empty()) throw std::invalid_argument("cannot fit normalizer on zero rows");
    const std::size_t d = rows.front().size();
    NormalizationParams p;
    p.mins.assign(d, std::numeric_limits<double>::infinity());
    p.maxs.assign(d, -std::numeric_limits<double>::infinity());
    for (const auto& row : rows) {
        if (row.size() != d) throw DimensionMismatch("inconsistent row width while fitting");
        for (std::size_t j = 0; j < d; ++j) {
            p.mins[j] = std::min(p.mins[j], row[j]);
            p.maxs[j] = std::max(p.maxs[j], row[j]);
        }
    }
    return p;
}

NormalizationParams fit_normalizer(const LabeledDataset& ds) { return fit_normalizer(ds.rows); }

FeatureVector apply_normalizer(const NormalizationParams& params, const FeatureVector& v) {
    if (v.size() != params.dims()) {
        throw DimensionMismatch("vector has " + std::to_string(v.size()) +
                                " entries, normalizer expects " + std::to_string(params.dims()));
    }
    FeatureVector out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double range = params.maxs[j] - params.mins[j];
        out[j] = range > 0.0 ? (v[j] - params.mins[j]) / range : 0.0;
    }
    return out;
}

std::vector<FeatureVector> apply_normalizer(const NormalizationParams& params,
                                            const std::vector<FeatureVector>& rows) {
    std::vector<FeatureVector> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(apply_normalizer(params, r));
    return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must be in (0, 1)");
    }
    std::array<std::vector<std::size_t>, kAttackClassCount> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    }
    std::vector<std::size_t> present;
    for (std::size_t c = 0; c < kAttackClassCount; ++c) {
        if (by_class[c].empty()) continue;
        if (by_class[c].size() < 2) throw ClassTooSmall(static_cast<AttackClass>(c));
        present.push_back(c);
    }
    if (present.empty()) throw std::invalid_argument("cannot split an empty dataset");

    // Per-class train counts via largest-remainder apportionment, clamped so
    // both sides keep at least one row of every class, nudged to match the
    // rounded overall target when feasible.
    const std::size_t total = ds.size();
    std::size_t target = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(total)));
    target = std::clamp(target, present.size(), total - present.size());

    std::vector<std::size_t> take(present.size());
    std::vector<double> remainder(present.size());
    std::size_t sum = 0;
    for (std::size_t p = 0; p < present.size(); ++p) {
        const std::size_t n = by_class[present[p]].size();
        const double exact = train_fraction * static_cast<double>(n);
        take[p] = std::clamp<std::size_t>(static_cast<std::size_t>(exact), 1, n - 1);
        remainder[p] = exact - static_cast<double>(take[p]);
        sum += take[p];
    }
    auto adjustable = [&](std::size_t p, int dir) {
        const std::size_t n = by_class[present[p]].size();
        return dir > 0 ? take[p] < n - 1 : take[p] > 1;
    };
    while (sum != target) {
        const int dir = sum < target ? 1 : -1;
        std::size_t best = SIZE_MAX;
        for (std::size_t p = 0; p < present.size(); ++p) {
            if (!adjustable(p, dir)) continue;
            if (best == SIZE_MAX ||
                (dir > 0 ? remainder[p] > remainder[best] : remainder[p] < remainder[best])) {
                best = p;
            }
        }
        if (best == SIZE_MAX) break;  // target unreachable under per-class bounds
        take[best] += dir;
        remainder[best] -= dir;
        sum += static_cast<std::size_t>(dir);
    }

    std::vector<bool> in_train(total, false);
    for (std::size_t p = 0; p < present.size(); ++p) {
        auto indices = by_class[present[p]];
        Rng rng(Rng::derive_seed(seed, present[p]));
        rng.shuffle(indices);
        for (std::size_t i = 0; i < take[p]; ++i) in_train[indices[i]] = true;
    }

    LabeledDataset train, test;
    train.feature_names = ds.feature_names;
    test.feature_names = ds.feature_names;
    for (std::size_t i = 0; i < total; ++i) {
        LabeledDataset& side = in_train[i] ? train : test;
        side.rows.push_back(ds.rows[i]);
        side.labels.push_back(ds.labels[i]);
    }
    return {std::move(train), std::move(test)};
}

void save_normalizer(const std::string& path, const std::vector<std::string>& names,
                     const NormalizationParams& params) {
    if (names.size() != params.dims()) {
        throw DimensionMismatch("feature name count does not match normalizer width");
    }
    std::ostringstream out;
    out << "features";
    for (const auto& n : names) out << ' ' << n;
    out << "\nmin";
    for (const double v : params.mins) out << ' ' << fmt_double(v);
    out << "\nmax";
    for (const double v : params.maxs) out << ' ' << fmt_double(v);
    out << '\n';
    atomic_write(path, out.str());
}

std::pair<std::vector<std::string>, NormalizationParams> load_normalizer(
    const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> names;
    NormalizationParams params;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key == "features") {
            std::string n;
            while (fields >> n) names.push_back(n);
        } else if (key == "min" || key == "max") {
            auto& dst = key == "min" ? params.mins : params.maxs;
            double v;
            while (fields >> v) dst.push_back(v);
        }
    }
    if (names.empty() || names.size() != params.mins.size() ||
        names.size() != params.maxs.size()) {
        throw std::runtime_error("malformed normalizer file: " + path);
    }
    return {std::move(names), std::move(params)};
}

}  // namespace greenguard

#include "greenguard/autoenc.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "greenguard/ioutil.hpp"
#include "greenguard/rng.hpp"

namespace greenguard {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Identity: return z;
    }
    return z;
}

// Derivative expressed through the activation output, which both ReLU and
// the sigmoid allow; saves keeping pre-activations around in backprop.
double activate_grad(Activation a, double out) {
    switch (a) {
        case Activation::ReLU: return out > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return out * (1.0 - out);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

// Per-layer activations for one sample: cache[0] is the input, cache[l+1]
// the output of layer l.
void forward_cache(const AutoencoderModel& model, const FeatureVector& x,
                   std::vector<std::vector<double>>& cache) {
    cache.resize(model.layers.size() + 1);
    cache[0] = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const LayerParams& layer = model.layers[l];
        const std::vector<double>& in = cache[l];
        std::vector<double>& out = cache[l + 1];
        out.assign(layer.out_width, 0.0);
        for (std::size_t r = 0; r < layer.out_width; ++r) {
            double z = layer.bias[r];
            const double* wrow = layer.weights.data() + r * layer.in_width;
            for (std::size_t c = 0; c < layer.in_width; ++c) z += wrow[c] * in[c];
            out[r] = activate(layer.activation, z);
        }
    }
}

struct LayerGrad {
    std::vector<double> weights;
    std::vector<double> bias;
};

void zero_grads(const AutoencoderModel& model, std::vector<LayerGrad>& grads) {
    grads.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        grads[l].weights.assign(model.layers[l].weights.size(), 0.0);
        grads[l].bias.assign(model.layers[l].bias.size(), 0.0);
    }
}

// Adds this sample's gradient of the mean-convention MSE into grads and
// returns the sample's loss. cache must come from forward_cache.
double backward_accumulate(const AutoencoderModel& model,
                           const std::vector<std::vector<double>>& cache,
                           const FeatureVector& x, std::vector<LayerGrad>& grads) {
    const std::vector<double>& out = cache.back();
    const double inv_d = 1.0 / static_cast<double>(out.size());
    double loss = 0.0;
    std::vector<double> delta(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double diff = out[i] - x[i];
        loss += diff * diff * inv_d;
        delta[i] = 2.0 * diff * inv_d;
    }
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const LayerParams& layer = model.layers[l];
        const std::vector<double>& in = cache[l];
        const std::vector<double>& act_out = cache[l + 1];
        for (std::size_t r = 0; r < layer.out_width; ++r) {
            delta[r] *= activate_grad(layer.activation, act_out[r]);
        }
        LayerGrad& g = grads[l];
        for (std::size_t r = 0; r < layer.out_width; ++r) {
            double* grow = g.weights.data() + r * layer.in_width;
            for (std::size_t c = 0; c < layer.in_width; ++c) grow[c] += delta[r] * in[c];
            g.bias[r] += delta[r];
        }
        if (l == 0) break;
        std::vector<double> prev(layer.in_width, 0.0);
        for (std::size_t r = 0; r < layer.out_width; ++r) {
            const double* wrow = layer.weights.data() + r * layer.in_width;
            for (std::size_t c = 0; c < layer.in_width; ++c) prev[c] += wrow[c] * delta[r];
        }
        delta = std::move(prev);
    }
    return loss;
}

double mean_loss(const AutoencoderModel& model, const std::vector<FeatureVector>& rows) {
    std::vector<std::vector<double>> cache;
    double total = 0.0;
    for (const auto& row : rows) {
        forward_cache(model, row, cache);
        total += reconstruction_error(row, cache.back(), ErrorMetric::MSE);
    }
    return total / static_cast<double>(rows.size());
}

const std::array<std::uint32_t, 256>& crc_table() {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    std::uint32_t c = 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i) {
        c = crc_table()[(c ^ data[i]) & 0xffu] ^ (c >> 8);
    }
    return c ^ 0xffffffffu;
}

void put_u16(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f64(std::string& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double get_f64(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::optional<Activation> parse_activation(const std::string& name) {
    const std::string n = to_lower(name);
    if (n == "relu") return Activation::ReLU;
    if (n == "sigmoid") return Activation::Sigmoid;
    if (n == "identity") return Activation::Identity;
    return std::nullopt;
}

std::vector<LayerSpec> parse_layer_list(const std::string& line_rest) {
    std::istringstream in(line_rest);
    std::vector<LayerSpec> layers;
    std::string tok;
    while (in >> tok) {
        const std::size_t colon = tok.find(':');
        if (colon == std::string::npos) throw CorruptModel("bad layer token: " + tok);
        LayerSpec spec;
        spec.width = static_cast<std::size_t>(std::stoul(tok.substr(0, colon)));
        const auto act = parse_activation(tok.substr(colon + 1));
        if (!act || spec.width == 0) throw CorruptModel("bad layer token: " + tok);
        spec.activation = *act;
        layers.push_back(spec);
    }
    return layers;
}

constexpr char kModelMagic[4] = {'Z', 'R', 'Z', 'M'};
constexpr std::uint16_t kModelVersion = 1;

}  // namespace

const std::string& to_string(Activation a) {
    static const std::string names[] = {"relu", "sigmoid", "identity"};
    return names[static_cast<std::size_t>(a)];
}

const std::string& to_string(ErrorMetric m) {
    static const std::string names[] = {"mse", "mae"};
    return names[static_cast<std::size_t>(m)];
}

std::optional<ErrorMetric> parse_error_metric(const std::string& name) {
    const std::string n = to_lower(name);
    if (n == "mse") return ErrorMetric::MSE;
    if (n == "mae") return ErrorMetric::MAE;
    return std::nullopt;
}

void ArchitectureSpec::validate() const {
    if (input_dim == 0) throw std::invalid_argument("input dimension must be positive");
    if (encoder_layers.empty() || decoder_layers.empty()) {
        throw std::invalid_argument("encoder and decoder each need at least one layer");
    }
    for (const auto& l : encoder_layers) {
        if (l.width == 0) throw std::invalid_argument("layer width must be positive");
    }
    for (const auto& l : decoder_layers) {
        if (l.width == 0) throw std::invalid_argument("layer width must be positive");
    }
    if (decoder_layers.back().width != input_dim) {
        throw std::invalid_argument("decoder must end at the input dimension");
    }
    if (encoder_layers.back().width >= input_dim) {
        throw std::invalid_argument("bottleneck must be narrower than the input");
    }
}

std::size_t ArchitectureSpec::param_count() const {
    std::size_t count = 0;
    std::size_t in = input_dim;
    for (const auto& layers : {encoder_layers, decoder_layers}) {
        for (const auto& l : layers) {
            count += in * l.width + l.width;
            in = l.width;
        }
    }
    return count;
}

std::string ArchitectureSpec::to_string() const {
    std::ostringstream out;
    out << input_dim;
    for (const auto& l : encoder_layers) out << '-' << l.width;
    for (const auto& l : decoder_layers) out << '-' << l.width;
    return out.str();
}

ArchitectureSpec default_architecture() {
    ArchitectureSpec spec;
    spec.input_dim = kFeatureCount;
    spec.encoder_layers = {{24, Activation::ReLU}, {16, Activation::ReLU}, {8, Activation::ReLU}};
    spec.decoder_layers = {
        {16, Activation::ReLU}, {24, Activation::ReLU}, {kFeatureCount, Activation::Sigmoid}};
    return spec;
}

ArchitectureSpec parse_architecture(const std::string& text) {
    std::vector<std::size_t> widths;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t dash = text.find('-', start);
        const std::string part =
            text.substr(start, dash == std::string::npos ? std::string::npos : dash - start);
        std::size_t consumed = 0;
        std::size_t width = 0;
        try {
            width = std::stoul(part, &consumed);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad architecture token: " + part);
        }
        if (consumed != part.size() || width == 0) {
            throw std::invalid_argument("bad architecture token: " + part);
        }
        widths.push_back(width);
        if (dash == std::string::npos) break;
        start = dash + 1;
    }
    if (widths.size() < 3) {
        throw std::invalid_argument("architecture needs input, bottleneck, and output widths");
    }
    if (widths.front() != widths.back()) {
        throw std::invalid_argument("architecture must end at its input width");
    }
    std::size_t bottleneck = 1;
    for (std::size_t i = 2; i + 1 < widths.size(); ++i) {
        if (widths[i] < widths[bottleneck]) bottleneck = i;
    }
    ArchitectureSpec spec;
    spec.input_dim = widths.front();
    for (std::size_t i = 1; i <= bottleneck; ++i) {
        spec.encoder_layers.push_back({widths[i], Activation::ReLU});
    }
    for (std::size_t i = bottleneck + 1; i + 1 < widths.size(); ++i) {
        spec.decoder_layers.push_back({widths[i], Activation::ReLU});
    }
    spec.decoder_layers.push_back({widths.back(), Activation::Sigmoid});
    spec.validate();
    return spec;
}

std::size_t AutoencoderModel::code_dim() const {
    return spec.encoder_layers.empty() ? spec.input_dim : spec.encoder_layers.back().width;
}

void Hyperparams::validate() const {
    if (!(learning_rate > 0.0) || learning_rate > 1.0) {
        throw std::invalid_argument("learning rate must be in (0, 1]");
    }
    if (epochs == 0) throw std::invalid_argument("epoch count must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    spec.validate();
}

AutoencoderModel init_model(const ArchitectureSpec& spec, std::uint64_t seed) {
    spec.validate();
    AutoencoderModel model;
    model.spec = spec;
    Rng rng(seed);
    std::size_t in = spec.input_dim;
    for (const auto& layers : {spec.encoder_layers, spec.decoder_layers}) {
        for (const auto& l : layers) {
            LayerParams p;
            p.in_width = in;
            p.out_width = l.width;
            p.activation = l.activation;
            const double limit = std::sqrt(6.0 / static_cast<double>(in + l.width));
            p.weights.resize(in * l.width);
            for (double& w : p.weights) w = rng.uniform(-limit, limit);
            p.bias.assign(l.width, 0.0);
            model.layers.push_back(std::move(p));
            in = l.width;
        }
    }
    return model;
}

std::pair<std::vector<double>, FeatureVector> forward(const AutoencoderModel& model,
                                                      const FeatureVector& x) {
    if (model.layers.empty()) throw std::invalid_argument("model has no layers");
    if (x.size() != model.layers.front().in_width) {
        throw DimensionMismatch("input has " + std::to_string(x.size()) +
                                " entries, model expects " +
                                std::to_string(model.layers.front().in_width));
    }
    std::vector<std::vector<double>> cache;
    forward_cache(model, x, cache);
    const std::size_t encoder_count = model.spec.encoder_layers.size();
    return {cache[encoder_count], cache.back()};
}

double reconstruction_error(const FeatureVector& x, const FeatureVector& x_hat,
                            ErrorMetric metric) {
    if (x.size() != x_hat.size()) {
        throw DimensionMismatch("vectors of lengths " + std::to_string(x.size()) + " and " +
                                std::to_string(x_hat.size()));
    }
    if (x.empty()) throw DimensionMismatch("empty vectors");
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x_hat[i] - x[i];
        total += metric == ErrorMetric::MSE ? diff * diff : std::fabs(diff);
    }
    return total / static_cast<double>(x.size());
}

std::vector<double> reconstruction_errors(const AutoencoderModel& model,
                                          const std::vector<FeatureVector>& rows,
                                          ErrorMetric metric) {
    std::vector<double> errors;
    errors.reserve(rows.size());
    std::vector<std::vector<double>> cache;
    for (const auto& row : rows) {
        forward_cache(model, row, cache);
        errors.push_back(reconstruction_error(row, cache.back(), metric));
    }
    return errors;
}

std::pair<AutoencoderModel, TrainHistory> train(const std::vector<FeatureVector>& train_rows,
                                                const Hyperparams& hp,
                                                const std::vector<FeatureVector>& val_rows) {
    if (train_rows.empty()) throw EmptyTrainingSet();
    hp.validate();
    for (const auto& row : train_rows) {
        if (row.size() != hp.spec.input_dim) {
            throw DimensionMismatch("training row width does not match the architecture");
        }
    }

    AutoencoderModel model = init_model(hp.spec, hp.seed);
    Rng shuffle_rng(Rng::derive_seed(hp.seed, 1));
    std::vector<std::size_t> order(train_rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainHistory history;
    history.train_loss.reserve(hp.epochs);
    std::vector<std::vector<double>> cache;
    std::vector<LayerGrad> grads;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const std::size_t end = std::min(start + hp.batch_size, order.size());
            zero_grads(model, grads);
            for (std::size_t i = start; i < end; ++i) {
                const FeatureVector& row = train_rows[order[i]];
                forward_cache(model, row, cache);
                backward_accumulate(model, cache, row, grads);
            }
            const double scale = hp.learning_rate / static_cast<double>(end - start);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                LayerParams& layer = model.layers[l];
                for (std::size_t i = 0; i < layer.weights.size(); ++i) {
                    layer.weights[i] -= scale * grads[l].weights[i];
                }
                for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                    layer.bias[i] -= scale * grads[l].bias[i];
                }
            }
        }
        const double loss = mean_loss(model, train_rows);
        if (!std::isfinite(loss)) throw DivergedLoss(epoch + 1);
        history.train_loss.push_back(loss);
        if (!val_rows.empty()) history.val_loss.push_back(mean_loss(model, val_rows));
    }
    model.trained_epochs = hp.epochs;
    return {std::move(model), std::move(history)};
}

std::vector<double> flatten_params(const AutoencoderModel& model) {
    std::vector<double> flat;
    for (const auto& layer : model.layers) {
        flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void unflatten_params(AutoencoderModel& model, const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (auto& layer : model.layers) {
        if (pos + layer.weights.size() + layer.bias.size() > flat.size()) {
            throw DimensionMismatch("flat parameter vector is too short");
        }
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.weights.size(),
                    layer.weights.begin());
        pos += layer.weights.size();
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.bias.size(),
                    layer.bias.begin());
        pos += layer.bias.size();
    }
    if (pos != flat.size()) throw DimensionMismatch("flat parameter vector is too long");
}

std::pair<double, std::vector<double>> loss_and_gradient(const AutoencoderModel& model,
                                                         const std::vector<FeatureVector>& rows) {
    if (rows.empty()) throw EmptyTrainingSet();
    std::vector<std::vector<double>> cache;
    std::vector<LayerGrad> grads;
    zero_grads(model, grads);
    double loss = 0.0;
    for (const auto& row : rows) {
        forward_cache(model, row, cache);
        loss += backward_accumulate(model, cache, row, grads);
    }
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    loss *= inv_n;
    std::vector<double> flat;
    for (const auto& g : grads) {
        for (const double w : g.weights) flat.push_back(w * inv_n);
        for (const double b : g.bias) flat.push_back(b * inv_n);
    }
    return {loss, std::move(flat)};
}

SearchResult random_search(const HyperparamSpace& space, std::size_t trials,
                           const std::vector<FeatureVector>& train_rows,
                           const std::vector<FeatureVector>& val_rows, std::uint64_t seed) {
    if (space.learning_rates.empty() || space.epoch_choices.empty() ||
        space.batch_sizes.empty() || space.architectures.empty()) {
        throw EmptySpace();
    }
    if (trials == 0) throw std::invalid_argument("trial count must be positive");
    if (val_rows.empty()) throw std::invalid_argument("random search needs validation rows");

    Rng rng(seed);
    std::vector<TrialResult> board;
    board.reserve(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        TrialResult r;
        r.trial_index = i;
        r.hp.learning_rate = space.learning_rates[rng.index(space.learning_rates.size())];
        r.hp.epochs = space.epoch_choices[rng.index(space.epoch_choices.size())];
        r.hp.batch_size = space.batch_sizes[rng.index(space.batch_sizes.size())];
        r.hp.spec = space.architectures[rng.index(space.architectures.size())];
        r.hp.seed = Rng::derive_seed(seed, i + 1);
        r.param_count = r.hp.spec.param_count();
        try {
            const auto [model, history] = train(train_rows, r.hp);
            r.val_mse = mean_loss(model, val_rows);
            if (!std::isfinite(r.val_mse)) r.val_mse = std::numeric_limits<double>::infinity();
        } catch (const DivergedLoss&) {
            r.val_mse = std::numeric_limits<double>::infinity();
        }
        board.push_back(std::move(r));
    }
    std::stable_sort(board.begin(), board.end(), [](const TrialResult& a, const TrialResult& b) {
        if (a.val_mse != b.val_mse) return a.val_mse < b.val_mse;
        if (a.param_count != b.param_count) return a.param_count < b.param_count;
        return a.trial_index < b.trial_index;
    });
    return {board.front().hp, std::move(board)};
}

ArchitectureSpec shrink_architecture(const ArchitectureSpec& spec, double fraction,
                                     bool drop_widest_pair) {
    if (fraction < 0.0 || fraction >= 1.0) {
        throw std::invalid_argument("shrink fraction must be in [0, 1)");
    }
    ArchitectureSpec out = spec;
    const auto scale = [fraction](std::size_t width) {
        const auto scaled =
            static_cast<std::size_t>(std::floor(static_cast<double>(width) * (1.0 - fraction)));
        return std::max<std::size_t>(1, scaled);
    };
    for (auto& l : out.encoder_layers) l.width = scale(l.width);
    for (std::size_t i = 0; i + 1 < out.decoder_layers.size(); ++i) {
        out.decoder_layers[i].width = scale(out.decoder_layers[i].width);
    }
    if (drop_widest_pair && out.encoder_layers.size() >= 2 && out.decoder_layers.size() >= 2) {
        // Encoder layer i mirrors decoder layer m-2-i; the bottleneck and
        // the output layer have no mirror and are never dropped.
        const std::size_t m = out.decoder_layers.size();
        std::size_t best = SIZE_MAX;
        for (std::size_t i = 0; i + 1 < out.encoder_layers.size(); ++i) {
            if (m < 2 + i) break;
            if (best == SIZE_MAX ||
                out.encoder_layers[i].width > out.encoder_layers[best].width) {
                best = i;
            }
        }
        if (best != SIZE_MAX) {
            out.encoder_layers.erase(out.encoder_layers.begin() +
                                     static_cast<std::ptrdiff_t>(best));
            out.decoder_layers.erase(out.decoder_layers.begin() +
                                     static_cast<std::ptrdiff_t>(m - 2 - best));
        }
    }
    return out;
}

void save_model(const AutoencoderModel& model, const std::string& path) {
    std::ostringstream header;
    header << "features";
    for (const auto& n : model.feature_names) header << ' ' << n;
    header << "\nnorm_min";
    for (const double v : model.normalization.mins) header << ' ' << fmt_double(v);
    header << "\nnorm_max";
    for (const double v : model.normalization.maxs) header << ' ' << fmt_double(v);
    header << "\ninput_dim " << model.spec.input_dim;
    header << "\nencoder";
    for (const auto& l : model.spec.encoder_layers) {
        header << ' ' << l.width << ':' << to_string(l.activation);
    }
    header << "\ndecoder";
    for (const auto& l : model.spec.decoder_layers) {
        header << ' ' << l.width << ':' << to_string(l.activation);
    }
    header << "\ntrained_epochs " << model.trained_epochs;
    if (model.threshold) {
        header << "\nthreshold " << fmt_double(*model.threshold);
        header << "\nmetric " << to_string(model.threshold_metric);
    }
    header << '\n';
    const std::string header_text = header.str();

    std::string body;
    put_u32(body, static_cast<std::uint32_t>(header_text.size()));
    body += header_text;
    for (const auto& layer : model.layers) {
        for (const double w : layer.weights) put_f64(body, w);
        for (const double b : layer.bias) put_f64(body, b);
    }

    std::string file(kModelMagic, sizeof kModelMagic);
    put_u16(file, kModelVersion);
    put_u32(file, crc32(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
    file += body;
    atomic_write(path, file);
}

AutoencoderModel load_model(const std::string& path) {
    const std::string file = read_file(path);
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(file.data());
    if (file.size() < 4 || std::memcmp(bytes, kModelMagic, 4) != 0) throw ModelBadMagic();
    if (file.size() < 14) throw CorruptModel("file shorter than the fixed header");
    const std::uint16_t version = get_u16(bytes + 4);
    if (version != kModelVersion) throw ModelVersionMismatch(version);
    const std::uint32_t stored_crc = get_u32(bytes + 6);
    const std::uint8_t* body = bytes + 10;
    const std::size_t body_len = file.size() - 10;
    if (crc32(body, body_len) != stored_crc) throw CorruptModel("checksum mismatch");
    const std::uint32_t header_len = get_u32(body);
    if (4 + static_cast<std::size_t>(header_len) > body_len) {
        throw CorruptModel("header length exceeds file size");
    }
    const std::string header(reinterpret_cast<const char*>(body + 4), header_len);

    AutoencoderModel model;
    std::istringstream in(header);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string key;
        if (!(fields >> key)) continue;
        std::string rest;
        std::getline(fields, rest);
        std::istringstream values(rest);
        if (key == "features") {
            std::string n;
            while (values >> n) model.feature_names.push_back(n);
        } else if (key == "norm_min" || key == "norm_max") {
            auto& dst = key == "norm_min" ? model.normalization.mins : model.normalization.maxs;
            double v;
            while (values >> v) dst.push_back(v);
        } else if (key == "input_dim") {
            values >> model.spec.input_dim;
        } else if (key == "encoder") {
            model.spec.encoder_layers = parse_layer_list(rest);
        } else if (key == "decoder") {
            model.spec.decoder_layers = parse_layer_list(rest);
        } else if (key == "trained_epochs") {
            values >> model.trained_epochs;
        } else if (key == "threshold") {
            double v = 0.0;
            values >> v;
            model.threshold = v;
        } else if (key == "metric") {
            std::string m;
            values >> m;
            const auto metric = parse_error_metric(m);
            if (!metric) throw CorruptModel("unknown error metric: " + m);
            model.threshold_metric = *metric;
        }
    }
    if (model.spec.input_dim == 0 || model.spec.encoder_layers.empty() ||
        model.spec.decoder_layers.empty()) {
        throw CorruptModel("architecture missing from header");
    }

    std::size_t in_width = model.spec.input_dim;
    std::size_t expected = 0;
    for (const auto& layers : {model.spec.encoder_layers, model.spec.decoder_layers}) {
        for (const auto& l : layers) {
            LayerParams p;
            p.in_width = in_width;
            p.out_width = l.width;
            p.activation = l.activation;
            p.weights.resize(in_width * l.width);
            p.bias.resize(l.width);
            expected += p.weights.size() + p.bias.size();
            model.layers.push_back(std::move(p));
            in_width = l.width;
        }
    }
    const std::size_t param_bytes = body_len - 4 - header_len;
    if (param_bytes != expected * 8) throw CorruptModel("parameter block size mismatch");
    const std::uint8_t* p = body + 4 + header_len;
    for (auto& layer : model.layers) {
        for (double& w : layer.weights) {
            w = get_f64(p);
            p += 8;
        }
        for (double& b : layer.bias) {
            b = get_f64(p);
            p += 8;
        }
    }
    return model;
}

}  // namespace greenguard

#include "desgrada/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "desgrada/errors.hpp"
#include "desgrada/rng.hpp"

namespace desgrada {
namespace {

constexpr char kMagic[4] = {'D', 'S', 'G', 'C'};
constexpr int kFormatVersion = 1;

Tensor xavier(std::size_t rows, std::size_t cols, SplitMix64& rng) {
    Tensor t(rows, cols);
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-a, a);
    return t;
}

void require_little_endian() {
    if constexpr (std::endian::native != std::endian::little) {
        throw ConfigError("checkpoint format requires a little-endian host");
    }
}

} // namespace

Model Model::init(const ModelConfig& cfg, const std::vector<int>& source_degrees,
                  std::uint64_t seed) {
    cfg.lif.validate();
    if (cfg.feature_dim < 1) throw ConfigError("Model::init: feature_dim must be >= 1");
    if (cfg.num_classes < 2) throw ConfigError("Model::init: need at least two classes");

    SplitMix64 rng(counter_hash(seed, 0x11071));
    const std::size_t d = static_cast<std::size_t>(cfg.lif.hidden_dim);
    const std::size_t f = static_cast<std::size_t>(cfg.feature_dim);
    const std::size_t c = static_cast<std::size_t>(cfg.num_classes);

    Model m;
    m.cfg = cfg;
    m.layers.resize(static_cast<std::size_t>(cfg.lif.layers));
    for (int l = 0; l < cfg.lif.layers; ++l) {
        const std::size_t in = l == 0 ? f : d;
        if (l == 0) {
            // Rate-coding input layer: positive synapses whose column sums
            // are O(v_th), so Bernoulli rate inputs land near the firing
            // threshold instead of the zero-mean noise regime.
            Tensor w(in, d);
            const double hi = 0.16 / static_cast<double>(in);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(0.0, hi);
            m.layers[0].weight = std::move(w);
        } else {
            m.layers[static_cast<std::size_t>(l)].weight = xavier(in, d, rng);
        }
        m.layers[static_cast<std::size_t>(l)].bias = Tensor(1, d);
    }
    m.attention.query = xavier(d, 1, rng);
    m.attention.key_proj = xavier(d, d, rng);
    m.attention.value_proj = xavier(d, d, rng);
    m.classifier.w1 = xavier(d, d, rng);
    m.classifier.b1 = Tensor(1, d);
    m.classifier.w2 = xavier(d, c, rng);
    m.classifier.b2 = Tensor(1, c);
    const std::size_t disc_in = cfg.discriminator_input == DiscriminatorInput::logits ? c : d;
    m.discriminator.w1 = xavier(disc_in, d, rng);
    m.discriminator.b1 = Tensor(1, d);
    m.discriminator.w2 = xavier(d, 1, rng);
    m.discriminator.b2 = Tensor(1, 1);

    m.thresholds = ThresholdTable(cfg.lif.v_th_init);
    m.thresholds.register_degrees(source_degrees);
    return m;
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto& l : layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    out.push_back(&attention.query);
    out.push_back(&attention.key_proj);
    out.push_back(&attention.value_proj);
    out.push_back(&classifier.w1);
    out.push_back(&classifier.b1);
    out.push_back(&classifier.w2);
    out.push_back(&classifier.b2);
    out.push_back(&discriminator.w1);
    out.push_back(&discriminator.b1);
    out.push_back(&discriminator.w2);
    out.push_back(&discriminator.b2);
    return out;
}

std::vector<const Tensor*> Model::parameters() const {
    std::vector<const Tensor*> out;
    for (const auto* t : const_cast<Model*>(this)->parameters()) out.push_back(t);
    return out;
}

std::vector<std::string> Model::parameter_names() const {
    std::vector<std::string> names;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        names.push_back("layer" + std::to_string(l) + ".weight");
        names.push_back("layer" + std::to_string(l) + ".bias");
    }
    for (const char* n : {"attention.query", "attention.key_proj", "attention.value_proj",
                          "classifier.w1", "classifier.b1", "classifier.w2", "classifier.b2",
                          "discriminator.w1", "discriminator.b1", "discriminator.w2",
                          "discriminator.b2"})
        names.push_back(n);
    return names;
}

void Model::save(const std::string& path) const {
    require_little_endian();
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["lif"] = {{"leak", cfg.lif.leak},
                     {"v_reset", cfg.lif.v_reset},
                     {"T", cfg.lif.T},
                     {"v_th_init", cfg.lif.v_th_init},
                     {"surrogate_width", cfg.lif.surrogate_width},
                     {"ema_alpha", cfg.lif.ema_alpha},
                     {"layers", cfg.lif.layers},
                     {"hidden_dim", cfg.lif.hidden_dim}};
    header["aggregation"] = to_string(cfg.aggregation);
    header["discriminator_input"] = to_string(cfg.discriminator_input);
    header["feature_dim"] = cfg.feature_dim;
    header["num_classes"] = cfg.num_classes;

    std::vector<int> degrees;
    for (const auto& [deg, th] : thresholds.entries()) degrees.push_back(deg);
    header["threshold_degrees"] = degrees;
    header["threshold_init"] = thresholds.init_value();

    const auto params = parameters();
    const auto names = parameter_names();
    nlohmann::json tensors = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        tensors.push_back({{"name", names[i]},
                           {"rows", params[i]->rows()},
                           {"cols", params[i]->cols()}});
    }
    header["tensors"] = tensors;

    const std::string header_str = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write checkpoint " + path);
    out.write(kMagic, 4);
    const std::uint32_t hlen = static_cast<std::uint32_t>(header_str.size());
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

    auto write_doubles = [&out](const double* p, std::size_t count) {
        out.write(reinterpret_cast<const char*>(p),
                  static_cast<std::streamsize>(count * sizeof(double)));
    };
    std::vector<double> th_values;
    for (const auto& [deg, th] : thresholds.entries()) th_values.push_back(th);
    write_doubles(th_values.data(), th_values.size());
    for (const Tensor* t : params) write_doubles(t->data(), t->size());
    if (!out) throw LoadError("write failure on checkpoint " + path);
}

Model Model::load(const std::string& path) {
    require_little_endian();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("not a checkpoint file: " + path);
    std::uint32_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 4);
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), hlen);
    if (!in) throw FormatError("truncated checkpoint header: " + path);

    nlohmann::json header = nlohmann::json::parse(header_str);
    if (header.value("format_version", -1) != kFormatVersion)
        throw FormatError("checkpoint format version mismatch in " + path);

    ModelConfig cfg;
    const auto& lif = header.at("lif");
    cfg.lif.leak = lif.at("leak");
    cfg.lif.v_reset = lif.at("v_reset");
    cfg.lif.T = lif.at("T");
    cfg.lif.v_th_init = lif.at("v_th_init");
    cfg.lif.surrogate_width = lif.at("surrogate_width");
    cfg.lif.ema_alpha = lif.at("ema_alpha");
    cfg.lif.layers = lif.at("layers");
    cfg.lif.hidden_dim = lif.at("hidden_dim");
    cfg.aggregation = aggregation_from_string(header.at("aggregation"));
    cfg.discriminator_input = discriminator_input_from_string(header.at("discriminator_input"));
    cfg.feature_dim = header.at("feature_dim");
    cfg.num_classes = header.at("num_classes");

    Model m;
    m.cfg = cfg;
    m.layers.resize(static_cast<std::size_t>(cfg.lif.layers));

    auto read_doubles = [&in, &path](double* p, std::size_t count) {
        in.read(reinterpret_cast<char*>(p),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!in) throw FormatError("truncated checkpoint payload: " + path);
    };

    const std::vector<int> degrees = header.at("threshold_degrees").get<std::vector<int>>();
    std::vector<double> th_values(degrees.size());
    read_doubles(th_values.data(), th_values.size());
    m.thresholds = ThresholdTable(header.at("threshold_init").get<double>());
    {
        std::map<int, double> rates;
        for (std::size_t i = 0; i < degrees.size(); ++i) rates[degrees[i]] = th_values[i];
        // register exact entries: EMA with alpha=1 writes the stored values
        m.thresholds.ema_update(rates, 1.0);
    }

    auto params = m.parameters();
    const auto names = m.parameter_names();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != params.size())
        throw FormatError("checkpoint tensor count mismatch in " + path);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& t = tensors.at(i);
        if (t.at("name").get<std::string>() != names[i])
            throw FormatError("checkpoint tensor order mismatch in " + path);
        *params[i] = Tensor(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>());
        read_doubles(params[i]->data(), params[i]->size());
    }
    return m;
}

} // namespace desgrada

#include "desgrada/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "desgrada/errors.hpp"

namespace desgrada {
namespace {

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

FlatConfig FlatConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

FlatConfig FlatConfig::parse_text(const std::string& text) {
    FlatConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key.empty())
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double FlatConfig::get_real(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': not a real number: " + it->second);
    }
}

long long FlatConfig::get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        long long v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': not an integer: " + it->second);
    }
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ParseError("config key '" + key + "': not a boolean: " + it->second);
}

TrainConfig train_config_from(const FlatConfig& cfg, const TrainConfig& defaults) {
    static const std::set<std::string> known = {
        "lr",           "weight_decay",  "hidden_dim",
        "layers",       "epochs",        "batch_size",
        "lambda_coeff", "seed",          "pseudo_label_start_epoch",
        "T",            "leak",          "v_reset",
        "v_th_init",    "surrogate_width", "ema_alpha",
        "aggregation",  "discriminator_input", "align_only_unseen_degree_graphs",
        "alignment_enabled", "pseudo_labels_enabled", "eval_seed",
        "eval_encode_samples"};
    for (const auto& [k, v] : cfg.values()) {
        if (!known.count(k)) throw ConfigError("unknown config key: " + k);
    }

    TrainConfig out = defaults;
    out.lr = cfg.get_real("lr", out.lr);
    out.weight_decay = cfg.get_real("weight_decay", out.weight_decay);
    out.hidden_dim = static_cast<int>(cfg.get_int("hidden_dim", out.hidden_dim));
    out.layers = static_cast<int>(cfg.get_int("layers", out.layers));
    out.epochs = static_cast<int>(cfg.get_int("epochs", out.epochs));
    out.batch_size = static_cast<int>(cfg.get_int("batch_size", out.batch_size));
    out.lambda_coeff = cfg.get_real("lambda_coeff", out.lambda_coeff);
    out.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(out.seed)));
    out.pseudo_label_start_epoch =
        static_cast<int>(cfg.get_int("pseudo_label_start_epoch", out.pseudo_label_start_epoch));
    out.lif.T = static_cast<int>(cfg.get_int("T", out.lif.T));
    out.lif.leak = cfg.get_real("leak", out.lif.leak);
    out.lif.v_reset = cfg.get_real("v_reset", out.lif.v_reset);
    out.lif.v_th_init = cfg.get_real("v_th_init", out.lif.v_th_init);
    out.lif.surrogate_width = cfg.get_real("surrogate_width", out.lif.surrogate_width);
    out.lif.ema_alpha = cfg.get_real("ema_alpha", out.lif.ema_alpha);
    out.aggregation =
        aggregation_from_string(cfg.get_string("aggregation", to_string(out.aggregation)));
    out.discriminator_input = discriminator_input_from_string(
        cfg.get_string("discriminator_input", to_string(out.discriminator_input)));
    out.align_only_unseen_degree_graphs =
        cfg.get_bool("align_only_unseen_degree_graphs", out.align_only_unseen_degree_graphs);
    out.alignment_enabled = cfg.get_bool("alignment_enabled", out.alignment_enabled);
    out.pseudo_labels_enabled = cfg.get_bool("pseudo_labels_enabled", out.pseudo_labels_enabled);
    out.eval_seed =
        static_cast<std::uint64_t>(cfg.get_int("eval_seed", static_cast<long long>(out.eval_seed)));
    out.eval_encode_samples =
        static_cast<int>(cfg.get_int("eval_encode_samples", out.eval_encode_samples));
    return out;
}

std::string train_config_to_text(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "lr = " << format_real(cfg.lr) << "\n";
    out << "weight_decay = " << format_real(cfg.weight_decay) << "\n";
    out << "hidden_dim = " << cfg.hidden_dim << "\n";
    out << "layers = " << cfg.layers << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "lambda_coeff = " << format_real(cfg.lambda_coeff) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "pseudo_label_start_epoch = " << cfg.pseudo_label_start_epoch << "\n";
    out << "T = " << cfg.lif.T << "\n";
    out << "leak = " << format_real(cfg.lif.leak) << "\n";
    out << "v_reset = " << format_real(cfg.lif.v_reset) << "\n";
    out << "v_th_init = " << format_real(cfg.lif.v_th_init) << "\n";
    out << "surrogate_width = " << format_real(cfg.lif.surrogate_width) << "\n";
    out << "ema_alpha = " << format_real(cfg.lif.ema_alpha) << "\n";
    out << "aggregation = " << to_string(cfg.aggregation) << "\n";
    out << "discriminator_input = " << to_string(cfg.discriminator_input) << "\n";
    out << "align_only_unseen_degree_graphs = "
        << (cfg.align_only_unseen_degree_graphs ? "true" : "false") << "\n";
    out << "alignment_enabled = " << (cfg.alignment_enabled ? "true" : "false") << "\n";
    out << "pseudo_labels_enabled = " << (cfg.pseudo_labels_enabled ? "true" : "false") << "\n";
    out << "eval_seed = " << cfg.eval_seed << "\n";
    out << "eval_encode_samples = " << cfg.eval_encode_samples << "\n";
    return out.str();
}

} // namespace desgrada

#pragma once

#include <map>
#include <string>

#include "desgrada/trainer.hpp"

namespace desgrada {

// Flat key/value run configuration (`key = value` lines, '#' comments).
class FlatConfig {
public:
    static FlatConfig parse_file(const std::string& path);
    static FlatConfig parse_text(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Applies recognized keys onto a TrainConfig; unknown keys raise ConfigError.
TrainConfig train_config_from(const FlatConfig& cfg, const TrainConfig& defaults = {});

// Serializes the full resolved TrainConfig back to flat text (stable order).
std::string train_config_to_text(const TrainConfig& cfg);

} // namespace desgrada

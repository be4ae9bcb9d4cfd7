#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "desgrada/adapt.hpp"
#include "desgrada/spiking.hpp"

namespace desgrada {

struct ModelConfig {
    LIFConfig lif;
    AggregationKind aggregation = AggregationKind::gcn_norm;
    DiscriminatorInput discriminator_input = DiscriminatorInput::logits;
    int feature_dim = 0;
    int num_classes = 0;
};

// Everything learnable plus the (non-learnable) threshold state.
struct Model {
    ModelConfig cfg;
    std::vector<LayerParams> layers;
    AttentionParams attention;
    ClassifierParams classifier;
    DiscriminatorParams discriminator;
    ThresholdTable thresholds{0.2};

    static Model init(const ModelConfig& cfg, const std::vector<int>& source_degrees,
                      std::uint64_t seed);

    // Stable parameter enumeration (serialization + optimizer order).
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;

    // Versioned binary checkpoint: JSON header + little-endian f64 payload.
    void save(const std::string& path) const;
    static Model load(const std::string& path);
};

} // namespace desgrada

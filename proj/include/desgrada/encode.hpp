#pragma once

#include <cstdint>
#include <vector>

#include "desgrada/graph.hpp"

namespace desgrada {

// Binary spike trains over T latency steps for all nodes of one graph.
struct SpikeTensor {
    int T = 0;
    int node_count = 0;
    int feature_dim = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint8_t> values; // [T x node_count x feature_dim]

    std::uint8_t at(int t, int v, int j) const {
        return values[(static_cast<std::size_t>(t) * static_cast<std::size_t>(node_count) +
                       static_cast<std::size_t>(v)) *
                          static_cast<std::size_t>(feature_dim) +
                      static_cast<std::size_t>(j)];
    }
};

// Independent Bernoulli draws: values[t,v,j] ~ Ber(features[v,j]) using a
// counter-based generator keyed by (seed, t, v, j). Identical inputs and seed
// give bit-identical output regardless of evaluation order.
SpikeTensor bernoulli_encode(const Graph& g, int T, std::uint64_t seed);

} // namespace desgrada

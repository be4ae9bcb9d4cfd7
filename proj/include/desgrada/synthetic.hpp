#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "desgrada/graph.hpp"

namespace desgrada {

// Discrete power-law degree sample: P(k) ∝ k^(-exponent) on [min_deg, max_deg].
std::vector<int> power_law_degree_sequence(int n, double exponent, int min_deg, int max_deg,
                                           std::uint64_t seed);

// Configuration-model realization of a degree sequence (multi-edges and
// self-pairings dropped, so realized degrees approximate the sequence).
// Features are left empty; callers fill them. Self-loops are then ensured and
// stored degrees recomputed per the usual convention.
Graph random_graph_from_degrees(const std::vector<int>& degree_seq, std::uint64_t seed);

// Two-domain stochastic-block-model benchmark. Classes share each domain's
// mean degree but differ in block composition (which of the two node types
// dominates); node features are typed by block. The target domain repeats
// the construction 2.5x denser, so its degree set extends past the source's
// and the source-calibrated firing regime saturates.
struct SbmBenchmarkConfig {
    int graphs_per_domain = 200;
    double source_mean_degree = 4.0;
    double target_mean_degree = 10.0;
    int source_min_nodes = 13;
    int source_max_nodes = 17;
    int target_min_nodes = 20;
    int target_max_nodes = 26;
    int feature_dim = 4;
    // Class geometry: the minor block holds this node share (the other class
    // mirrors it), and block-typed features sit at the hot/cold levels.
    double minor_fraction = 0.35;
    // Additive shift of the target domain's type-A share (both classes),
    // a semantic drift on top of the density shift.
    double target_composition_shift = -0.10;
    double hot_level = 0.7;
    double cold_level = 0.3;
    double feature_noise = 0.06;
    std::uint64_t seed = 1;
};

std::pair<GraphDataset, GraphDataset> make_sbm_benchmark(const SbmBenchmarkConfig& cfg);

} // namespace desgrada

#include "desgrada/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "desgrada/errors.hpp"
#include "desgrada/rng.hpp"

namespace desgrada {

std::vector<int> power_law_degree_sequence(int n, double exponent, int min_deg, int max_deg,
                                           std::uint64_t seed) {
    if (n < 1 || min_deg < 1 || max_deg < min_deg)
        throw ArgumentError("power_law_degree_sequence: bad arguments");
    max_deg = std::min(max_deg, n - 1);
    min_deg = std::min(min_deg, max_deg);
    std::vector<double> cdf;
    double total = 0.0;
    for (int k = min_deg; k <= max_deg; ++k) {
        total += std::pow(static_cast<double>(k), -exponent);
        cdf.push_back(total);
    }
    SplitMix64 rng(seed);
    std::vector<int> seq(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        seq[static_cast<std::size_t>(i)] =
            min_deg + static_cast<int>(std::distance(cdf.begin(), it));
    }
    return seq;
}

Graph random_graph_from_degrees(const std::vector<int>& degree_seq, std::uint64_t seed) {
    const int n = static_cast<int>(degree_seq.size());
    if (n == 0) throw ArgumentError("random_graph_from_degrees: empty degree sequence");
    std::vector<int> stubs;
    for (int v = 0; v < n; ++v) {
        if (degree_seq[static_cast<std::size_t>(v)] < 0)
            throw ArgumentError("random_graph_from_degrees: negative degree");
        for (int k = 0; k < degree_seq[static_cast<std::size_t>(v)]; ++k) stubs.push_back(v);
    }
    SplitMix64 rng(seed);
    shuffle_indices(stubs, rng);

    Graph g;
    g.node_count = n;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
        int u = stubs[i];
        int v = stubs[i + 1];
        if (u == v) continue; // dropped; realization is approximate
        if (u > v) std::swap(u, v);
        edges.push_back({u, v});
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.edges = std::move(edges);
    finalize_graph(g);
    return g;
}

namespace {

struct BlockSpec {
    std::vector<int> sizes;
    std::vector<std::vector<double>> p; // symmetric edge probabilities
};

Graph sample_sbm(const BlockSpec& spec, SplitMix64& rng) {
    const int n = std::accumulate(spec.sizes.begin(), spec.sizes.end(), 0);
    std::vector<int> block_of;
    for (std::size_t b = 0; b < spec.sizes.size(); ++b)
        for (int i = 0; i < spec.sizes[b]; ++i) block_of.push_back(static_cast<int>(b));

    Graph g;
    g.node_count = n;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            const double p = spec.p[static_cast<std::size_t>(block_of[static_cast<std::size_t>(u)])]
                                   [static_cast<std::size_t>(block_of[static_cast<std::size_t>(v)])];
            if (rng.uniform() < p) g.edges.push_back({u, v});
        }
    }
    finalize_graph(g);
    return g;
}

// Two node types A and B wired at the domain's mean degree; the classes are
// the two block compositions (A-minor vs A-major). Node features are typed
// by block, so the class is read from which block dominates the graph while
// the domains move only the wiring density.
struct ClassLayout {
    BlockSpec blocks;
    int type_a_nodes = 0;
};

ClassLayout class_spec(double a_share, int n, double mean_degree) {
    ClassLayout layout;
    const int a = std::clamp(static_cast<int>(a_share * n + 0.5), 1, n - 1);
    const int b = n - a;
    const double p = std::min(1.0, mean_degree / static_cast<double>(n - 1));
    layout.blocks.sizes = {a, b};
    layout.blocks.p = {{p, p}, {p, p}};
    layout.type_a_nodes = a;
    return layout;
}

GraphDataset make_domain(const SbmBenchmarkConfig& cfg, double mean_degree, int min_nodes,
                         int max_nodes, DomainTag tag, std::uint64_t seed) {
    const double shift =
        tag == DomainTag::target ? cfg.target_composition_shift : 0.0;
    GraphDataset ds;
    ds.num_classes = 2;
    ds.feature_dim = cfg.feature_dim;
    ds.name = tag == DomainTag::source ? "sbm_source" : "sbm_target";
    ds.domain_tag = tag;
    SplitMix64 rng(seed);
    for (int i = 0; i < cfg.graphs_per_domain; ++i) {
        const int cls = i % 2;
        const int n =
            min_nodes +
            static_cast<int>(rng.below(static_cast<std::uint64_t>(max_nodes - min_nodes + 1)));
        const double a_share =
            (cls == 0 ? cfg.minor_fraction : 1.0 - cfg.minor_fraction) + shift;
        const ClassLayout layout = class_spec(a_share, n, mean_degree);
        Graph g = sample_sbm(layout.blocks, rng);
        g.label = cls; // target labels are for evaluation only
        g.features = Tensor(static_cast<std::size_t>(g.node_count),
                            static_cast<std::size_t>(ds.feature_dim));
        // Block-typed feature profiles with equal total drive: type A is hot
        // on even features, type B on odd ones, so the class reads as a
        // feature contrast rather than an overall activity level.
        for (int v = 0; v < g.node_count; ++v) {
            const bool type_a = v < layout.type_a_nodes;
            for (int j = 0; j < ds.feature_dim; ++j) {
                const bool hot = (j % 2 == 0) == type_a;
                g.features(static_cast<std::size_t>(v), static_cast<std::size_t>(j)) =
                    std::clamp((hot ? cfg.hot_level : cfg.cold_level) +
                                   cfg.feature_noise * rng.normal(),
                               0.0, 1.0);
            }
        }
        ds.graphs.push_back(std::move(g));
    }
    return ds;
}

} // namespace

std::pair<GraphDataset, GraphDataset> make_sbm_benchmark(const SbmBenchmarkConfig& cfg) {
    if (cfg.graphs_per_domain < 2) throw ArgumentError("make_sbm_benchmark: too few graphs");
    if (cfg.source_min_nodes < 6 || cfg.source_max_nodes < cfg.source_min_nodes ||
        cfg.target_min_nodes < 6 || cfg.target_max_nodes < cfg.target_min_nodes)
        throw ArgumentError("make_sbm_benchmark: bad node range");
    GraphDataset source =
        make_domain(cfg, cfg.source_mean_degree, cfg.source_min_nodes, cfg.source_max_nodes,
                    DomainTag::source, counter_hash(cfg.seed, 0xA));
    GraphDataset target =
        make_domain(cfg, cfg.target_mean_degree, cfg.target_min_nodes, cfg.target_max_nodes,
                    DomainTag::target, counter_hash(cfg.seed, 0xB));
    return {std::move(source), std::move(target)};
}

} // namespace desgrada

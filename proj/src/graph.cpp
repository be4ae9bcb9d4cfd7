#include "desgrada/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "desgrada/errors.hpp"

namespace desgrada {

int Graph::edge_count_without_loops() const {
    int c = 0;
    for (const auto& [u, v] : edges)
        if (u != v) ++c;
    return c;
}

void finalize_graph(Graph& g) {
    std::set<std::pair<int, int>> uniq;
    for (auto [u, v] : g.edges) {
        if (u < 0 || v < 0 || u >= g.node_count || v >= g.node_count) {
            throw FormatError("edge endpoint out of range for graph with " +
                              std::to_string(g.node_count) + " nodes");
        }
        if (u > v) std::swap(u, v);
        uniq.insert({u, v});
    }
    for (int v = 0; v < g.node_count; ++v) uniq.insert({v, v});
    g.edges.assign(uniq.begin(), uniq.end());

    g.degrees.assign(static_cast<std::size_t>(g.node_count), 0);
    for (const auto& [u, v] : g.edges) {
        if (u == v) {
            g.degrees[static_cast<std::size_t>(u)] += 1; // the node itself
        } else {
            g.degrees[static_cast<std::size_t>(u)] += 1;
            g.degrees[static_cast<std::size_t>(v)] += 1;
        }
    }
}

void validate_dataset(const GraphDataset& ds) {
    for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
        const Graph& g = ds.graphs[gi];
        if (static_cast<int>(g.features.rows()) != g.node_count ||
            static_cast<int>(g.features.cols()) != ds.feature_dim) {
            throw FormatError("graph " + std::to_string(gi) + ": feature matrix shape mismatch");
        }
        for (std::size_t i = 0; i < g.features.size(); ++i) {
            const double x = g.features[i];
            if (!(x >= 0.0 && x <= 1.0)) {
                throw FormatError("graph " + std::to_string(gi) +
                                  ": feature outside [0,1]: " + std::to_string(x));
            }
        }
        if (g.label >= 0 && g.label >= ds.num_classes) {
            throw FormatError("graph " + std::to_string(gi) + ": label out of range");
        }
    }
}

double density_score(const Graph& g, DensityMetric metric) {
    if (metric == DensityMetric::node) return static_cast<double>(g.node_count);
    if (g.node_count == 0) return 0.0;
    return 2.0 * static_cast<double>(g.edge_count_without_loops()) /
           static_cast<double>(g.node_count);
}

DegreeTable collect_degree_set(const GraphDataset& ds) {
    if (ds.graphs.empty()) throw ArgumentError("collect_degree_set: empty dataset");
    std::set<int> uniq;
    for (const Graph& g : ds.graphs) uniq.insert(g.degrees.begin(), g.degrees.end());
    DegreeTable t;
    t.degrees.assign(uniq.begin(), uniq.end());
    t.origin = "source";
    return t;
}

bool DegreeTable::contains(int d) const {
    return std::binary_search(degrees.begin(), degrees.end(), d);
}

std::vector<GraphDataset> partition_by_density(const GraphDataset& ds, DensityMetric metric,
                                               int k) {
    const int n = static_cast<int>(ds.graphs.size());
    if (n == 0) throw ArgumentError("partition_by_density: empty dataset");
    if (k < 2) throw ArgumentError("partition_by_density: k must be at least 2");
    if (k > n) throw ArgumentError("partition_by_density: k exceeds number of graphs");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        score[static_cast<std::size_t>(i)] =
            density_score(ds.graphs[static_cast<std::size_t>(i)], metric);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double sa = score[static_cast<std::size_t>(a)];
        double sb = score[static_cast<std::size_t>(b)];
        if (sa != sb) return sa < sb;
        return a < b;
    });

    const bool has_raw = ds.raw.size() == ds.graphs.size();
    std::vector<GraphDataset> parts;
    parts.reserve(static_cast<std::size_t>(k));
    int base = n / k;
    int extra = n % k; // earlier chunks take one extra graph
    int pos = 0;
    for (int c = 0; c < k; ++c) {
        int count = base + (c < extra ? 1 : 0);
        GraphDataset part;
        part.num_classes = ds.num_classes;
        part.feature_dim = ds.feature_dim;
        part.name = ds.name + "_P" + std::to_string(c);
        part.domain_tag = ds.domain_tag;
        for (int i = 0; i < count; ++i) {
            int idx = order[static_cast<std::size_t>(pos + i)];
            part.graphs.push_back(ds.graphs[static_cast<std::size_t>(idx)]);
            if (has_raw) part.raw.push_back(ds.raw[static_cast<std::size_t>(idx)]);
        }
        pos += count;
        parts.push_back(std::move(part));
    }
    return parts;
}

const char* to_string(DensityMetric m) {
    return m == DensityMetric::node ? "node" : "edge";
}

DensityMetric density_metric_from_string(const std::string& s) {
    if (s == "node") return DensityMetric::node;
    if (s == "edge") return DensityMetric::edge;
    throw ArgumentError("unknown density metric: " + s);
}

} // namespace desgrada
